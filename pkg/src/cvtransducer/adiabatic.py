"""Idealized transducer in the adiabatic (fast-cavity) limit.

With the cavity eliminated, each pass reduces to a two-mode QND gate
between the traveling pulse's integrated rectangular quadratures and the
mechanical mode.  The four-pass sequence A, B, A, B with the sign pattern
(-, +, +, -) drives the mechanics around a closed phase-space loop, so for
equal gains the mechanical mode drops out of the radiation transformation:

    XA -> XA + eta^2 XB,   YB -> YB - eta^2 YA,   q, p unchanged.

Delay-line loss is modeled as a beamsplitter on the full pulse mode after
its first pass.  This module is the analytic benchmark for the time-sliced
engine in :mod:`cvtransducer.dynamics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .gaussian import (
    GaussianChannel,
    GaussianState,
    apply_channel,
    log_negativity,
    loss_channel,
    nu_minus,
)
from .result import SimulationResult

#: Pump-phase sign pattern of the four interactions (A, B, A, B).
DEFAULT_SIGNS = (-1, 1, 1, -1)


@dataclass(frozen=True)
class QNDGateSpec:
    """One adiabatic QND interaction between a pulse and the mechanics.

    kind "A" writes the mechanical position into the pulse's X quadrature
    (and the pulse's Y into the mechanical momentum); kind "B" writes the
    mechanical momentum into the pulse's Y quadrature (and the pulse's X
    into the mechanical position).  ``gain`` is the dimensionless coupling
    of the pass, ``sign`` its pump-phase sign.
    """

    kind: str
    gain: float
    sign: int = 1

    def __post_init__(self):
        if self.kind not in ("A", "B"):
            raise ValueError(f"kind must be 'A' or 'B', got {self.kind!r}")
        if self.gain < 0:
            raise ValueError(f"gain must be >= 0, got {self.gain}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")


@dataclass(frozen=True)
class IdealProtocolSpec:
    """Four-pass adiabatic protocol with optional delay-line loss.

    ``gains`` are the four per-pass couplings (order A, B, A, B);
    ``loss_after_pass1`` / ``loss_after_pass2`` are delay-line
    transmittances applied to the full pulse A (resp. B) mode after its
    first interaction; ``n_m0`` is the initial mechanical occupation.
    """

    gains: tuple[float, float, float, float]
    loss_after_pass1: float = 1.0
    loss_after_pass2: float = 1.0
    n_m0: float = 0.0

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        object.__setattr__(self, "gains", gains)
        if len(gains) != 4:
            raise ValueError("gains must contain exactly four values")
        if any(g < 0 for g in gains):
            raise ValueError(f"gains must be >= 0, got {gains}")
        for name in ("loss_after_pass1", "loss_after_pass2"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {t}")
        if self.n_m0 < 0:
            raise ValueError(f"n_m0 must be >= 0, got {self.n_m0}")


def qnd_gate_symplectic(spec: QNDGateSpec) -> GaussianChannel:
    """Symplectic channel of one pass on (pulse, mechanics).

    Quadrature order (X_pulse, Y_pulse, q, p).  With signed gain
    e = sign * gain:

    kind "A":  X -> X + e q,  p -> p - e Y
    kind "B":  Y -> Y - e p,  q -> q + e X
    """
    e = spec.sign * spec.gain
    A = np.eye(4)
    if spec.kind == "A":
        A[0, 2] = e
        A[3, 1] = -e
    else:
        A[1, 3] = -e
        A[2, 0] = e
    return GaussianChannel(A, np.zeros((4, 4)), _validate=False)


def four_pass_transfer(
    gains: tuple[float, float, float, float],
    signs: tuple[int, int, int, int] = DEFAULT_SIGNS,
) -> NDArray[np.float64]:
    """Transfer matrix of the lossless four-pass sequence.

    Mode order (pulse A, pulse B, mechanics), quadratures
    (XA, YA, XB, YB, q, p).  For equal gains eta and the default signs the
    result couples only XA <- XB and YB <- YA (with gain eta^2) and leaves
    the mechanics untouched.
    """
    kinds = ("A", "B", "A", "B")
    total = np.eye(6)
    for kind, gain, sign in zip(kinds, gains, signs):
        gate = np.eye(6)
        block = qnd_gate_symplectic(QNDGateSpec(kind, gain, sign)).transfer
        rows = [0, 1, 4, 5] if kind == "A" else [2, 3, 4, 5]
        gate[np.ix_(rows, rows)] = block
        total = gate @ total
    return total


def ideal_protocol(spec: IdealProtocolSpec) -> SimulationResult:
    """Run the adiabatic protocol on vacuum pulses and a thermal mechanics.

    Sequence: pass 1 (A), loss on pulse A, pass 2 (B), loss on pulse B,
    pass 3 (A), pass 4 (B).  Returns the final pulse covariance, the
    mechanical covariance, their cross block, and the log-negativity of
    the two pulses.
    """
    v_m = 2.0 * spec.n_m0 + 1.0
    cov0 = np.diag([1.0, 1.0, 1.0, 1.0, v_m, v_m])
    state = GaussianState(cov0, ("A", "B", "mech"))

    kinds = ("A", "B", "A", "B")
    pulse_mode = {"A": 0, "B": 1}
    for i, (kind, gain, sign) in enumerate(zip(kinds, spec.gains, DEFAULT_SIGNS)):
        gate = qnd_gate_symplectic(QNDGateSpec(kind, gain, sign))
        state = apply_channel(state, gate, [pulse_mode[kind], 2])
        if i == 0 and spec.loss_after_pass1 < 1.0:
            state = apply_channel(state, loss_channel(spec.loss_after_pass1), [0])
        if i == 1 and spec.loss_after_pass2 < 1.0:
            state = apply_channel(state, loss_channel(spec.loss_after_pass2), [1])

    V = state.cov
    pulse_cov = V[:4, :4]
    return SimulationResult(
        pulse_cov=pulse_cov,
        mech_cov=V[4:, 4:],
        cross_cov=V[:4, 4:],
        E_N=log_negativity(pulse_cov),
        nu_minus=nu_minus(pulse_cov),
    )


def nu_minus_ideal(eta: float) -> float:
    """Smallest PT symplectic eigenvalue of the lossless equal-gain output.

    Closed form sqrt(1 + eta^4) - eta^2, algebraically equal to
    sqrt(1 - 2 eta^4 (sqrt(1 + eta^-4) - 1)) but stable at eta = 0.
    Strictly decreasing in eta; equals 1 at eta = 0.
    """
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    e2 = eta * eta
    return float(np.sqrt(1.0 + e2 * e2) - e2)


def log_negativity_ideal(eta: float) -> float:
    """E_N of the lossless equal-gain output, log2(sqrt(1 + eta^4) + eta^2)."""
    e2 = eta * eta
    # nu_- nu_+ = 1 for this pure state, so -log2(nu_-) = log2(1 / nu_-).
    return float(np.log2(np.sqrt(1.0 + e2 * e2) + e2))


def nu_minus_small_loss(eta: float, transmittance: float) -> float:
    """Small-loss, weak-coupling approximation 1 - (1 + T) eta^2 / 2.

    Valid for eta << 1 and transmittance near 1; no range check is applied.
    """
    return 1.0 - 0.5 * (1.0 + transmittance) * eta * eta


def logneg_slope_origin(transmittance: float) -> float:
    """Coefficient c in dE_N/deta ~ c * eta near eta = 0, c = (2/ln 2) sqrt(T)."""
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    return 2.0 / math.log(2.0) * math.sqrt(transmittance)


def effective_coupling(g: float, tau: float, kappa: float) -> float:
    """Per-pass QND gain eta = g sqrt(2 tau / kappa) of the adiabatic limit."""
    if g < 0:
        raise ValueError(f"coupling g must be >= 0, got {g}")
    if tau <= 0 or kappa <= 0:
        raise ValueError(f"tau and kappa must be > 0, got tau={tau}, kappa={kappa}")
    return g * math.sqrt(2.0 * tau / kappa)


def effective_coupling_asym(
    g_a: float, g_b: float, tau_a: float, tau_b: float, kappa_a: float, kappa_b: float
) -> float:
    """Asymmetric-transducer gain sqrt(2 g_a g_b sqrt(tau_a tau_b / (kappa_a kappa_b))).

    Equals the geometric mean of the two per-pass gains and reduces to
    ``effective_coupling`` for identical subsystems.
    """
    if g_a < 0 or g_b < 0:
        raise ValueError(f"couplings must be >= 0, got g_a={g_a}, g_b={g_b}")
    if min(tau_a, tau_b, kappa_a, kappa_b) <= 0:
        raise ValueError("durations and decay rates must be > 0")
    return math.sqrt(
        2.0 * g_a * g_b * math.sqrt(tau_a * tau_b / (kappa_a * kappa_b))
    )
