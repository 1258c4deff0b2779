"""Time-sliced Gaussian propagation of the four-pass pulsed protocol.

The traveling pulses are discretized into rectangular temporal slices, one
Gaussian mode each, and the global state over
[mech, cavity A, cavity B, N_A slices, N_B slices] is evolved segment by
segment with the per-step maps documented in :mod:`cvtransducer._kernels`:
an exact cavity-slice beamsplitter (collision-model form of the cavity
input-output relation), an exact QND shear between cavity and mechanics,
and a first-order thermal damping channel on the mechanics.  Loss events
apply a beamsplitter to vacuum on every slice of the named pulse; while a
pulse waits in the delay line its cavity keeps decaying into discarded
vacuum (transmittance exp(-2 kappa tau_segment), the exact continuum limit
of the per-step decay).  At the end each pulse is projected onto its
rectangular mode with weight sqrt(dt / tau) per slice.

Two backends compute the same composition of linear maps:

``dense``
    Evolves the full covariance matrix.  Memory O(N^2); required for
    stage-by-stage physicality checks and for keeping the final state.
``transfer``
    Propagates only the six output rows (pulse A, pulse B, mechanics) of
    the protocol's transfer matrix together with the accumulated noise
    block.  Memory O(N), so slice counts in the millions are cheap.  The
    returned covariances agree with the dense backend to machine
    precision.

The beamsplitter angle arcsin(sqrt(2 kappa dt)) only exists for
2 kappa dt <= 1, so each segment needs at least 2 kappa tau slices;
configurations below that resolution are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .gaussian import (
    GaussianState,
    NonPhysicalStateError,
    log_negativity,
    nu_minus,
    symplectic_eigenvalues,
)
from .result import SimulationResult

DEFAULT_SIGNS = (-1, 1, 1, -1)

#: Largest total quadrature dimension the dense backend will allocate
#: (a 20000^2 float64 covariance is 3.2 GB; beyond that use "transfer").
DENSE_DIM_LIMIT = 20_000

STAGE_PHYSICALITY_TOL = 1e-6


class DiscretizationError(ValueError):
    """A segment has too few slices for its cavity linewidth."""


@dataclass(frozen=True)
class SegmentConfig:
    """One pass of one pulse through its cavity.

    Rates are in units of the reference cavity linewidth, times in its
    inverse.  ``slices`` fixes the temporal resolution of this pulse and
    must match between the pulse's two passes.
    """

    pulse: str
    g: float
    sign: int
    tau: float
    kappa: float
    slices: int

    def __post_init__(self):
        if self.pulse not in ("A", "B"):
            raise ValueError(f"pulse must be 'A' or 'B', got {self.pulse!r}")
        if self.g < 0:
            raise ValueError(f"segment coupling g must be >= 0, got {self.g}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.slices < 16:
            raise ValueError(f"slices must be >= 16, got {self.slices}")

    @property
    def dt(self) -> float:
        return self.tau / self.slices


@dataclass(frozen=True)
class LossEvent:
    """Beamsplitter loss on all slices of ``pulse``, applied after the
    1-based segment index ``after_segment``."""

    after_segment: int
    pulse: str
    transmittance: float

    def __post_init__(self):
        if self.after_segment not in (1, 2, 3, 4):
            raise ValueError(
                f"after_segment must be in 1..4, got {self.after_segment}"
            )
        if self.pulse not in ("A", "B"):
            raise ValueError(f"pulse must be 'A' or 'B', got {self.pulse!r}")
        if not 0.0 <= self.transmittance <= 1.0:
            raise ValueError(
                f"transmittance must lie in [0, 1], got {self.transmittance}"
            )


@dataclass(frozen=True)
class ProtocolConfig:
    """Full physical description of the four-segment protocol."""

    segments: tuple[SegmentConfig, SegmentConfig, SegmentConfig, SegmentConfig]
    gamma: float = 0.0
    n_th: float = 0.0
    n_m0: float | None = None
    loss_events: tuple[LossEvent, ...] = ()
    idle_decay: bool = True

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "loss_events", tuple(self.loss_events))
        if len(segments) != 4:
            raise ValueError("protocol needs exactly four segments")
        if tuple(s.pulse for s in segments) != ("A", "B", "A", "B"):
            raise ValueError("segment pulse pattern must be A, B, A, B")
        for pulse, (i, j) in (("A", (0, 2)), ("B", (1, 3))):
            if segments[i].slices != segments[j].slices:
                raise ValueError(
                    f"pulse {pulse} slice counts differ between its passes "
                    f"({segments[i].slices} vs {segments[j].slices})"
                )
            if segments[i].kappa != segments[j].kappa:
                raise ValueError(
                    f"pulse {pulse} cavity decay rates differ between its "
                    f"passes ({segments[i].kappa} vs {segments[j].kappa})"
                )
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.n_th < 0:
            raise ValueError(f"n_th must be >= 0, got {self.n_th}")
        if self.n_m0 is not None and self.n_m0 < 0:
            raise ValueError(f"n_m0 must be >= 0, got {self.n_m0}")

    @property
    def initial_occupation(self) -> float:
        """Initial mechanical occupation; defaults to the bath occupation."""
        return self.n_th if self.n_m0 is None else self.n_m0

    @property
    def slices_a(self) -> int:
        return self.segments[0].slices

    @property
    def slices_b(self) -> int:
        return self.segments[1].slices

    def validate_discretization(self) -> None:
        """Reject segments whose step is too coarse for the per-step maps."""
        for i, seg in enumerate(self.segments):
            x = 2.0 * seg.kappa * seg.dt
            if x > 1.0:
                raise DiscretizationError(
                    f"segment {i + 1}: 2*kappa*dt = {x:.3g} > 1; the "
                    f"cavity-slice beamsplitter angle arcsin(sqrt(2 kappa dt)) "
                    f"is undefined. Need slices >= {min_slices(seg.tau, seg.kappa)} "
                    f"for tau = {seg.tau:g}, kappa = {seg.kappa:g}."
                )
            if self.gamma * seg.dt > 1.0:
                raise DiscretizationError(
                    f"segment {i + 1}: gamma*dt = {self.gamma * seg.dt:.3g} > 1 "
                    f"breaks the first-order damping step; increase slices."
                )


def min_slices(tau: float, kappa: float) -> int:
    """Smallest admissible slice count for a segment (2 kappa dt <= 1)."""
    return max(16, int(math.ceil(2.0 * kappa * tau)))


def symmetric_protocol(
    g,
    tau,
    *,
    kappa: float = 1.0,
    slices: int,
    gamma: float = 0.0,
    n_th: float = 0.0,
    n_m0: float | None = None,
    loss_a: float = 1.0,
    loss_b: float = 1.0,
    idle_decay: bool = True,
    signs: tuple[int, int, int, int] = DEFAULT_SIGNS,
) -> ProtocolConfig:
    """Symmetric transducer: both pulses share kappa, tau and slice count.

    ``g`` and ``tau`` may be scalars or length-4 sequences (per segment).
    Delay-line losses, when below 1, are placed after the first pass of
    each pulse.
    """
    gs = _per_segment(g, "g")
    taus = _per_segment(tau, "tau")
    segs = tuple(
        SegmentConfig(pulse=p, g=gs[i], sign=signs[i], tau=taus[i],
                      kappa=kappa, slices=slices)
        for i, p in enumerate(("A", "B", "A", "B"))
    )
    events = []
    if loss_a < 1.0:
        events.append(LossEvent(1, "A", loss_a))
    if loss_b < 1.0:
        events.append(LossEvent(2, "B", loss_b))
    return ProtocolConfig(segments=segs, gamma=gamma, n_th=n_th, n_m0=n_m0,
                          loss_events=tuple(events), idle_decay=idle_decay)


def asymmetric_protocol(
    g_a,
    g_b,
    tau_a,
    tau_b,
    *,
    kappa_a: float = 1.0,
    kappa_b: float,
    slices_a: int,
    slices_b: int,
    gamma: float = 0.0,
    n_th: float = 0.0,
    n_m0: float | None = None,
    loss_a: float = 1.0,
    loss_b: float = 1.0,
    idle_decay: bool = True,
    signs: tuple[int, int, int, int] = DEFAULT_SIGNS,
) -> ProtocolConfig:
    """Asymmetric transducer (e.g. optical pulse A, microwave pulse B).

    Per-pulse parameters may be scalars or pairs (first pass, second pass).
    """
    ga1, ga2 = _per_pulse(g_a, "g_a")
    gb1, gb2 = _per_pulse(g_b, "g_b")
    ta1, ta2 = _per_pulse(tau_a, "tau_a")
    tb1, tb2 = _per_pulse(tau_b, "tau_b")
    segs = (
        SegmentConfig("A", ga1, signs[0], ta1, kappa_a, slices_a),
        SegmentConfig("B", gb1, signs[1], tb1, kappa_b, slices_b),
        SegmentConfig("A", ga2, signs[2], ta2, kappa_a, slices_a),
        SegmentConfig("B", gb2, signs[3], tb2, kappa_b, slices_b),
    )
    events = []
    if loss_a < 1.0:
        events.append(LossEvent(1, "A", loss_a))
    if loss_b < 1.0:
        events.append(LossEvent(2, "B", loss_b))
    return ProtocolConfig(segments=segs, gamma=gamma, n_th=n_th, n_m0=n_m0,
                          loss_events=tuple(events), idle_decay=idle_decay)


def _per_segment(value, name) -> tuple[float, float, float, float]:
    if np.isscalar(value):
        return (float(value),) * 4
    vals = tuple(float(v) for v in value)
    if len(vals) != 4:
        raise ValueError(f"{name} must be a scalar or length-4 sequence")
    return vals


def _per_pulse(value, name) -> tuple[float, float]:
    if np.isscalar(value):
        return float(value), float(value)
    vals = tuple(float(v) for v in value)
    if len(vals) != 2:
        raise ValueError(f"{name} must be a scalar or length-2 sequence")
    return vals


# --- engine internals -------------------------------------------------------

def _forward_events(config: ProtocolConfig) -> list[tuple]:
    """Ordered list of protocol events: segments, idle decays, losses."""
    kappa = {"A": config.segments[0].kappa, "B": config.segments[1].kappa}
    events: list[tuple] = []
    for i, seg in enumerate(config.segments):
        events.append(("segment", i))
        if config.idle_decay:
            other = "B" if seg.pulse == "A" else "A"
            events.append(("idle", other, math.exp(-2.0 * kappa[other] * seg.tau)))
        for ev in config.loss_events:
            if ev.after_segment == i + 1:
                events.append(("loss", ev.pulse, ev.transmittance))
    return events


class _Layout:
    """Index bookkeeping for the global mode vector."""

    def __init__(self, config: ProtocolConfig):
        self.n_a = config.slices_a
        self.n_b = config.slices_b
        self.n_modes = 3 + self.n_a + self.n_b
        self.dim = 2 * self.n_modes
        self.mech = 0
        self.cav = {"A": 2, "B": 4}
        self.base = {"A": 6, "B": 6 + 2 * self.n_a}
        self.slices = {"A": self.n_a, "B": self.n_b}

    def slice_rows(self, pulse: str) -> slice:
        start = self.base[pulse]
        return slice(start, start + 2 * self.slices[pulse])

    def labels(self) -> tuple[str, ...]:
        return (("mech", "cavA", "cavB")
                + tuple(f"A-slice-{k}" for k in range(self.n_a))
                + tuple(f"B-slice-{k}" for k in range(self.n_b)))

    def projector(self) -> np.ndarray:
        """Rows (XA, YA, XB, YB, q, p) of the rectangular-mode projection."""
        P = np.zeros((6, self.dim))
        for row, (pulse, off) in zip((0, 1, 2, 3),
                                     (("A", 0), ("A", 1), ("B", 0), ("B", 1))):
            n = self.slices[pulse]
            w = 1.0 / math.sqrt(n)
            start = self.base[pulse] + off
            P[row, start:start + 2 * n:2] = w
        P[4, 0] = 1.0
        P[5, 1] = 1.0
        return P


def _segment_params(config: ProtocolConfig, i: int):
    seg = config.segments[i]
    dt = seg.dt
    x = 2.0 * seg.kappa * dt
    damp = config.gamma > 0.0
    return dict(
        pulse=0 if seg.pulse == "A" else 1,
        c=math.sqrt(1.0 - x),
        s=math.sqrt(x),
        eps=seg.sign * seg.g * dt,
        lam=math.sqrt(1.0 - config.gamma * dt) if damp else 1.0,
        nvar=config.gamma * dt * (2.0 * config.n_th + 1.0) if damp else 0.0,
        damp=damp,
        n_steps=seg.slices,
    )


def _run_transfer(config: ProtocolConfig) -> np.ndarray:
    """Reduced output covariance (6x6) via backward transfer accumulation."""
    lay = _Layout(config)
    Rt = np.ascontiguousarray(lay.projector().T)
    noise = np.zeros((6, 6))
    for ev in reversed(_forward_events(config)):
        if ev[0] == "segment":
            i = ev[1]
            seg = config.segments[i]
            p = _segment_params(config, i)
            _kernels.transfer_segment_backward(
                Rt, noise, p["pulse"], lay.cav[seg.pulse], lay.base[seg.pulse],
                p["n_steps"], p["c"], p["s"], p["eps"], p["lam"], p["nvar"],
                p["damp"],
            )
        elif ev[0] == "idle":
            _, pulse, t = ev
            rows = slice(lay.cav[pulse], lay.cav[pulse] + 2)
            block = Rt[rows, :]
            noise += (1.0 - t) * (block.T @ block)
            Rt[rows, :] *= math.sqrt(t)
        else:
            _, pulse, t = ev
            rows = lay.slice_rows(pulse)
            block = Rt[rows, :]
            noise += (1.0 - t) * (block.T @ block)
            Rt[rows, :] *= math.sqrt(t)
    diag0 = np.ones(lay.dim)
    v_m = 2.0 * config.initial_occupation + 1.0
    diag0[0] = diag0[1] = v_m
    V6 = Rt.T @ (Rt * diag0[:, None]) + noise
    return 0.5 * (V6 + V6.T)


def _run_dense(config: ProtocolConfig, check_stages: bool,
               keep_final_state: bool):
    """Full-covariance evolution; returns (6x6 output cov, final state or None)."""
    lay = _Layout(config)
    if lay.dim > DENSE_DIM_LIMIT:
        raise MemoryError(
            f"dense backend would allocate a {lay.dim}x{lay.dim} covariance; "
            f"use backend='transfer'"
        )
    V = np.eye(lay.dim)
    v_m = 2.0 * config.initial_occupation + 1.0
    V[0, 0] = V[1, 1] = v_m

    def check(stage: str):
        if not check_stages:
            return
        nu = symplectic_eigenvalues(V)
        if nu.min() < 1.0 - STAGE_PHYSICALITY_TOL:
            raise NonPhysicalStateError(
                f"non-physical state after {stage}: min symplectic "
                f"eigenvalue {nu.min():.6e}"
            )

    check("initialization")
    for ev in _forward_events(config):
        if ev[0] == "segment":
            i = ev[1]
            seg = config.segments[i]
            p = _segment_params(config, i)
            _kernels.dense_segment_forward(
                V, p["pulse"], lay.cav[seg.pulse], lay.base[seg.pulse],
                p["n_steps"], p["c"], p["s"], p["eps"], p["lam"], p["nvar"],
                p["damp"],
            )
            V = 0.5 * (V + V.T)
            check(f"segment {i + 1}")
        else:
            kind, pulse, t = ev
            rows = (slice(lay.cav[pulse], lay.cav[pulse] + 2)
                    if kind == "idle" else lay.slice_rows(pulse))
            rt = math.sqrt(t)
            V[rows, :] *= rt
            V[:, rows] *= rt
            idx = np.arange(rows.start, rows.stop)
            V[idx, idx] += 1.0 - t
            check(f"{kind} ({pulse})")

    P = lay.projector()
    V6 = P @ V @ P.T
    state = GaussianState(V, lay.labels()) if keep_final_state else None
    return 0.5 * (V6 + V6.T), state


def _result_from_v6(config: ProtocolConfig, V6: np.ndarray,
                    final_state=None, convergence_estimate=None) -> SimulationResult:
    pulse_cov = V6[:4, :4]
    nu_p = symplectic_eigenvalues(pulse_cov)
    if nu_p.min() < 1.0 - STAGE_PHYSICALITY_TOL:
        raise NonPhysicalStateError(
            f"output pulse covariance is not physical (min symplectic "
            f"eigenvalue {nu_p.min():.6e}); stepping bug upstream"
        )
    return SimulationResult(
        pulse_cov=pulse_cov,
        mech_cov=V6[4:, 4:],
        cross_cov=V6[:4, 4:],
        E_N=log_negativity(pulse_cov),
        nu_minus=nu_minus(pulse_cov),
        dt_used=tuple(seg.dt for seg in config.segments),
        convergence_estimate=convergence_estimate,
        final_state=final_state,
    )


def refine(config: ProtocolConfig, factor: int = 2) -> ProtocolConfig:
    """Copy of the configuration with every slice count multiplied."""
    segs = tuple(replace(s, slices=s.slices * factor) for s in config.segments)
    return replace(config, segments=segs)


def run_protocol(
    config: ProtocolConfig,
    *,
    backend: str = "auto",
    check_stages: bool = False,
    keep_final_state: bool = False,
    estimate_convergence: bool = False,
) -> SimulationResult:
    """Propagate the four-segment protocol and return the output covariances.

    ``backend`` is "dense", "transfer" or "auto" (transfer unless the full
    state is needed).  ``check_stages`` verifies physicality of the global
    state after every protocol stage (dense only).  With
    ``estimate_convergence`` a companion run at half the step size fills
    ``convergence_estimate`` (the result itself stays at the requested
    resolution).
    """
    config.validate_discretization()
    needs_dense = check_stages or keep_final_state
    if backend == "auto":
        backend = "dense" if needs_dense else "transfer"
    if backend not in ("dense", "transfer"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "transfer" and needs_dense:
        raise ValueError(
            "stage checks and final-state capture require backend='dense'"
        )

    if backend == "dense":
        V6, state = _run_dense(config, check_stages, keep_final_state)
    else:
        V6, state = _run_transfer(config), None

    estimate = None
    if estimate_convergence:
        fine = run_protocol(refine(config), backend=backend)
        main_en = log_negativity(V6[:4, :4])
        estimate = abs(main_en - fine.E_N)
    return _result_from_v6(config, V6, state, estimate)


def convergence_run(
    config: ProtocolConfig, levels: int, *, backend: str = "auto"
) -> list[SimulationResult]:
    """Rerun with the slice counts doubled per level.

    Returns one result per level; from the second level on,
    ``convergence_estimate`` holds |E_N(level) - E_N(previous level)|.
    First-order stepping makes successive estimates shrink by about 2x.
    """
    if levels < 2:
        raise ValueError(f"need at least 2 levels, got {levels}")
    results: list[SimulationResult] = []
    current = config
    for lvl in range(levels):
        res = run_protocol(current, backend=backend)
        if results:
            res = replace(res,
                          convergence_estimate=abs(res.E_N - results[-1].E_N))
        results.append(res)
        current = refine(current)
    return results


def richardson_extrapolate(coarse: float, fine: float) -> float:
    """First-order Richardson estimate of the zero-step-size limit."""
    return 2.0 * fine - coarse
