"""Covariance-matrix algebra for zero-mean multimode Gaussian states.

Quadrature convention used throughout the package: canonical pairs obey
[X, Y] = 2i, so the vacuum covariance matrix is the identity and physical
states have all symplectic eigenvalues >= 1.  Quadratures are stored
interleaved, (X1, Y1, X2, Y2, ...).  The symplectic form consistent with
this convention has 2x2 blocks [[0, 2], [-2, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

# Vacuum variance per quadrature in the [X, Y] = 2i convention.
VACUUM_VARIANCE = 1.0

# Default tolerances for the structural checks below.
SYMMETRY_RTOL = 1e-12
PHYSICALITY_TOL = 1e-8
CP_TOL = 1e-10
RADICAND_TOL = 1e-10


class NonPhysicalStateError(ValueError):
    """A covariance matrix violates the uncertainty bound beyond tolerance."""


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Block-diagonal symplectic form with 2x2 blocks [[0, 2], [-2, 0]]."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 2.0
        omega[2 * k + 1, 2 * k] = -2.0
    return omega


def _as_matrix(cov: NDArray[np.float64] | "GaussianState") -> NDArray[np.float64]:
    if isinstance(cov, GaussianState):
        return cov.cov
    return np.asarray(cov, dtype=float)


def _frozen_array(a) -> NDArray[np.float64]:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean Gaussian state: covariance matrix plus mode labels.

    Parameters
    ----------
    cov:
        Real symmetric matrix of size 2 * n_modes, quadratures interleaved.
    labels:
        One identifier per mode, unique.  Purely bookkeeping; operations
        address modes by index.
    """

    cov: NDArray[np.float64]
    labels: tuple[str, ...]

    def __post_init__(self):
        cov = _frozen_array(self.cov)
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if cov.shape[0] != 2 * len(labels):
            raise ValueError(
                f"covariance size {cov.shape[0]} does not match "
                f"{len(labels)} mode labels"
            )
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique")
        scale = max(1.0, float(np.abs(cov).max()) if cov.size else 1.0)
        if not np.allclose(cov, cov.T, rtol=0.0, atol=SYMMETRY_RTOL * scale):
            raise ValueError("covariance matrix is not symmetric")

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def symplectic_eigenvalues(self) -> NDArray[np.float64]:
        return symplectic_eigenvalues(self.cov)

    def assert_physical(self, tol: float = PHYSICALITY_TOL) -> None:
        """Raise NonPhysicalStateError unless all symplectic eigenvalues >= 1 - tol."""
        nu = self.symplectic_eigenvalues()
        if nu.min() < 1.0 - tol:
            raise NonPhysicalStateError(
                f"smallest symplectic eigenvalue {nu.min():.3e} < 1 - {tol:g}"
            )

    def reduced(self, modes: "list[int] | tuple[int, ...]") -> "GaussianState":
        """Partial trace down to the given modes (submatrix of the covariance)."""
        modes = list(modes)
        idx = np.array([2 * m + o for m in modes for o in (0, 1)])
        return GaussianState(self.cov[np.ix_(idx, idx)],
                             tuple(self.labels[m] for m in modes))


@dataclass(frozen=True)
class GaussianChannel:
    """Deterministic Gaussian channel cov -> A cov A^T + N.

    ``transfer`` is the 2n_out x 2n_in matrix A, ``noise`` the symmetric
    PSD matrix N of size 2n_out.  Complete positivity
    (N + i*Omega_out - i*A Omega_in A^T >= 0) is verified on construction;
    symplectic (unitary) channels have N = 0.
    """

    transfer: NDArray[np.float64]
    noise: NDArray[np.float64]
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        A = _frozen_array(self.transfer)
        N = _frozen_array(self.noise)
        object.__setattr__(self, "transfer", A)
        object.__setattr__(self, "noise", N)
        if A.ndim != 2 or A.shape[0] % 2 or A.shape[1] % 2:
            raise ValueError(f"transfer must have even dimensions, got {A.shape}")
        if N.shape != (A.shape[0], A.shape[0]):
            raise ValueError(
                f"noise shape {N.shape} does not match transfer output "
                f"dimension {A.shape[0]}"
            )
        if not np.allclose(N, N.T, atol=1e-12 * max(1.0, np.abs(N).max() if N.size else 1.0)):
            raise ValueError("noise matrix is not symmetric")
        if self._validate:
            self._check_complete_positivity()

    def _check_complete_positivity(self) -> None:
        A, N = self.transfer, self.noise
        omega_out = symplectic_form(A.shape[0] // 2)
        omega_in = symplectic_form(A.shape[1] // 2)
        herm = N.astype(complex) + 1j * (omega_out - A @ omega_in @ A.T)
        lam_min = np.linalg.eigvalsh(herm).min()
        if lam_min < -CP_TOL:
            raise ValueError(
                f"channel is not completely positive (min eigenvalue {lam_min:.3e})"
            )

    @property
    def n_modes_in(self) -> int:
        return self.transfer.shape[1] // 2

    @property
    def n_modes_out(self) -> int:
        return self.transfer.shape[0] // 2

    def is_symplectic(self, tol: float = 1e-10) -> bool:
        if self.n_modes_in != self.n_modes_out:
            return False
        if np.abs(self.noise).max(initial=0.0) > tol:
            return False
        omega = symplectic_form(self.n_modes_in)
        return bool(np.allclose(self.transfer @ omega @ self.transfer.T, omega, atol=tol))

    def then(self, second: "GaussianChannel") -> "GaussianChannel":
        """Composite channel: self first, then ``second``."""
        if second.n_modes_in != self.n_modes_out:
            raise ValueError("channel dimensions do not compose")
        A = second.transfer @ self.transfer
        N = second.transfer @ self.noise @ second.transfer.T + second.noise
        return GaussianChannel(A, N, _validate=False)


def identity_channel(n_modes: int) -> GaussianChannel:
    d = 2 * n_modes
    return GaussianChannel(np.eye(d), np.zeros((d, d)), _validate=False)


def vacuum_state(n_modes: int, labels: "tuple[str, ...] | None" = None) -> GaussianState:
    """Vacuum of ``n_modes`` modes: covariance = identity."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if labels is None:
        labels = tuple(f"mode{k}" for k in range(n_modes))
    return GaussianState(np.eye(2 * n_modes), labels)


def thermal_mech_state(n_occ: float, label: str = "mech") -> GaussianState:
    """Single-mode thermal state with mean occupation ``n_occ``.

    Covariance is (2 n_occ + 1) * identity; n_occ = 0 is the ground state.
    """
    if n_occ < 0:
        raise ValueError(f"mean occupation must be >= 0, got {n_occ}")
    return GaussianState((2.0 * n_occ + 1.0) * np.eye(2), (label,))


def loss_channel(transmittance: float, n_modes: int = 1) -> GaussianChannel:
    """Pure-loss (beamsplitter to vacuum) channel on ``n_modes`` modes.

    Quadrature map Q -> sqrt(T) Q + sqrt(1 - T) Q_vac, i.e.
    A = sqrt(T) I and N = (1 - T) I.  Complete positivity holds by
    construction for 0 <= T <= 1, so the generic check is skipped.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    d = 2 * n_modes
    return GaussianChannel(
        np.sqrt(transmittance) * np.eye(d),
        (1.0 - transmittance) * np.eye(d),
        _validate=False,
    )


def apply_channel(
    state: GaussianState,
    channel: GaussianChannel,
    modes: "list[int] | tuple[int, ...]",
    new_labels: "tuple[str, ...] | None" = None,
) -> GaussianState:
    """Apply a Gaussian channel to a subset of modes.

    The selected block transforms as A V A^T + N and cross-correlations
    with untouched modes are multiplied by A only.  For a square channel
    the mode layout is unchanged; a non-square channel replaces the
    selected modes, and the result orders the untouched modes first
    followed by the channel outputs (labels from ``new_labels`` or
    auto-generated).
    """
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValueError("mode indices must be unique")
    if any(m < 0 or m >= state.n_modes for m in modes):
        raise ValueError(f"mode indices out of range for {state.n_modes}-mode state")
    if channel.n_modes_in != len(modes):
        raise ValueError(
            f"channel acts on {channel.n_modes_in} modes but {len(modes)} were selected"
        )
    A, N = channel.transfer, channel.noise
    sel = np.array([2 * m + o for m in modes for o in (0, 1)])
    rest = np.array([i for i in range(2 * state.n_modes) if i not in set(sel)], dtype=int)

    V = state.cov
    V_ss = V[np.ix_(sel, sel)]
    V_sr = V[np.ix_(sel, rest)] if rest.size else np.zeros((sel.size, 0))
    new_ss = A @ V_ss @ A.T + N
    new_sr = A @ V_sr

    if channel.n_modes_out == channel.n_modes_in:
        out = np.array(V)
        out[np.ix_(sel, sel)] = new_ss
        if rest.size:
            out[np.ix_(sel, rest)] = new_sr
            out[np.ix_(rest, sel)] = new_sr.T
        out = 0.5 * (out + out.T)
        return GaussianState(out, state.labels)

    # Mode count changes: untouched modes keep their order, outputs appended.
    if new_labels is None:
        new_labels = tuple(f"out{k}" for k in range(channel.n_modes_out))
    if len(new_labels) != channel.n_modes_out:
        raise ValueError("new_labels length must equal the channel output mode count")
    kept = [m for m in range(state.n_modes) if m not in set(modes)]
    labels = tuple(state.labels[m] for m in kept) + tuple(new_labels)
    d_rest = rest.size
    d_out = 2 * channel.n_modes_out
    out = np.zeros((d_rest + d_out, d_rest + d_out))
    out[:d_rest, :d_rest] = V[np.ix_(rest, rest)]
    out[d_rest:, d_rest:] = new_ss
    out[d_rest:, :d_rest] = new_sr
    out[:d_rest, d_rest:] = new_sr.T
    out = 0.5 * (out + out.T)
    return GaussianState(out, labels)


def partial_transpose(
    state: GaussianState, modes: "list[int] | tuple[int, ...]"
) -> NDArray[np.float64]:
    """Covariance of the partial transpose: Y rows/columns of the selected
    modes are sign-flipped (momentum reversal).  Returns a plain matrix;
    the result need not be a physical state."""
    modes = list(modes)
    if not modes or len(modes) >= state.n_modes:
        raise ValueError("modes must be a nonempty proper subset")
    sign = np.ones(2 * state.n_modes)
    for m in modes:
        if m < 0 or m >= state.n_modes:
            raise ValueError(f"mode index {m} out of range")
        sign[2 * m + 1] = -1.0
    return (state.cov * sign[:, None]) * sign[None, :]


def nu_minus(two_mode_cov: NDArray[np.float64] | GaussianState) -> float:
    """Smallest symplectic eigenvalue of the partially transposed two-mode
    covariance.

    Takes the ORIGINAL covariance (quadrature order X1, Y1, X2, Y2) and
    performs the partial transpose on the second mode internally, using the
    block-determinant form: with blocks V1, V2, Vc and
    sigma = det V1 + det V2 - 2 det Vc,
    nu_- = sqrt((sigma - sqrt(sigma^2 - 4 det V)) / 2).
    Radicands within -1e-10 of zero are clamped; larger violations raise.
    """
    V = _as_matrix(two_mode_cov)
    if V.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-mode covariance, got {V.shape}")
    det1 = float(np.linalg.det(V[0:2, 0:2]))
    det2 = float(np.linalg.det(V[2:4, 2:4]))
    detc = float(np.linalg.det(V[0:2, 2:4]))
    detV = float(np.linalg.det(V))
    sigma = det1 + det2 - 2.0 * detc

    rad = sigma * sigma - 4.0 * detV
    scale = max(1.0, sigma * sigma)
    if rad < -RADICAND_TOL * scale:
        raise NonPhysicalStateError(
            f"negative discriminant {rad:.3e} in symplectic-eigenvalue formula"
        )
    inner = 0.5 * (sigma - np.sqrt(max(rad, 0.0)))
    if inner < -RADICAND_TOL:
        raise NonPhysicalStateError(
            f"negative squared symplectic eigenvalue {inner:.3e}"
        )
    return float(np.sqrt(max(inner, 0.0)))


def log_negativity(two_mode_cov: NDArray[np.float64] | GaussianState) -> float:
    """Logarithmic negativity E_N = max(0, -log2 nu_-) of a two-mode state."""
    nu = nu_minus(two_mode_cov)
    if nu <= 0.0:
        raise NonPhysicalStateError("nu_- = 0; covariance is not physical")
    return max(0.0, -float(np.log2(nu)))


def symplectic_eigenvalues(cov: NDArray[np.float64] | GaussianState) -> NDArray[np.float64]:
    """Symplectic spectrum of a covariance matrix, ascending.

    Scaling is fixed so the vacuum gives all ones: the values are the
    moduli of the eigenvalues of J^-1 V with J the block-diagonal form
    [[0, 1], [-1, 0]] (the convention's Omega divided by 2).  Eigenvalues
    come in +/- i nu pairs; each pair is averaged.
    """
    V = _as_matrix(cov)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ValueError(f"covariance must be square with even dimension, got {V.shape}")
    n = V.shape[0] // 2
    JV = np.empty_like(V)
    # J^-1 = [[0, -1], [1, 0]] blocks: (J^-1 V) rows: even <- -odd, odd <- even.
    JV[0::2, :] = -V[1::2, :]
    JV[1::2, :] = V[0::2, :]
    mods = np.sort(np.abs(np.linalg.eigvals(JV)))
    return 0.5 * (mods[0::2] + mods[1::2])
