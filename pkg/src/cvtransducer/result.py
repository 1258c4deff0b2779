"""Shared result container for adiabatic and time-sliced protocol runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .gaussian import GaussianState, _frozen_array


@dataclass(frozen=True)
class SimulationResult:
    """Final covariances and entanglement of one protocol run.

    ``pulse_cov`` is the 4x4 covariance of the integrated rectangular pulse
    quadratures (XA, YA, XB, YB), ``mech_cov`` the 2x2 mechanical block and
    ``cross_cov`` the 4x2 pulse-mechanics cross block.  ``dt_used`` holds
    the step sizes (per pulse) of a time-sliced run, None for closed-form
    runs.  ``convergence_estimate`` is |E_N(dt) - E_N(dt/2)| when a
    refinement companion run was requested.  ``final_state`` carries the
    full multimode state when the dense backend was asked to keep it.
    """

    pulse_cov: NDArray[np.float64]
    mech_cov: NDArray[np.float64]
    cross_cov: NDArray[np.float64]
    E_N: float
    nu_minus: float
    dt_used: Optional[tuple[float, ...]] = None
    convergence_estimate: Optional[float] = None
    final_state: Optional[GaussianState] = field(default=None, repr=False)

    def __post_init__(self):
        for name, shape in (("pulse_cov", (4, 4)), ("mech_cov", (2, 2)),
                            ("cross_cov", (4, 2))):
            arr = _frozen_array(getattr(self, name))
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if self.E_N < 0:
            raise ValueError(f"E_N must be >= 0, got {self.E_N}")
