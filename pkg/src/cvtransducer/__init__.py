"""Pulsed continuous-variable optomechanical transducer simulator.

Two radiation pulses interact twice each, in alternation, with a shared
mechanical oscillator via QND couplings; the closed mechanical phase-space
loop makes the pulses entangle while the (possibly hot) mediator drops
out.  The package provides the covariance-matrix toolkit, the closed-form
adiabatic benchmark, a time-sliced Langevin engine with cavity memory,
delay-line loss and a thermal mechanical bath, and bounded optimization of
the per-pass interaction parameters.
"""

__version__ = "0.1.0"

from .adiabatic import (
    DEFAULT_SIGNS,
    IdealProtocolSpec,
    QNDGateSpec,
    effective_coupling,
    effective_coupling_asym,
    four_pass_transfer,
    ideal_protocol,
    log_negativity_ideal,
    logneg_slope_origin,
    nu_minus_ideal,
    nu_minus_small_loss,
    qnd_gate_symplectic,
)
from .dynamics import (
    DiscretizationError,
    LossEvent,
    ProtocolConfig,
    SegmentConfig,
    asymmetric_protocol,
    convergence_run,
    min_slices,
    refine,
    run_protocol,
    symmetric_protocol,
)
from .gaussian import (
    GaussianChannel,
    GaussianState,
    NonPhysicalStateError,
    VACUUM_VARIANCE,
    apply_channel,
    identity_channel,
    log_negativity,
    loss_channel,
    nu_minus,
    partial_transpose,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_mech_state,
    vacuum_state,
)
from .optimize import (
    FreeParameter,
    OptimizationProblem,
    OptimizationReport,
    SweepPoint,
    apply_parameters,
    optimize,
    protocol_coupling,
    scale_to_coupling,
    sweep,
)
from .result import SimulationResult

__all__ = [
    "DEFAULT_SIGNS",
    "DiscretizationError",
    "FreeParameter",
    "GaussianChannel",
    "GaussianState",
    "IdealProtocolSpec",
    "LossEvent",
    "NonPhysicalStateError",
    "OptimizationProblem",
    "OptimizationReport",
    "ProtocolConfig",
    "QNDGateSpec",
    "SegmentConfig",
    "SimulationResult",
    "SweepPoint",
    "VACUUM_VARIANCE",
    "apply_channel",
    "apply_parameters",
    "asymmetric_protocol",
    "convergence_run",
    "effective_coupling",
    "effective_coupling_asym",
    "four_pass_transfer",
    "ideal_protocol",
    "identity_channel",
    "log_negativity",
    "log_negativity_ideal",
    "logneg_slope_origin",
    "loss_channel",
    "min_slices",
    "nu_minus",
    "nu_minus_ideal",
    "nu_minus_small_loss",
    "optimize",
    "partial_transpose",
    "protocol_coupling",
    "qnd_gate_symplectic",
    "refine",
    "run_protocol",
    "scale_to_coupling",
    "sweep",
    "symmetric_protocol",
    "symplectic_eigenvalues",
    "symplectic_form",
    "thermal_mech_state",
    "vacuum_state",
]
