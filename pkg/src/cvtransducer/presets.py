"""Named parameter presets for the bundled example studies.

All rates are in units of the pulse-A cavity linewidth kappa_A and all
times in 1/kappa_A.

``fig2``  ideal (adiabatic) transducer with delay-line loss; the loss
          transmittance is a required input.
``fig3``  symmetric transducer coupled to a thermal mechanical bath
          (gamma = 1.5e-6), with the coupling swept over 0..0.4 and the
          pulse duration over 7e2..9e4.
``fig4``  asymmetric transducer (kappa_B = 0.01 kappa_A, e.g. optical to
          microwave) with bath rate gamma = 1.5e-4 kappa_B and per-pulse
          coupling/duration regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .adiabatic import IdealProtocolSpec
from .dynamics import ProtocolConfig, asymmetric_protocol, min_slices, symmetric_protocol
from .optimize import FreeParameter, protocol_coupling

PRESET_NAMES = ("fig2", "fig3", "fig4")


@dataclass(frozen=True)
class SweepPreset:
    """A template plus the bounds its optimized curves search over."""

    name: str
    template: "IdealProtocolSpec | ProtocolConfig"
    axis: str
    grid_start: float
    grid_stop: float
    grid_count: int
    free: tuple[FreeParameter, ...] = ()
    g_limits: "tuple[tuple[float, float], ...] | None" = None
    notes: dict = field(default_factory=dict)


def fig2_preset(t_loss: float, n_m0: float = 0.0,
                eta_max: float = 3.0, points: int = 31) -> SweepPreset:
    """Ideal lossy sweep; the delay-line transmittance must be supplied."""
    if not 0.0 <= t_loss <= 1.0:
        raise ValueError(f"t_loss must lie in [0, 1], got {t_loss}")
    template = IdealProtocolSpec(
        gains=(1.0, 1.0, 1.0, 1.0),
        loss_after_pass1=t_loss,
        loss_after_pass2=t_loss,
        n_m0=n_m0,
    )
    return SweepPreset(
        name="fig2",
        template=template,
        axis="eta",
        grid_start=0.0,
        grid_stop=eta_max,
        grid_count=points,
        notes={"t_loss": t_loss},
    )


# Symmetric-transducer study: bath rate and parameter regions.
FIG3_GAMMA = 1.5e-6
FIG3_G_MAX = 0.4
FIG3_TAU_MIN = 7e2
FIG3_TAU_MAX = 9e4


def fig3_preset(
    n_th: float = 200.0,
    *,
    t_loss: float = 1.0,
    axis: str = "g",
    slices: "int | None" = None,
    tau: float = FIG3_TAU_MIN,
    eta_max: float = 3.0,
    points: int = 16,
    optimize_durations: bool = True,
    resolution: float = 4.0,
) -> SweepPreset:
    """Symmetric transducer with a thermal bath (optionally lossy).

    The non-optimized curve varies ``axis`` ("g" or "tau") at fixed
    ``tau`` (resp. fixed g); optimized curves search the four couplings in
    [0, 0.4] and, with ``optimize_durations``, the four durations in
    [7e2, 9e4].  Default slice counts put ``resolution`` steps per
    1/(2 kappa) at the largest reachable duration; raise it (or pass
    ``slices``) for tighter convergence.
    """
    if axis not in ("g", "tau"):
        raise ValueError(f"fig3 sweeps use axis 'g' or 'tau', got {axis!r}")
    if not FIG3_TAU_MIN <= tau <= FIG3_TAU_MAX:
        raise ValueError(
            f"tau must lie in [{FIG3_TAU_MIN:g}, {FIG3_TAU_MAX:g}], got {tau}"
        )
    # Slices must resolve the largest duration the sweep/optimizer can reach.
    tau_reach = tau if (axis == "g" and not optimize_durations) else FIG3_TAU_MAX
    n_min = min_slices(tau_reach, 1.0)
    if slices is None:
        slices = int(math.ceil(resolution * n_min))
    elif slices < n_min:
        raise ValueError(f"slices must be >= {n_min} to cover tau = {tau_reach:g}")
    g0 = min(FIG3_G_MAX, 1.0 / math.sqrt(2.0 * tau))  # eta = 1 baseline
    template = symmetric_protocol(
        g0, tau, kappa=1.0, slices=slices, gamma=FIG3_GAMMA, n_th=n_th,
        loss_a=t_loss, loss_b=t_loss,
    )
    eta_reach = FIG3_G_MAX * math.sqrt(2.0 * tau_reach)
    free = [FreeParameter(f"eta{i}", 0.0, eta_reach) for i in range(1, 5)]
    if optimize_durations:
        free += [FreeParameter(f"tau{i}", FIG3_TAU_MIN, min(FIG3_TAU_MAX, tau_reach))
                 for i in range(1, 5)]
    free = tuple(free)
    # a duration sweep cannot pass through zero coupling; start at tau_min
    grid_start = 0.0 if axis == "g" else g0 * math.sqrt(2.0 * FIG3_TAU_MIN)
    return SweepPreset(
        name="fig3",
        template=template,
        axis=axis,
        grid_start=grid_start,
        grid_stop=eta_max,
        grid_count=points,
        free=free,
        g_limits=((0.0, FIG3_G_MAX),) * 4,
        notes={"gamma": FIG3_GAMMA, "n_th": n_th, "t_loss": t_loss,
               "g_max": FIG3_G_MAX, "tau_min": FIG3_TAU_MIN,
               "tau_max": FIG3_TAU_MAX},
    )


# Asymmetric-transducer study: microwave cavity 100x narrower.
FIG4_KAPPA_B = 0.01
FIG4_GAMMA = 1.5e-4 * FIG4_KAPPA_B
FIG4_GA_MAX = 0.07
FIG4_GB_MAX = 0.1 * FIG4_KAPPA_B
FIG4_TAU_A = (2.2e2, 4.4e3)
FIG4_TAU_B = (2.3 / FIG4_KAPPA_B, 113.0 / FIG4_KAPPA_B)


def fig4_preset(
    n_th: float = 200.0,
    *,
    t_loss: float = 0.95,
    axis: str = "g",
    slices_a: "int | None" = None,
    slices_b: "int | None" = None,
    tau_a: float = 2.2e3,
    tau_b: float = 5e3,
    eta_max: float = 2.0,
    points: int = 11,
    resolution: float = 4.0,
) -> SweepPreset:
    """Asymmetric optical-microwave transducer with bath and small loss.

    Per-pulse parameter regions: g_A in [0, 0.07], g_B in [0, 0.001]
    (that is 0.1 kappa_B), tau_A in [2.2e2, 4.4e3], tau_B in
    [2.3, 113] / kappa_B.  The default loss models short delay lines.
    """
    if not FIG4_TAU_A[0] <= tau_a <= FIG4_TAU_A[1]:
        raise ValueError(f"tau_a must lie in {FIG4_TAU_A}, got {tau_a}")
    if not FIG4_TAU_B[0] <= tau_b <= FIG4_TAU_B[1]:
        raise ValueError(f"tau_b must lie in {FIG4_TAU_B}, got {tau_b}")
    n_min_a = min_slices(FIG4_TAU_A[1], 1.0)
    n_min_b = min_slices(FIG4_TAU_B[1], FIG4_KAPPA_B)
    slices_a = int(math.ceil(resolution * n_min_a)) if slices_a is None else slices_a
    slices_b = int(math.ceil(resolution * n_min_b)) if slices_b is None else slices_b
    if slices_a < n_min_a or slices_b < n_min_b:
        raise ValueError(
            f"need slices_a >= {n_min_a} and slices_b >= {n_min_b} to cover "
            f"the preset duration regions"
        )
    template = asymmetric_protocol(
        FIG4_GA_MAX, FIG4_GB_MAX, tau_a, tau_b,
        kappa_a=1.0, kappa_b=FIG4_KAPPA_B,
        slices_a=slices_a, slices_b=slices_b,
        gamma=FIG4_GAMMA, n_th=n_th, loss_a=t_loss, loss_b=t_loss,
    )
    eta_a_max = FIG4_GA_MAX * math.sqrt(2.0 * FIG4_TAU_A[1] / 1.0)
    eta_b_max = FIG4_GB_MAX * math.sqrt(2.0 * FIG4_TAU_B[1] / FIG4_KAPPA_B)
    free = (
        FreeParameter("eta1", 0.0, eta_a_max),
        FreeParameter("eta2", 0.0, eta_b_max),
        FreeParameter("eta3", 0.0, eta_a_max),
        FreeParameter("eta4", 0.0, eta_b_max),
        FreeParameter("tau1", *FIG4_TAU_A),
        FreeParameter("tau2", *FIG4_TAU_B),
        FreeParameter("tau3", *FIG4_TAU_A),
        FreeParameter("tau4", *FIG4_TAU_B),
    )
    g_limits = (
        (0.0, FIG4_GA_MAX), (0.0, FIG4_GB_MAX),
        (0.0, FIG4_GA_MAX), (0.0, FIG4_GB_MAX),
    )
    if axis.startswith("tau"):
        # duration sweeps start where the swept tau hits its lower bound
        lo, base = ((FIG4_TAU_A[0], tau_a) if axis == "tau_a"
                    else (FIG4_TAU_B[0], tau_b))
        grid_start = protocol_coupling(template) * (lo / base) ** 0.25
    else:
        grid_start = 0.0
    return SweepPreset(
        name="fig4",
        template=template,
        axis=axis,
        grid_start=grid_start,
        grid_stop=eta_max,
        grid_count=points,
        free=free,
        g_limits=g_limits,
        notes={"kappa_b": FIG4_KAPPA_B, "gamma": FIG4_GAMMA, "n_th": n_th,
               "t_loss": t_loss, "g_a_max": FIG4_GA_MAX, "g_b_max": FIG4_GB_MAX,
               "tau_a_range": FIG4_TAU_A, "tau_b_range": FIG4_TAU_B},
    )


def get_preset(name: str, **kwargs) -> SweepPreset:
    if name == "fig2":
        return fig2_preset(**kwargs)
    if name == "fig3":
        return fig3_preset(**kwargs)
    if name == "fig4":
        return fig4_preset(**kwargs)
    raise ValueError(f"unknown preset {name!r}; one of {PRESET_NAMES}")
