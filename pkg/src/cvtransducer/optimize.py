"""Bounded derivative-free maximization of the generated entanglement.

The objective is smooth and low-dimensional (four gains, optionally four
durations), so a multi-start Nelder-Mead simplex in normalized coordinates
does the job.  The equal-parameter baseline and the bound corners are
always evaluated as candidates, which makes "optimization never hurts"
hold by construction.  Internally the search maximizes -log2(nu_minus)
without the max(0, .) clamp: the clamped log-negativity is flat wherever
the state is separable and would give the simplex nothing to work with;
the reported values are clamped as usual.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize

from .adiabatic import IdealProtocolSpec, ideal_protocol
from .dynamics import ProtocolConfig, run_protocol
from .gaussian import nu_minus

#: Fewest objective evaluations a single local search is worth.
MIN_LOCAL_BUDGET = 10

#: Full corner enumeration is added for at most this many free parameters.
MAX_CORNER_DIMS = 4

_ADIABATIC_NAMES = tuple(f"eta{i}" for i in range(1, 5))
_DYNAMIC_PREFIXES = ("g", "tau", "eta")

Template = Union[IdealProtocolSpec, ProtocolConfig]


@dataclass(frozen=True)
class FreeParameter:
    """One searchable parameter with closed bounds.

    Adiabatic objective: names ``eta1..eta4``.  Dynamic objective: ``g1..g4``
    and ``tau1..tau4`` address segment couplings and durations directly;
    ``eta1..eta4`` instead search the per-pass gain, deriving the coupling
    g = eta / sqrt(2 tau / kappa) (clipped to ``g_limits`` when given).
    """

    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError(f"bounds of {self.name} must be finite")
        if self.lower > self.upper:
            raise ValueError(
                f"lower bound of {self.name} exceeds upper "
                f"({self.lower} > {self.upper})"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class OptimizationProblem:
    """Objective choice, parameter template, bounds and search budget."""

    objective: str
    template: Template
    free: tuple[FreeParameter, ...]
    budget: int = 400
    restarts: int = 4
    seed: int = 0
    g_limits: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        if self.objective not in ("adiabatic", "dynamic"):
            raise ValueError(f"objective must be adiabatic or dynamic, got {self.objective!r}")
        if self.objective == "adiabatic" and not isinstance(self.template, IdealProtocolSpec):
            raise ValueError("adiabatic objective needs an IdealProtocolSpec template")
        if self.objective == "dynamic" and not isinstance(self.template, ProtocolConfig):
            raise ValueError("dynamic objective needs a ProtocolConfig template")
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise ValueError("free parameter names must be unique")
        for p in self.free:
            self._check_name(p.name)
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.budget < self.restarts * MIN_LOCAL_BUDGET:
            raise ValueError(
                f"budget {self.budget} is below restarts * {MIN_LOCAL_BUDGET}"
            )
        if self.g_limits is not None and len(self.g_limits) != 4:
            raise ValueError("g_limits must give (lower, upper) for all four segments")

    def _check_name(self, name: str) -> None:
        if self.objective == "adiabatic":
            if name not in _ADIABATIC_NAMES:
                raise ValueError(f"unknown adiabatic parameter {name!r}")
            return
        ok = any(
            name == f"{prefix}{i}"
            for prefix in _DYNAMIC_PREFIXES
            for i in range(1, 5)
        )
        if not ok:
            raise ValueError(f"unknown dynamic parameter {name!r}")
        seg = int(name[-1])
        twins = {f"{p}{seg}" for p in ("g", "eta")} - {name}
        if name[:-1] in ("g", "eta") and twins & {p.name for p in self.free}:
            raise ValueError(
                f"segment {seg} must not be parametrized by both g and eta"
            )


@dataclass(frozen=True)
class OptimizationReport:
    """Outcome of one optimize() call.  ``best_E_N`` is the maximum over
    every evaluated candidate, so it is never below the baseline."""

    best_params: dict[str, float]
    best_E_N: float
    best_nu_minus: float
    baseline_E_N: float
    improvement_over_equal: float
    evaluations_used: int
    restart_best: tuple[float, ...]


def apply_parameters(template: Template, names, values,
                     g_limits=None) -> Template:
    """Template copy with the named parameters substituted."""
    pairs = list(zip(names, values))
    if isinstance(template, IdealProtocolSpec):
        gains = list(template.gains)
        for name, val in pairs:
            gains[int(name[-1]) - 1] = float(val)
        return replace(template, gains=tuple(gains))

    taus = [seg.tau for seg in template.segments]
    for name, val in pairs:
        if name.startswith("tau"):
            taus[int(name[-1]) - 1] = float(val)
    new_segments = []
    for i, seg in enumerate(template.segments):
        g = seg.g
        for name, val in pairs:
            if int(name[-1]) - 1 != i:
                continue
            if name.startswith("g"):
                g = float(val)
            elif name.startswith("eta"):
                g = float(val) / math.sqrt(2.0 * taus[i] / seg.kappa)
                if g_limits is not None:
                    g = min(max(g, g_limits[i][0]), g_limits[i][1])
        new_segments.append(replace(seg, g=g, tau=taus[i]))
    return replace(template, segments=tuple(new_segments))


def _surrogate(template: Template) -> float:
    """Unclamped -log2(nu_minus); equals E_N whenever positive."""
    if isinstance(template, IdealProtocolSpec):
        nu = ideal_protocol(template).nu_minus
    else:
        nu = run_protocol(template, backend="transfer").nu_minus
    return -math.log2(nu)


class _Tracker:
    """Counts evaluations, enforces bounds, keeps the best candidate."""

    def __init__(self, problem: OptimizationProblem):
        self.problem = problem
        self.names = [p.name for p in problem.free]
        self.lower = np.array([p.lower for p in problem.free])
        self.upper = np.array([p.upper for p in problem.free])
        self.evaluations = 0
        self.best_value = -math.inf
        self.best_x: np.ndarray | None = None
        self.window_best = -math.inf

    def begin_window(self) -> None:
        self.window_best = -math.inf

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - 1e-12) or np.any(x > self.upper + 1e-12):
            raise ValueError(
                f"objective evaluated outside bounds: {dict(zip(self.names, x))}"
            )
        candidate = apply_parameters(
            self.problem.template, self.names, x, self.problem.g_limits
        )
        try:
            value = _surrogate(candidate)
        except Exception as exc:
            raise RuntimeError(
                f"objective failed at {dict(zip(self.names, x))}: {exc}"
            ) from exc
        self.evaluations += 1
        self.window_best = max(self.window_best, value)
        if value > self.best_value:
            self.best_value = value
            self.best_x = x.copy()
        return value


def _corner_candidates(lower: np.ndarray, upper: np.ndarray) -> list[np.ndarray]:
    corners = [lower.copy(), upper.copy()]
    d = len(lower)
    if 2 <= d <= MAX_CORNER_DIMS:
        for mask in range(1, 2 ** d - 1):
            pt = lower.copy()
            for k in range(d):
                if mask >> k & 1:
                    pt[k] = upper[k]
            corners.append(pt)
    return corners


def optimize(problem: OptimizationProblem) -> OptimizationReport:
    """Maximize E_N over the free parameters within their bounds.

    Deterministic for a fixed seed.  Evaluates the baseline (the template's
    own parameter values) and the bound corners, then runs ``restarts``
    Nelder-Mead searches in normalized coordinates: the first from the
    baseline, the rest from seeded uniform draws.  Stops a local search
    when the simplex shrinks below 1e-4 (normalized) or its share of the
    evaluation budget is spent.
    """
    tracker = _Tracker(problem)
    names = tracker.names
    lower, upper = tracker.lower, tracker.upper

    baseline_x = np.array([
        _template_value(problem.template, name) for name in names
    ])
    if np.any(baseline_x < lower - 1e-12) or np.any(baseline_x > upper + 1e-12):
        raise ValueError(
            "template parameter values must lie within the declared bounds; "
            f"baseline {dict(zip(names, baseline_x))}"
        )
    baseline_value = tracker(baseline_x) if names else _surrogate(problem.template)
    baseline_en = max(0.0, baseline_value)

    restart_best: list[float] = []
    if names:
        for corner in _corner_candidates(lower, upper):
            if tracker.evaluations >= problem.budget:
                break
            tracker(corner)

        active = [k for k in range(len(names)) if upper[k] > lower[k]]
        rng = np.random.default_rng(problem.seed)
        for r in range(problem.restarts):
            if r == 0:
                start = baseline_x
            else:
                start = lower + rng.uniform(size=len(names)) * (upper - lower)
            remaining = problem.budget - tracker.evaluations
            if remaining < MIN_LOCAL_BUDGET or not active:
                restart_best.append(0.0)
                continue
            share = min(remaining,
                        max(MIN_LOCAL_BUDGET, remaining // (problem.restarts - r)))
            restart_best.append(
                _local_search(tracker, start, active, share)
            )
    else:
        restart_best = [baseline_en] * problem.restarts

    best_value = tracker.best_value if names else baseline_value
    best_x = tracker.best_x if tracker.best_x is not None else baseline_x
    best_en = max(0.0, best_value)
    return OptimizationReport(
        best_params=dict(zip(names, (float(v) for v in best_x))),
        best_E_N=best_en,
        best_nu_minus=2.0 ** (-best_value),
        baseline_E_N=baseline_en,
        improvement_over_equal=best_en - baseline_en,
        evaluations_used=tracker.evaluations,
        restart_best=tuple(restart_best),
    )


def _template_value(template: Template, name: str) -> float:
    i = int(name[-1]) - 1
    if isinstance(template, IdealProtocolSpec):
        return template.gains[i]
    seg = template.segments[i]
    if name.startswith("tau"):
        return seg.tau
    if name.startswith("eta"):
        return seg.g * math.sqrt(2.0 * seg.tau / seg.kappa)
    return seg.g


def _local_search(tracker: _Tracker, start: np.ndarray, active: list[int],
                  maxfev: int) -> float:
    """One bounded Nelder-Mead run over the non-degenerate dimensions."""
    lower, upper = tracker.lower, tracker.upper
    span = upper - lower

    def to_full(z: np.ndarray) -> np.ndarray:
        x = lower.copy()
        fixed = [k for k in range(len(lower)) if k not in active]
        for k in fixed:
            x[k] = start[k]
        for zk, k in zip(z, active):
            x[k] = lower[k] + np.clip(zk, 0.0, 1.0) * span[k]
        return x

    tracker.begin_window()
    # keep the initial simplex (x0 grown by 5% per vertex) inside the box
    z0 = np.clip([(start[k] - lower[k]) / span[k] for k in active], 0.0, 0.9)
    minimize(
        lambda z: -tracker(to_full(z)),
        z0,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * len(active),
        options={"maxfev": maxfev, "xatol": 1e-4, "fatol": 1e-12},
    )
    return max(0.0, tracker.window_best)


# --- parameter sweeps -------------------------------------------------------

#: Exponent e such that scaling the targeted parameters by s multiplies the
#: protocol coupling by s**(1/e); the scale for abscissa v is (v / v0)**e.
_AXIS_EXPONENT = {
    "g": 1.0,
    "tau": 2.0,
    "g_a": 2.0,
    "g_b": 2.0,
    "tau_a": 4.0,
    "tau_b": 4.0,
}
_AXIS_SEGMENTS = {
    "g": (0, 1, 2, 3),
    "tau": (0, 1, 2, 3),
    "g_a": (0, 2),
    "g_b": (1, 3),
    "tau_a": (0, 2),
    "tau_b": (1, 3),
}


@dataclass(frozen=True)
class SweepPoint:
    """One row of a sweep table."""

    coupling: float
    E_N: float
    nu_minus: float
    params: dict[str, float]
    convergence_estimate: Optional[float] = None
    optimized: bool = False


def protocol_coupling(config: ProtocolConfig) -> float:
    """Overall QND coupling: geometric mean of the four per-pass gains.

    Reduces to g sqrt(2 tau / kappa) for identical segments and to the
    asymmetric-transducer coupling sqrt(2 g_a g_b sqrt(...)) for pairwise
    equal ones.
    """
    product = 1.0
    for seg in config.segments:
        product *= seg.g * math.sqrt(2.0 * seg.tau / seg.kappa)
    return product ** 0.25


def scale_to_coupling(config: ProtocolConfig, axis: str, value: float) -> ProtocolConfig:
    """Scale the axis parameters of ``config`` so its coupling equals ``value``."""
    if axis not in _AXIS_EXPONENT:
        raise ValueError(f"unknown sweep axis {axis!r}; one of {sorted(_AXIS_EXPONENT)}")
    if value < 0:
        raise ValueError(f"coupling grid values must be >= 0, got {value}")
    v0 = protocol_coupling(config)
    if v0 <= 0:
        # A zero-coupling template cannot be rescaled; every row of such a
        # sweep stays at zero coupling (and zero entanglement).
        return config
    s = (value / v0) ** _AXIS_EXPONENT[axis]
    if axis.startswith("tau") and s == 0.0:
        raise ValueError("tau-axis grids must not contain 0 (duration would vanish)")
    segments = list(config.segments)
    for i in _AXIS_SEGMENTS[axis]:
        seg = segments[i]
        if axis.startswith("g"):
            segments[i] = replace(seg, g=seg.g * s)
        else:
            segments[i] = replace(seg, tau=seg.tau * s)
    return replace(config, segments=tuple(segments))


def _point_params(template: Template) -> dict[str, float]:
    if isinstance(template, IdealProtocolSpec):
        return {f"eta{i + 1}": template.gains[i] for i in range(4)}
    out: dict[str, float] = {}
    for i, seg in enumerate(template.segments):
        out[f"g{i + 1}"] = seg.g
        out[f"tau{i + 1}"] = seg.tau
    return out


def _sweep_point(args) -> SweepPoint:
    (template, axis, value, optimize_each, free, budget, restarts, seed,
     g_limits, with_estimate) = args
    if isinstance(template, IdealProtocolSpec):
        point_template = replace(template, gains=(value,) * 4)
        estimate = None
    else:
        point_template = scale_to_coupling(template, axis, value)
    if optimize_each:
        if free is None:
            # default search space: the four per-pass gains, capped by the
            # point's coupling (durations stay at the template values)
            free = tuple(FreeParameter(f"eta{i}", 0.0, value) for i in range(1, 5))
        else:
            free = tuple(
                replace(p, upper=min(p.upper, value)) if p.name.startswith("eta") else p
                for p in free
            )
        report = optimize(OptimizationProblem(
            objective="adiabatic" if isinstance(template, IdealProtocolSpec) else "dynamic",
            template=point_template,
            free=free,
            budget=budget,
            restarts=restarts,
            seed=seed,
            g_limits=g_limits,
        ))
        best = apply_parameters(point_template, list(report.best_params),
                                report.best_params.values(), g_limits)
        params = _point_params(best)
        if isinstance(best, IdealProtocolSpec):
            res = ideal_protocol(best)
            estimate = None
        else:
            res = run_protocol(best, backend="transfer",
                               estimate_convergence=with_estimate)
            estimate = res.convergence_estimate
        return SweepPoint(value, max(res.E_N, report.best_E_N), res.nu_minus,
                          params, estimate, optimized=True)

    if isinstance(point_template, IdealProtocolSpec):
        res = ideal_protocol(point_template)
        estimate = None
    else:
        res = run_protocol(point_template, backend="transfer",
                           estimate_convergence=with_estimate)
        estimate = res.convergence_estimate
    return SweepPoint(value, res.E_N, res.nu_minus, _point_params(point_template),
                      estimate, optimized=False)


def sweep(
    template: Template,
    axis: str,
    grid,
    *,
    optimize_each: bool = False,
    free: Optional[tuple[FreeParameter, ...]] = None,
    budget: int = 200,
    restarts: int = 3,
    seed: int = 0,
    g_limits: Optional[tuple[tuple[float, float], ...]] = None,
    workers: int = 1,
    with_estimate: bool = False,
) -> list[SweepPoint]:
    """Tabulate E_N along a coupling grid, optionally optimizing per point.

    ``axis`` is "eta" for an IdealProtocolSpec template, otherwise one of
    g, tau, g_a, g_b, tau_a, tau_b, naming which knob realizes the
    abscissa.  With ``optimize_each`` every point also runs a bounded
    optimization whose candidates include the equal-parameter baseline, so
    optimized rows dominate non-optimized ones.  Per-point seeds derive
    from ``seed`` and the grid index, independent of ``workers``.
    """
    grid = [float(v) for v in grid]
    if len(grid) == 0:
        raise ValueError("grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid values must be strictly increasing")
    if isinstance(template, IdealProtocolSpec):
        if axis != "eta":
            raise ValueError("ideal sweeps use axis='eta'")
    elif axis == "eta":
        raise ValueError("axis='eta' needs an IdealProtocolSpec template")

    jobs = [
        (template, axis, v, optimize_each, free, budget, restarts,
         seed + 1000 * i, g_limits, with_estimate)
        for i, v in enumerate(grid)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]
