"""Run execution and delimited output with reproducibility metadata.

Every CSV starts with '#'-prefixed metadata lines (tool version, seed,
unit system and the full run configuration as JSON).  The configuration
echo is sufficient to re-execute the run and reproduce the numbers
exactly; see :func:`rerun_from_csv`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig, config_from_dict, config_to_dict
from .optimize import (
    OptimizationProblem,
    OptimizationReport,
    SweepPoint,
    optimize,
    sweep,
)
from .presets import SweepPreset, get_preset

UNITS_LINE = "rates in units of kappa_A; times in units of 1/kappa_A"


@dataclass(frozen=True)
class ExecutionOutput:
    """What one run produced: sweep rows and/or an optimization report."""

    label: str
    points: tuple[SweepPoint, ...] = ()
    report: Optional[OptimizationReport] = None


def _preset_from_config(rc: RunConfig) -> SweepPreset:
    kwargs = dict(rc.preset.options)
    if rc.preset.name == "fig2":
        if rc.preset.t_loss is None:
            raise ValueError(
                "preset fig2 requires an explicit t_loss (the delay-line "
                "transmittance is a free input of that study)"
            )
        kwargs["t_loss"] = rc.preset.t_loss
    else:
        kwargs["n_th"] = rc.preset.n_th
        if rc.preset.t_loss is not None:
            kwargs["t_loss"] = rc.preset.t_loss
    if rc.preset.name == "fig3" and not rc.optimize.enabled:
        # duration search is off, so slices need not cover the full tau range
        kwargs.setdefault("optimize_durations", False)
    return get_preset(rc.preset.name, **kwargs)


def _coupling_label(rc: RunConfig) -> str:
    if rc.mode == "ideal-sweep":
        return "eta"
    if rc.mode == "preset" and rc.preset.name == "fig4":
        return "eta_prime"
    if rc.mode in ("dyn-sweep", "optimize"):
        p = rc.protocol
        if p.kappa_a != p.kappa_b:
            return "eta_prime"
    return "eta"


def execute(rc: RunConfig) -> ExecutionOutput:
    """Run the computation a RunConfig describes (no file output)."""
    label = _coupling_label(rc)
    if rc.mode == "ideal-sweep":
        grid = rc.grid.values() if rc.grid else [0.1 * k for k in range(31)]
        points = sweep(rc.ideal_template(), "eta", grid, seed=rc.seed,
                       workers=rc.workers)
        if rc.optimize.enabled:
            points = list(points) + list(sweep(
                rc.ideal_template(), "eta", grid, optimize_each=True,
                budget=rc.optimize.budget, restarts=rc.optimize.restarts,
                seed=rc.seed, workers=rc.workers,
            ))
        return ExecutionOutput(label=label, points=tuple(points))

    if rc.mode == "dyn-sweep":
        if rc.grid is None:
            raise ValueError("dyn-sweep needs a grid")
        template = rc.protocol_template()
        common = dict(workers=rc.workers, with_estimate=rc.refine >= 1)
        points = sweep(template, rc.protocol.axis, rc.grid.values(),
                       seed=rc.seed, **common)
        if rc.optimize.enabled:
            points = list(points) + list(sweep(
                template, rc.protocol.axis, rc.grid.values(),
                optimize_each=True,
                free=rc.optimize.free or None,
                budget=rc.optimize.budget, restarts=rc.optimize.restarts,
                g_limits=rc.optimize.g_limits, seed=rc.seed, **common,
            ))
        return ExecutionOutput(label=label, points=tuple(points))

    if rc.mode == "optimize":
        template = (rc.ideal_template()
                    if rc.optimize.objective == "adiabatic"
                    else rc.protocol_template())
        problem = OptimizationProblem(
            objective=rc.optimize.objective,
            template=template,
            free=rc.optimize.free,
            budget=rc.optimize.budget,
            restarts=rc.optimize.restarts,
            seed=rc.seed,
            g_limits=rc.optimize.g_limits,
        )
        return ExecutionOutput(label=label, report=optimize(problem))

    if rc.mode == "preset":
        preset = _preset_from_config(rc)
        grid = (rc.grid.values() if rc.grid is not None
                else preset_grid(preset))
        common = dict(workers=rc.workers, seed=rc.seed)
        points = sweep(preset.template, preset.axis, grid, **common)
        if rc.optimize.enabled:
            points = list(points) + list(sweep(
                preset.template, preset.axis, grid,
                optimize_each=True, free=preset.free or None,
                g_limits=preset.g_limits,
                budget=rc.optimize.budget, restarts=rc.optimize.restarts,
                **common,
            ))
        label = "eta_prime" if preset.name == "fig4" else "eta"
        return ExecutionOutput(label=label, points=tuple(points))

    raise ValueError(f"mode {rc.mode!r} is not executable here")


def preset_grid(preset: SweepPreset) -> list[float]:
    if preset.grid_count == 1:
        return [preset.grid_start]
    step = (preset.grid_stop - preset.grid_start) / (preset.grid_count - 1)
    return [preset.grid_start + k * step for k in range(preset.grid_count)]


def _metadata_lines(rc: RunConfig) -> list[str]:
    return [
        f"# cvtransducer {__version__}",
        f"# units = {UNITS_LINE}",
        f"# seed = {rc.seed}",
        f"# config_json = {json.dumps(config_to_dict(rc), sort_keys=True)}",
    ]


def write_sweep_csv(path: "str | Path", rc: RunConfig,
                    output: ExecutionOutput) -> Path:
    """Sweep table: metadata block, header row, one row per grid point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    param_names = sorted({k for p in output.points for k in p.params})
    header = ([output.label, "E_N", "nu_minus"] + param_names
              + ["convergence_estimate", "optimized"])
    lines = _metadata_lines(rc)
    lines.append(",".join(header))
    for p in output.points:
        row = [repr(p.coupling), repr(p.E_N), repr(p.nu_minus)]
        row += [repr(p.params.get(name, float("nan"))) for name in param_names]
        row.append("" if p.convergence_estimate is None
                   else repr(p.convergence_estimate))
        row.append("1" if p.optimized else "0")
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_optimize_csv(path: "str | Path", rc: RunConfig,
                       report: OptimizationReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = sorted(report.best_params)
    header = (["best_E_N", "best_nu_minus", "baseline_E_N",
               "improvement_over_equal", "evaluations_used"] + names)
    row = [repr(report.best_E_N), repr(report.best_nu_minus),
           repr(report.baseline_E_N), repr(report.improvement_over_equal),
           str(report.evaluations_used)]
    row += [repr(report.best_params[n]) for n in names]
    lines = _metadata_lines(rc)
    lines.append(",".join(header))
    lines.append(",".join(row))
    lines.append("# restart_best = " + json.dumps(list(report.restart_best)))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv_config(path: "str | Path") -> RunConfig:
    """Recover the RunConfig embedded in a result file's metadata block."""
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config_json = "):
            data = json.loads(line[len("# config_json = "):])
            return config_from_dict(data)
    raise ValueError(f"{path} carries no config_json metadata line")


def rerun_from_csv(path: "str | Path") -> ExecutionOutput:
    """Re-execute the run recorded in a CSV's metadata block."""
    return execute(read_csv_config(path))
