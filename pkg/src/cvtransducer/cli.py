"""Command-line front end.

Subcommands: ideal-sweep, dyn-sweep, optimize, validate,
preset {fig2, fig3, fig4}.  Runs are described by a TOML config file
(--config) and/or flags; flags override file values.  Sweep and optimize
runs write a CSV (metadata block + header + rows) and, by default, a PNG
figure next to it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    AXES,
    ConfigError,
    GridSpec,
    RunConfig,
    config_from_dict,
)
from .presets import PRESET_NAMES


def _parse_grid(text: str) -> GridSpec:
    try:
        start, stop, count = text.split(":")
        return GridSpec(float(start), float(stop), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must look like start:stop:count, got {text!r}"
        ) from None


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML run configuration")
    p.add_argument("--out", help="output stem; writes <out>.csv and <out>.png")
    p.add_argument("--grid", type=_parse_grid, help="coupling grid start:stop:count")
    p.add_argument("--seed", type=int, help="deterministic seed")
    p.add_argument("--workers", type=int, help="parallel sweep workers")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--emit-plot-script", action="store_true",
                   help="write a standalone replot script next to the CSV")


def _add_optimize(p: argparse.ArgumentParser):
    p.add_argument("--optimize", action="store_true",
                   help="add per-point optimized rows")
    p.add_argument("--budget", type=int, help="objective evaluations per point")
    p.add_argument("--restarts", type=int, help="local searches per point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvtransducer",
        description="Pulsed continuous-variable transducer simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ideal-sweep", help="closed-form adiabatic sweep")
    _add_common(p)
    _add_optimize(p)
    p.add_argument("--t-loss", type=float, help="delay-line transmittance (both pulses)")
    p.add_argument("--t-loss-a", type=float)
    p.add_argument("--t-loss-b", type=float)
    p.add_argument("--n-m0", type=float, help="initial mechanical occupation")

    p = sub.add_parser("dyn-sweep", help="time-sliced engine sweep")
    _add_common(p)
    _add_optimize(p)
    p.add_argument("--axis", choices=AXES, help="knob realizing the abscissa")
    p.add_argument("--g", type=float, help="baseline coupling (all segments)")
    p.add_argument("--tau", type=float, help="baseline duration (all segments)")
    p.add_argument("--kappa-b", type=float, help="pulse-B cavity linewidth")
    p.add_argument("--slices", type=int, help="slices per pulse (both)")
    p.add_argument("--gamma", type=float, help="mechanical damping rate")
    p.add_argument("--n-th", type=float, help="bath occupation")
    p.add_argument("--n-m0", type=float, help="initial mechanical occupation")
    p.add_argument("--t-loss", type=float, help="delay-line transmittance (both)")
    p.add_argument("--refine", type=int,
                   help="also run at doubled slices; report |dE_N|")

    p = sub.add_parser("optimize", help="single bounded optimization run")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)

    sub.add_parser("validate", help="run the module invariant suites")

    p = sub.add_parser("preset", help="run a named study preset")
    p.add_argument("name", choices=PRESET_NAMES)
    _add_common(p)
    _add_optimize(p)
    p.add_argument("--t-loss", type=float, help="delay-line transmittance")
    p.add_argument("--n-th", type=float, help="bath occupation")
    p.add_argument("--slices", type=int, help="slices per pulse override")
    p.add_argument("--dump", action="store_true",
                   help="print the preset parameters and exit")
    return parser


def _base_config(args) -> dict:
    if getattr(args, "config", None):
        from .config import _toml  # reuse the loader choice

        try:
            data = _toml.loads(Path(args.config).read_text())
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        return data
    return {}


def _merge_flags(data: dict, args, mode: str) -> dict:
    data = dict(data)
    data["mode"] = mode
    if getattr(args, "out", None) is not None:
        data["out"] = args.out
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        data["workers"] = args.workers
    if getattr(args, "no_plot", False):
        data["plot"] = False
    if getattr(args, "refine", None) is not None:
        data["refine"] = args.refine
    if getattr(args, "grid", None) is not None:
        data["grid"] = {"start": args.grid.start, "stop": args.grid.stop,
                        "count": args.grid.count}

    ideal = dict(data.get("ideal", {}))
    if getattr(args, "t_loss", None) is not None and mode == "ideal-sweep":
        ideal["t_loss_a"] = ideal["t_loss_b"] = args.t_loss
    for key in ("t_loss_a", "t_loss_b"):
        v = getattr(args, key, None)
        if v is not None:
            ideal[key] = v
    if getattr(args, "n_m0", None) is not None and mode == "ideal-sweep":
        ideal["n_m0"] = args.n_m0
    if ideal:
        data["ideal"] = ideal

    if mode == "dyn-sweep":
        prot = dict(data.get("protocol", {}))
        for flag, key in (("axis", "axis"), ("g", "g"), ("tau", "tau"),
                          ("kappa_b", "kappa_b"), ("gamma", "gamma"),
                          ("n_th", "n_th"), ("n_m0", "n_m0")):
            v = getattr(args, flag, None)
            if v is not None:
                prot[key] = v
        if getattr(args, "slices", None) is not None:
            prot["slices_a"] = prot["slices_b"] = args.slices
        if getattr(args, "t_loss", None) is not None:
            prot["t_loss_a"] = prot["t_loss_b"] = args.t_loss
        if prot:
            data["protocol"] = prot

    if mode == "preset":
        pre = dict(data.get("preset", {}))
        pre["name"] = args.name
        if getattr(args, "t_loss", None) is not None:
            pre["t_loss"] = args.t_loss
        if getattr(args, "n_th", None) is not None:
            pre["n_th"] = args.n_th
        if getattr(args, "slices", None) is not None:
            if args.name == "fig4":
                pre["slices_a"] = pre["slices_b"] = args.slices
            else:
                pre["slices"] = args.slices
        data["preset"] = pre

    opt = dict(data.get("optimize", {}))
    if getattr(args, "optimize", False):
        opt["enabled"] = True
    if getattr(args, "budget", None) is not None:
        opt["budget"] = args.budget
    if getattr(args, "restarts", None) is not None:
        opt["restarts"] = args.restarts
    if opt:
        data["optimize"] = opt
    return data


def _dump_preset(rc: RunConfig) -> int:
    from .adiabatic import IdealProtocolSpec
    from .reporting import _preset_from_config

    preset = _preset_from_config(rc)
    print(f"[preset.{preset.name}]")
    print(f"axis = {preset.axis!r}")
    print(f"grid = [{preset.grid_start}, {preset.grid_stop}, {preset.grid_count}]")
    for key, val in sorted(preset.notes.items()):
        print(f"{key} = {val}")
    tpl = preset.template
    if isinstance(tpl, IdealProtocolSpec):
        print(f"gains = {list(tpl.gains)}")
        print(f"loss_after_pass1 = {tpl.loss_after_pass1}")
        print(f"loss_after_pass2 = {tpl.loss_after_pass2}")
        print(f"n_m0 = {tpl.n_m0}")
    else:
        for i, seg in enumerate(tpl.segments, start=1):
            print(f"segment{i} = {{pulse = {seg.pulse!r}, g = {seg.g}, "
                  f"sign = {seg.sign}, tau = {seg.tau}, kappa = {seg.kappa}, "
                  f"slices = {seg.slices}}}")
        print(f"gamma = {tpl.gamma}")
        print(f"n_th = {tpl.n_th}")
        print(f"n_m0 = {tpl.initial_occupation}")
        for ev in tpl.loss_events:
            print(f"loss_event = {{after_segment = {ev.after_segment}, "
                  f"pulse = {ev.pulse!r}, transmittance = {ev.transmittance}}}")
    for p in preset.free:
        print(f"free = {{name = {p.name!r}, lower = {p.lower}, upper = {p.upper}}}")
    if preset.g_limits:
        print(f"g_limits = {[list(pair) for pair in preset.g_limits]}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    rc = None
    try:
        if args.command == "validate":
            from .validate import run_all

            passed, failed = run_all()
            return 0 if failed == 0 else 1

        data = _base_config(args)
        data = _merge_flags(data, args, args.command if args.command != "preset"
                            else "preset")
        rc = config_from_dict(data)

        if args.command == "preset" and args.dump:
            return _dump_preset(rc)

        from .reporting import execute, write_optimize_csv, write_sweep_csv

        output = execute(rc)
        if rc.out is None:
            _print_output(output)
            return 0
        stem = Path(rc.out)
        if output.report is not None:
            csv_path = write_optimize_csv(stem.with_suffix(".csv"), rc, output.report)
            print(f"wrote {csv_path}")
            _print_output(output)
            return 0
        csv_path = write_sweep_csv(stem.with_suffix(".csv"), rc, output)
        print(f"wrote {csv_path}")
        if rc.plot:
            from .plotting import plot_sweep

            png = plot_sweep(list(output.points), stem.with_suffix(".png"),
                             xlabel=output.label)
            print(f"wrote {png}")
        if getattr(args, "emit_plot_script", False):
            from .plotting import emit_plot_script

            print(f"wrote {emit_plot_script(csv_path)}")
        return 0
    except (ConfigError, ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        # objective or I/O failures, echoed with the run configuration
        print(f"error: {exc}", file=sys.stderr)
        if rc is not None:
            import json

            from .config import config_to_dict

            print(f"config: {json.dumps(config_to_dict(rc), sort_keys=True)}",
                  file=sys.stderr)
        return 2


def _print_output(output) -> None:
    if output.report is not None:
        rep = output.report
        print(f"best E_N = {rep.best_E_N:.6f} (baseline {rep.baseline_E_N:.6f}, "
              f"improvement {rep.improvement_over_equal:+.6f}, "
              f"{rep.evaluations_used} evaluations)")
        for name in sorted(rep.best_params):
            print(f"  {name} = {rep.best_params[name]:.6g}")
        return
    for p in output.points:
        tag = " (optimized)" if p.optimized else ""
        print(f"coupling = {p.coupling:.4f}  E_N = {p.E_N:.6f}  "
              f"nu_- = {p.nu_minus:.6f}{tag}")


if __name__ == "__main__":
    sys.exit(main())
