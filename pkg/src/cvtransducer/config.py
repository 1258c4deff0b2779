"""Run configuration: TOML files and dictionaries, strictly validated.

The grammar is key-value with nested sections (TOML).  Unknown keys are
errors, range violations name the offending field.  The same dictionary
form is embedded in every CSV header, which is what makes a run
reproducible from its output file alone.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib as _toml
else:
    import tomli as _toml

from .adiabatic import IdealProtocolSpec
from .dynamics import ProtocolConfig, asymmetric_protocol, symmetric_protocol
from .optimize import FreeParameter

MODES = ("ideal-sweep", "dyn-sweep", "optimize", "validate", "preset")
AXES = ("g", "tau", "g_a", "g_b", "tau_a", "tau_b")


class ConfigError(ValueError):
    """Malformed or out-of-range run configuration."""


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        return [self.start + k * step for k in range(self.count)]


@dataclass(frozen=True)
class IdealSection:
    t_loss_a: float = 1.0
    t_loss_b: float = 1.0
    n_m0: float = 0.0


@dataclass(frozen=True)
class ProtocolSection:
    g: tuple[float, float, float, float] = (0.05, 0.05, 0.05, 0.05)
    tau: tuple[float, float, float, float] = (200.0, 200.0, 200.0, 200.0)
    kappa_a: float = 1.0
    kappa_b: float = 1.0
    slices_a: int = 1024
    slices_b: int = 1024
    gamma: float = 0.0
    n_th: float = 0.0
    n_m0: Optional[float] = None
    t_loss_a: float = 1.0
    t_loss_b: float = 1.0
    idle_decay: bool = True
    axis: str = "g"


@dataclass(frozen=True)
class OptimizeSection:
    enabled: bool = False
    objective: str = "dynamic"
    budget: int = 400
    restarts: int = 4
    free: tuple[FreeParameter, ...] = ()
    g_limits: Optional[tuple[tuple[float, float], ...]] = None


@dataclass(frozen=True)
class PresetSection:
    name: str = "fig3"
    n_th: float = 200.0
    t_loss: Optional[float] = None
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs, in declarative form."""

    mode: str
    out: Optional[str] = None
    seed: int = 0
    workers: int = 1
    refine: int = 0
    plot: bool = True
    grid: Optional[GridSpec] = None
    ideal: IdealSection = field(default_factory=IdealSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    optimize: OptimizeSection = field(default_factory=OptimizeSection)
    preset: PresetSection = field(default_factory=PresetSection)

    def ideal_template(self) -> IdealProtocolSpec:
        sec = self.ideal
        return IdealProtocolSpec(
            gains=(1.0, 1.0, 1.0, 1.0),
            loss_after_pass1=sec.t_loss_a,
            loss_after_pass2=sec.t_loss_b,
            n_m0=sec.n_m0,
        )

    def protocol_template(self) -> ProtocolConfig:
        sec = self.protocol
        if sec.kappa_a == sec.kappa_b and sec.slices_a == sec.slices_b:
            return symmetric_protocol(
                sec.g, sec.tau, kappa=sec.kappa_a, slices=sec.slices_a,
                gamma=sec.gamma, n_th=sec.n_th, n_m0=sec.n_m0,
                loss_a=sec.t_loss_a, loss_b=sec.t_loss_b,
                idle_decay=sec.idle_decay,
            )
        return asymmetric_protocol(
            (sec.g[0], sec.g[2]), (sec.g[1], sec.g[3]),
            (sec.tau[0], sec.tau[2]), (sec.tau[1], sec.tau[3]),
            kappa_a=sec.kappa_a, kappa_b=sec.kappa_b,
            slices_a=sec.slices_a, slices_b=sec.slices_b,
            gamma=sec.gamma, n_th=sec.n_th, n_m0=sec.n_m0,
            loss_a=sec.t_loss_a, loss_b=sec.t_loss_b,
            idle_decay=sec.idle_decay,
        )


class _Section:
    """Pop-and-validate view of one config table."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must be a table")
        self.data = dict(data)
        self.path = path

    def take(self, key: str, kind, default=..., rng=None, choices=None):
        if key not in self.data:
            if default is ...:
                raise ConfigError(f"missing required key {self.path}{key}")
            return default
        raw = self.data.pop(key)
        val = self._coerce(key, raw, kind)
        if rng is not None:
            lo, hi = rng
            if (lo is not None and val < lo) or (hi is not None and val > hi):
                raise ConfigError(
                    f"{self.path}{key} = {val!r} out of range "
                    f"[{lo if lo is not None else '-inf'}, "
                    f"{hi if hi is not None else 'inf'}]"
                )
        if choices is not None and val not in choices:
            raise ConfigError(
                f"{self.path}{key} = {val!r} must be one of {list(choices)}"
            )
        return val

    def _coerce(self, key: str, raw, kind):
        try:
            if kind is float:
                if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                    raise TypeError
                return float(raw)
            if kind is int:
                if isinstance(raw, bool) or not isinstance(raw, int):
                    raise TypeError
                return int(raw)
            if kind is bool:
                if not isinstance(raw, bool):
                    raise TypeError
                return raw
            if kind is str:
                if not isinstance(raw, str):
                    raise TypeError
                return raw
            if kind == "float4":
                if isinstance(raw, (int, float)) and not isinstance(raw, bool):
                    return (float(raw),) * 4
                vals = tuple(float(v) for v in raw)
                if len(vals) != 4:
                    raise TypeError
                return vals
        except (TypeError, ValueError):
            raise ConfigError(
                f"{self.path}{key} = {raw!r} has the wrong type "
                f"(expected {getattr(kind, '__name__', kind)})"
            ) from None
        raise AssertionError(f"unhandled kind {kind}")

    def subtable(self, key: str) -> "dict | None":
        return self.data.pop(key, None)

    def finish(self):
        if self.data:
            stray = ", ".join(f"{self.path}{k}" for k in sorted(self.data))
            raise ConfigError(f"unknown configuration keys: {stray}")


def config_from_dict(data: dict) -> RunConfig:
    root = _Section(data, "")
    mode = root.take("mode", str, choices=MODES)
    out = root.take("out", str, default=None)
    seed = root.take("seed", int, default=0)
    workers = root.take("workers", int, default=1, rng=(1, 256))
    refine = root.take("refine", int, default=0, rng=(0, 8))
    plot = root.take("plot", bool, default=True)

    grid = None
    raw = root.subtable("grid")
    if raw is not None:
        sec = _Section(raw, "grid.")
        grid = GridSpec(
            start=sec.take("start", float),
            stop=sec.take("stop", float),
            count=sec.take("count", int, rng=(1, 100000)),
        )
        sec.finish()
        if grid.count > 1 and grid.stop <= grid.start:
            raise ConfigError("grid.stop must exceed grid.start")

    ideal = IdealSection()
    raw = root.subtable("ideal")
    if raw is not None:
        sec = _Section(raw, "ideal.")
        ideal = IdealSection(
            t_loss_a=sec.take("t_loss_a", float, default=1.0, rng=(0.0, 1.0)),
            t_loss_b=sec.take("t_loss_b", float, default=1.0, rng=(0.0, 1.0)),
            n_m0=sec.take("n_m0", float, default=0.0, rng=(0.0, None)),
        )
        sec.finish()

    protocol = ProtocolSection()
    raw = root.subtable("protocol")
    if raw is not None:
        sec = _Section(raw, "protocol.")
        protocol = ProtocolSection(
            g=sec.take("g", "float4", default=(0.05,) * 4),
            tau=sec.take("tau", "float4", default=(200.0,) * 4),
            kappa_a=sec.take("kappa_a", float, default=1.0, rng=(1e-12, None)),
            kappa_b=sec.take("kappa_b", float, default=1.0, rng=(1e-12, None)),
            slices_a=sec.take("slices_a", int, default=1024, rng=(16, None)),
            slices_b=sec.take("slices_b", int, default=1024, rng=(16, None)),
            gamma=sec.take("gamma", float, default=0.0, rng=(0.0, None)),
            n_th=sec.take("n_th", float, default=0.0, rng=(0.0, None)),
            n_m0=sec.take("n_m0", float, default=None, rng=(0.0, None)),
            t_loss_a=sec.take("t_loss_a", float, default=1.0, rng=(0.0, 1.0)),
            t_loss_b=sec.take("t_loss_b", float, default=1.0, rng=(0.0, 1.0)),
            idle_decay=sec.take("idle_decay", bool, default=True),
            axis=sec.take("axis", str, default="g", choices=AXES),
        )
        sec.finish()
        if any(v < 0 for v in protocol.g):
            raise ConfigError("protocol.g entries must be >= 0")
        if any(v <= 0 for v in protocol.tau):
            raise ConfigError("protocol.tau entries must be > 0")

    optimize = OptimizeSection()
    raw = root.subtable("optimize")
    if raw is not None:
        sec = _Section(raw, "optimize.")
        free_raw = sec.data.pop("free", [])
        free = []
        for k, item in enumerate(free_raw):
            fs = _Section(item, f"optimize.free[{k}].")
            free.append(FreeParameter(
                name=fs.take("name", str),
                lower=fs.take("lower", float),
                upper=fs.take("upper", float),
            ))
            fs.finish()
        limits_raw = sec.data.pop("g_limits", None)
        g_limits = None
        if limits_raw is not None:
            try:
                g_limits = tuple((float(lo), float(hi)) for lo, hi in limits_raw)
            except (TypeError, ValueError):
                raise ConfigError(
                    "optimize.g_limits must be four [lower, upper] pairs"
                ) from None
            if len(g_limits) != 4:
                raise ConfigError("optimize.g_limits must have four entries")
        optimize = OptimizeSection(
            enabled=sec.take("enabled", bool, default=True),
            objective=sec.take("objective", str, default="dynamic",
                               choices=("adiabatic", "dynamic")),
            budget=sec.take("budget", int, default=400, rng=(10, None)),
            restarts=sec.take("restarts", int, default=4, rng=(1, None)),
            free=tuple(free),
            g_limits=g_limits,
        )
        sec.finish()

    preset = PresetSection()
    raw = root.subtable("preset")
    if raw is not None:
        sec = _Section(raw, "preset.")
        name = sec.take("name", str, choices=("fig2", "fig3", "fig4"))
        n_th = sec.take("n_th", float, default=200.0, rng=(0.0, None))
        t_loss = sec.take("t_loss", float, default=None, rng=(0.0, 1.0))
        allowed = {"axis", "slices", "slices_a", "slices_b", "tau", "tau_a",
                   "tau_b", "eta_max", "points", "n_m0", "resolution",
                   "optimize_durations"}
        stray = set(sec.data) - allowed
        if stray:
            raise ConfigError(
                "unknown configuration keys: "
                + ", ".join(f"preset.{k}" for k in sorted(stray))
            )
        preset = PresetSection(name=name, n_th=n_th, t_loss=t_loss,
                               options=dict(sec.data))
        sec.data.clear()

    root.finish()
    return RunConfig(mode=mode, out=out, seed=seed, workers=workers,
                     refine=refine, plot=plot, grid=grid, ideal=ideal,
                     protocol=protocol, optimize=optimize, preset=preset)


def parse_config_file(path: "str | Path") -> RunConfig:
    """Parse a TOML run configuration; parse errors carry line/column."""
    text = Path(path).read_bytes()
    try:
        data = _toml.loads(text.decode("utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def config_to_dict(rc: RunConfig) -> dict:
    """Plain-dict form of a RunConfig (inverse of config_from_dict)."""
    out: dict[str, Any] = {
        "mode": rc.mode,
        "seed": rc.seed,
        "workers": rc.workers,
        "refine": rc.refine,
        "plot": rc.plot,
    }
    if rc.out is not None:
        out["out"] = rc.out
    if rc.grid is not None:
        out["grid"] = asdict(rc.grid)
    out["ideal"] = asdict(rc.ideal)
    prot = asdict(rc.protocol)
    prot["g"] = list(rc.protocol.g)
    prot["tau"] = list(rc.protocol.tau)
    if prot["n_m0"] is None:
        del prot["n_m0"]
    out["protocol"] = prot
    opt = {
        "enabled": rc.optimize.enabled,
        "objective": rc.optimize.objective,
        "budget": rc.optimize.budget,
        "restarts": rc.optimize.restarts,
        "free": [asdict(p) for p in rc.optimize.free],
    }
    if rc.optimize.g_limits is not None:
        opt["g_limits"] = [list(pair) for pair in rc.optimize.g_limits]
    out["optimize"] = opt
    if rc.mode == "preset":
        pre = {"name": rc.preset.name, "n_th": rc.preset.n_th}
        if rc.preset.t_loss is not None:
            pre["t_loss"] = rc.preset.t_loss
        pre.update(rc.preset.options)
        out["preset"] = pre
    return out
