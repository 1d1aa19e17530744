"""Run configuration: a flat INI file read with :mod:`configparser`.

Every key has a default; unknown sections or keys are hard errors.  See
README.md for the key reference.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .domain import Window
from .response import ResponseFunction

SCHEMA: dict[str, dict[str, str]] = {
    "window": {"dim": "2", "side": "10", "topology": "torus"},
    "kernel": {"kind": "indicator", "K": "1", "R": "1", "rate": "", "power": "", "table": ""},
    "run": {"lambda": "1", "seed": "1", "t0": "0", "t1": "20", "engine": "sheriff",
            "variant": "single", "replicates": "1", "grid": "", "out": "out"},
    "z0": {"spec": ""},
    "subwindow": {"side": ""},
    "burnin": {"window_lifetimes": "20", "max_time": "400", "snapshots": "25",
               "spacing_lifetimes": "2"},
}


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


class SmallWindowWarning(UserWarning):
    """Window side below five kernel support radii."""


@dataclass(frozen=True)
class BurnInPolicy:
    window_lifetimes: float = 20.0
    max_time: float = 400.0
    snapshots: int = 25
    spacing_lifetimes: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    window: Window
    kernel: ResponseFunction
    lam: float = 1.0
    seed: int = 1
    t0: float = 0.0
    t1: float = 20.0
    engine: str = "sheriff"
    variant: str = "single"
    replicates: int = 1
    grid: tuple[float, ...] = ()
    out: str = "out"
    z0: str = ""
    subwindow_side: float | None = None
    burnin: BurnInPolicy = field(default_factory=BurnInPolicy)

    def __post_init__(self):
        if self.engine not in ("sheriff", "jump"):
            raise ConfigError(f"engine must be sheriff or jump, got {self.engine!r}")
        if self.variant not in ("single", "double"):
            raise ConfigError(f"variant must be single or double, got {self.variant!r}")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.t1 > self.t0:
            raise ConfigError("need t1 > t0")
        if self.kernel.d != self.window.d:
            raise ConfigError("kernel and window dimensions differ")

    @property
    def time_grid(self) -> np.ndarray:
        return np.asarray(self.grid, float) if self.grid else np.array([self.t1])

    @property
    def subwindow(self) -> tuple[np.ndarray, np.ndarray]:
        side = self.subwindow_side if self.subwindow_side is not None else self.window.L / 4.0
        return self.window.central_box(side)

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)


def default_config(**kw) -> RunConfig:
    """Desk-scale instance: d=2, L=10 torus, lambda=1, indicator K=1 R=1."""
    base = RunConfig(Window(2, 10.0, "torus"), ResponseFunction.indicator(1.0, 1.0, 2))
    return replace(base, **kw) if kw else base


def _float(section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _int(section, key, raw) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def parse_grid(raw: str) -> tuple[float, ...]:
    """``"0:20:41"`` (start:stop:count, inclusive) or a comma list."""
    raw = raw.strip()
    if not raw:
        return ()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid range must be start:stop:count, got {raw!r}")
        return tuple(np.linspace(float(parts[0]), float(parts[1]), int(parts[2])).tolist())
    return tuple(float(v) for v in raw.split(","))


def kernel_from_section(sec: dict[str, str], d: int, base: Path | None = None) -> ResponseFunction:
    kind = sec["kind"].strip().lower()
    K = _float("kernel", "K", sec["K"])
    if kind == "indicator":
        return ResponseFunction.indicator(K, _float("kernel", "R", sec["R"]), d)
    if kind in ("truncated-power", "truncated_power"):
        return ResponseFunction.truncated_power(K, _float("kernel", "R", sec["R"]),
                                                _float("kernel", "power", sec["power"]), d)
    if kind == "exponential":
        return ResponseFunction.exponential(K, _float("kernel", "rate", sec["rate"]), d)
    if kind == "tabulated":
        if not sec["table"]:
            raise ConfigError("[kernel] tabulated kind needs a table path")
        p = Path(sec["table"])
        if base is not None and not p.is_absolute():
            p = base / p
        return ResponseFunction.from_csv(p, d)
    raise ConfigError(f"[kernel] unknown kind {kind!r}")


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep K and R case
    cp.read_string(text)
    values = {s: dict(keys) for s, keys in SCHEMA.items()}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[section][key] = raw.strip()
    w = values["window"]
    d = _int("window", "dim", w["dim"])
    try:
        window = Window(d, _float("window", "side", w["side"]), w["topology"])
        kernel = kernel_from_section(values["kernel"], d, base)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    r = values["run"]
    b = values["burnin"]
    side = values["subwindow"]["side"]
    cfg = RunConfig(
        window, kernel,
        lam=_float("run", "lambda", r["lambda"]),
        seed=_int("run", "seed", r["seed"]),
        t0=_float("run", "t0", r["t0"]),
        t1=_float("run", "t1", r["t1"]),
        engine=r["engine"], variant=r["variant"],
        replicates=_int("run", "replicates", r["replicates"]),
        grid=parse_grid(r["grid"]), out=r["out"],
        z0=values["z0"]["spec"],
        subwindow_side=_float("subwindow", "side", side) if side else None,
        burnin=BurnInPolicy(_float("burnin", "window_lifetimes", b["window_lifetimes"]),
                            _float("burnin", "max_time", b["max_time"]),
                            _int("burnin", "snapshots", b["snapshots"]),
                            _float("burnin", "spacing_lifetimes", b["spacing_lifetimes"])),
    )
    check_window_size(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


def check_window_size(cfg: RunConfig) -> bool:
    """Warn when the side is below 5 support radii (torus self-interaction)."""
    R = cfg.kernel.support_radius
    if math.isfinite(R) and cfg.window.L < 5.0 * R:
        warnings.warn(f"window side {cfg.window.L} is below 5 support radii ({5 * R})",
                      SmallWindowWarning, stacklevel=2)
        return False
    return True


def config_to_text(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` for the built-in kernel kinds."""
    k = cfg.kernel
    kern = {"kind": k.kind.value, "K": repr(k.K)}
    if k.kind.value in ("indicator", "truncated-power"):
        kern["R"] = repr(k.params[1])
    if k.kind.value == "truncated-power":
        kern["power"] = repr(k.params[2])
    if k.kind.value == "exponential":
        kern["rate"] = repr(k.params[1])
    if k.kind.value == "tabulated":
        raise ConfigError("tabulated kernels refer to an external table")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["window"] = {"dim": str(cfg.window.d), "side": repr(cfg.window.L),
                    "topology": cfg.window.topology}
    cp["kernel"] = kern
    cp["run"] = {"lambda": repr(cfg.lam), "seed": str(cfg.seed), "t0": repr(cfg.t0),
                 "t1": repr(cfg.t1), "engine": cfg.engine, "variant": cfg.variant,
                 "replicates": str(cfg.replicates), "grid": ",".join(repr(g) for g in cfg.grid),
                 "out": cfg.out}
    cp["z0"] = {"spec": cfg.z0}
    cp["subwindow"] = {"side": "" if cfg.subwindow_side is None else repr(cfg.subwindow_side)}
    b = cfg.burnin
    cp["burnin"] = {"window_lifetimes": repr(b.window_lifetimes), "max_time": repr(b.max_time),
                    "snapshots": str(b.snapshots), "spacing_lifetimes": repr(b.spacing_lifetimes)}
    import io

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


__all__ = [
    "BurnInPolicy",
    "ConfigError",
    "RunConfig",
    "SCHEMA",
    "SmallWindowWarning",
    "check_window_size",
    "config_to_text",
    "default_config",
    "kernel_from_section",
    "load_config",
    "parse_config",
    "parse_grid",
]
