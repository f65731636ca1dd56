"""Run configuration: an INI file with one level of sections.

Recognised sections and keys (all optional unless noted)::

    [kernel]     family = rl | exp | tabulated   alpha   mu_w
                 table, partner_table            (tabulated only)
    [space]      s  a  b  N
    [time]       T  n
    [data]       f  u0      bump | spike | indicator | zero | <csv path>
                 f_scale  u0_scale  levels (comma list of truncation levels)
    [verify]     suites (comma list)  levels  split_cuts (fractions of T)
                 solution (CSV path)
    [kernels]    lambdas (comma list)
    [output]     dir  figures (yes/no)
    [tolerance]  scale
    [sweep]      section.key = v1, v2, ...   (cartesian product)

Relative paths are resolved against the directory of the config file.
"""
from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .entropy import SUITES, bump
from .errors import ConfigError, DomainError, UsageError
from .grids import SpaceGrid1D, TimeGrid
from .io import read_profile_csv
from .kernels import ExpWeighted, RiemannLiouville, Tabulated, make_pair
from .timestepper import ProblemData

PROFILES = ("bump", "spike", "indicator", "zero")

_SCHEMA = {
    "kernel": {"family", "alpha", "mu_w", "table", "partner_table"},
    "space": {"s", "a", "b", "n"},
    "time": {"t", "n"},
    "data": {"f", "u0", "f_scale", "u0_scale", "levels"},
    "verify": {"suites", "levels", "split_cuts", "solution"},
    "kernels": {"lambdas"},
    "output": {"dir", "figures"},
    "tolerance": {"scale"},
}


@dataclass(frozen=True)
class RunConfig:
    family: str = "rl"
    alpha: float = 0.5
    mu_w: float = 1.0
    table: Path | None = None
    partner_table: Path | None = None
    s: float = 0.5
    a: float = -1.0
    b: float = 1.0
    N: int = 32
    T: float = 1.0
    n: int = 64
    f: str = "bump"
    u0: str = "indicator"
    f_scale: float = 1.0
    u0_scale: float = 1.0
    levels: tuple = ()
    suites: tuple = SUITES
    verify_levels: tuple = (1.0, 5.0)
    split_cuts: tuple = (0.125, 0.25, 0.5)
    solution: Path | None = None
    lambdas: tuple = (1.0, 0.1)
    out_dir: Path = Path("out")
    figures: bool = True
    tolerance_scale: float = 1.0
    sweep: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def pair(self):
        try:
            if self.family == "rl":
                return make_pair(RiemannLiouville(self.alpha))
            if self.family == "exp":
                return make_pair(ExpWeighted(self.alpha, self.mu_w))
            if self.table is None or self.partner_table is None:
                raise ConfigError("kernel.table", "tabulated kernels need table and partner_table")
            return make_pair(Tabulated.from_csv(self.table), Tabulated.from_csv(self.partner_table))
        except (DomainError, UsageError) as exc:
            raise ConfigError("kernel", str(exc)) from None

    def space(self) -> SpaceGrid1D:
        return SpaceGrid1D(self.a, self.b, self.N)

    def time(self) -> TimeGrid:
        return TimeGrid(self.T, self.n)

    def profile(self, key: str) -> np.ndarray:
        source = getattr(self, key)
        scale = getattr(self, f"{key}_scale")
        grid = self.space()
        x = grid.nodes
        c, L = 0.5 * (self.a + self.b), self.b - self.a
        if source == "bump":
            v = bump(x, c, 0.25 * L)
        elif source == "spike":
            # integrable |x - c|^{-1/2}, clipped at half a cell
            v = np.maximum(np.abs(x - c), 0.5 * grid.h) ** -0.5
        elif source == "indicator":
            v = (np.abs(x - c) < L / 6).astype(float)
        elif source == "zero":
            v = np.zeros_like(x)
        else:
            path = self._path(source)
            if not path.exists():
                raise ConfigError(f"data.{key}", f"file {path} does not exist")
            try:
                px, pv = read_profile_csv(path)
            except UsageError as exc:
                raise ConfigError(f"data.{key}", str(exc)) from None
            v = np.interp(x, px, pv, left=0.0, right=0.0)
        return scale * v

    def _path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def problem(self) -> ProblemData:
        f, u0 = self.profile("f"), self.profile("u0")
        try:
            return ProblemData(self.pair(), self.s, self.space(), self.time(), f, u0)
        except DomainError as exc:
            raise ConfigError("data", str(exc)) from None

    def describe(self) -> dict:
        return {
            "kernel": {"family": self.family, "alpha": self.alpha, "mu_w": self.mu_w},
            "space": {"s": self.s, "a": self.a, "b": self.b, "N": self.N},
            "time": {"T": self.T, "n": self.n},
            "data": {"f": self.f, "u0": self.u0, "f_scale": self.f_scale,
                     "u0_scale": self.u0_scale, "levels": list(self.levels)},
        }


def _float(sec, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}", f"expected a number, got {raw!r}") from None


def _int(sec, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}", f"expected an integer, got {raw!r}") from None


def _floats(sec, key, raw):
    items = [v.strip() for v in raw.split(",") if v.strip()]
    return tuple(_float(sec, key, v) for v in items)


def _bool(sec, key, raw):
    low = raw.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"{sec}.{key}", f"expected yes/no, got {raw!r}")


# (section, key) -> (field name, parser)
_FIELDS = {
    ("kernel", "family"): ("family", lambda s, k, v: v.strip().lower()),
    ("kernel", "alpha"): ("alpha", _float),
    ("kernel", "mu_w"): ("mu_w", _float),
    ("kernel", "table"): ("table", None),
    ("kernel", "partner_table"): ("partner_table", None),
    ("space", "s"): ("s", _float),
    ("space", "a"): ("a", _float),
    ("space", "b"): ("b", _float),
    ("space", "n"): ("N", _int),
    ("time", "t"): ("T", _float),
    ("time", "n"): ("n", _int),
    ("data", "f"): ("f", lambda s, k, v: v.strip()),
    ("data", "u0"): ("u0", lambda s, k, v: v.strip()),
    ("data", "f_scale"): ("f_scale", _float),
    ("data", "u0_scale"): ("u0_scale", _float),
    ("data", "levels"): ("levels", _floats),
    ("verify", "suites"): ("suites", lambda s, k, v: tuple(x.strip() for x in v.split(",") if x.strip())),
    ("verify", "levels"): ("verify_levels", _floats),
    ("verify", "split_cuts"): ("split_cuts", _floats),
    ("verify", "solution"): ("solution", None),
    ("kernels", "lambdas"): ("lambdas", _floats),
    ("output", "dir"): ("out_dir", None),
    ("output", "figures"): ("figures", _bool),
    ("tolerance", "scale"): ("tolerance_scale", _float),
}


def apply_setting(cfg: RunConfig, section: str, key: str, raw: str) -> RunConfig:
    section, key = section.strip().lower(), key.strip().lower()
    if section not in _SCHEMA:
        raise ConfigError(section, "unknown section")
    if key not in _SCHEMA[section]:
        raise ConfigError(f"{section}.{key}", "unknown key")
    name, parse = _FIELDS[(section, key)]
    value = cfg._path(raw.strip()) if parse is None else parse(section, key, raw)
    return replace(cfg, **{name: value})


def validate(cfg: RunConfig) -> RunConfig:
    def need(ok, key, msg):
        if not ok:
            raise ConfigError(key, msg)

    need(cfg.family in ("rl", "exp", "tabulated"), "kernel.family", "choose rl, exp or tabulated")
    if cfg.family in ("rl", "exp"):
        need(0 < cfg.alpha < 1, "kernel.alpha", "must lie in (0, 1)")
    if cfg.family == "exp":
        need(cfg.mu_w > 0, "kernel.mu_w", "must be positive")
    if cfg.family == "tabulated":
        for key in ("table", "partner_table"):
            p = getattr(cfg, key)
            need(p is not None, f"kernel.{key}", "required for tabulated kernels")
            need(p.exists(), f"kernel.{key}", f"file {p} does not exist")
    need(0 < cfg.s < 1, "space.s", "must lie in (0, 1)")
    need(cfg.a < cfg.b, "space.b", "need a < b")
    need(cfg.N >= 1, "space.N", "need at least one interior node")
    need(cfg.T > 0, "time.T", "must be positive")
    need(cfg.n >= 1, "time.n", "need at least one step")
    for key in ("f", "u0"):
        need(getattr(cfg, key) != "", f"data.{key}", "empty data source")
    for key in ("f_scale", "u0_scale"):
        need(getattr(cfg, key) >= 0, f"data.{key}", "must be non-negative")
    lv = cfg.levels
    need(all(v > 0 for v in lv) and all(b > a for a, b in zip(lv, lv[1:])),
         "data.levels", "must be positive and strictly increasing")
    need(len(cfg.suites) > 0, "verify.suites", "empty suite selection")
    bad = [s for s in cfg.suites if s not in SUITES]
    need(not bad, "verify.suites", f"unknown suites {bad}; choose from {list(SUITES)}")
    need(all(v > 0 for v in cfg.verify_levels) and cfg.verify_levels, "verify.levels", "need positive levels")
    need(all(0 < c < 1 for c in cfg.split_cuts) and cfg.split_cuts, "verify.split_cuts", "fractions must lie in (0, 1)")
    need(all(v > 0 for v in cfg.lambdas) and cfg.lambdas, "kernels.lambdas", "need positive values")
    need(cfg.tolerance_scale > 0, "tolerance.scale", "must be positive")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read and validate a config file; ``None`` gives the built-in demo."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError("--config", f"file {path} does not exist")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError("--config", f"cannot parse: {exc}") from None
        cfg = replace(cfg, base_dir=path.resolve().parent, out_dir=path.resolve().parent / "out")
        sweep = {}
        for section in parser.sections():
            for key, raw in parser.items(section):
                if section.lower() == "sweep":
                    if "." not in key:
                        raise ConfigError(f"sweep.{key}", "sweep keys look like section.key")
                    sweep[key] = raw
                else:
                    cfg = apply_setting(cfg, section, key, raw)
        cfg = replace(cfg, sweep=sweep)
    for (section, key), raw in (overrides or {}).items():
        cfg = apply_setting(cfg, section, key, raw)
    return validate(cfg)


def expand_sweep(cfg: RunConfig) -> list[tuple[dict, RunConfig]]:
    """Cartesian product of the ``[sweep]`` entries, each applied to ``cfg``."""
    if not cfg.sweep:
        raise ConfigError("sweep", "no [sweep] entries")
    keys = list(cfg.sweep)
    values = [[v.strip() for v in cfg.sweep[k].split(",") if v.strip()] for k in keys]
    for k, vs in zip(keys, values):
        if not vs:
            raise ConfigError(f"sweep.{k}", "no values")
    runs = []
    for combo in itertools.product(*values):
        sub = cfg
        for k, v in zip(keys, combo):
            section, key = k.split(".", 1)
            try:
                sub = apply_setting(sub, section, key, v)
            except ConfigError as exc:
                raise ConfigError(f"sweep.{k}", str(exc)) from None
        runs.append((dict(zip(keys, combo)), validate(replace(sub, sweep={}))))
    return runs


def dump_config(cfg: RunConfig) -> str:
    """INI text reproducing ``cfg`` (paths written absolute)."""
    lines = [
        "[kernel]", f"family = {cfg.family}", f"alpha = {cfg.alpha!r}", f"mu_w = {cfg.mu_w!r}",
    ]
    if cfg.table is not None:
        lines += [f"table = {cfg.table}", f"partner_table = {cfg.partner_table}"]
    fl = lambda xs: ", ".join(repr(float(x)) for x in xs)
    lines += [
        "", "[space]", f"s = {cfg.s!r}", f"a = {cfg.a!r}", f"b = {cfg.b!r}", f"N = {cfg.N}",
        "", "[time]", f"T = {cfg.T!r}", f"n = {cfg.n}",
        "", "[data]",
        f"f = {cfg.f if cfg.f in PROFILES else cfg._path(cfg.f)}",
        f"u0 = {cfg.u0 if cfg.u0 in PROFILES else cfg._path(cfg.u0)}",
        f"f_scale = {cfg.f_scale!r}", f"u0_scale = {cfg.u0_scale!r}",
    ]
    if cfg.levels:
        lines.append(f"levels = {fl(cfg.levels)}")
    lines += [
        "", "[verify]", f"suites = {', '.join(cfg.suites)}", f"levels = {fl(cfg.verify_levels)}",
        f"split_cuts = {fl(cfg.split_cuts)}",
        "", "[kernels]", f"lambdas = {fl(cfg.lambdas)}",
        "", "[output]", f"figures = {'yes' if cfg.figures else 'no'}",
        "", "[tolerance]", f"scale = {cfg.tolerance_scale!r}", "",
    ]
    return "\n".join(lines)
