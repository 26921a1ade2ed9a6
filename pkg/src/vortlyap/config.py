"""JSON experiment configuration.

A config is a JSON object with optional sections ``grid``, ``solver``,
``initial``, ``monitor``, ``dissipativity``, ``lemmas`` and ``output``. Every
key has a default; unknown keys are rejected so typos surface early. Errors
name the offending field path, e.g. ``solver.nu``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .functionals import BesovParams
from .solver import SolverConfig
from .spectral import GridSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "config_hash", "git_blob_hash"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridSection:
    dim: int = 3
    n: int = 32
    box_length: float = 2 * math.pi


@dataclass(frozen=True)
class SolverSection:
    nu: float = 0.1
    dt: float | None = None
    t_end: float = 1.0
    cfl: float = 0.4
    record_every: int = 1


@dataclass(frozen=True)
class InitialSection:
    kind: str = "random"  # random | shell | taylor_green
    seed: int = 0
    amplitude: float = 1.0
    peak_band: int = 1
    spectrum_slope: float = -1.0


@dataclass(frozen=True)
class MonitorSection:
    p_list: tuple[float, ...] = (2.0, 4.0)
    m: int = 3
    besov: tuple[tuple[float, float, float], ...] = ((0.5, 2.0, 2.0),)


@dataclass(frozen=True)
class DissipativitySection:
    samples: int = 100
    amplitudes: tuple[float, ...] = (1000.0, 300.0, 100.0, 10.0, 0.1, 1e-3, 1e-5)
    p_list: tuple[float, ...] = (2.0, 4.0)
    nu: float = 0.1
    seed: int = 1000
    peak_band: int = 1
    spectrum_slope: float = -1.0


@dataclass(frozen=True)
class LemmasSection:
    seeds: tuple[int, ...] = tuple(range(50))


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    initial: InitialSection = field(default_factory=InitialSection)
    monitor: MonitorSection = field(default_factory=MonitorSection)
    dissipativity: DissipativitySection = field(default_factory=DissipativitySection)
    lemmas: LemmasSection = field(default_factory=LemmasSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: str = "."

    def make_grid(self) -> GridSpec:
        g = self.grid
        try:
            return GridSpec(g.dim, g.n, g.box_length)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None

    def solver_config(self) -> SolverConfig:
        s = self.solver
        try:
            return SolverConfig(nu=s.nu, t_end=s.t_end, dt=s.dt, cfl=s.cfl, record_every=s.record_every)
        except ValueError as exc:
            raise ConfigError("solver", str(exc)) from None

    def besov_params(self) -> list[BesovParams]:
        return [BesovParams(*b) for b in self.monitor.besov]

    def output_dir(self) -> Path:
        p = Path(self.output.dir)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def check_besov_hypotheses(params: BesovParams, path: str = "monitor.besov") -> None:
    """Smoothness ``s = 3/p - 1`` with ``p, q >= 2`` and ``3/p + 2/q > 1``."""
    p, q, s = params.p, params.q, params.s
    if p == math.inf or p < 2 or q < 2:
        raise ConfigError(path, f"need 2 <= p < inf and q >= 2, got p={p:g}, q={q:g}")
    if abs(s - (3.0 / p - 1.0)) > 1e-12:
        raise ConfigError(path, f"need s = 3/p - 1 = {3.0 / p - 1.0:g}, got {s:g}")
    if not 3.0 / p + (0.0 if q == math.inf else 2.0 / q) > 1:
        raise ConfigError(path, "need 3/p + 2/q > 1")


def _num(v, path: str, kind=float, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(path, f"expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _pnum(v, path):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return _num(v, path)


def _section(raw: dict, name: str, cls, converters: dict):
    data = raw.get(name, {})
    if not isinstance(data, dict):
        raise ConfigError(name, "expected an object")
    unknown = set(data) - set(converters)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    kwargs = {}
    for key, conv in converters.items():
        if key in data:
            kwargs[key] = conv(data[key], f"{name}.{key}")
    return cls(**kwargs)


def _list(conv):
    def inner(v, path):
        if not isinstance(v, list):
            raise ConfigError(path, "expected a list")
        return tuple(conv(x, f"{path}[{i}]") for i, x in enumerate(v))

    return inner


def _dt(v, path):
    if v is None or v == "auto":
        return None
    return _num(v, path)


def _str(v, path):
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    return v


def _triple(v, path):
    if isinstance(v, str):
        try:
            b = BesovParams.parse(v)
        except ValueError:
            raise ConfigError(path, f"expected 's,p,q', got {v!r}") from None
        return (b.s, b.p, b.q)
    if not isinstance(v, list) or len(v) != 3:
        raise ConfigError(path, "expected [s, p, q]")
    return (_num(v[0], path), _pnum(v[1], path), _pnum(v[2], path))


def parse_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    sections = {"grid", "solver", "initial", "monitor", "dissipativity", "lemmas", "output"}
    unknown = set(raw) - sections
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    grid = _section(raw, "grid", GridSection, {
        "dim": lambda v, p: _num(v, p, int),
        "n": lambda v, p: _num(v, p, int),
        "box_length": _num,
    })
    solver = _section(raw, "solver", SolverSection, {
        "nu": _num, "dt": _dt, "t_end": _num, "cfl": _num,
        "record_every": lambda v, p: _num(v, p, int),
    })
    initial = _section(raw, "initial", InitialSection, {
        "kind": _str,
        "seed": lambda v, p: _num(v, p, int),
        "amplitude": _num,
        "peak_band": lambda v, p: _num(v, p, int),
        "spectrum_slope": _num,
    })
    monitor = _section(raw, "monitor", MonitorSection, {
        "p_list": _list(_pnum),
        "m": lambda v, p: _num(v, p, int),
        "besov": _list(_triple),
    })
    diss = _section(raw, "dissipativity", DissipativitySection, {
        "samples": lambda v, p: _num(v, p, int),
        "amplitudes": _list(_num),
        "p_list": _list(_pnum),
        "nu": _num,
        "seed": lambda v, p: _num(v, p, int),
        "peak_band": lambda v, p: _num(v, p, int),
        "spectrum_slope": _num,
    })
    lemmas = _section(raw, "lemmas", LemmasSection, {"seeds": _list(lambda v, p: _num(v, p, int))})
    output = _section(raw, "output", OutputSection, {"dir": _str})
    cfg = ExperimentConfig(grid, solver, initial, monitor, diss, lemmas, output, base_dir=base_dir)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    grid = cfg.make_grid()
    cfg.solver_config()
    if cfg.initial.kind not in ("random", "shell", "taylor_green"):
        raise ConfigError("initial.kind", f"unknown kind {cfg.initial.kind!r}")
    if not grid.j_min <= cfg.initial.peak_band <= grid.j_max:
        raise ConfigError("initial.peak_band", f"outside [{grid.j_min}, {grid.j_max}]")
    for i, p in enumerate(cfg.monitor.p_list):
        if not 2 <= p < math.inf:
            raise ConfigError(f"monitor.p_list[{i}]", f"need 2 <= p < inf, got {p}")
    if cfg.monitor.m < 3:
        raise ConfigError("monitor.m", "need m >= 3")
    for i, b in enumerate(cfg.monitor.besov):
        check_besov_hypotheses(BesovParams(*b), f"monitor.besov[{i}]")
    d = cfg.dissipativity
    if d.samples < 1:
        raise ConfigError("dissipativity.samples", "need at least one sample")
    if not d.amplitudes:
        raise ConfigError("dissipativity.amplitudes", "need at least one amplitude")
    for i, a in enumerate(d.amplitudes):
        if a < 0:
            raise ConfigError(f"dissipativity.amplitudes[{i}]", "amplitudes must be nonnegative")
    for i, p in enumerate(d.p_list):
        if not 2 <= p < math.inf:
            raise ConfigError(f"dissipativity.p_list[{i}]", f"need 2 <= p < inf, got {p}")
    if not d.nu > 0:
        raise ConfigError("dissipativity.nu", "must be positive")
    if not grid.j_min <= d.peak_band <= grid.j_max:
        raise ConfigError("dissipativity.peak_band", f"outside [{grid.j_min}, {grid.j_max}]")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return parse_config(raw, base_dir=str(path.parent))


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way git hashes a blob."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
