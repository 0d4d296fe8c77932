"""Declarative scenario configuration (YAML).

Schema, every key optional (missing keys take the defaults of the uniform
200-heater study)::

    population:
      types:                      # one mapping per heater class
        - {C_a: 0.57, U_a: 0.27, x_out: -10.0, sigma: 0.15}
      weights: [1.0]
    initial: {mean: 21.0, std: 1.0}
    comfort: {l: 17.0, h: 25.0}
    target: {y: 20.0, direction: release}   # release -> z = l, absorb -> z = h
    costs: {delta: 0.001, q_x0: 200.0, r: 10.0, q_lq: 200.0}
    g: {kind: linear, mu: auto, beta: 3.0}  # mu: number or "auto" (near fixed point search)
    grid: {dt: 0.001, T_max: 6.0}
    sim: {N: 200, T: 3.0, seed: 0}
    algo1: {n1: 1.1, n2: 1.5, t0: 0.25, d_mu: 1.0, e1: 1.0e-6, e2: 1.0e-4, gamma: 10.0}
    segments: [{y: 20.0, duration: 3.0}, ...]          # optional piecewise targets
    robustness: {true_mean: 21.5, true_x_out: -11.0, window: 0.25, tol: 0.02}

``e2`` is relative to the steady-state pressure q*. Unknown keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .lqg import CostParams, TimeGrid
from .nearfp import Algo1Params
from .population import ComfortBand, GFunction, InitialDistribution, TypeDistribution, derive_rates
from .scenario import Scenario


@dataclass(frozen=True)
class TypeSpec:
    C_a: float = 0.57
    U_a: float = 0.27
    x_out: float = -10.0
    sigma: float = 0.15


@dataclass(frozen=True)
class PopulationSpec:
    types: tuple[TypeSpec, ...] = (TypeSpec(),)
    weights: tuple[float, ...] = (1.0,)


@dataclass(frozen=True)
class InitialSpec:
    mean: float = 21.0
    std: float = 1.0


@dataclass(frozen=True)
class ComfortSpec:
    l: float = 17.0
    h: float = 25.0


@dataclass(frozen=True)
class TargetSpec:
    y: float = 20.0
    direction: str = "release"


@dataclass(frozen=True)
class CostSpec:
    delta: float = 0.001
    q_x0: float = 200.0
    r: float = 10.0
    q_lq: float = 200.0


@dataclass(frozen=True)
class GSpec:
    kind: str = "linear"
    mu: float | str = "auto"
    beta: float = 3.0


@dataclass(frozen=True)
class GridSpec:
    dt: float = 1e-3
    T_max: float = 6.0


@dataclass(frozen=True)
class SimSpec:
    N: int = 200
    T: float = 3.0
    seed: int = 0


@dataclass(frozen=True)
class Algo1Spec:
    n1: float = 1.1
    n2: float = 1.5
    t0: float = 0.25
    d_mu: float = 1.0
    e1: float = 1e-6
    e2: float = 1e-4
    gamma: float = 10.0


@dataclass(frozen=True)
class SegmentSpec:
    y: float
    duration: float


@dataclass(frozen=True)
class RobustnessSpec:
    true_mean: float = 21.5
    true_x_out: float = -11.0
    window: float = 0.25
    tol: float = 0.02


@dataclass(frozen=True)
class ScenarioConfig:
    population: PopulationSpec = field(default_factory=PopulationSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    comfort: ComfortSpec = field(default_factory=ComfortSpec)
    target: TargetSpec = field(default_factory=TargetSpec)
    costs: CostSpec = field(default_factory=CostSpec)
    g: GSpec = field(default_factory=GSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    sim: SimSpec = field(default_factory=SimSpec)
    algo1: Algo1Spec = field(default_factory=Algo1Spec)
    segments: tuple[SegmentSpec, ...] = ()
    robustness: RobustnessSpec | None = None

    @property
    def z(self) -> float:
        return self.comfort.l if self.target.direction == "release" else self.comfort.h

    @property
    def mu_auto(self) -> bool:
        return self.g.mu == "auto"

    def type_distribution(self, x_out: float | None = None) -> TypeDistribution:
        types = [derive_rates(t.C_a, t.U_a, t.x_out if x_out is None else x_out, t.sigma)
                 for t in self.population.types]
        return TypeDistribution(types, self.population.weights)

    def scenario(self, mu: float | None = None, y: float | None = None, x0_mean: float | None = None,
                 x_out: float | None = None) -> Scenario:
        """Build the solver scenario. With ``mu: auto`` and no explicit ``mu`` the unit gain is used."""
        if mu is None:
            if self.mu_auto:
                mu = 1.0
            else:
                mu = float(self.g.mu)
        y = self.target.y if y is None else y
        mean = self.initial.mean if x0_mean is None else x0_mean
        band = ComfortBand.for_target(self.comfort.l, self.comfort.h, y, mean)
        if self.g.kind == "linear":
            g = GFunction.linear(mu)
        else:
            g = GFunction.exp_clamped(mu, self.g.beta, band.z, y, mean)
        return Scenario(
            dist=self.type_distribution(x_out),
            band=band,
            init=InitialDistribution(mean, self.initial.std),
            cost=CostParams(**asdict(self.costs)),
            g=g,
            grid=TimeGrid.from_horizon(self.grid.T_max, self.grid.dt),
        )

    def algo1_params(self) -> Algo1Params:
        a = self.algo1
        return Algo1Params(n1=a.n1, n2=a.n2, t0=a.t0, d_mu=a.d_mu, e1=a.e1, e2_rel=a.e2, gamma=a.gamma)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, sim=replace(self.sim, seed=int(seed)))


_SECTIONS = {
    "initial": InitialSpec, "comfort": ComfortSpec, "target": TargetSpec, "costs": CostSpec,
    "g": GSpec, "grid": GridSpec, "sim": SimSpec, "algo1": Algo1Spec, "robustness": RobustnessSpec,
}


def _number(v, where, errs, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errs.append(f"{where}: expected a number, got {v!r}")
        return None
    if integer:
        if int(v) != v:
            errs.append(f"{where}: expected an integer, got {v!r}")
            return None
        return int(v)
    if not math.isfinite(v):
        errs.append(f"{where}: must be finite")
        return None
    return float(v)


def _record(cls, raw, where, errs):
    """Fill dataclass ``cls`` from a mapping, collecting type errors."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        errs.append(f"{where}: expected a mapping")
        return cls() if cls is not SegmentSpec else None
    names = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in names:
            errs.append(f"{where}: unknown key {key!r}")
    vals = {}
    for name, f in names.items():
        if name not in raw:
            if cls is SegmentSpec:
                errs.append(f"{where}: missing {name!r}")
                return None
            continue
        v = raw[name]
        key = f"{where}.{name}"
        if name == "direction" or name == "kind":
            if not isinstance(v, str):
                errs.append(f"{key}: expected a string")
                continue
            vals[name] = v
        elif name == "mu":
            vals[name] = v if v == "auto" else _number(v, key, errs)
        else:
            vals[name] = _number(v, key, errs, integer=name in ("N", "seed"))
        if vals.get(name, 0) is None:
            del vals[name]
    return cls(**vals)


def _population(raw, errs):
    if raw is None:
        return PopulationSpec()
    if not isinstance(raw, dict):
        errs.append("population: expected a mapping")
        return PopulationSpec()
    for key in raw:
        if key not in ("types", "weights"):
            errs.append(f"population: unknown key {key!r}")
    types = raw.get("types", [asdict(TypeSpec())])
    if not isinstance(types, list) or not types:
        errs.append("population.types: expected a non-empty list")
        types = [{}]
    specs = tuple(_record(TypeSpec, t, f"population.types[{i}]", errs) for i, t in enumerate(types))
    weights = raw.get("weights", [1.0 / len(specs)] * len(specs))
    if not isinstance(weights, list):
        errs.append("population.weights: expected a list")
        weights = [1.0 / len(specs)] * len(specs)
    ws = tuple(_number(w, f"population.weights[{i}]", errs) for i, w in enumerate(weights))
    return PopulationSpec(specs, tuple(w if w is not None else 0.0 for w in ws))


def _validate(cfg: ScenarioConfig, errs):
    p = cfg.population
    if len(p.weights) != len(p.types):
        errs.append(f"population: {len(p.types)} types but {len(p.weights)} weights")
    if any(not w > 0 for w in p.weights):
        errs.append("population.weights: every weight must be positive")
    if abs(math.fsum(p.weights) - 1.0) > 1e-9:
        errs.append(f"population.weights: sum to {math.fsum(p.weights)}, not 1")
    for i, t in enumerate(p.types):
        if not t.C_a > 0:
            errs.append(f"population.types[{i}].C_a: must be positive")
        if not t.U_a > 0:
            errs.append(f"population.types[{i}].U_a: must be positive")
        if not t.sigma >= 0:
            errs.append(f"population.types[{i}].sigma: must be nonnegative")
    if not cfg.initial.std >= 0:
        errs.append("initial.std: must be nonnegative")
    c = cfg.comfort
    if not c.l < c.h:
        errs.append(f"comfort: need l < h, got l={c.l}, h={c.h}")
    elif not c.l <= cfg.initial.mean <= c.h:
        errs.append(f"initial.mean: {cfg.initial.mean} outside comfort band [{c.l}, {c.h}]")
    d = cfg.target.direction
    if d not in ("release", "absorb"):
        errs.append(f"target.direction: must be 'release' or 'absorb', got {d!r}")
    else:
        lo, hi = sorted((cfg.z, cfg.initial.mean))
        if not lo <= cfg.target.y <= hi:
            errs.append(f"target.y: {cfg.target.y} not between z={cfg.z} and the initial mean {cfg.initial.mean}")
        if cfg.target.y == cfg.z:
            errs.append("target.y: coincides with the comfort boundary z")
    co = cfg.costs
    if not co.delta > 0:
        errs.append("costs.delta: must be positive")
    if not co.q_x0 >= 0:
        errs.append("costs.q_x0: must be nonnegative")
    if not co.r > 0:
        errs.append("costs.r: must be positive")
    if not co.q_lq > 0:
        errs.append("costs.q_lq: must be positive")
    g = cfg.g
    if g.kind not in ("linear", "exp"):
        errs.append(f"g.kind: must be 'linear' or 'exp', got {g.kind!r}")
    if g.mu != "auto" and not (isinstance(g.mu, float) and g.mu > 0):
        errs.append(f"g.mu: must be a positive number or 'auto', got {g.mu!r}")
    if g.kind == "exp" and not g.beta > 0:
        errs.append("g.beta: must be positive")
    if g.mu == "auto" and len(p.types) != 1:
        errs.append("g.mu: 'auto' (near fixed point search) needs a single heater type")
    if not cfg.grid.dt > 0:
        errs.append("grid.dt: must be positive")
    elif not cfg.grid.T_max >= cfg.grid.dt:
        errs.append("grid.T_max: must be at least one step")
    s = cfg.sim
    if s.N < 1:
        errs.append("sim.N: must be at least 1")
    if not s.T > 0:
        errs.append("sim.T: must be positive")
    elif s.T > cfg.grid.T_max + 1e-12:
        errs.append(f"sim.T: {s.T} exceeds grid.T_max {cfg.grid.T_max}")
    if s.seed < 0 or s.seed >= 2**64:
        errs.append("sim.seed: must fit in an unsigned 64-bit integer")
    a = cfg.algo1
    if not 1 < a.n1 <= a.n2:
        errs.append(f"algo1: need 1 < n1 <= n2, got n1={a.n1}, n2={a.n2}")
    for name in ("t0", "d_mu", "e1", "e2", "gamma"):
        if not getattr(a, name) > 0:
            errs.append(f"algo1.{name}: must be positive")
    for i, seg in enumerate(cfg.segments):
        if not seg.duration > 0:
            errs.append(f"segments[{i}].duration: must be positive")
        elif seg.duration > cfg.grid.T_max + 1e-12:
            errs.append(f"segments[{i}].duration: exceeds grid.T_max")
    if cfg.robustness is not None:
        rb = cfg.robustness
        if not rb.window > 0 or not rb.tol > 0:
            errs.append("robustness: window and tol must be positive")


def config_from_dict(data) -> ScenarioConfig:
    """Validate a parsed mapping; raises ConfigError listing every violation."""
    errs: list[str] = []
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    known = set(_SECTIONS) | {"population", "segments"}
    for key in data:
        if key not in known:
            errs.append(f"top level: unknown section {key!r}")
    kw = {"population": _population(data.get("population"), errs)}
    for name, cls in _SECTIONS.items():
        if name in data or name != "robustness":
            kw[name] = _record(cls, data.get(name), name, errs)
    segs = data.get("segments", [])
    if not isinstance(segs, list):
        errs.append("segments: expected a list")
        segs = []
    kw["segments"] = tuple(s for s in (_record(SegmentSpec, s, f"segments[{i}]", errs) for i, s in enumerate(segs))
                           if s is not None)
    cfg = ScenarioConfig(**kw)
    _validate(cfg, errs)
    if errs:
        raise ConfigError(errs)
    return cfg


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError(f"{where}: parse error: {exc.problem or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None
    return config_from_dict(data)


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("cttmfg") / "configs" / f"{name}.yaml"))


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in Path(str(resources.files("cttmfg") / "configs")).glob("*.yaml"))


def load_config(path) -> ScenarioConfig:
    """Load from a file path, or from a bundled config name such as ``s5_linear``."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and str(path) in bundled_configs():
        p = bundled_config_path(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read ({exc.strerror})") from None
    return parse_config(text, str(p))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["population"]["types"] = [dict(t) for t in d["population"]["types"]]
    d["population"]["weights"] = list(d["population"]["weights"])
    d["segments"] = [dict(s) for s in d["segments"]]
    if not d["segments"]:
        del d["segments"]
    if d["robustness"] is None:
        del d["robustness"]
    return d


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)

