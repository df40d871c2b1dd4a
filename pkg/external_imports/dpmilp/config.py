"""Tolerances and run configuration.

``TOLERANCES`` is the single global tolerance object every solver defaults to.
``RunConfig`` gathers every parameter of a run; it is read from one YAML (or
JSON) file and every field has a default, so an empty file is a valid config.
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    tol_int: float = 1e-6
    tol_feas: float = 1e-7
    tol_cs: float = 1e-7
    tol_gap: float = 1e-6
    tol_rc: float = 1e-7
    # enumeration oracles
    enumeration_cap: int = 12
    grid_cap: int = 10 ** 6
    oracle_max_agents: int = 8
    # solver budgets
    node_budget: int = 10 ** 6
    pricing_cap: int = 500
    simplex_max_iter: int = 50_000


TOLERANCES = Tolerances()


@dataclass(frozen=True)
class InstanceConfig:
    """Where the instance comes from: ``path`` wins over the generator parameters."""
    path: Optional[str] = None
    n_agents: int = 300
    S: int = 5
    p: int = 10
    q: int = 5
    m: int = 20
    seed: int = 1
    resource_mode: str = "loose"
    scale: str = "full"
    perturb_costs: bool = True

    def __post_init__(self):
        for name in ("n_agents", "S", "p", "m"):
            if getattr(self, name) < 1:
                raise ConfigError(f"instance.{name}", "must be >= 1")
        if self.q < 0:
            raise ConfigError("instance.q", "must be >= 0")
        if self.resource_mode not in ("loose", "tight"):
            raise ConfigError("instance.resource_mode", f"expected loose|tight, got {self.resource_mode!r}")
        if self.scale not in ("full", "desk"):
            raise ConfigError("instance.scale", f"expected full|desk, got {self.scale!r}")

    @classmethod
    def desk(cls, **overrides):
        params = dict(n_agents=20, S=2, p=2, q=1, m=4, scale="desk")
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class GraphConfig:
    p: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("graph.p", f"must lie in (0, 1], got {self.p}")


@dataclass(frozen=True)
class RestrictionConfig:
    mode: str = "ft"
    delta: float = 0.5
    custom: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.mode not in ("inf", "ft", "dd", "custom"):
            raise ConfigError("restriction.mode", f"expected inf|ft|dd|custom, got {self.mode!r}")
        if self.delta < 0:
            raise ConfigError("restriction.delta", "must be >= 0")
        if self.mode == "custom" and self.custom is None:
            raise ConfigError("restriction.custom", "required when mode is custom")


@dataclass(frozen=True)
class ScheduleConfig:
    kind: str = "power"
    alpha0: float = 1.0
    exponent: float = 0.8

    def __post_init__(self):
        if self.kind not in ("harmonic", "power"):
            raise ConfigError("schedule.kind", f"expected harmonic|power, got {self.kind!r}")
        if self.alpha0 <= 0:
            raise ConfigError("schedule.alpha0", "must be > 0")
        if not 0.5 < self.exponent <= 1.0:
            raise ConfigError("schedule.exponent", "must lie in (0.5, 1]")


@dataclass(frozen=True)
class MonteCarloConfig:
    n_trials: int = 100
    master_seed: int = 0
    resource_modes: Tuple[str, ...] = ("loose", "tight")
    mode: str = "asymptotic"

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("montecarlo.n_trials", "must be >= 1")
        for rm in self.resource_modes:
            if rm not in ("loose", "tight"):
                raise ConfigError("montecarlo.resource_modes", f"unknown resource mode {rm!r}")
        if self.mode not in ("asymptotic", "distributed"):
            raise ConfigError("montecarlo.mode", f"expected asymptotic|distributed, got {self.mode!r}")


@dataclass(frozen=True)
class RunConfig:
    instance: InstanceConfig = field(default_factory=InstanceConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    restriction: RestrictionConfig = field(default_factory=RestrictionConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    montecarlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    M: Optional[float] = None
    T_f: int = 2000
    recover_every: int = 1
    monitor_every: int = 1
    stop_on_feasible: bool = False
    pricing: str = "milp"
    n_jobs: int = 1
    oracle: bool = False
    output_dir: str = "output"

    def __post_init__(self):
        if self.M is not None and self.M <= 0:
            raise ConfigError("M", "must be > 0")
        if self.T_f < 0:
            raise ConfigError("T_f", "must be >= 0")
        if self.recover_every < 0:
            raise ConfigError("recover_every", "must be >= 0 (0 recovers at T_f only)")
        if self.monitor_every < 1:
            raise ConfigError("monitor_every", "must be >= 1")
        if self.pricing not in ("milp", "enumerate"):
            raise ConfigError("pricing", f"expected milp|enumerate, got {self.pricing!r}")

    @classmethod
    def desk(cls, **overrides):
        params = dict(instance=InstanceConfig.desk(), pricing="enumerate", T_f=1000)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data or {}, prefix="")

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"cannot parse config: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(str(path), "top level must be a mapping")
        return cls.from_dict(data)

    def to_dict(self):
        return dataclasses.asdict(self)


_SECTIONS = {
    "instance": InstanceConfig,
    "graph": GraphConfig,
    "restriction": RestrictionConfig,
    "schedule": ScheduleConfig,
    "montecarlo": MonteCarloConfig,
}


def _coerce(name, value, default):
    if value is None or default is None and not isinstance(value, (list, tuple)):
        return value
    if isinstance(default, bool) or isinstance(value, bool):
        if not isinstance(value, bool):
            raise ConfigError(name, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, (list, tuple)) or isinstance(value, (list, tuple)):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(name, f"expected a list, got {value!r}")
        return tuple(value)
    try:
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            if not isinstance(value, str):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {type(default).__name__}, got {value!r}") from None
    return value


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(name, "unknown field")
        if cls is RunConfig and key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value or {}, prefix=f"{name}.")
            continue
        f = known[key]
        default = f.default if f.default is not dataclasses.MISSING else None
        kwargs[key] = _coerce(name, value, default)
    return cls(**kwargs)
