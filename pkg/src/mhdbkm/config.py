"""Run configuration: a flat YAML (or JSON) mapping."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from .solver import IC_NAMES, check_dissipation, split_ic_name

MANDATORY = ("n", "nu", "eta", "dt", "t_end", "ic")
# keys that do not influence the trajectory or the records
_UNHASHED = ("output_dir", "threads", "checkpoint_interval")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int
    nu: float
    eta: float
    dt: float
    t_end: float
    ic: str
    l: float = 2 * math.pi
    amplitude: float = 1.0
    seed: int = 0
    ic_shell: int | None = None
    cadence: int = 1
    eps: list = field(default_factory=list)
    c_gronwall: float = 1.0
    m_alert: float | None = None
    s_list: list = field(default_factory=lambda: [1.0, 2.0])
    lp_exponents: list = field(default_factory=lambda: [4.0])
    output_dir: str = "run_output"
    checkpoint_interval: int = 0
    omega_ceiling: float = 1e8
    cfl: float = 0.5
    threads: int = 1

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def config_hash(self):
        d = {k: v for k, v in asdict(self).items() if k not in _UNHASHED}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def from_mapping(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a key-value mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(map(str, unknown))}")
    missing = [k for k in MANDATORY if k not in doc]
    if missing:
        raise ConfigError(f"missing mandatory key(s): {', '.join(missing)}")
    try:
        # YAML 1.1 reads "1e-2" as a string
        check_dissipation(float(doc["nu"]), float(doc["eta"]))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cfg = RunConfig(**doc)
    cfg.n, cfg.seed, cfg.cadence = int(cfg.n), int(cfg.seed), int(cfg.cadence)
    cfg.checkpoint_interval, cfg.threads = int(cfg.checkpoint_interval), int(cfg.threads)
    for name in ("nu", "eta", "dt", "t_end", "l", "amplitude", "c_gronwall", "cfl", "omega_ceiling"):
        setattr(cfg, name, float(getattr(cfg, name)))
    if not cfg.eps:
        cfg.eps = [cfg.t_end / 4, cfg.t_end / 16]
    cfg.eps = [float(e) for e in cfg.eps]
    cfg.s_list = [float(s) for s in cfg.s_list]
    if 1.0 not in cfg.s_list:
        cfg.s_list = [1.0] + cfg.s_list
    cfg.lp_exponents = [float(p) for p in cfg.lp_exponents]
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.n < 4 or cfg.n % 2:
        raise ConfigError(f"n must be an even integer >= 4, got {cfg.n}")
    for name in ("dt", "t_end", "l", "c_gronwall", "cfl"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.amplitude < 0:
        raise ConfigError("amplitude must be nonnegative")
    if cfg.cadence < 1:
        raise ConfigError("cadence must be at least one step")
    if cfg.checkpoint_interval < 0:
        raise ConfigError("checkpoint_interval must be >= 0 (0 disables checkpoints)")
    if abs(cfg.n_steps * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
        raise ConfigError(f"t_end={cfg.t_end} is not a whole number of steps of dt={cfg.dt}")
    for e in cfg.eps:
        if not 0 < e <= cfg.t_end * (1 + 1e-12):
            raise ConfigError(f"window length {e} must lie in (0, t_end]")
    _, base = split_ic_name(cfg.ic)
    if base not in IC_NAMES:
        raise ConfigError(f"unknown initial condition {cfg.ic!r}")
    if base == "random_band" and cfg.ic_shell is None:
        raise ConfigError("random_band needs ic_shell")
    if any(p < 1 for p in cfg.lp_exponents):
        raise ConfigError("lp_exponents must be >= 1")


def parse_config(text: str) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed configuration: {e}") from None
    return from_mapping(doc)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
