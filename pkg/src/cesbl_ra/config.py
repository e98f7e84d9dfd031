"""Scenario and experiment configuration.

Config files are flat ``key = value`` text; ``#`` starts a comment. Unknown
keys are rejected. Scenario keys::

    M N_p L K t_m snr_db                      system size, SNR in dB (inf allowed)
    L_path delta_deg L_cp bandwidth antenna_spacing_ratio t_g
    a b c d lam kappa tol max_iters           solver
    theta1 theta2 theta3 user_nmse_gate_db    detector (theta1 defaults from snr_db)
    noiseless_sigma2                          solver noise variance when snr_db = inf

Experiment keys: ``sweep`` (K, L, snr_db or t_m), ``values`` (comma list),
``trials``, ``solvers`` (comma list), ``seed``, ``output``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import ChannelParams
from .detection import DetectorConfig
from .sbl.updates import SolverConfig

log = logging.getLogger(__name__)

SWEEPABLE = ("K", "L", "snr_db", "t_m")
KNOWN_SOLVERS = ("ce_sbl", "m_sbl")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    M: int = 64
    N_p: int = 64
    L: int = 64
    K: int = 30
    t_m: int = 4
    snr_db: float = 15.0
    L_path: int = 16
    delta_deg: float = 15.0
    L_cp: int = 64
    bandwidth: float = 1.4e6
    antenna_spacing_ratio: float = 0.5
    t_g: int | None = None
    a: float = 30.0
    b: float = 1e-4
    c: float = 0.125
    d: float = 1e-4
    lam: float = 0.01
    kappa: float = 0.1
    tol: float = 1e-8
    max_iters: int = 500
    theta1: float | None = None
    theta2: float = 0.98
    theta3: int = 3
    user_nmse_gate_db: float = -15.0
    noiseless_sigma2: float = 1e-8

    def __post_init__(self):
        for name in ("M", "N_p", "L"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.t_m < 0:
            raise ConfigError(f"t_m must be >= 0, got {self.t_m}")
        if self.K > self.n_hat:
            raise ConfigError(f"K = {self.K} exceeds N_p * (t_m + 1) = {self.n_hat}")
        if self.t_g is not None and self.t_m >= self.t_g:
            log.warning("t_m = %d is not below the guard interval t_g = %d", self.t_m, self.t_g)
        self.channel_params()
        self.solver_config()
        self.detector_config()

    @property
    def n_hat(self) -> int:
        return self.N_p * (self.t_m + 1)

    @property
    def l_hat(self) -> int:
        return self.L + self.t_m

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db) and self.snr_db > 0

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            M=self.M, L_path=self.L_path, delta_deg=self.delta_deg, L_cp=self.L_cp,
            bandwidth=self.bandwidth, antenna_spacing_ratio=self.antenna_spacing_ratio,
        )

    def solver_config(self, sigma2_complex: float | None = None) -> SolverConfig:
        s2 = None if sigma2_complex is None else sigma2_complex / 2
        try:
            return SolverConfig(
                a=self.a, b=self.b, c=self.c, d=self.d, lam=self.lam, kappa=self.kappa,
                sigma2=s2, tol=self.tol, max_iters=self.max_iters,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def detector_config(self) -> DetectorConfig:
        extra = dict(theta2=self.theta2, theta3=self.theta3, user_nmse_gate_db=self.user_nmse_gate_db)
        try:
            if self.theta1 is None:
                return DetectorConfig.for_snr(self.snr_db, **extra)
            return DetectorConfig(theta1=self.theta1, **extra)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


PROFILES = {
    "fast": dict(M=32, N_p=32, L=32, t_m=4, K=12),
    "paper": dict(M=64, N_p=64, L=64, t_m=4, K=30),
}

FAST_SWEEP = dict(sweep="K", values=[4, 8, 12, 16, 20], trials=50)
FULL_SWEEP = dict(sweep="K", values=[10, 20, 30, 40, 50], trials=100)


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    sweep: str = "K"
    values: tuple = (30,)
    trials: int = 50
    solvers: tuple = KNOWN_SOLVERS
    seed: int = 0
    output: str = "results"

    def __post_init__(self):
        if self.sweep not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.sweep!r}; choose from {SWEEPABLE}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        unknown = set(self.solvers) - set(KNOWN_SOLVERS)
        if unknown or not self.solvers:
            raise ConfigError(f"unknown solvers {sorted(unknown)}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for v in self.values:
            self.point(v)

    def point(self, value) -> SystemConfig:
        return replace(self.base, **{self.sweep: value})


_SYSTEM_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)}
_EXPERIMENT_KEYS = ("sweep", "values", "trials", "solvers", "seed", "output")


def _convert(name: str, text: str):
    ftype = str(_SYSTEM_FIELDS[name].type)
    if text.lower() in ("none", "") and "None" in ftype:
        return None
    if ftype.startswith("int"):
        return int(text)
    return float(text)


def _value_for(sweep: str, text: str):
    return _convert(sweep, text)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SYSTEM_FIELDS and key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def build_experiment(entries: dict, profile: str | None = None, **overrides) -> ExperimentSpec:
    base = dict(PROFILES.get(profile, {})) if profile else {}
    if profile and profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    exp = dict(FAST_SWEEP if profile == "fast" else FULL_SWEEP if profile == "paper" else {})
    try:
        for key, text in entries.items():
            if key in _SYSTEM_FIELDS:
                base[key] = _convert(key, text)
        sweep = entries.get("sweep", exp.get("sweep", "K"))
        if "values" in entries:
            values = [_value_for(sweep, v.strip()) for v in entries["values"].split(",") if v.strip()]
        else:
            values = exp.get("values", [base.get("K", SystemConfig.K)])
        kwargs = dict(sweep=sweep, values=tuple(values))
        if "trials" in entries or "trials" in exp:
            kwargs["trials"] = int(entries.get("trials", exp.get("trials")))
        if "solvers" in entries:
            kwargs["solvers"] = tuple(s.strip() for s in entries["solvers"].split(",") if s.strip())
        if "seed" in entries:
            kwargs["seed"] = int(entries["seed"])
        if "output" in entries:
            kwargs["output"] = entries["output"]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if sweep != "K" and "K" not in base:
        base.setdefault("K", SystemConfig.K)
    # the swept parameter is replaced per point, so validate the base with the first value
    base_cfg = dict(base)
    base_cfg[sweep] = values[0]
    return ExperimentSpec(base=SystemConfig(**base_cfg), **kwargs)


def load_experiment(path, profile: str | None = None, **overrides) -> ExperimentSpec:
    path = Path(path)
    return build_experiment(parse_config_text(path.read_text(), str(path)), profile, **overrides)


def load_system(path=None, profile: str | None = None) -> SystemConfig:
    base = dict(PROFILES.get(profile, {})) if profile else {}
    if profile and profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    if path is not None:
        entries = parse_config_text(Path(path).read_text(), str(path))
        for key, text in entries.items():
            if key in _SYSTEM_FIELDS:
                base[key] = _convert(key, text)
    return SystemConfig(**base)
