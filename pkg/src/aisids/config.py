"""Engine configuration: one TOML document, one section per module."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .clonal import MaturationConfig
from .dca import FusionWeights
from .errors import ConfigError
from .lifecycle import LifecyclePolicy

MODES = ("selfnonself", "danger")


@dataclass
class RepresentationSettings:
    bits_per_feature: int = 8
    lenient: bool = False


@dataclass
class NegselSettings:
    variant: str = "fixed"
    radius: float = 0.1
    self_radius: float = 0.05
    target_count: int = 500
    target_coverage: float = 0.95
    seed: int = 42
    max_attempts: int = 0  # 0: 100 x target_count (fixed) or 100000 (vdetector)

    def attempts(self) -> int:
        if self.max_attempts:
            return self.max_attempts
        return 100 * self.target_count if self.variant == "fixed" else 100_000


@dataclass
class ClonalSettings:
    enabled: bool = False
    n_select: int = 5
    beta: float = 1.0
    rho: float = 3.0
    d_replace: int = 2
    generations: int = 50
    seed: int = 42
    snapshot_every: int = 10

    def maturation(self, radius: float) -> MaturationConfig:
        return MaturationConfig(self.n_select, self.beta, self.rho, self.d_replace,
                                self.generations, self.seed, radius)


@dataclass
class DcaSettings:
    weights: FusionWeights = field(default_factory=FusionWeights)
    pool_size: int = 100
    threshold_low: float = 5.0
    threshold_high: float = 15.0
    anomaly_threshold: float = 0.5
    seed: int = 42
    timestamp_column: str = "timestamp"
    pamp_column: str = "pamp"
    danger_column: str = "danger"
    safe_column: str = "safe"
    antigens_column: str = "antigens"

    @property
    def columns(self):
        return (self.timestamp_column, self.pamp_column, self.danger_column,
                self.safe_column, self.antigens_column)


@dataclass
class LifecycleSettings:
    policy: LifecyclePolicy = field(default_factory=LifecyclePolicy)
    seed: int = 42


@dataclass
class SynthSettings:
    dims: int = 2
    n_self_train: int = 500
    n_self_test: int = 200
    n_anomaly_test: int = 200
    n_validation: int = 200
    n_frames: int = 800
    antigens_per_frame: int = 4
    attack_fraction: float = 0.25
    drift: float = 0.15
    seed: int = 42


@dataclass
class EngineConfig:
    mode: str = "selfnonself"
    representation: RepresentationSettings = field(default_factory=RepresentationSettings)
    negsel: NegselSettings = field(default_factory=NegselSettings)
    clonal: ClonalSettings = field(default_factory=ClonalSettings)
    dca: DcaSettings = field(default_factory=DcaSettings)
    lifecycle: LifecycleSettings = field(default_factory=LifecycleSettings)
    synth: SynthSettings = field(default_factory=SynthSettings)

    def validate(self) -> "EngineConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        n = self.negsel
        if n.variant not in ("fixed", "vdetector"):
            raise ConfigError(f"negsel.variant must be fixed or vdetector, got {n.variant!r}")
        if n.radius <= 0 or n.self_radius < 0 or n.target_count <= 0:
            raise ConfigError("negsel radius and target_count must be positive, self_radius >= 0")
        if not 0 < n.target_coverage < 1:
            raise ConfigError("negsel.target_coverage must lie in (0, 1)")
        if self.representation.bits_per_feature < 1:
            raise ConfigError("representation.bits_per_feature must be positive")
        d = self.dca
        if d.pool_size <= 0 or not 0 < d.threshold_low <= d.threshold_high:
            raise ConfigError("dca pool_size must be positive and 0 < threshold_low <= threshold_high")
        if not 0 <= d.anomaly_threshold <= 1:
            raise ConfigError("dca.anomaly_threshold must lie in [0, 1]")
        for name in ("negsel", "clonal", "dca", "lifecycle", "synth"):
            if getattr(self, name).seed < 0:
                raise ConfigError(f"{name}.seed must be non-negative")
        return self

    def with_seed(self, seed: int) -> "EngineConfig":
        for name in ("negsel", "clonal", "dca", "lifecycle", "synth"):
            getattr(self, name).seed = seed
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}" if where else name)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def from_dict(data: dict) -> EngineConfig:
    return _build(EngineConfig, data, "").validate()


def load(path=None) -> EngineConfig:
    if path is None:
        return EngineConfig().validate()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data)
