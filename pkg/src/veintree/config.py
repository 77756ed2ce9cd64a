"""Generation configuration: defaults, TOML files, CLI overrides.

A config file is TOML with top-level scalars plus one table per module;
every key maps 1:1 onto a dataclass field and unknown keys are rejected.
CLI flags override file values which override defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .growth import GrowthParams
from .model import DomainBox, RadiusPolicy, VeinTreeError
from .render import CreaseParams
from .trajectory import TsmParams
from .variation import AugmentParams, NoiseSpec


class ConfigError(VeinTreeError):
    """A configuration file or value is invalid."""


@dataclass(frozen=True)
class ViewRange:
    """Per-sample view draw ranges: z-rotation (degrees) and gray jitter."""

    theta_range: tuple[float, float] = (-3.0, 3.0)
    w_random_range: tuple[float, float] = (0.8, 1.0)

    def __post_init__(self) -> None:
        if self.theta_range[0] > self.theta_range[1]:
            raise ValueError("theta_range is empty")
        lo, hi = self.w_random_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError("w_random_range must be within (0, 1]")


@dataclass(frozen=True)
class GenerationConfig:
    """Every knob of one dataset build, resolved and serializable."""

    seed: int = 0
    n_identities: int = 4000
    samples_per_identity: int = 7
    family_distribution: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    output_dir: str = "dataset"
    emit_noise: bool = False
    emit_debug_trees: bool = False
    workers: int = 1
    img_size: tuple[int, int] = (128, 128)
    box: DomainBox = field(default_factory=DomainBox)
    radius: RadiusPolicy = field(default_factory=RadiusPolicy)
    growth: GrowthParams = field(default_factory=GrowthParams)
    trajectory: TsmParams = field(default_factory=TsmParams)
    view: ViewRange = field(default_factory=ViewRange)
    creases: CreaseParams = field(default_factory=CreaseParams)
    augment: AugmentParams = field(default_factory=AugmentParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self) -> None:
        if self.n_identities < 1:
            raise ConfigError("n_identities must be >= 1")
        if self.samples_per_identity < 1:
            raise ConfigError("samples_per_identity must be >= 1")
        if len(self.family_distribution) != 4 or min(self.family_distribution) < 0:
            raise ConfigError("family_distribution needs 4 non-negative weights")
        if sum(self.family_distribution) <= 0:
            raise ConfigError("family_distribution weights must sum to > 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if min(self.img_size) < 8:
            raise ConfigError("img_size is too small")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return _tuples_to_lists(d)


def _tuples_to_lists(value):
    if isinstance(value, tuple):
        return [_tuples_to_lists(v) for v in value]
    if isinstance(value, list):
        return [_tuples_to_lists(v) for v in value]
    if isinstance(value, dict):
        return {k: _tuples_to_lists(v) for k, v in value.items()}
    return value


_SECTION_TYPES = {
    "box": DomainBox,
    "radius": RadiusPolicy,
    "growth": GrowthParams,
    "trajectory": TsmParams,
    "view": ViewRange,
    "creases": CreaseParams,
    "augment": AugmentParams,
    "noise": NoiseSpec,
}

_PAIR_FIELDS = {
    "theta_range", "w_random_range", "scale", "rotate", "crop_jitter",
    "n_creases", "width_px", "intensity", "img_size",
}


def _coerce(name: str, value, section: str):
    if name == "family_distribution":
        return tuple(float(v) for v in value)
    if name == "control_regions":
        return tuple(tuple(float(v) for v in region) for region in value)
    if name in _PAIR_FIELDS:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(f"{section}.{name} must be a 2-element list")
        return tuple(type(v)(v) for v in value)
    if name == "offsets":
        return tuple(tuple(int(v) for v in o) for o in value)
    return value


def _build_section(cls, data: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v, section) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [{section}] value: {exc}") from exc


def config_from_mapping(data: dict) -> GenerationConfig:
    top_fields = {f.name for f in fields(GenerationConfig)}
    scalar_fields = top_fields - set(_SECTION_TYPES)
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key in scalar_fields:
            kwargs[key] = _coerce(key, value, "top level")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return GenerationConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path: str | Path) -> GenerationConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_mapping(data)


def apply_overrides(config: GenerationConfig, **overrides) -> GenerationConfig:
    """Replace top-level fields with any non-None override values."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **updates) if updates else config
