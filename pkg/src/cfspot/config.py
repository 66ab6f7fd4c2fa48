"""Thresholds and settings for a spotting run."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

_UNIT_FIELDS = (
    "box_threshold",
    "char_threshold",
    "spot_threshold",
    "confidence",
    "reject_threshold",
)


@dataclass(frozen=True)
class SpotConfig:
    # text-box detection on clamp(R + A)
    box_threshold: float = 0.35
    min_area: int = 10
    # margin added to each side of a box, as a fraction of the component's short
    # side; the threshold contour loses more of the height than of the length
    box_expand: float = 0.42
    box_expand_long: float = 0.3
    # character spotting on R
    spot_threshold: float = 0.3
    char_threshold: float = 0.4
    # boxes with a shorter side above this (heat-map cells) use labeling
    size_threshold: float = 28.0
    # decoding and lexicon matching
    confidence: float = 0.3
    reject_threshold: float = 0.5
    # geometry
    stride: int = 4
    long_side: int = 2880
    weights: str | None = None

    def __post_init__(self):
        for name in _UNIT_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value!r}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride!r}")
        if self.long_side <= 0:
            raise ConfigError(f"long_side must be > 0, got {self.long_side!r}")
        if self.min_area < 0:
            raise ConfigError(f"min_area must be >= 0, got {self.min_area!r}")
        for name in ("box_expand", "box_expand_long"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if self.size_threshold < 0:
            raise ConfigError(f"size_threshold must be >= 0, got {self.size_threshold!r}")

    def replace(self, **changes) -> "SpotConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict) -> "SpotConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, **overrides) -> "SpotConfig":
        """Read a JSON config file; non-None ``overrides`` win over file values."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_CONFIG = SpotConfig()
