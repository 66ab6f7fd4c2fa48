"""Data records shared by the detection, spotting and decoding stages.

Coordinates follow one convention throughout: ``(x, y)`` with x to the right
and y down. Heat-map cell ``(x, y)`` is addressed as ``grid[y, x]`` and its
centre sits at the integer coordinate ``(x, y)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimMismatch

# Printable ASCII without the space: 94 alphanumerics and symbols.
DEFAULT_ALPHABET: tuple[str, ...] = tuple(chr(c) for c in range(33, 127))


class SpotSource(str, enum.Enum):
    PEAK = "peak"
    LABEL = "label"


@dataclass(frozen=True)
class CharPoint:
    x: int
    y: int
    source: SpotSource
    score: float


@dataclass
class TextBox:
    """A detected text instance.

    ``polygon`` is a (4, 2) rotated rectangle. ``short_side``/``long_side`` are
    measured in the coordinate frame the polygon was produced in (heat-map
    cells for raw detections). ``pixels`` holds the (K, 2) ``(x, y)`` cells of
    the component the box came from, when known.
    """

    polygon: np.ndarray
    short_side: float = 0.0
    long_side: float = 0.0
    score: float = 0.0
    pixels: np.ndarray | None = None
    points: list[CharPoint] = field(default_factory=list)
    transcription: str = ""
    char_probs: np.ndarray | None = None

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64).reshape(-1, 2)
        if not self.short_side and not self.long_side and len(self.polygon) == 4:
            a = float(np.linalg.norm(self.polygon[1] - self.polygon[0]))
            b = float(np.linalg.norm(self.polygon[2] - self.polygon[1]))
            self.short_side, self.long_side = min(a, b), max(a, b)

    def with_(self, **changes) -> "TextBox":
        return replace(self, **changes)


@dataclass(frozen=True)
class DecoderParams:
    """Weights of the point-wise linear character classifier.

    ``w`` is (F, C), ``b`` is (C,). Logits are ``f @ w - b``.
    """

    w: np.ndarray
    b: np.ndarray
    alphabet: tuple[str, ...] = DEFAULT_ALPHABET
    confidence: float = 0.3

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        alphabet = tuple(self.alphabet)
        if w.ndim != 2:
            raise DimMismatch(f"w must be 2-D (F, C), got shape {w.shape}")
        if w.shape[1] != b.shape[0] or w.shape[1] != len(alphabet):
            raise DimMismatch(
                f"w has {w.shape[1]} classes, b has {b.shape[0]}, alphabet has {len(alphabet)}"
            )
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet entries must be unique")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def n_features(self) -> int:
        return self.w.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    @classmethod
    def identity(cls, n_features: int = 256, alphabet=DEFAULT_ALPHABET, confidence: float = 0.3):
        """Identity-like weights: feature channel c votes for class c, zero bias."""
        alphabet = tuple(alphabet)
        w = np.zeros((n_features, len(alphabet)))
        k = min(n_features, len(alphabet))
        w[np.arange(k), np.arange(k)] = 1.0
        return cls(w, np.zeros(len(alphabet)), alphabet, confidence)
