"""Forward evaluation of the detection/recognition objective and self-labeling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charspot import spot_hybrid
from .config import DEFAULT_CONFIG, SpotConfig
from .errors import ChannelMismatch, ClassOutOfRange, DimMismatch, PointOutOfBounds
from .structures import DecoderParams, TextBox

DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class LossReport:
    l_det: float
    l_rec: float
    alpha: float

    @property
    def l_total(self) -> float:
        return self.l_det + self.alpha * self.l_rec


def loss_det(region, affinity, region_gt, affinity_gt) -> float:
    """Squared error of both maps summed over all cells, divided once by W*H."""
    maps = [np.asarray(m, dtype=np.float64) for m in (region, affinity, region_gt, affinity_gt)]
    if any(m.shape != maps[0].shape for m in maps) or maps[0].ndim != 2:
        raise DimMismatch(f"map shapes differ: {[m.shape for m in maps]}")
    r, a, rg, ag = maps
    h, w = r.shape
    return float((np.sum((r - rg) ** 2) + np.sum((a - ag) ** 2)) / (w * h))


def loss_rec(f, params: DecoderParams, p_gt) -> float:
    """Mean cross-entropy of the point-wise classifier over (x, y, class) targets."""
    f = np.asarray(f)
    if f.ndim != 3 or f.shape[2] != params.n_features:
        raise ChannelMismatch(f"feature map {f.shape} vs decoder with {params.n_features} channels")
    if len(p_gt) == 0:
        return 0.0
    tgt = np.asarray(p_gt, dtype=np.int64).reshape(-1, 3)
    xs, ys, cls = tgt[:, 0], tgt[:, 1], tgt[:, 2]
    h, w = f.shape[:2]
    if ((xs < 0) | (xs >= w) | (ys < 0) | (ys >= h)).any():
        raise PointOutOfBounds(f"target point outside a {w}x{h} feature map")
    if ((cls < 0) | (cls >= params.n_classes)).any():
        raise ClassOutOfRange(f"class index outside [0, {params.n_classes})")
    z = f[ys, xs, :].astype(np.float64) @ params.w - params.b
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(cls)), cls]))


def total_loss(region, affinity, gt, f, params: DecoderParams, alpha: float = DEFAULT_ALPHA) -> LossReport:
    """``gt`` is a GroundTruthMaps (region, affinity, char_points)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return LossReport(
        loss_det(region, affinity, gt.region, gt.affinity),
        loss_rec(f, params, gt.char_points),
        alpha,
    )


def self_label(word_crop_region, transcription: str, cfg: SpotConfig = DEFAULT_CONFIG):
    """Pseudo character labels for a cropped word, or None if the counts disagree.

    The whole crop is treated as one text box and spotted with the hybrid
    rule. Returns ``[(x, y, char), ...]`` ordered by x.
    """
    if not transcription:
        raise ValueError("transcription must be non-empty")
    r = np.asarray(word_crop_region, dtype=np.float64)
    h, w = r.shape
    box = TextBox(
        polygon=[[-0.5, -0.5], [w - 0.5, -0.5], [w - 0.5, h - 0.5], [-0.5, h - 0.5]],
        score=float(r.mean()),
    )
    points = spot_hybrid(r, [box], cfg)[0]
    if len(points) != len(transcription):
        return None
    points = sorted(points, key=lambda p: (p.x, p.y))
    return [(p.x, p.y, ch) for p, ch in zip(points, transcription)]
