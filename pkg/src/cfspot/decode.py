"""Point-wise linear character decoding and word assembly."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ChannelMismatch, PointOutOfBounds
from .structures import CharPoint, DecoderParams, TextBox


def softmax(logits, axis=-1):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _check_features(f, params: DecoderParams) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim != 3:
        raise ChannelMismatch(f"feature map must be (H, W, F), got shape {f.shape}")
    if f.shape[2] != params.n_features:
        raise ChannelMismatch(f"feature map has {f.shape[2]} channels, decoder expects {params.n_features}")
    return f


def _coords(points) -> tuple[np.ndarray, np.ndarray]:
    if len(points) == 0:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    if isinstance(points[0], CharPoint):
        xy = np.array([(p.x, p.y) for p in points], dtype=np.intp)
    else:
        xy = np.asarray(points, dtype=np.intp).reshape(-1, 2)
    return xy[:, 0], xy[:, 1]


def decode_points(f, points, params: DecoderParams) -> np.ndarray:
    """(N, C) class probabilities ``softmax(f[y, x] @ w - b)`` at each point.

    ``points`` is a sequence of CharPoint or (x, y) pairs.
    """
    f = _check_features(f, params)
    xs, ys = _coords(points)
    h, w = f.shape[:2]
    bad = (xs < 0) | (xs >= w) | (ys < 0) | (ys >= h)
    if bad.any():
        i = int(np.argmax(bad))
        raise PointOutOfBounds(f"point ({xs[i]}, {ys[i]}) outside a {w}x{h} feature map")
    feats = f[ys, xs, :].astype(np.float64)
    return softmax(feats @ params.w - params.b)


def dense_decode(f, params: DecoderParams) -> np.ndarray:
    """Apply the classifier at every cell, as a 1x1 convolution would. Returns (H, W, C)."""
    f = _check_features(f, params)
    logits = np.tensordot(f.astype(np.float64), params.w, axes=([2], [0])) - params.b
    return softmax(logits, axis=2)


class DecodeCost(NamedTuple):
    macs: int
    output_bytes: int


def decode_cost(width: int, height: int, n_features: int, n_classes: int, n_points=None) -> DecodeCost:
    """Multiply-accumulates and float32 output size of the classifier layer.

    Dense decoding touches every one of ``width * height`` cells; passing
    ``n_points`` gives the point-wise cost instead.
    """
    for name, v in (("width", width), ("height", height), ("n_features", n_features), ("n_classes", n_classes)):
        if int(v) < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    cells = int(width) * int(height) if n_points is None else int(n_points)
    return DecodeCost(cells * int(n_features) * int(n_classes), cells * int(n_classes) * 4)


def assemble_words(
    boxes: list[TextBox],
    points_per_box: list[list[CharPoint]],
    probs_per_box: list[np.ndarray],
    params: DecoderParams,
) -> list[TextBox]:
    """Read each box left to right from its confidently classified points.

    Points whose top probability is below ``params.confidence`` are dropped,
    the rest are sorted by x (then y) and their argmax characters joined.
    Boxes that end up with an empty transcription are removed.
    """
    out = []
    for box, pts, probs in zip(boxes, points_per_box, probs_per_box):
        if len(pts) == 0:
            continue
        probs = np.asarray(probs, dtype=np.float64).reshape(len(pts), -1)
        keep = np.flatnonzero(probs.max(axis=1) >= params.confidence)
        order = sorted(keep, key=lambda i: (pts[i].x, pts[i].y))
        if not order:
            continue
        kept = probs[order]
        text = "".join(params.alphabet[k] for k in kept.argmax(axis=1))
        out.append(box.with_(points=[pts[i] for i in order], transcription=text, char_probs=kept))
    return out
