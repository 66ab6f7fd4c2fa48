"""Character spotting on the region map.

Two point selectors are combined: local maxima (good for small text, whose
characters show up as single-peaked blobs) and centroids of thresholded
components (good for large text, where one character may carry several
peaks). Each text box picks one selector from its shorter side.
"""

from __future__ import annotations

import math

import numpy as np

from .boxdetect import connected_components, points_in_polygon
from .config import DEFAULT_CONFIG, SpotConfig
from .structures import CharPoint, SpotSource, TextBox

MODES = ("hybrid", "peak", "label")


def _round(v: float) -> int:
    # half-up so that results don't depend on banker's rounding
    return int(math.floor(v + 0.5))


def _sort(points):
    return sorted(points, key=lambda p: (p.y, p.x))


def local_max_mask(region) -> np.ndarray:
    """Cells that are >= all 8 neighbours; cells outside the map count as -inf."""
    r = np.asarray(region, dtype=np.float64)
    h, w = r.shape
    padded = np.pad(r, 1, constant_values=-np.inf)
    neigh = np.full_like(r, -np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx or dy:
                np.maximum(neigh, padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w], out=neigh)
    return r >= neigh


def spot_peaks(region, cfg: SpotConfig = DEFAULT_CONFIG) -> list[CharPoint]:
    r = np.asarray(region, dtype=np.float64)
    cand = local_max_mask(r) & (r >= cfg.spot_threshold)
    # two 8-adjacent candidates are each >= the other, so a candidate
    # component is always a plateau of one value
    out = []
    for comp in connected_components(cand):
        x0, y0 = comp.pixels[0]
        cx, cy = comp.centroid
        out.append(CharPoint(_round(cx), _round(cy), SpotSource.PEAK, float(r[y0, x0])))
    return _sort(out)


def spot_labels(region, cfg: SpotConfig = DEFAULT_CONFIG) -> list[CharPoint]:
    r = np.asarray(region, dtype=np.float64)
    out = []
    for comp in connected_components(r >= cfg.char_threshold):
        cx, cy = comp.centroid
        x, y = _round(cx), _round(cy)
        px = comp.pixels
        hit = (px[:, 0] == x) & (px[:, 1] == y)
        if not hit.any():
            # non-convex blob: snap to the nearest member cell
            k = int(np.argmin((px[:, 0] - cx) ** 2 + (px[:, 1] - cy) ** 2))
            x, y = int(px[k, 0]), int(px[k, 1])
        out.append(CharPoint(x, y, SpotSource.LABEL, float(r[y, x])))
    return _sort(out)


def spot_hybrid(
    region, boxes: list[TextBox], cfg: SpotConfig = DEFAULT_CONFIG, mode: str = "hybrid"
) -> list[list[CharPoint]]:
    """Character points for each box.

    Boxes whose shorter side exceeds ``cfg.size_threshold`` take labeling
    centroids, the rest take peaks (``mode`` forces one selector for
    ablations). A point inside several boxes goes to the box with the
    highest mean region score.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not boxes:
        return []
    large = [
        mode == "label" or (mode == "hybrid" and b.short_side > cfg.size_threshold) for b in boxes
    ]
    pools = {}
    if any(large):
        pools[True] = spot_labels(region, cfg)
    if not all(large):
        pools[False] = spot_peaks(region, cfg)

    owner: dict[tuple[bool, int], int] = {}
    for bi, box in enumerate(boxes):
        pool = pools[large[bi]]
        if not pool:
            continue
        xy = np.array([(p.x, p.y) for p in pool], dtype=np.float64)
        for pi in np.flatnonzero(points_in_polygon(xy, box.polygon)):
            key = (large[bi], int(pi))
            prev = owner.get(key)
            if prev is None or box.score > boxes[prev].score:
                owner[key] = bi
    result: list[list[CharPoint]] = [[] for _ in boxes]
    for (kind, pi), bi in owner.items():
        result[bi].append(pools[kind][pi])
    return [_sort(pts) for pts in result]
