"""Text-box extraction from region + affinity heat maps."""

from __future__ import annotations

from typing import NamedTuple

import cv2
import numpy as np
from scipy import ndimage

from .config import DEFAULT_CONFIG, SpotConfig
from .errors import DimMismatch
from .structures import TextBox

_EIGHT = np.ones((3, 3), dtype=bool)


class Component(NamedTuple):
    id: int
    pixels: np.ndarray  # (K, 2) int, columns (x, y)
    centroid: tuple[float, float]


def connected_components(binary) -> list[Component]:
    """8-connected foreground components, ordered by (min y, min x)."""
    mask = np.asarray(binary, dtype=bool)
    if mask.ndim != 2:
        raise DimMismatch(f"expected a 2-D mask, got shape {mask.shape}")
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    bounds = np.flatnonzero(np.diff(lab)) + 1
    groups = [
        np.stack([gx, gy], axis=1)
        for gx, gy in zip(np.split(xs, bounds), np.split(ys, bounds))
    ]
    groups.sort(key=lambda px: (int(px[:, 1].min()), int(px[:, 0].min())))
    return [
        Component(i, px, (float(px[:, 0].mean()), float(px[:, 1].mean())))
        for i, px in enumerate(groups)
    ]


def order_quad(pts) -> np.ndarray:
    """Order 4 corners clockwise on screen (y down), starting nearest the top-left."""
    pts = np.asarray(pts, dtype=np.float64).reshape(4, 2)
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    pts = pts[np.argsort(ang, kind="stable")]
    start = int(np.argmin(pts[:, 0] + pts[:, 1]))
    return np.roll(pts, -start, axis=0)


def min_area_rect(points, pad: float = 0.0) -> np.ndarray:
    """Minimum-area rotated rectangle around ``points``, each side grown by ``pad``."""
    pts = np.asarray(points, dtype=np.float32).reshape(-1, 2)
    (cx, cy), (w, h), angle = cv2.minAreaRect(pts)
    rect = ((cx, cy), (w + 2 * pad, h + 2 * pad), angle)
    return order_quad(cv2.boxPoints(rect))


def _box_from_component(comp: Component, score_map: np.ndarray, cfg: SpotConfig) -> TextBox:
    h, w = score_map.shape
    # half a cell on each side covers the pixel footprint of the component
    pts = comp.pixels.astype(np.float32)
    (cx, cy), (rw, rh), angle = cv2.minAreaRect(pts)
    rw, rh = rw + 1.0, rh + 1.0
    short = min(rw, rh)
    across, along = cfg.box_expand * short, cfg.box_expand_long * short
    if rw <= rh:
        rw, rh = rw + 2 * across, rh + 2 * along
    else:
        rw, rh = rw + 2 * along, rh + 2 * across
    quad = order_quad(cv2.boxPoints(((cx, cy), (rw, rh), angle)))
    quad[:, 0] = np.clip(quad[:, 0], -0.5, w - 0.5)
    quad[:, 1] = np.clip(quad[:, 1], -0.5, h - 0.5)
    score = float(score_map[comp.pixels[:, 1], comp.pixels[:, 0]].mean())
    return TextBox(
        polygon=quad,
        short_side=float(min(rw, rh)),
        long_side=float(max(rw, rh)),
        score=score,
        pixels=comp.pixels,
    )


def detect_boxes(region, affinity, cfg: SpotConfig = DEFAULT_CONFIG) -> list[TextBox]:
    """Threshold clamp(R + A) and turn each 8-connected component into a rotated box.

    Components with fewer than ``cfg.min_area`` cells are dropped. Each box
    is the minimum-area rectangle of its component, grown by
    ``cfg.box_expand`` times its short side across the word line and by
    ``cfg.box_expand_long`` times the short side along it (the threshold
    contour of the heat maps sits inside the true text extent). ``TextBox.score`` is the
    mean region score over the component.
    """
    region = np.asarray(region, dtype=np.float64)
    affinity = np.asarray(affinity, dtype=np.float64)
    if region.shape != affinity.shape or region.ndim != 2:
        raise DimMismatch(f"region {region.shape} and affinity {affinity.shape} must match (2-D)")
    combined = np.clip(region + affinity, 0.0, 1.0)
    comps = connected_components(combined >= cfg.box_threshold)
    return [
        _box_from_component(c, region, cfg) for c in comps if len(c.pixels) >= cfg.min_area
    ]


def map_to_image_coords(poly, stride: float = 4) -> np.ndarray:
    """Heat-map coordinates to image pixels: cell x covers [stride*x, stride*(x+1))."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return np.asarray(poly, dtype=np.float64) * stride + stride / 2.0


def map_to_heatmap_coords(poly, stride: float = 4) -> np.ndarray:
    return (np.asarray(poly, dtype=np.float64) - stride / 2.0) / stride


def points_in_polygon(points, poly, eps: float = 1e-9) -> np.ndarray:
    """Boundary-inclusive containment of (N, 2) points in a convex polygon."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    poly = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        return np.zeros(0, dtype=bool)
    edges = np.roll(poly, -1, axis=0) - poly
    rel = pts[:, None, :] - poly[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    scale = eps * max(1.0, float(np.abs(poly).max()))
    return np.all(cross >= -scale, axis=1) | np.all(cross <= scale, axis=1)
