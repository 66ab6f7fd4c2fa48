"""End-to-end spotting pass: heat maps and features in, transcribed boxes out."""

from __future__ import annotations

import time

import numpy as np

from .boxdetect import detect_boxes, map_to_image_coords
from .charspot import spot_hybrid
from .config import DEFAULT_CONFIG, SpotConfig
from .decode import assemble_words, decode_points
from .errors import DimMismatch
from .structures import DecoderParams, TextBox

STAGES = ("detect", "spot", "decode", "assemble")


def spot(
    region,
    affinity,
    features,
    params: DecoderParams,
    cfg: SpotConfig = DEFAULT_CONFIG,
    mode: str = "hybrid",
    timings: dict | None = None,
) -> list[TextBox]:
    """Detect, spot, decode and read every text instance.

    Returned polygons are in image pixels; character points stay in heat-map
    cells. Boxes are ordered by (min y, min x) of their polygons. If
    ``timings`` is given, per-stage wall times in seconds are stored in it.
    """
    region = np.asarray(region)
    features = np.asarray(features)
    if features.ndim != 3 or features.shape[:2] != region.shape:
        raise DimMismatch(f"features {features.shape} not aligned with maps {region.shape}")
    if params.confidence != cfg.confidence:
        params = DecoderParams(params.w, params.b, params.alphabet, cfg.confidence)

    clock = time.perf_counter
    t0 = clock()
    boxes = detect_boxes(region, affinity, cfg)
    t1 = clock()
    points = spot_hybrid(region, boxes, cfg, mode=mode)
    t2 = clock()
    probs = [decode_points(features, pts, params) for pts in points]
    t3 = clock()
    words = assemble_words(boxes, points, probs, params)
    out = [b.with_(polygon=map_to_image_coords(b.polygon, cfg.stride)) for b in words]
    out.sort(key=lambda b: (float(b.polygon[:, 1].min()), float(b.polygon[:, 0].min())))
    t4 = clock()
    if timings is not None:
        timings.update(detect=t1 - t0, spot=t2 - t1, decode=t3 - t2, assemble=t4 - t3, total=t4 - t0)
    return out
