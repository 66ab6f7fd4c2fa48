"""Latency of the post-processing stages across input scales (batch size one).

Each scale renders the same synthetic layout at a different resolution,
with all tensors held in memory so file I/O never enters the timings.
"""

from __future__ import annotations

import csv
import gc
import io
import string
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, SpotConfig
from .gtsynth import synth_scene
from .pipeline import STAGES, spot
from .structures import DecoderParams

DEFAULT_SCALES = (640, 1280, 1920, 2880)
REFERENCE_LONG_SIDE = 1280
# 26 classes fit in the 32 feature channels used by default
BENCH_ALPHABET = string.ascii_uppercase
BENCH_STAGES = (*STAGES, "total")
CSV_FIELDS = ("stage", "dims", "median_ms", "p90_ms", "mean_ms", "throughput")


@dataclass(frozen=True)
class BenchRecord:
    stage: str
    dims: str  # heat-map "HxW" the stage ran on
    reps: int
    median_ms: float
    p90_ms: float
    mean_ms: float
    throughput: float  # runs per second at the median

    def row(self) -> dict:
        return {
            "stage": self.stage,
            "dims": self.dims,
            "median_ms": f"{self.median_ms:.4f}",
            "p90_ms": f"{self.p90_ms:.4f}",
            "mean_ms": f"{self.mean_ms:.4f}",
            "throughput": f"{self.throughput:.2f}",
        }


def _summarise(stage, dims, samples_s) -> BenchRecord:
    ms = np.asarray(samples_s) * 1e3
    med = float(np.median(ms))
    return BenchRecord(
        stage,
        dims,
        len(ms),
        med,
        float(np.percentile(ms, 90)),
        float(ms.mean()),
        1e3 / med if med > 0 else float("inf"),
    )


def bench_pipeline(
    scales=DEFAULT_SCALES,
    reps: int = 10,
    seed: int = 0,
    warmup: int = 3,
    channels: int = 32,
    cfg: SpotConfig = DEFAULT_CONFIG,
) -> list[BenchRecord]:
    """Per-stage and total timings of ``spot`` for each image long side in ``scales``."""
    if reps < 10:
        raise ValueError(f"reps must be >= 10, got {reps}")
    ref = REFERENCE_LONG_SIDE // cfg.stride
    layout = synth_scene(seed, width=ref, height=ref * 3 // 4, alphabet=BENCH_ALPHABET)
    params = DecoderParams.identity(channels, BENCH_ALPHABET)
    records = []
    for long_side in scales:
        scene = layout.scaled(long_side / REFERENCE_LONG_SIDE)
        feats = scene.features(params)
        region, affinity = scene.region, scene.affinity
        dims = f"{scene.height}x{scene.width}"
        for _ in range(warmup):
            spot(region, affinity, feats, params, cfg)
        samples = {s: [] for s in BENCH_STAGES}
        # like timeit: collector pauses are the main source of run-to-run jitter
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            for _ in range(reps):
                t: dict = {}
                spot(region, affinity, feats, params, cfg, timings=t)
                for k in samples:
                    samples[k].append(t[k])
        finally:
            if was_enabled:
                gc.enable()
        records.extend(_summarise(k, dims, v) for k, v in samples.items())
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def headline(records, long_side: int = 2880, stride: int = 4):
    """Median total ms for the run whose heat-map long side is ``long_side / stride``."""
    want = long_side // stride
    for r in records:
        if r.stage == "total" and max(int(v) for v in r.dims.split("x")) == want:
            return r.median_ms
    return None
