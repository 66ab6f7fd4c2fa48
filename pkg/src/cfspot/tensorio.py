"""File formats: binary tensors, JSON-lines annotations/results, plain-text lexicons.

Tensor file layout (all little-endian)::

    offset  size        field
    0       4           magic  b"CFTS"
    4       1           version (1)
    5       1           dtype   (0 = float32)
    6       1           rank    (2 or 3)
    7       4 * rank    dims, uint32, row-major (channel-last for rank 3)
    ...     4 * prod    payload, float32
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    BadRank,
    IoFailure,
    TrailingData,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)
from .structures import DecoderParams, TextBox

MAGIC = b"CFTS"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sBBB")


def tensor_nbytes(shape) -> int:
    """Exact size of the file ``write_tensor`` produces for ``shape``."""
    return _HEADER.size + 4 * len(shape) + 4 * int(np.prod(shape))


def encode_tensor(t) -> bytes:
    arr = np.asarray(t)
    if arr.ndim not in (2, 3):
        raise BadRank("rank", f"expected rank 2 or 3, got {arr.ndim}")
    if arr.size == 0:
        raise BadRank("dims", f"all dims must be >= 1, got {arr.shape}")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + dims + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        if not MAGIC.startswith(buf[:4]):
            raise BadMagic("magic", f"expected {MAGIC!r}, got {buf[:4]!r}")
        raise TruncatedPayload("header", f"need {_HEADER.size} bytes, file has {len(buf)}")
    magic, version, dtype, rank = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion("version", f"expected {VERSION}, got {version}")
    if dtype != DTYPE_F32:
        raise UnsupportedDtype("dtype", f"only 0 (float32) is supported, got {dtype}")
    if rank not in (2, 3):
        raise BadRank("rank", f"expected 2 or 3, got {rank}")
    dims_end = _HEADER.size + 4 * rank
    if len(buf) < dims_end:
        raise TruncatedPayload("dims", f"need {dims_end} bytes, file has {len(buf)}")
    dims = struct.unpack_from(f"<{rank}I", buf, _HEADER.size)
    if min(dims) < 1:
        raise BadRank("dims", f"all dims must be >= 1, got {dims}")
    expected = dims_end + 4 * int(np.prod(dims, dtype=np.int64))
    if len(buf) < expected:
        raise TruncatedPayload(
            "payload", f"dims {dims} need {expected - dims_end} bytes, got {len(buf) - dims_end}"
        )
    if len(buf) > expected:
        raise TrailingData("payload", f"{len(buf) - expected} bytes beyond the stated dims {dims}")
    return np.frombuffer(buf, dtype="<f4", offset=dims_end).reshape(dims).astype(np.float32)


def write_tensor(t, path) -> None:
    data = encode_tensor(t)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_tensor(path) -> np.ndarray:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_tensor(buf)


# ---- annotations -----------------------------------------------------------


@dataclass
class AnnotationRecord:
    image_id: str
    polygons: list[np.ndarray] = field(default_factory=list)
    transcriptions: list[str] = field(default_factory=list)
    ignore: list[bool] = field(default_factory=list)

    def __post_init__(self):
        self.polygons = [np.asarray(p, dtype=np.float64).reshape(-1, 2) for p in self.polygons]
        if not self.ignore:
            self.ignore = [False] * len(self.polygons)
        if not (len(self.polygons) == len(self.transcriptions) == len(self.ignore)):
            raise ValueError(
                f"{self.image_id}: {len(self.polygons)} polygons, "
                f"{len(self.transcriptions)} transcriptions, {len(self.ignore)} ignore flags"
            )
        for p in self.polygons:
            if len(p) < 4:
                raise ValueError(f"{self.image_id}: polygon with {len(p)} vertices (need >= 4)")

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "polygons": [p.tolist() for p in self.polygons],
            "transcriptions": list(self.transcriptions),
            "ignore": [bool(i) for i in self.ignore],
        }

    @classmethod
    def from_json(cls, d: dict) -> "AnnotationRecord":
        return cls(d["image_id"], d["polygons"], d["transcriptions"], d.get("ignore") or [])


def _write_jsonl(rows, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_annotations(records, path) -> None:
    _write_jsonl((r.to_json() for r in records), path)


def read_annotations(path) -> list[AnnotationRecord]:
    return [AnnotationRecord.from_json(d) for d in _read_jsonl(path)]


# ---- spotting results --------------------------------------------------------


def box_to_json(box: TextBox) -> dict:
    d = {
        "polygon": box.polygon.tolist(),
        "transcription": box.transcription,
        "score": float(box.score),
    }
    if box.char_probs is not None:
        d["char_probs"] = np.asarray(box.char_probs, dtype=np.float64).tolist()
    return d


def box_from_json(d: dict) -> TextBox:
    probs = d.get("char_probs")
    return TextBox(
        polygon=np.asarray(d["polygon"], dtype=np.float64),
        score=d.get("score", 0.0),
        transcription=d.get("transcription", ""),
        char_probs=None if probs is None else np.asarray(probs, dtype=np.float64),
    )


def write_results(results: dict[str, list[TextBox]], path) -> None:
    """One line per image: ``{"image_id": ..., "boxes": [...]}``."""
    _write_jsonl(
        ({"image_id": k, "boxes": [box_to_json(b) for b in v]} for k, v in results.items()), path
    )


def read_results(path) -> dict[str, list[TextBox]]:
    return {d["image_id"]: [box_from_json(b) for b in d["boxes"]] for d in _read_jsonl(path)}


# ---- lexicons ---------------------------------------------------------------


class LexiconKind(str, enum.Enum):
    STRONG = "strong"
    WEAK = "weak"
    GENERIC = "generic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Lexicon:
    """Uppercased, deduplicated word list (first occurrence order kept)."""

    words: tuple[str, ...]
    kind: LexiconKind = LexiconKind.CUSTOM

    def __post_init__(self):
        seen = dict.fromkeys(w.strip().upper() for w in self.words)
        seen.pop("", None)
        object.__setattr__(self, "words", tuple(seen))
        object.__setattr__(self, "kind", LexiconKind(self.kind))
        object.__setattr__(self, "_lookup", frozenset(seen))

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, word):
        return word.upper() in self._lookup


def read_lexicon(path, kind=LexiconKind.CUSTOM) -> Lexicon:
    return Lexicon(tuple(Path(path).read_text(encoding="utf-8").splitlines()), kind)


def write_lexicon(lex: Lexicon, path) -> None:
    try:
        Path(path).write_text("".join(w + "\n" for w in lex.words), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ---- decoder parameters --------------------------------------------------------


def write_decoder(params: DecoderParams, directory) -> None:
    """Store ``w.cft``, ``b.cft`` (1 x C) and ``alphabet.txt`` in ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_tensor(params.w, d / "w.cft")
    write_tensor(params.b.reshape(1, -1), d / "b.cft")
    # one entry per line; characters are escaped so whitespace-like symbols survive
    (d / "alphabet.txt").write_text(
        "".join(json.dumps(c) + "\n" for c in params.alphabet), encoding="utf-8"
    )


def read_decoder(directory, confidence: float = 0.3) -> DecoderParams:
    d = Path(directory)
    w = read_tensor(d / "w.cft")
    b = read_tensor(d / "b.cft").reshape(-1)
    lines = (d / "alphabet.txt").read_text(encoding="utf-8").splitlines()
    alphabet = tuple(json.loads(line) for line in lines if line.strip())
    return DecoderParams(w, b, alphabet, confidence)
