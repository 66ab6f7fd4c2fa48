"""Detection and recognition metrics, and the lexicon-size experiment.

Detection uses greedy one-to-one matching at an IoU threshold (0.5 by
default) for every dataset; the many-to-one DetEval rules are not
implemented. Recognition counts a prediction as correct when it overlaps
a ground-truth word at the IoU threshold and its transcription matches
case-insensitively. The word-spotting protocol only scores ground-truth
words that are alphanumeric and at least three characters long; the rest
are "don't care", as are words flagged ``ignore``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon

from .errors import OutOfRange, PoolTooSmall
from .lexicon import LexiconIndex, choose
from .structures import DEFAULT_ALPHABET, TextBox
from .tensorio import AnnotationRecord, Lexicon

WORD_SPOTTING = "word_spotting"
END_TO_END = "end_to_end"
PROTOCOLS = (WORD_SPOTTING, END_TO_END)


def hmean(p: float, r: float) -> float:
    for name, v in (("precision", p), ("recall", r)):
        if not 0.0 <= v <= 1.0:
            raise OutOfRange(f"{name} must be in [0, 1], got {v}")
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def _polygon(p) -> Polygon:
    poly = Polygon(np.asarray(p, dtype=np.float64).reshape(-1, 2))
    return poly if poly.is_valid else poly.buffer(0)


def polygon_iou(a, b) -> float:
    pa, pb = _polygon(a), _polygon(b)
    inter = pa.intersection(pb).area
    union = pa.area + pb.area - inter
    return float(inter / union) if union > 0 else 0.0


def iou_matrix(preds, gts) -> np.ndarray:
    pp = [_polygon(p) for p in preds]
    gp = [_polygon(g) for g in gts]
    out = np.zeros((len(pp), len(gp)))
    for i, a in enumerate(pp):
        for j, b in enumerate(gp):
            if a.intersects(b):
                inter = a.intersection(b).area
                union = a.area + b.area - inter
                out[i, j] = inter / union if union > 0 else 0.0
    return out


def greedy_match(iou: np.ndarray, thr: float, allowed=None) -> list[tuple[int, int]]:
    """One-to-one pairs by descending IoU (ties: lower pred, then lower gt index)."""
    ok = iou >= thr
    if allowed is not None:
        ok &= allowed
    pi, gi = np.nonzero(ok)
    order = sorted(range(len(pi)), key=lambda k: (-iou[pi[k], gi[k]], pi[k], gi[k]))
    used_p, used_g, pairs = set(), set(), []
    for k in order:
        p, g = int(pi[k]), int(gi[k])
        if p not in used_p and g not in used_g:
            used_p.add(p)
            used_g.add(g)
            pairs.append((p, g))
    return pairs


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self) -> float:
        n = self.tp + self.fp
        if n == 0:
            return 1.0 if self.fn == 0 else 0.0
        return self.tp / n

    @property
    def recall(self) -> float:
        n = self.tp + self.fn
        return 1.0 if n == 0 else self.tp / n

    @property
    def hmean(self) -> float:
        return hmean(self.precision, self.recall)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "hmean": self.hmean,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def _polys(pred):
    return [b.polygon if isinstance(b, TextBox) else np.asarray(b) for b in pred]


def eval_detection(pred, gt: AnnotationRecord, iou_thr: float = 0.5) -> Counts:
    """Counts for one image. ``pred`` holds TextBoxes or raw polygons."""
    if not 0.0 < iou_thr < 1.0:
        raise OutOfRange(f"iou_thr must be in (0, 1), got {iou_thr}")
    iou = iou_matrix(_polys(pred), gt.polygons)
    pairs = greedy_match(iou, iou_thr)
    ignore = np.asarray(gt.ignore, dtype=bool)
    tp = sum(1 for _, g in pairs if not ignore[g])
    dropped = len(pairs) - tp
    care = int((~ignore).sum())
    return Counts(tp, len(pred) - dropped - tp, care - tp)


def is_care_word(text: str) -> bool:
    return len(text) >= 3 and text.isalnum()


def recognized_texts(
    pred: list[TextBox],
    lexicon=None,
    alphabet=DEFAULT_ALPHABET,
    reject_threshold: float = 0.5,
    unmatched: str = "keep",
) -> list[str | None]:
    """Final transcription per prediction after optional lexicon matching.

    With ``unmatched="drop"`` predictions the lexicon rejects become None.
    """
    if unmatched not in ("keep", "drop"):
        raise ValueError(f"unmatched must be 'keep' or 'drop', got {unmatched!r}")
    if lexicon is None:
        return [b.transcription for b in pred]
    index = lexicon if isinstance(lexicon, LexiconIndex) else LexiconIndex(lexicon, alphabet)
    out = []
    for b in pred:
        m = choose(index.costs(b.char_probs, b.transcription), index.words, b.transcription, reject_threshold)
        out.append(m.text if m.is_matched or unmatched == "keep" else None)
    return out


def score_texts(
    polys, texts, gt: AnnotationRecord, protocol: str = WORD_SPOTTING, iou_thr: float = 0.5, iou=None
) -> Counts:
    """Recognition counts for one image given final per-prediction texts (None = dropped)."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    keep = [i for i, t in enumerate(texts) if t]
    if iou is None:
        iou = iou_matrix([polys[i] for i in keep], gt.polygons)
    else:
        iou = np.asarray(iou)[keep]
    texts = [texts[i].upper() for i in keep]
    care = np.array(
        [
            not ign and (protocol == END_TO_END or is_care_word(t))
            for t, ign in zip(gt.transcriptions, gt.ignore)
        ],
        dtype=bool,
    )
    gt_up = [t.upper() for t in gt.transcriptions]
    same = np.array([[t == g for g in gt_up] for t in texts], dtype=bool).reshape(len(texts), len(gt_up))
    pairs = greedy_match(iou, iou_thr, allowed=same & care[None, :])
    tp = len(pairs)
    matched = {p for p, _ in pairs}
    fp = 0
    for p in range(len(texts)):
        if p in matched:
            continue
        # predictions sitting on don't-care words are not penalised
        if np.any((iou[p] >= iou_thr) & ~care):
            continue
        fp += 1
    return Counts(tp, fp, int(care.sum()) - tp)


def eval_recognition(
    pred: list[TextBox],
    gt: AnnotationRecord,
    lexicon=None,
    protocol: str = WORD_SPOTTING,
    iou_thr: float = 0.5,
    alphabet=DEFAULT_ALPHABET,
    reject_threshold: float = 0.5,
    unmatched: str = "keep",
) -> Counts:
    texts = recognized_texts(pred, lexicon, alphabet, reject_threshold, unmatched)
    return score_texts(_polys(pred), texts, gt, protocol, iou_thr)


@dataclass
class EvalReport:
    detection: Counts = field(default_factory=Counts)
    word_spotting: dict[str, Counts] = field(default_factory=dict)
    end_to_end: dict[str, Counts] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "detection": self.detection.to_dict(),
            "word_spotting": {k: v.to_dict() for k, v in self.word_spotting.items()},
            "end_to_end": {k: v.to_dict() for k, v in self.end_to_end.items()},
        }

    def rows(self):
        yield ("detection", "", self.detection)
        for k, v in self.word_spotting.items():
            yield (WORD_SPOTTING, k, v)
        for k, v in self.end_to_end.items():
            yield (END_TO_END, k, v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "lexicon", "precision", "recall", "hmean", "tp", "fp", "fn"])
        for metric, lex, c in self.rows():
            w.writerow([metric, lex, f"{c.precision:.6f}", f"{c.recall:.6f}", f"{c.hmean:.6f}", c.tp, c.fp, c.fn])
        return buf.getvalue()


def evaluate(
    preds: dict[str, list[TextBox]],
    gts: list[AnnotationRecord],
    lexicons: dict | None = None,
    iou_thr: float = 0.5,
    alphabet=DEFAULT_ALPHABET,
    reject_threshold: float = 0.5,
    unmatched: str = "keep",
) -> EvalReport:
    """Dataset-level report.

    ``lexicons`` maps a name (e.g. "strong") to None, one Lexicon for every
    image, or a dict of per-image Lexicons. Without it only the "none"
    (no lexicon) setting is scored.
    """
    lexicons = {"none": None} if lexicons is None else lexicons
    shared = {
        name: LexiconIndex(lex, alphabet) if isinstance(lex, Lexicon) else lex
        for name, lex in lexicons.items()
    }
    report = EvalReport()
    for name in shared:
        report.word_spotting[name] = Counts()
        report.end_to_end[name] = Counts()
    for gt in gts:
        pred = preds.get(gt.image_id, [])
        polys = _polys(pred)
        iou = iou_matrix(polys, gt.polygons)
        report.detection += eval_detection(pred, gt, iou_thr)
        for name, lex in shared.items():
            if isinstance(lex, dict):
                lex = lex.get(gt.image_id)
            texts = recognized_texts(pred, lex, alphabet, reject_threshold, unmatched)
            report.word_spotting[name] += score_texts(polys, texts, gt, WORD_SPOTTING, iou_thr, iou)
            report.end_to_end[name] += score_texts(polys, texts, gt, END_TO_END, iou_thr, iou)
    return report


def lexicon_sweep(
    preds: dict[str, list[TextBox]],
    gts: list[AnnotationRecord],
    base: Lexicon,
    pool: Lexicon,
    sizes,
    seed: int,
    trials: int = 5,
    protocol: str = WORD_SPOTTING,
    iou_thr: float = 0.5,
    alphabet=DEFAULT_ALPHABET,
    reject_threshold: float = 0.5,
) -> list[tuple[int, float]]:
    """H-mean as ``base`` is inflated by ``size`` random ``pool`` words, averaged over trials.

    Trial t draws its words like ``inflate_lexicon(base, pool, size, seed + t)``.
    """
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if sizes and sizes[-1] > len(pool):
        raise PoolTooSmall(f"largest size {sizes[-1]} exceeds pool of {len(pool)}")
    index = LexiconIndex(tuple(base.words) + tuple(pool.words), alphabet)
    base_words = set(base.words)
    in_base = np.array([w in base_words for w in index.words], dtype=bool)
    pool_pos = {w: i for i, w in enumerate(pool.words)}
    where = np.array([pool_pos.get(w, -1) for w in index.words])
    ranks = []
    for t in range(trials):
        perm = np.random.default_rng(seed + t).permutation(len(pool))
        rank = np.empty(len(pool), dtype=np.int64)
        rank[perm] = np.arange(len(pool))
        ranks.append(np.where(where >= 0, rank[np.maximum(where, 0)], np.iinfo(np.int64).max))

    totals = {(t, s): Counts() for t in range(trials) for s in sizes}
    for gt in gts:
        pred = preds.get(gt.image_id, [])
        polys = _polys(pred)
        iou = iou_matrix(polys, gt.polygons)
        costs = [index.costs(b.char_probs, b.transcription) for b in pred]
        for t in range(trials):
            for s in sizes:
                mask = in_base | (ranks[t] < s)
                texts = [
                    choose(c, index.words, b.transcription, reject_threshold, mask).text
                    for c, b in zip(costs, pred)
                ]
                totals[t, s] += score_texts(polys, texts, gt, protocol, iou_thr, iou)
    return [(s, float(np.mean([totals[t, s].hmean for t in range(trials)]))) for s in sizes]
