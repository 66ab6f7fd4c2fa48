"""Synthetic supervision: character quads, heat maps, oracle features, scenes.

Heat maps follow the CRAFT recipe: an isotropic Gaussian defined on a
canonical square is perspective-warped onto every character quad (region
map) and onto the quads bridging neighbouring characters of a word
(affinity map). Maps combine per-pixel with ``max``.

All geometry here is in heat-map cells; ``stride`` converts to image pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import cv2
import numpy as np
from shapely.geometry import Polygon

from .boxdetect import map_to_image_coords, min_area_rect
from .errors import AlphabetTooLarge, DegeneratePolygon
from .structures import DEFAULT_ALPHABET, DecoderParams
from .tensorio import AnnotationRecord, Lexicon, LexiconKind

# Gaussian std on the canonical [-1, 1] square
GAUSSIAN_SIGMA = 0.35

_CANON = np.float32([[-1, -1], [1, -1], [1, 1], [-1, 1]])


def polygon_area(poly) -> float:
    p = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def quad_center(q) -> np.ndarray:
    """Intersection of the diagonals, i.e. the image of the canonical centre."""
    q = np.asarray(q, dtype=np.float64)
    p, r = q[0], q[2] - q[0]
    s, d = q[1], q[3] - q[1]
    denom = r[0] * d[1] - r[1] * d[0]
    if abs(denom) < 1e-12:
        return q.mean(axis=0)
    t = ((s[0] - p[0]) * d[1] - (s[1] - p[1]) * d[0]) / denom
    return p + t * r


@dataclass(frozen=True)
class CharQuad:
    corners: np.ndarray  # (4, 2): top-left, top-right, bottom-right, bottom-left along the word
    label: int = -1
    word_id: int = 0
    position: int = 0

    @property
    def center(self) -> np.ndarray:
        return quad_center(self.corners)

    @property
    def height(self) -> float:
        c = self.corners
        return float(np.linalg.norm((c[3] + c[2]) / 2 - (c[0] + c[1]) / 2))

    @property
    def width(self) -> float:
        c = self.corners
        return float(np.linalg.norm((c[1] + c[2]) / 2 - (c[0] + c[3]) / 2))

    def scaled(self, factor: float) -> "CharQuad":
        return replace(self, corners=self.corners * factor)


@dataclass
class GroundTruthMaps:
    region: np.ndarray
    affinity: np.ndarray
    char_points: list[tuple[int, int, int]]
    char_quads: list[CharQuad] = field(default_factory=list)

    @property
    def size(self) -> tuple[int, int]:
        h, w = self.region.shape
        return w, h


def word_quad(poly) -> np.ndarray:
    """Reduce a word polygon to a quad ordered top-left, top-right, bottom-right, bottom-left.

    The word line runs along the longer pair of opposite edges and points to
    +x (to +y for vertical words). Polygons with more than four vertices
    are replaced by their minimum-area rectangle.
    """
    p = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    if len(p) < 4:
        raise DegeneratePolygon(f"need at least 4 vertices, got {len(p)}")
    if len(p) > 4:
        p = min_area_rect(p)
    if polygon_area(p) <= 1e-12:
        raise DegeneratePolygon("word polygon has zero area")
    e = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    if e[1] + e[3] > e[0] + e[2]:
        p = np.roll(p, -1, axis=0)
    d = p[1] - p[0]
    if d[0] < -1e-9 or (abs(d[0]) <= 1e-9 and d[1] < 0):
        p = p[[1, 0, 3, 2]]
    if (p[0, 1] + p[1, 1]) > (p[2, 1] + p[3, 1]) + 1e-9:
        p = p[[3, 2, 1, 0]]
    return p


def divide_word_polygon(word_poly, word_len: int, labels=None, word_id: int = 0) -> list[CharQuad]:
    """Split a word quad into ``word_len`` equal slices along its word line."""
    if word_len < 1:
        raise ValueError(f"word_len must be >= 1, got {word_len}")
    q = word_quad(word_poly)
    t = np.linspace(0.0, 1.0, word_len + 1)[:, None]
    top = q[0] + t * (q[1] - q[0])
    bot = q[3] + t * (q[2] - q[3])
    labels = [-1] * word_len if labels is None else list(labels)
    return [
        CharQuad(np.stack([top[i], top[i + 1], bot[i + 1], bot[i]]), int(labels[i]), word_id, i)
        for i in range(word_len)
    ]


def affinity_quad(a: CharQuad, b: CharQuad) -> np.ndarray:
    """Quad joining the upper/lower triangle centres of two neighbouring characters."""

    def halves(q):
        c = q.center
        k = q.corners
        return (k[0] + k[1] + c) / 3.0, (k[2] + k[3] + c) / 3.0

    ta, ba = halves(a)
    tb, bb = halves(b)
    return np.stack([ta, tb, bb, ba])


def _canonical_coords(quad, shape):
    """Cells inside ``quad`` with their canonical (u, v) in [-1, 1]^2."""
    h, w = shape
    q = np.asarray(quad, dtype=np.float64)
    x0, y0 = np.floor(q.min(axis=0)).astype(int)
    x1, y1 = np.ceil(q.max(axis=0)).astype(int)
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, w - 1), min(y1, h - 1)
    empty = np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp), np.zeros(0), np.zeros(0)
    if x1 < x0 or y1 < y0 or polygon_area(q) <= 1e-12:
        return empty
    hom = cv2.getPerspectiveTransform(q.astype(np.float32), _CANON).astype(np.float64)
    yy, xx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    xs, ys = xx.ravel(), yy.ravel()
    pts = np.stack([xs, ys, np.ones_like(xs)], axis=0).astype(np.float64)
    m = hom @ pts
    with np.errstate(divide="ignore", invalid="ignore"):
        u, v = m[0] / m[2], m[1] / m[2]
    eps = 1e-6
    inside = (m[2] > 0) & (np.abs(u) <= 1 + eps) & (np.abs(v) <= 1 + eps)
    return ys[inside], xs[inside], u[inside], v[inside]


def _stamp(canvas, quad, sigma_u, sigma_v=None, lobes=((0.0, 0.0),)):
    """Max-combine a (possibly multi-lobed) Gaussian warped onto ``quad``."""
    sigma_v = sigma_u if sigma_v is None else sigma_v
    ys, xs, u, v = _canonical_coords(quad, canvas.shape)
    if len(xs) == 0:
        return
    val = np.zeros(len(xs))
    for lu, lv in lobes:
        g = np.exp(-((u - lu) ** 2) / (2 * sigma_u**2) - ((v - lv) ** 2) / (2 * sigma_v**2))
        np.maximum(val, g, out=val)
    np.maximum.at(canvas, (ys, xs), val)


def quad_cells(quad, shape) -> tuple[np.ndarray, np.ndarray]:
    ys, xs, _, _ = _canonical_coords(quad, shape)
    return ys, xs


def _round_point(p, w, h):
    x = min(max(int(math.floor(p[0] + 0.5)), 0), w - 1)
    y = min(max(int(math.floor(p[1] + 0.5)), 0), h - 1)
    return x, y


def _affinity_pairs(quads):
    words: dict[int, list[CharQuad]] = {}
    for q in quads:
        words.setdefault(q.word_id, []).append(q)
    for wid in sorted(words):
        chars = sorted(words[wid], key=lambda q: q.position)
        yield from zip(chars[:-1], chars[1:])


def render_gt(quads, size, sigma: float = GAUSSIAN_SIGMA) -> GroundTruthMaps:
    """Region/affinity targets and character points for ``quads`` on a (W, H) grid.

    Neighbouring characters are those of the same ``word_id`` with
    consecutive ``position``; input order does not matter.
    """
    w, h = size
    region = np.zeros((h, w))
    affinity = np.zeros((h, w))
    for q in quads:
        _stamp(region, q.corners, sigma)
    for a, b in _affinity_pairs(quads):
        _stamp(affinity, affinity_quad(a, b), sigma)
    ordered = sorted(quads, key=lambda q: (q.word_id, q.position))
    points = [(*_round_point(q.center, w, h), q.label) for q in ordered]
    return GroundTruthMaps(region, affinity, points, ordered)


@dataclass(frozen=True)
class ResponseModel:
    """Stand-in for a trained network's region map, with its scale-dependent flaws.

    Characters shorter than ``small_below`` cells are smeared along the word
    line (``smear_sigma``) so neighbouring blobs touch above the labeling
    threshold while keeping one peak each. Characters taller than
    ``split_above`` respond with two lobes stacked across the word line, so a
    single blob carries two peaks. Everything else matches the targets.
    """

    sigma: float = GAUSSIAN_SIGMA
    small_below: float = 20.0
    smear_sigma: float = 0.8
    split_above: float = 28.0
    lobe_offset: float = 0.25
    lobe_sigma: float = 0.25


def render_response(quads, size, model: ResponseModel = ResponseModel()):
    """Simulated (region, affinity) prediction for ``quads``."""
    w, h = size
    region = np.zeros((h, w))
    affinity = np.zeros((h, w))
    for q in quads:
        ch = q.height
        if ch > model.split_above:
            lobes = ((0.0, -model.lobe_offset), (0.0, model.lobe_offset))
            _stamp(region, q.corners, model.lobe_sigma, lobes=lobes)
        elif ch < model.small_below:
            _stamp(region, q.corners, max(model.smear_sigma, model.sigma), model.sigma)
        else:
            _stamp(region, q.corners, model.sigma)
    for a, b in _affinity_pairs(quads):
        _stamp(affinity, affinity_quad(a, b), model.sigma)
    return region, affinity


def oracle_features(
    gt: GroundTruthMaps,
    params: DecoderParams,
    scale: float = 10.0,
    support: str = "point",
    dtype=np.float32,
) -> np.ndarray:
    """A feature map the decoder reads back as the ground-truth classes.

    For each class c the feature vector solves ``v @ w - b = scale * e_c``
    in the least-squares sense (exactly ``scale * e_c`` for identity-like
    weights). ``support="point"`` writes it at the character points only;
    ``"quad"`` fills each character's whole quad.
    """
    n_feat, n_cls = params.w.shape
    if n_cls > n_feat:
        raise AlphabetTooLarge(f"{n_cls} classes cannot be separated with {n_feat} feature channels")
    if support not in ("point", "quad"):
        raise ValueError(f"support must be 'point' or 'quad', got {support!r}")
    w, h = gt.size
    f = np.zeros((h, w, n_feat), dtype=dtype)
    labels = sorted({c for _, _, c in gt.char_points} | {q.label for q in gt.char_quads})
    vecs = {}
    for c in labels:
        if 0 <= c < n_cls:
            target = scale * np.eye(n_cls)[c] + params.b
            vecs[c] = np.linalg.lstsq(params.w.T, target, rcond=None)[0]
    if support == "quad":
        for q in gt.char_quads:
            if q.label in vecs:
                ys, xs = quad_cells(q.corners, (h, w))
                f[ys, xs, :] = vecs[q.label]
    for x, y, c in gt.char_points:
        if c in vecs:
            f[y, x, :] = vecs[c]
    return f


# ---- synthetic scenes ----------------------------------------------------------

_UPPER = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_DIGITS = "0123456789"


def random_word(rng: np.random.Generator, length: int) -> str:
    style = rng.choice(["upper", "title", "lower", "mixed"], p=[0.35, 0.3, 0.2, 0.15])
    pool = _UPPER + _DIGITS if style == "mixed" else _UPPER
    word = "".join(pool[i] for i in rng.integers(0, len(pool), size=length))
    if style == "title":
        return word[0] + word[1:].lower()
    if style == "lower":
        return word.lower()
    return word


def synthetic_vocabulary(n: int, seed: int, min_len: int = 3, max_len: int = 10) -> list[str]:
    """``n`` distinct uppercase pseudo-words, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    out: dict[str, None] = {}
    while len(out) < n:
        lengths = rng.integers(min_len, max_len + 1, size=n)
        letters = rng.integers(0, 26, size=(n, max_len))
        for ln, row in zip(lengths, letters):
            out.setdefault("".join(_UPPER[i] for i in row[:ln]), None)
            if len(out) == n:
                break
    return list(out)


@dataclass
class SceneWord:
    text: str
    quad: np.ndarray
    chars: list[CharQuad]

    @property
    def char_height(self) -> float:
        return self.chars[0].height


@dataclass
class Scene:
    width: int
    height: int
    words: list[SceneWord]
    gt: GroundTruthMaps
    region: np.ndarray
    affinity: np.ndarray
    stride: int = 4

    @property
    def quads(self) -> list[CharQuad]:
        return [c for w in self.words for c in w.chars]

    def annotation(self, image_id: str = "scene") -> AnnotationRecord:
        return AnnotationRecord(
            image_id,
            [map_to_image_coords(w.quad, self.stride) for w in self.words],
            [w.text for w in self.words],
            [False] * len(self.words),
        )

    def features(self, params: DecoderParams, scale: float = 10.0, support: str = "quad"):
        return oracle_features(self.gt, params, scale=scale, support=support)

    def strong_lexicon(self, pool, rng: np.random.Generator, size: int = 100) -> Lexicon:
        words = [w.text.upper() for w in self.words]
        need = max(size - len(words), 0)
        picks = rng.choice(len(pool), size=min(need, len(pool)), replace=False)
        return Lexicon(tuple(words) + tuple(pool[i] for i in picks), LexiconKind.STRONG)

    def scaled(self, factor: float, response: ResponseModel | None = ResponseModel()) -> "Scene":
        """The same layout on a grid ``factor`` times larger in each direction."""
        words = [
            SceneWord(w.text, w.quad * factor, [c.scaled(factor) for c in w.chars])
            for w in self.words
        ]
        width = max(int(round(self.width * factor)), 1)
        height = max(int(round(self.height * factor)), 1)
        return build_scene(words, width, height, response, self.stride)


def build_scene(words, width, height, response: ResponseModel | None = ResponseModel(), stride=4) -> Scene:
    quads = [c for w in words for c in w.chars]
    gt = render_gt(quads, (width, height))
    if response is None:
        region, affinity = gt.region, gt.affinity
    else:
        region, affinity = render_response(quads, (width, height), response)
    return Scene(width, height, list(words), gt, region, affinity, stride)


def _rotated_rect(cx, cy, length, height, angle):
    c, s = math.cos(angle), math.sin(angle)
    ux, uy = np.array([c, s]), np.array([-s, c])
    ctr = np.array([cx, cy])
    hl, hh = length / 2, height / 2
    return np.stack(
        [ctr - hl * ux - hh * uy, ctr + hl * ux - hh * uy, ctr + hl * ux + hh * uy, ctr - hl * ux + hh * uy]
    )


def synth_scene(
    seed: int | np.random.Generator,
    width: int = 480,
    height: int = 360,
    n_words=(3, 8),
    n_large=(1, 2),
    small_height=(8.0, 16.0),
    large_height=(34.0, 46.0),
    max_angle: float = 15.0,
    response: ResponseModel | None = ResponseModel(),
    alphabet=DEFAULT_ALPHABET,
    stride: int = 4,
) -> Scene:
    """A random scene of non-overlapping rotated words, mixing small and large text.

    ``n_words`` and ``n_large`` are inclusive (low, high) ranges. Words that
    cannot be placed after repeated attempts are skipped.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    index = {c: i for i, c in enumerate(alphabet)}
    total = int(rng.integers(n_words[0], n_words[1] + 1))
    large = min(int(rng.integers(n_large[0], n_large[1] + 1)), total)
    placed: list[Polygon] = []
    words: list[SceneWord] = []
    for k in range(total):
        is_large = k < large
        ch = float(rng.uniform(*(large_height if is_large else small_height)))
        cw = ch * float(rng.uniform(0.6, 0.9))
        n_chars = int(rng.integers(3, 6 if is_large else 9))
        text = random_word(rng, n_chars)
        if any(c not in index for c in text):
            # restricted alphabets: fold case, then resample what is still missing
            text = "".join(
                c if c in index else (c.upper() if c.upper() in index else alphabet[int(rng.integers(len(alphabet)))])
                for c in text
            )
        angle = math.radians(float(rng.uniform(-max_angle, max_angle)))
        length = cw * n_chars
        pad = 0.6 * ch + 4.0
        half = 0.5 * (abs(length * math.cos(angle)) + abs(ch * math.sin(angle))) + pad, 0.5 * (
            abs(length * math.sin(angle)) + abs(ch * math.cos(angle))
        ) + pad
        if 2 * half[0] > width - 2 or 2 * half[1] > height - 2:
            continue
        for _ in range(300):
            cx = float(rng.uniform(half[0], width - 1 - half[0]))
            cy = float(rng.uniform(half[1], height - 1 - half[1]))
            quad = _rotated_rect(cx, cy, length, ch, angle)
            shape = Polygon(quad).buffer(pad)
            if not any(shape.intersects(p) for p in placed):
                break
        else:
            continue
        placed.append(shape)
        q = word_quad(quad)
        labels = [index[c] for c in text]
        words.append(SceneWord(text, q, divide_word_polygon(q, n_chars, labels, word_id=len(words))))
    return build_scene(words, width, height, response, stride)
