"""Edit distances and lexicon matching of decoded words.

The weighted distance aligns a sequence of per-character class
distributions with a target word:

* substituting decoded position i by target character c costs 1 - p_i(c),
* deleting decoded position i costs p_i(argmax_i),
* inserting a target character costs 1.

Matching is case-insensitive: class probabilities are summed over case
variants before costs are taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PoolTooSmall, UnknownTargetChar
from .structures import DEFAULT_ALPHABET
from .tensorio import Lexicon, LexiconKind


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs."""
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@lru_cache(maxsize=16)
def _folding(alphabet: tuple[str, ...]):
    folded = sorted({c.upper() for c in alphabet})
    index = {c: i for i, c in enumerate(folded)}
    fold = np.zeros((len(alphabet), len(folded)))
    for k, c in enumerate(alphabet):
        fold[k, index[c.upper()]] = 1.0
    return fold, index


def fold_probs(probs, alphabet=DEFAULT_ALPHABET):
    """Sum class probabilities over case variants. Returns (folded probs, char -> column)."""
    fold, index = _folding(tuple(alphabet))
    p = np.asarray(probs, dtype=np.float64).reshape(-1, fold.shape[0])
    return p @ fold, index


def one_hot(word: str, alphabet=DEFAULT_ALPHABET) -> np.ndarray:
    alphabet = tuple(alphabet)
    pos = {c: i for i, c in enumerate(alphabet)}
    out = np.zeros((len(word), len(alphabet)))
    for i, ch in enumerate(word):
        if ch not in pos:
            raise UnknownTargetChar(ch)
        out[i, pos[ch]] = 1.0
    return out


def _encode(word: str, index: dict) -> list[int]:
    try:
        return [index[c] for c in word.upper()]
    except KeyError as exc:
        raise UnknownTargetChar(exc.args[0]) from None


def weighted_edit_distance(probs, target: str, alphabet=DEFAULT_ALPHABET) -> float:
    p, index = fold_probs(probs, alphabet)
    codes = _encode(target, index)
    n, m = len(p), len(codes)
    dele = p.max(axis=1) if n else np.zeros(0)
    prev = [float(j) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [prev[0] + dele[i - 1]]
        for j in range(1, m + 1):
            cur.append(
                min(
                    prev[j] + dele[i - 1],
                    cur[j - 1] + 1.0,
                    prev[j - 1] + 1.0 - p[i - 1, codes[j - 1]],
                )
            )
        prev = cur
    return float(prev[m])


def _batch_costs(p: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Weighted distance from folded probs ``p`` (N, C') to K words of equal length M."""
    k, m = codes.shape
    n = len(p)
    dele = p.max(axis=1) if n else np.zeros(0)
    prev = np.broadcast_to(np.arange(m + 1, dtype=np.float64), (k, m + 1)).copy()
    for i in range(n):
        sub = 1.0 - p[i][codes]  # (K, M)
        cur = np.empty_like(prev)
        cur[:, 0] = prev[:, 0] + dele[i]
        np.minimum(prev[:, 1:] + dele[i], prev[:, :-1] + sub, out=cur[:, 1:])
        for j in range(1, m + 1):
            np.minimum(cur[:, j], cur[:, j - 1] + 1.0, out=cur[:, j])
        prev = cur
    return prev[:, m]


class LexiconIndex:
    """Lexicon words pre-encoded for vectorised cost evaluation.

    Words are held in sorted order so that ``np.argmin`` resolves cost ties
    lexicographically. Words with characters outside the alphabet get an
    infinite cost.
    """

    def __init__(self, words, alphabet=DEFAULT_ALPHABET):
        self.alphabet = tuple(alphabet)
        self.words = np.array(sorted(set(w.upper() for w in words)), dtype=object)
        _, index = _folding(self.alphabet)
        self._groups = []
        self._bad = []
        by_len: dict[int, tuple[list[int], list[list[int]]]] = {}
        for wi, w in enumerate(self.words):
            try:
                codes = _encode(w, index)
            except UnknownTargetChar:
                self._bad.append(wi)
                continue
            ids, rows = by_len.setdefault(len(codes), ([], []))
            ids.append(wi)
            rows.append(codes)
        for ids, rows in by_len.values():
            self._groups.append((np.array(ids), np.array(rows, dtype=np.intp)))

    def __len__(self):
        return len(self.words)

    def costs(self, probs=None, decoded: str | None = None) -> np.ndarray:
        """Cost of every word; unit edit distance on ``decoded`` if no probs are given."""
        if probs is None:
            probs = one_hot(decoded or "", self.alphabet)
        p, _ = fold_probs(probs, self.alphabet)
        out = np.full(len(self.words), np.inf)
        for ids, codes in self._groups:
            out[ids] = _batch_costs(p, codes)
        return out


@dataclass(frozen=True)
class MatchResult:
    original: str
    matched: str | None
    cost: float
    is_matched: bool

    @property
    def text(self) -> str:
        """Final transcription: the lexicon word if matched, else the raw decode."""
        return self.matched if self.is_matched else self.original


def choose(costs, words, decoded: str, reject_threshold: float = 0.5, mask=None) -> MatchResult:
    c = np.asarray(costs, dtype=np.float64)
    if mask is not None:
        c = np.where(mask, c, np.inf)
    if len(c) == 0 or not np.isfinite(c).any():
        return MatchResult(decoded, None, float("inf"), False)
    k = int(np.argmin(c))
    best, cost = str(words[k]), float(c[k])
    if cost > reject_threshold * len(best):
        return MatchResult(decoded, None, cost, False)
    return MatchResult(decoded, best, cost, True)


def match_lexicon(
    decoded: str,
    lex,
    probs=None,
    alphabet=DEFAULT_ALPHABET,
    reject_threshold: float = 0.5,
) -> MatchResult:
    """Closest lexicon word under the weighted distance.

    ``lex`` is a Lexicon, a word iterable or a prebuilt LexiconIndex. Ties
    go to the lexicographically smaller word. A best cost above
    ``reject_threshold`` per character of the best word leaves the decode
    unmatched.
    """
    index = lex if isinstance(lex, LexiconIndex) else LexiconIndex(lex, alphabet)
    if len(index) == 0:
        return MatchResult(decoded, None, float("inf"), False)
    return choose(index.costs(probs, decoded), index.words, decoded, reject_threshold)


def inflate_lexicon(base: Lexicon, pool: Lexicon, n: int, seed: int) -> Lexicon:
    """``base`` plus ``n`` words drawn without replacement from ``pool``.

    The draw is a prefix of one seeded permutation, so for a fixed seed a
    larger ``n`` always yields a superset.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n > len(pool):
        raise PoolTooSmall(f"asked for {n} words from a pool of {len(pool)}")
    perm = np.random.default_rng(seed).permutation(len(pool))[:n]
    extra = [pool.words[i] for i in perm]
    return Lexicon(tuple(base.words) + tuple(extra), LexiconKind.CUSTOM)
