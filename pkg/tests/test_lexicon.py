import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfspot.errors import PoolTooSmall, UnknownTargetChar
from cfspot.lexicon import (
    LexiconIndex,
    edit_distance,
    inflate_lexicon,
    match_lexicon,
    one_hot,
    weighted_edit_distance,
)
from cfspot.structures import DEFAULT_ALPHABET
from cfspot.tensorio import Lexicon

from oracles import bfs_edit_distance, weighted_distance_oracle

UPPER = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
short_ab = st.text(alphabet="ab", max_size=8)
words = st.text(alphabet="ABCDEFG", min_size=1, max_size=7)


def _random_probs(rng, n, c):
    p = rng.random((n, c)) ** 4
    return p / p.sum(axis=1, keepdims=True)


def test_classic_levenshtein():
    assert edit_distance("kitten", "sitting") == 3
    assert edit_distance("same", "same") == 0
    assert edit_distance("", "abc") == 3


@settings(max_examples=150, deadline=None)
@given(short_ab, short_ab)
def test_edit_distance_matches_bfs(a, b):
    assert edit_distance(a, b) == bfs_edit_distance(a, b)


@settings(max_examples=100, deadline=None)
@given(words, words, words)
def test_edit_distance_is_a_metric(a, b, c):
    assert edit_distance(a, b) == edit_distance(b, a)
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)
    assert (edit_distance(a, b) == 0) == (a == b)


def test_exact_one_hot_costs_zero():
    assert weighted_edit_distance(one_hot("HELLO"), "HELLO") == 0.0


@pytest.mark.parametrize("length, c", [(1, 2), (4, 26), (7, 10)])
def test_uniform_rows(length, c):
    alphabet = UPPER[:c]
    probs = np.full((length, c), 1.0 / c)
    target = "".join(alphabet[i % c] for i in range(length))
    assert weighted_edit_distance(probs, target, alphabet) == pytest.approx(length * (1 - 1 / c))


def test_random_5xC_against_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        probs = _random_probs(rng, 5, 26)
        target = "".join(rng.choice(UPPER, 4))
        assert abs(weighted_edit_distance(probs, target, UPPER) - weighted_distance_oracle(probs, target, UPPER)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="ABCDEFabcdef01", max_size=7), st.text(alphabet="ABCDEF01", max_size=7))
def test_one_hot_equals_unit_distance(decoded, target):
    # case-insensitive: the folded argmax string is what gets compared
    w = weighted_edit_distance(one_hot(decoded), target)
    assert w == edit_distance(decoded.upper(), target)


def test_case_variants_pool_probability():
    probs = np.zeros((1, len(DEFAULT_ALPHABET)))
    probs[0, DEFAULT_ALPHABET.index("a")] = 0.5
    probs[0, DEFAULT_ALPHABET.index("A")] = 0.4
    probs[0, DEFAULT_ALPHABET.index("B")] = 0.1
    assert weighted_edit_distance(probs, "A") == pytest.approx(0.1)
    assert weighted_edit_distance(probs, "b") == pytest.approx(0.9)


def test_unknown_target_char():
    with pytest.raises(UnknownTargetChar):
        weighted_edit_distance(one_hot("AB"), "A B")


def test_empty_sides():
    assert weighted_edit_distance(np.zeros((0, 94)), "ABC") == 3.0
    probs = _random_probs(np.random.default_rng(1), 3, 94)
    # only deletions remain, each costing the row's (case-folded) top probability
    assert weighted_edit_distance(probs, "") == pytest.approx(weighted_distance_oracle(probs, "", DEFAULT_ALPHABET), abs=1e-12)


def test_match_exact_word():
    lex = Lexicon(("HOUSE", "MOUSE", "HORSE"))
    m = match_lexicon("house", lex)
    assert m.is_matched and m.matched == "HOUSE" and m.cost == 0.0


def test_empty_lexicon_passes_through():
    m = match_lexicon("xyz", Lexicon(()))
    assert not m.is_matched and m.matched is None and m.text == "xyz"


def test_ties_resolve_lexicographically():
    # one substitution away from both
    m = match_lexicon("BAT", ["CAT", "BAG", "HAT"])
    assert m.matched == "BAG" and m.cost == 1.0


def test_rejection_threshold():
    m = match_lexicon("ZZZZ", ["ABCD"])
    assert not m.is_matched and m.text == "ZZZZ" and m.cost == 4.0
    assert match_lexicon("ZZZZ", ["ABCD"], reject_threshold=1.0).is_matched


def test_noisy_decode_recovers_strong_word():
    rng = np.random.default_rng(3)
    lex = sorted({"".join(rng.choice(UPPER, int(rng.integers(4, 9)))) for _ in range(100)})
    for word in lex[:30]:
        k = int(rng.integers(len(word)))
        wrong = UPPER[(UPPER.index(word[k]) + 1) % 26]
        noisy = word[:k] + wrong + word[k + 1 :]
        # brute force: nothing closer than one edit, ties broken alphabetically
        best = min(lex, key=lambda w: (edit_distance(noisy, w), w))
        m = match_lexicon(noisy, lex, probs=one_hot(noisy))
        assert m.matched == best and edit_distance(noisy, best) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_index_costs_match_scalar(seed):
    rng = np.random.default_rng(seed)
    lex = ["".join(rng.choice(UPPER[:6], int(rng.integers(1, 7)))) for _ in range(30)]
    probs = _random_probs(rng, int(rng.integers(0, 7)), 94)
    index = LexiconIndex(lex)
    costs = index.costs(probs)
    for w, c in zip(index.words, costs):
        assert c == pytest.approx(weighted_edit_distance(probs, w), abs=1e-12)


def test_index_marks_unencodable_words_infinite():
    index = LexiconIndex(["OK", "NO WAY"])
    costs = index.costs(decoded="OK")
    assert dict(zip(index.words, costs)) == {"NO WAY": np.inf, "OK": 0.0}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_superset_never_worsens(seed):
    rng = np.random.default_rng(seed)
    pool = Lexicon(tuple(sorted({"".join(rng.choice(UPPER[:5], int(rng.integers(2, 6)))) for _ in range(60)})))
    base = Lexicon(pool.words[:5])
    probs = _random_probs(rng, 4, 94)
    prev = np.inf
    for n in (0, 10, 20, len(pool) - 5):
        lex = inflate_lexicon(base, Lexicon(pool.words[5:]), min(n, len(pool) - 5), seed=7)
        cost = match_lexicon("", lex, probs=probs, reject_threshold=10).cost
        assert cost <= prev + 1e-12
        prev = cost


def test_inflate_lexicon():
    base = Lexicon(("ONE", "TWO"))
    pool = Lexicon(tuple(f"W{i:03d}" for i in range(50)) + ("ONE",))
    assert inflate_lexicon(base, pool, 0, seed=1).words == base.words
    a, b = inflate_lexicon(base, pool, 20, seed=1), inflate_lexicon(base, pool, 20, seed=1)
    assert a == b
    full = inflate_lexicon(base, pool, len(pool), seed=5)
    assert set(full.words) == set(base.words) | set(pool.words)
    assert len(full) == len(set(full.words))
    small, big = inflate_lexicon(base, pool, 10, seed=3), inflate_lexicon(base, pool, 30, seed=3)
    assert set(small.words) <= set(big.words)
    with pytest.raises(PoolTooSmall):
        inflate_lexicon(base, pool, len(pool) + 1, seed=0)


def test_all_pairs_small_alphabet_bruteforce():
    # every string up to length 3 over {A, B}
    strs = ["".join(p) for n in range(4) for p in itertools.product("AB", repeat=n)]
    for a in strs:
        for b in strs:
            assert edit_distance(a, b) == bfs_edit_distance(a, b)
