import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfspot.decode import assemble_words, decode_cost, decode_points, dense_decode, softmax
from cfspot.errors import ChannelMismatch, PointOutOfBounds
from cfspot.structures import CharPoint, DecoderParams, SpotSource, TextBox


def _random_params(rng, f, c, confidence=0.3):
    alphabet = tuple(chr(0x4E00 + i) for i in range(c))
    return DecoderParams(rng.standard_normal((f, c)), rng.standard_normal(c), alphabet, confidence)


def _pt(x, y):
    return CharPoint(x, y, SpotSource.PEAK, 1.0)


def test_hand_computed_softmax():
    params = DecoderParams(np.eye(2), np.zeros(2), ("a", "b"))
    f = np.array([[[1.0, 0.0]]])
    row = decode_points(f, [_pt(0, 0)], params)[0]
    e = math.e
    np.testing.assert_allclose(row, [e / (e + 1), 1 / (e + 1)], atol=1e-12)
    assert row[0] == pytest.approx(0.7311, abs=1e-4)


def test_zero_features_uniform():
    params = DecoderParams(np.ones((4, 7)), np.zeros(7), tuple("abcdefg"))
    probs = decode_points(np.zeros((3, 3, 4)), [(1, 2), (0, 0)], params)
    np.testing.assert_allclose(probs, 1 / 7)


def test_random_points_match_dense():
    rng = np.random.default_rng(0)
    params = _random_params(rng, 8, 20)
    f = rng.standard_normal((30, 25, 8))
    pts = [_pt(int(rng.integers(25)), int(rng.integers(30))) for _ in range(40)]
    dense = dense_decode(f, params)
    probs = decode_points(f, pts, params)
    expect = np.stack([dense[p.y, p.x] for p in pts])
    assert np.abs(probs - expect).max() <= 1e-6


def test_dense_1x1_equals_point():
    rng = np.random.default_rng(1)
    params = _random_params(rng, 5, 6)
    f = rng.standard_normal((1, 1, 5))
    np.testing.assert_allclose(dense_decode(f, params)[0, 0], decode_points(f, [(0, 0)], params)[0], atol=1e-12)


def test_dense_64x64_against_point_sampling():
    rng = np.random.default_rng(2)
    params = _random_params(rng, 8, 20)
    f = rng.standard_normal((64, 64, 8)).astype(np.float32)
    dense = dense_decode(f, params)
    xy = rng.integers(0, 64, size=(100, 2))
    np.testing.assert_allclose(decode_points(f, xy, params), dense[xy[:, 1], xy[:, 0]], atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-50, 50))
def test_softmax_shift_invariance(seed, c):
    logits = np.random.default_rng(seed).standard_normal((6, 9))
    np.testing.assert_allclose(softmax(logits + c), softmax(logits), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rows_are_stochastic(seed):
    rng = np.random.default_rng(seed)
    params = _random_params(rng, 6, 11)
    f = rng.standard_normal((5, 5, 6)) * 20
    probs = dense_decode(f, params)
    assert probs.min() >= 0
    np.testing.assert_allclose(probs.sum(axis=2), 1.0, atol=1e-5)


def test_extreme_logits_stable():
    params = DecoderParams(np.eye(3), np.zeros(3), tuple("abc"))
    probs = decode_points(np.array([[[1e4, -1e4, 0.0]]]), [(0, 0)], params)
    assert np.isfinite(probs).all() and probs[0, 0] == pytest.approx(1.0)


def test_errors():
    params = DecoderParams(np.eye(3), np.zeros(3), tuple("abc"))
    with pytest.raises(ChannelMismatch):
        decode_points(np.zeros((2, 2, 4)), [(0, 0)], params)
    with pytest.raises(ChannelMismatch):
        dense_decode(np.zeros((2, 2)), params)
    with pytest.raises(PointOutOfBounds):
        decode_points(np.zeros((2, 2, 3)), [(2, 0)], params)
    assert decode_points(np.zeros((2, 2, 3)), [], params).shape == (0, 3)


def test_decoder_params_validation():
    with pytest.raises(ValueError):
        DecoderParams(np.eye(3), np.zeros(2), tuple("abc"))
    with pytest.raises(ValueError):
        DecoderParams(np.eye(3), np.zeros(3), tuple("aab"))
    with pytest.raises(ValueError):
        DecoderParams(np.eye(3), np.zeros(3), tuple("ab"))


def test_cost_model_numbers():
    assert decode_cost(400, 400, 32, 94) == (481_280_000, 60_160_000)
    assert decode_cost(400, 400, 32, 2000).output_bytes == 1_280_000_000
    assert decode_cost(1, 1, 7, 5).macs == 35
    assert decode_cost(400, 400, 32, 94, n_points=50) == (50 * 32 * 94, 50 * 94 * 4)
    with pytest.raises(ValueError):
        decode_cost(0, 1, 1, 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 500), st.integers(1, 500), st.integers(1, 64), st.integers(1, 200), st.data())
def test_pointwise_never_costs_more(w, h, f, c, data):
    n = data.draw(st.integers(0, w * h))
    dense, point = decode_cost(w, h, f, c), decode_cost(w, h, f, c, n_points=n)
    assert point.macs <= dense.macs and point.output_bytes <= dense.output_bytes


def _onehot_probs(labels, alphabet, p=0.9):
    out = np.full((len(labels), len(alphabet)), (1 - p) / (len(alphabet) - 1))
    for i, ch in enumerate(labels):
        out[i, alphabet.index(ch)] = p
    return out


def test_assemble_sorts_by_x():
    alphabet = tuple("act")
    params = DecoderParams.identity(3, alphabet)
    pts = [_pt(9, 0), _pt(2, 0), _pt(5, 0)]
    probs = _onehot_probs("cat", alphabet)
    box = TextBox(polygon=[[0, 0], [10, 0], [10, 2], [0, 2]])
    (out,) = assemble_words([box], [pts], [probs], params)
    assert out.transcription == "atc"
    assert [p.x for p in out.points] == [2, 5, 9]


def test_assemble_ties_broken_by_y():
    alphabet = tuple("ab")
    params = DecoderParams.identity(2, alphabet)
    pts = [_pt(3, 5), _pt(3, 1)]
    box = TextBox(polygon=[[0, 0], [10, 0], [10, 9], [0, 9]])
    (out,) = assemble_words([box], [pts], [_onehot_probs("ab", alphabet)], params)
    assert out.transcription == "ba"


def test_unreadable_boxes_removed():
    alphabet = tuple("abcd")
    params = DecoderParams.identity(4, alphabet, confidence=0.5)
    box = TextBox(polygon=[[0, 0], [4, 0], [4, 4], [0, 4]])
    flat = np.full((2, 4), 0.25)
    assert assemble_words([box, box], [[_pt(1, 1), _pt(2, 2)], []], [flat, np.zeros((0, 4))], params) == []


def test_low_confidence_points_filtered():
    alphabet = tuple("abcd")
    params = DecoderParams.identity(4, alphabet, confidence=0.5)
    box = TextBox(polygon=[[0, 0], [4, 0], [4, 4], [0, 4]])
    probs = np.array([[0.9, 0.05, 0.03, 0.02], [0.25, 0.25, 0.25, 0.25], [0.1, 0.1, 0.1, 0.7]])
    (out,) = assemble_words([box], [[_pt(0, 0), _pt(1, 0), _pt(2, 0)]], [probs], params)
    assert out.transcription == "ad"
    assert out.char_probs.shape == (2, 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_point_order_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    alphabet = tuple("abcdefgh")
    params = DecoderParams.identity(8, alphabet)
    n = int(rng.integers(1, 9))
    xs = rng.choice(50, size=n, replace=False)
    pts = [_pt(int(x), int(rng.integers(5))) for x in xs]
    probs = _onehot_probs("".join(rng.choice(list(alphabet), size=n)), alphabet)
    box = TextBox(polygon=[[0, 0], [50, 0], [50, 5], [0, 5]])
    perm = rng.permutation(n)
    a = assemble_words([box], [pts], [probs], params)
    b = assemble_words([box], [[pts[i] for i in perm]], [probs[perm]], params)
    assert a[0].transcription == b[0].transcription
    assert all(w.transcription for w in a)
