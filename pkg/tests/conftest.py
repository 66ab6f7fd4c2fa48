import numpy as np
import pytest

from cfspot.gtsynth import SceneWord, build_scene, divide_word_polygon, word_quad
from cfspot.structures import DEFAULT_ALPHABET

# (text, top-left x, top-left y, char width, char height, angle in degrees)
FIVE_WORDS = [
    ("HOTEL", 20, 20, 9, 14, 0),
    ("Open", 120, 30, 8, 12, 8),
    ("EXIT", 30, 90, 24, 36, 0),
    ("cafe24", 150, 110, 7, 11, -10),
    ("STOP", 40, 160, 10, 16, 4),
]


def _word_quad(x, y, cw, ch, n, angle):
    a = np.radians(angle)
    u = np.array([np.cos(a), np.sin(a)]) * cw * n
    v = np.array([-np.sin(a), np.cos(a)]) * ch
    p0 = np.array([x, y], float)
    return np.stack([p0, p0 + u, p0 + u + v, p0 + v])


def make_five_word_scene(response=None):
    index = {c: i for i, c in enumerate(DEFAULT_ALPHABET)}
    words = []
    for wid, (text, x, y, cw, ch, angle) in enumerate(FIVE_WORDS):
        q = _word_quad(x, y, cw, ch, len(text), angle)
        chars = divide_word_polygon(q, len(text), [index[c] for c in text], word_id=wid)
        words.append(SceneWord(text, word_quad(q), chars))
    return build_scene(words, 240, 200, response)


@pytest.fixture
def five_word_scene():
    return make_five_word_scene()
