"""Post-processing for context-free scene text spotting.

Heat maps and a feature map go in; detected words with transcriptions come
out. Ground-truth synthesis, losses, evaluation and a latency harness sit
alongside the pipeline.
"""

from .config import DEFAULT_CONFIG, SpotConfig
from .pipeline import spot
from .structures import DEFAULT_ALPHABET, CharPoint, DecoderParams, SpotSource, TextBox

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ALPHABET",
    "DEFAULT_CONFIG",
    "CharPoint",
    "DecoderParams",
    "SpotConfig",
    "SpotSource",
    "TextBox",
    "spot",
]
