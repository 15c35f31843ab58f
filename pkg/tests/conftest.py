import numpy as np
import pytest

from tagbeam.alphabet import Alphabet
from tagbeam.posteriorgram import Posteriorgram


@pytest.fixture
def alphabet():
    return Alphabet.default()


@pytest.fixture
def scheme(alphabet):
    return alphabet.tag_scheme


def tiny_alphabet(num_text_symbols):
    """Blank plus the first `num_text_symbols` letters; no tag scheme."""
    return Alphabet.from_text_symbols("ABCDE"[:num_text_symbols])


def random_pg(rng, num_frames, num_symbols, alphabet_hash=0, sharpness=1.0):
    """Random normalized posteriorgram: per-frame log-softmax of Gaussian scores."""
    scores = rng.normal(scale=sharpness, size=(num_frames, num_symbols))
    logp = scores - np.logaddexp.reduce(scores, axis=1, keepdims=True)
    return Posteriorgram(frames=logp, alphabet_hash=alphabet_hash)
