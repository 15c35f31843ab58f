import math

import numpy as np
import pytest

from tagbeam.ctc import brute_force_best_labeling, ctc_log_prob
from tagbeam.decoder import (
    BatchItemError,
    DecodeConfig,
    decode_batch,
    prefix_beam_search,
)
from tagbeam.ngram_lm import load_arpa, score_sequence
from tagbeam.posteriorgram import Posteriorgram, ShapeMismatch, synth_generate

from conftest import random_pg, tiny_alphabet

RAW_CONFIG = dict(alpha=0.0, beta=0.0, lm=None)


def test_sharp_input_decodes_exactly(alphabet):
    pg = synth_generate("HI BOB", alphabet, 0.0, 2, seed=3)
    text, q = prefix_beam_search(pg, alphabet, DecodeConfig(**RAW_CONFIG))
    assert text == "HI BOB"
    assert q == pytest.approx(0.0, abs=1e-12)


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(55)
    config = DecodeConfig(beam_width=10**6, **RAW_CONFIG)
    for _ in range(15):
        v = int(rng.integers(2, 5))
        t = int(rng.integers(1, 7))
        alpha = tiny_alphabet(v - 1)
        pg = random_pg(rng, t, v)
        want_text, want_lp = brute_force_best_labeling(pg, alpha, max_len=t)
        got_text, got_q = prefix_beam_search(pg, alpha, config)
        assert got_text == want_text
        assert got_q == pytest.approx(want_lp, abs=1e-9)


def test_returned_q_is_ctc_log_prob_of_output():
    rng = np.random.default_rng(19)
    alpha = tiny_alphabet(3)
    pg = random_pg(rng, 6, 4)
    text, q = prefix_beam_search(pg, alpha, DecodeConfig(beam_width=10**6, **RAW_CONFIG))
    assert q == pytest.approx(ctc_log_prob(pg, alpha.encode(text)), abs=1e-9)


HELLO_ARPA = """\
\\data\\
ngram 1=3

\\1-grams:
-0.0457575\tHELLO
-6.0\tHELLA
-1.3\t</s>

\\end\\
"""


@pytest.fixture
def hello_lm(tmp_path):
    path = tmp_path / "hello.arpa"
    path.write_text(HELLO_ARPA)
    return load_arpa(path)


def ambiguous_hello_pg(alphabet):
    """Sharp frames H E L <blank> L, then a frame split between A and O."""
    v = len(alphabet)
    rows = []
    for sym in ["H", "E", "L", None, "L"]:
        row = np.full(v, -np.inf)
        idx = alphabet.blank_index if sym is None else alphabet.index(sym)
        row[idx] = 0.0
        rows.append(row)
    last = np.full(v, -np.inf)
    last[alphabet.index("A")] = math.log(0.52)
    last[alphabet.index("O")] = math.log(0.48)
    rows.append(last)
    return Posteriorgram(frames=np.asarray(rows), alphabet_hash=alphabet.checksum)


def test_lm_fusion_flips_ambiguous_word(alphabet, hello_lm):
    pg = ambiguous_hello_pg(alphabet)
    raw_text, _ = prefix_beam_search(
        pg, alphabet, DecodeConfig(alpha=0.0, beta=0.0, beam_width=64, lm=None))
    assert raw_text == "HELLA"  # acoustically preferred

    config = DecodeConfig(alpha=1.96, beta=0.0, beam_width=64, lm=hello_lm)
    fused_text, fused_q = prefix_beam_search(pg, alphabet, config)
    # independent check: Q of both candidates from their parts
    candidates = {}
    for word in ("HELLA", "HELLO"):
        candidates[word] = (ctc_log_prob(pg, alphabet.encode(word))
                            + config.alpha * score_sequence(hello_lm, [word]))
    assert candidates["HELLO"] > candidates["HELLA"]
    assert fused_text == "HELLO"
    assert fused_q == pytest.approx(candidates["HELLO"], abs=1e-9)


def test_alpha_zero_makes_lm_irrelevant(alphabet, hello_lm):
    rng = np.random.default_rng(7)
    pg = synth_generate("HELLO HELLA", alphabet, 0.2, 2, seed=11)
    with_lm = prefix_beam_search(
        pg, alphabet, DecodeConfig(alpha=0.0, beta=6.0, beam_width=32, lm=hello_lm))
    without = prefix_beam_search(
        pg, alphabet, DecodeConfig(alpha=0.0, beta=6.0, beam_width=32, lm=None))
    assert with_lm == without


def test_beam_growth_never_hurts_score():
    rng = np.random.default_rng(23)
    for _ in range(10):
        alpha = tiny_alphabet(3)
        pg = random_pg(rng, 5, 4)
        config = dict(alpha=0.0, beta=6.0, lm=None)
        scores = [prefix_beam_search(pg, alpha, DecodeConfig(beam_width=w, **config))[1]
                  for w in (1, 2, 4, 8, 16, 64, 4096)]
        for small, large in zip(scores, scores[1:]):
            assert large >= small - 1e-12


def test_word_bonus_prefers_nonempty():
    alpha = tiny_alphabet(1)
    frames = np.log(np.full((1, 2), 0.5))
    pg = Posteriorgram(frames=frames, alphabet_hash=0)
    text_bonus, _ = prefix_beam_search(pg, alpha, DecodeConfig(alpha=0.0, beta=6.0, lm=None))
    assert text_bonus == "A"
    text_plain, _ = prefix_beam_search(pg, alpha, DecodeConfig(alpha=0.0, beta=0.0, lm=None))
    assert text_plain == ""  # tie resolves to the lexicographically smaller prefix


def test_word_count_covers_final_partial_word(alphabet):
    pg = synth_generate("AB CD", alphabet, 0.0, 1, seed=1)
    _, q0 = prefix_beam_search(pg, alphabet, DecodeConfig(alpha=0.0, beta=0.0, lm=None))
    _, q1 = prefix_beam_search(pg, alphabet, DecodeConfig(alpha=0.0, beta=1.5, lm=None))
    assert q1 - q0 == pytest.approx(2 * 1.5)


def test_shape_mismatch(alphabet):
    rng = np.random.default_rng(0)
    pg = random_pg(rng, 3, 5)
    with pytest.raises(ShapeMismatch):
        prefix_beam_search(pg, alphabet, DecodeConfig(**RAW_CONFIG))


def test_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(beam_width=0)
    with pytest.raises(ValueError):
        DecodeConfig(alpha=float("inf"))


def batch_inputs(alphabet, n=6):
    texts = ["HI BOB", "|ANA] RAN", "TO $AGRA]", "", "ZEBRA CROSSING", "{TCS] AT DAWN"]
    return [synth_generate(t, alphabet, 0.25, 3, seed=100 + i)
            for i, t in enumerate(texts[:n])]


def test_batch_of_one_matches_single(alphabet):
    pg = batch_inputs(alphabet, 1)[0]
    config = DecodeConfig(alpha=0.0, beta=6.0, beam_width=16, lm=None)
    assert decode_batch([pg], alphabet, config) == [prefix_beam_search(pg, alphabet, config)]


def test_batch_permutation(alphabet):
    pgs = batch_inputs(alphabet)
    config = DecodeConfig(alpha=0.0, beta=6.0, beam_width=16, lm=None)
    out = decode_batch(pgs, alphabet, config)
    perm = [3, 0, 5, 1, 4, 2]
    out_perm = decode_batch([pgs[i] for i in perm], alphabet, config)
    assert out_perm == [out[i] for i in perm]


def test_batch_parallel_matches_serial(alphabet):
    pgs = batch_inputs(alphabet)
    config = DecodeConfig(alpha=0.0, beta=6.0, beam_width=16, lm=None)
    serial = decode_batch(pgs, alphabet, config, jobs=1)
    parallel = decode_batch(pgs, alphabet, config, jobs=3)
    assert serial == parallel


def test_batch_error_carries_index(alphabet):
    rng = np.random.default_rng(0)
    pgs = batch_inputs(alphabet, 2)
    pgs.insert(1, random_pg(rng, 3, 5))  # wrong symbol count
    with pytest.raises(BatchItemError) as info:
        decode_batch(pgs, alphabet, DecodeConfig(**RAW_CONFIG))
    assert info.value.index == 1
