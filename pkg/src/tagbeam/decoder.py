"""CTC prefix beam search with n-gram shallow fusion and a word-count bonus.

The search keeps, per label prefix, separate log-masses for alignment paths
ending in blank and in the prefix's final symbol, and ranks hypotheses by

    Q(y) = log p_ctc(y) + alpha * log p_lm(y) + beta * wc(y)

The LM term covers words completed so far (a word completes when a space is
emitted, or at the end of the utterance, where the final token and the
sentence-end symbol are scored); wc counts completed whitespace-delimited
tokens.  Tag symbols live inside tokens and never terminate a word.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .alphabet import Alphabet
from .ngram_lm import DEFAULT_OOV_FLOOR, NGramModel, SENTENCE_END, SENTENCE_START, score_word
from .posteriorgram import Posteriorgram, ShapeMismatch

NEG_INF = float("-inf")


class BatchItemError(RuntimeError):
    """Wraps a per-utterance decode failure with its batch index."""

    def __init__(self, index: int, cause: BaseException):
        super().__init__("batch item %d: %s" % (index, cause))
        self.index = index
        self.cause = cause

    def __reduce__(self):
        return (BatchItemError, (self.index, self.cause))


def _log_add(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass
class DecodeConfig:
    """Beam search weights; the defaults are the tuned operating point."""

    alpha: float = 1.96
    beta: float = 6.0
    beam_width: int = 1024
    lm: Optional[NGramModel] = None
    oov_floor: float = DEFAULT_OOV_FLOOR

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1, got %d" % self.beam_width)
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")


@dataclass
class TokenPolicy:
    """Word-segmentation override used by class-token decoding.

    A character in `span_start_chars` opens a span and `span_end_char`
    closes it; spaces inside an open span do not complete a word, so a
    multi-word span reaches the LM as a single token.  `map_token` turns a
    completed token into its LM form plus an additive score bonus.
    """

    span_start_chars: FrozenSet[str]
    span_end_char: str
    map_token: Callable[[str], Tuple[str, float]]


@dataclass(slots=True)
class BeamHypothesis:
    """Search state for one label prefix."""

    prefix: Tuple[int, ...]
    p_blank: float = NEG_INF
    p_nonblank: float = NEG_INF
    lm_score: float = 0.0
    word_count: int = 0
    # word-level state, fully determined by the prefix: partial token,
    # LM context, open-span flag and accumulated token bonus
    buf: str = ""
    context: Tuple[str, ...] = (SENTENCE_START,)
    span_open: bool = False
    bonus: float = 0.0

    def total(self) -> float:
        return _log_add(self.p_blank, self.p_nonblank)


def _complete_token(hyp: BeamHypothesis, config: DecodeConfig,
                    policy: Optional[TokenPolicy]) -> None:
    token = hyp.buf
    if policy is not None:
        lm_token, bonus = policy.map_token(token)
        hyp.bonus += bonus
    else:
        lm_token = token
    lm = config.lm
    if lm is not None:
        hyp.lm_score += score_word(lm, hyp.context, lm_token, floor=config.oov_floor)
        if lm.order > 1:
            hyp.context = (hyp.context + (lm_token,))[-(lm.order - 1):]
        else:
            hyp.context = ()
    hyp.word_count += 1
    hyp.buf = ""


def _child(parent: BeamHypothesis, prefix: Tuple[int, ...], char: str,
           config: DecodeConfig, policy: Optional[TokenPolicy]) -> BeamHypothesis:
    hyp = BeamHypothesis(
        prefix=prefix,
        lm_score=parent.lm_score,
        word_count=parent.word_count,
        buf=parent.buf,
        context=parent.context,
        span_open=parent.span_open,
        bonus=parent.bonus,
    )
    if policy is None:
        if char == " ":
            if hyp.buf:
                _complete_token(hyp, config, policy)
        else:
            hyp.buf += char
    else:
        if char == " " and not hyp.span_open:
            if hyp.buf:
                _complete_token(hyp, config, policy)
        else:
            if char in policy.span_start_chars:
                hyp.span_open = True
            elif char == policy.span_end_char:
                hyp.span_open = False
            hyp.buf += char
    return hyp


def _carry(parent: BeamHypothesis) -> BeamHypothesis:
    return BeamHypothesis(
        prefix=parent.prefix,
        lm_score=parent.lm_score,
        word_count=parent.word_count,
        buf=parent.buf,
        context=parent.context,
        span_open=parent.span_open,
        bonus=parent.bonus,
    )


def _running_q(hyp: BeamHypothesis, config: DecodeConfig) -> float:
    return (hyp.total() + config.alpha * hyp.lm_score
            + config.beta * hyp.word_count + hyp.bonus)


def _final_q(hyp: BeamHypothesis, config: DecodeConfig,
             policy: Optional[TokenPolicy]) -> float:
    tail = _carry(hyp)
    if tail.buf:
        _complete_token(tail, config, policy)
    lm = config.lm
    if lm is not None:
        tail.lm_score += score_word(lm, tail.context, SENTENCE_END, floor=config.oov_floor)
    return (hyp.total() + config.alpha * tail.lm_score
            + config.beta * tail.word_count + tail.bonus)


def prefix_beam_search(
    pg: Posteriorgram,
    alphabet: Alphabet,
    config: DecodeConfig,
    token_policy: Optional[TokenPolicy] = None,
) -> Tuple[str, float]:
    """Decode one posteriorgram; returns the best transcript and its Q score.

    Per frame, each surviving prefix is extended with blank, with a repeat
    of its final symbol, and with every other symbol; prefixes are merged by
    exact label-sequence equality and pruned to `config.beam_width` by the
    running Q.  Ties break toward the lexicographically smaller prefix.
    """
    frames = pg.frames
    if frames.ndim != 2 or frames.shape[1] != len(alphabet):
        raise ShapeMismatch(
            "posteriorgram has %s symbols but the alphabet has %d"
            % (frames.shape[1] if frames.ndim == 2 else "?", len(alphabet))
        )
    blank = alphabet.blank_index
    t_max, v = frames.shape
    chars = [alphabet.symbols[i] for i in range(v)]

    root = BeamHypothesis(prefix=())
    root.p_blank = 0.0
    beams: Dict[Tuple[int, ...], BeamHypothesis] = {(): root}

    for t in range(t_max):
        row = frames[t].tolist()
        lp_blank = row[blank]
        nxt: Dict[Tuple[int, ...], BeamHypothesis] = {}
        for prefix, hyp in beams.items():
            p_total = _log_add(hyp.p_blank, hyp.p_nonblank)
            last = prefix[-1] if prefix else -1

            cur = nxt.get(prefix)
            if cur is None:
                cur = _carry(hyp)
                nxt[prefix] = cur
            if lp_blank != NEG_INF:
                cur.p_blank = _log_add(cur.p_blank, p_total + lp_blank)
            if prefix and row[last] != NEG_INF and hyp.p_nonblank != NEG_INF:
                # repeated emission collapses onto the existing prefix
                cur.p_nonblank = _log_add(cur.p_nonblank, hyp.p_nonblank + row[last])

            for c in range(v):
                if c == blank:
                    continue
                lp_c = row[c]
                if lp_c == NEG_INF:
                    continue
                base = hyp.p_blank if c == last else p_total
                if base == NEG_INF:
                    continue
                ext = prefix + (c,)
                child = nxt.get(ext)
                if child is None:
                    child = _child(hyp, ext, chars[c], config, token_policy)
                    nxt[ext] = child
                child.p_nonblank = _log_add(child.p_nonblank, base + lp_c)

        if len(nxt) > config.beam_width:
            ranked = sorted(nxt.items(),
                            key=lambda kv: (-_running_q(kv[1], config), kv[0]))
            nxt = dict(ranked[:config.beam_width])
        beams = nxt

    best_prefix: Optional[Tuple[int, ...]] = None
    best_q = NEG_INF
    for prefix, hyp in beams.items():
        q = _final_q(hyp, config, token_policy)
        if q > best_q or (q == best_q and (best_prefix is None or prefix < best_prefix)):
            best_q = q
            best_prefix = prefix
    assert best_prefix is not None
    return alphabet.decode(best_prefix), best_q


def decode_batch(
    pgs: Sequence[Posteriorgram],
    alphabet: Alphabet,
    config: DecodeConfig,
    jobs: int = 1,
    token_policy: Optional[TokenPolicy] = None,
) -> List[Tuple[str, float]]:
    """Decode utterances independently; output order follows input order.

    With jobs > 1 the utterances are spread over worker processes; results
    are identical to a serial run.  Failures carry the item index.
    """
    if jobs <= 1 or len(pgs) <= 1:
        out = []
        for i, pg in enumerate(pgs):
            try:
                out.append(prefix_beam_search(pg, alphabet, config, token_policy))
            except Exception as exc:
                raise BatchItemError(i, exc) from exc
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(prefix_beam_search, pg, alphabet, config, token_policy)
                   for pg in pgs]
        out = []
        for i, fut in enumerate(futures):
            exc = fut.exception()
            if exc is not None:
                raise BatchItemError(i, exc) from exc
            out.append(fut.result())
    return out
