"""CTC probability, loss gradient, greedy decoding and an exhaustive oracle.

All recursions run in log space over the blank-augmented label sequence
``blank l1 blank l2 ... blank``, so sequences of thousands of frames do not
underflow.  The gradient is taken with respect to the log-probability
entries of the posteriorgram, which is also what the finite-difference
checks perturb.
"""

import itertools
from typing import List, Sequence, Tuple

import numpy as np

from .alphabet import Alphabet
from .posteriorgram import Posteriorgram

NEG_INF = -np.inf

# a sequence of alphabet indices with no blanks
LabelSequence = Sequence[int]


class InvalidLabel(ValueError):
    """Label contains the blank index or an index outside the alphabet."""


class InfeasibleLabel(ValueError):
    """The label cannot be aligned to the available frames."""


class InstanceTooLarge(ValueError):
    """Exhaustive enumeration was asked for an instance beyond its guard."""


def _check_label(label: LabelSequence, num_symbols: int, blank: int) -> None:
    for idx in label:
        if not 0 <= idx < num_symbols:
            raise InvalidLabel("label index %d out of range" % idx)
        if idx == blank:
            raise InvalidLabel("label contains the blank index %d" % blank)


def _expanded(label: LabelSequence, blank: int) -> np.ndarray:
    exp = np.full(2 * len(label) + 1, blank, dtype=np.int64)
    exp[1::2] = label
    return exp


def _skip_mask(exp: np.ndarray, blank: int) -> np.ndarray:
    mask = np.zeros(len(exp), dtype=bool)
    if len(exp) > 2:
        mask[2:] = (exp[2:] != blank) & (exp[2:] != exp[:-2])
    return mask


def _forward(lp: np.ndarray, exp: np.ndarray, skip: np.ndarray) -> np.ndarray:
    """Alpha trellis: alpha[t, s] sums paths reaching state s after frame t."""
    t_max, s_max = lp.shape[0], len(exp)
    alpha = np.full((t_max, s_max), NEG_INF)
    alpha[0, 0] = lp[0, exp[0]]
    if s_max > 1:
        alpha[0, 1] = lp[0, exp[1]]
    for t in range(1, t_max):
        prev = alpha[t - 1]
        stay = prev
        step = np.concatenate(([NEG_INF], prev[:-1]))
        jump = np.concatenate(([NEG_INF, NEG_INF], prev[:-2]))[:s_max]
        jump = np.where(skip, jump, NEG_INF)
        alpha[t] = np.logaddexp(np.logaddexp(stay, step), jump) + lp[t, exp]
    return alpha


def _backward(lp: np.ndarray, exp: np.ndarray, skip: np.ndarray) -> np.ndarray:
    """Beta trellis: beta[t, s] sums path suffixes after frame t (emission at t excluded)."""
    t_max, s_max = lp.shape[0], len(exp)
    beta = np.full((t_max, s_max), NEG_INF)
    beta[t_max - 1, s_max - 1] = 0.0
    if s_max > 1:
        beta[t_max - 1, s_max - 2] = 0.0
    jump_ok = np.concatenate((skip[2:], [False, False]))[:s_max]
    for t in range(t_max - 2, -1, -1):
        nxt = beta[t + 1] + lp[t + 1, exp]
        stay = nxt
        step = np.concatenate((nxt[1:], [NEG_INF]))
        jump = np.concatenate((nxt[2:], [NEG_INF, NEG_INF]))[:s_max]
        jump = np.where(jump_ok, jump, NEG_INF)
        beta[t] = np.logaddexp(np.logaddexp(stay, step), jump)
    return beta


def _total_from_alpha(alpha: np.ndarray) -> float:
    last = alpha[-1]
    if len(last) == 1:
        return float(last[0])
    return float(np.logaddexp(last[-1], last[-2]))


def ctc_log_prob(pg: Posteriorgram, label: LabelSequence, blank: int = 0) -> float:
    """Natural-log probability of `label`, summed over all collapsing alignments.

    Returns -inf when the label cannot fit in the available frames (it needs
    ``len(label)`` frames plus one separator per adjacent repeat).
    """
    lp = pg.frames
    _check_label(label, lp.shape[1], blank)
    exp = _expanded(label, blank)
    alpha = _forward(lp, exp, _skip_mask(exp, blank))
    return _total_from_alpha(alpha)


def ctc_loss_and_grad(
    pg: Posteriorgram, label: LabelSequence, blank: int = 0
) -> Tuple[float, np.ndarray]:
    """Negative log-probability of `label` and its gradient.

    The gradient is d(loss)/d(log p[t, v]), computed from the
    forward-backward state posteriors.  Raises InfeasibleLabel when the
    label has no alignment.
    """
    lp = pg.frames
    _check_label(label, lp.shape[1], blank)
    exp = _expanded(label, blank)
    skip = _skip_mask(exp, blank)
    alpha = _forward(lp, exp, skip)
    total = _total_from_alpha(alpha)
    if total == NEG_INF:
        raise InfeasibleLabel(
            "label of length %d cannot align to %d frames" % (len(label), lp.shape[0])
        )
    beta = _backward(lp, exp, skip)
    gamma = np.exp(alpha + beta - total)
    grad = np.zeros_like(lp)
    for s, sym in enumerate(exp):
        grad[:, sym] -= gamma[:, s]
    return -total, grad


def greedy_decode(pg: Posteriorgram, alphabet: Alphabet) -> str:
    """Frame-wise argmax, collapse repeats, drop blanks.  Ties go to the lowest index."""
    ids = np.argmax(pg.frames, axis=1)
    out: List[int] = []
    prev = -1
    for idx in ids:
        if idx != prev and idx != alphabet.blank_index:
            out.append(int(idx))
        prev = idx
    return alphabet.decode(out)


def brute_force_best_labeling(
    pg: Posteriorgram, alphabet: Alphabet, max_len: int
) -> Tuple[str, float]:
    """Argmax of ctc_log_prob over every label sequence of length <= min(max_len, T).

    Exhaustive test oracle; guarded to V <= 6 and T <= 8.  Ties break toward
    the lexicographically smallest index sequence (the empty one first).
    """
    t_max, v = pg.frames.shape
    if v > 6 or t_max > 8:
        raise InstanceTooLarge("guard is V <= 6 and T <= 8, got V=%d T=%d" % (v, t_max))
    blank = alphabet.blank_index
    symbols = [i for i in range(v) if i != blank]
    best_seq: Tuple[int, ...] = ()
    best_lp = ctc_log_prob(pg, (), blank=blank)
    for length in range(1, min(max_len, t_max) + 1):
        for seq in itertools.product(symbols, repeat=length):
            lp = ctc_log_prob(pg, seq, blank=blank)
            if lp > best_lp or (lp == best_lp and seq < best_seq):
                best_lp, best_seq = lp, seq
    return alphabet.decode(best_seq), best_lp
