"""Backoff n-gram language model: ARPA text I/O, scoring and a small estimator.

ARPA files store log10 values; they are converted to natural log on load so
that every score in the toolkit shares one base.  The estimator uses
interpolated absolute discounting with a single discount, which keeps built
models exactly normalized and hand-checkable; ARPA files produced by other
toolkits load the same way.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

LN10 = math.log(10.0)

SENTENCE_START = "<s>"
SENTENCE_END = "</s>"
UNK = "<unk>"

DEFAULT_OOV_FLOOR = math.log(1e-10)

# conventional ARPA placeholder probability for <s>, which is never predicted
_START_LOG10 = -99.0

_NGRAM_HEADER = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_HEADER = re.compile(r"^\\(\d+)-grams:$")

NGramTable = Dict[Tuple[str, ...], Tuple[float, float]]  # gram -> (logprob, backoff), natural log


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no
        self.message = message

    def __reduce__(self):
        return (ParseError, (self.line_no, self.message))


class CountMismatch(ValueError):
    """Declared n-gram count differs from the number of section entries."""


class MissingSection(ValueError):
    """A required ARPA section is absent."""


class EmptyCorpus(ValueError):
    """No sentences were supplied to the estimator."""


@dataclass
class NGramModel:
    """Backoff model: per-order tables of (log-prob, backoff weight) in natural log."""

    order: int
    tables: Dict[int, NGramTable]
    vocab: Set[str] = field(default_factory=set)

    def logprob(self, gram: Tuple[str, ...]) -> Optional[float]:
        entry = self.tables.get(len(gram), {}).get(gram)
        return None if entry is None else entry[0]

    def backoff(self, gram: Tuple[str, ...]) -> float:
        entry = self.tables.get(len(gram), {}).get(gram)
        return 0.0 if entry is None else entry[1]


def score_word(
    model: NGramModel,
    context: Sequence[str],
    word: str,
    floor: float = DEFAULT_OOV_FLOOR,
) -> float:
    """Natural-log probability of `word` after `context`, with standard backoff.

    Total function: unknown words fall back to the <unk> entry when present,
    otherwise to `floor`.
    """
    ctx = tuple(context)
    if model.order > 1:
        ctx = ctx[-(model.order - 1):]
    else:
        ctx = ()
    acc = 0.0
    while True:
        entry = model.tables.get(len(ctx) + 1, {}).get(ctx + (word,))
        if entry is not None:
            return acc + entry[0]
        if ctx:
            acc += model.backoff(ctx)
            ctx = ctx[1:]
        else:
            unk = model.tables.get(1, {}).get((UNK,))
            return acc + (unk[0] if unk is not None else floor)


def score_sequence(
    model: NGramModel, tokens: Sequence[str], floor: float = DEFAULT_OOV_FLOOR
) -> float:
    """Score a sentence: each token given its history, plus the end-of-sentence token."""
    context: Tuple[str, ...] = (SENTENCE_START,)
    total = 0.0
    for tok in tokens:
        total += score_word(model, context, tok, floor=floor)
        context = context + (tok,)
        if model.order > 1:
            context = context[-(model.order - 1):]
    return total + score_word(model, context, SENTENCE_END, floor=floor)


def load_arpa(path) -> NGramModel:
    """Parse an ARPA text file, converting log10 values to natural log."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    declared: Dict[int, int] = {}
    tables: Dict[int, NGramTable] = {}
    i = 0
    n = len(lines)
    while i < n and lines[i].strip() != "\\data\\":
        i += 1
    if i == n:
        raise MissingSection("no \\data\\ header found")
    i += 1
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        m = _NGRAM_HEADER.match(line)
        if m is None:
            break
        declared[int(m.group(1))] = int(m.group(2))
        i += 1
    if not declared:
        raise MissingSection("\\data\\ section declares no n-gram counts")

    saw_end = False
    current: Optional[int] = None
    while i < n:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "\\end\\":
            saw_end = True
            break
        m = _SECTION_HEADER.match(line)
        if m is not None:
            current = int(m.group(1))
            if current not in declared:
                raise ParseError(i, "section \\%d-grams: was not declared" % current)
            tables[current] = {}
            continue
        if current is None:
            raise ParseError(i, "entry outside any n-gram section: %r" % line)
        fields = line.split()
        if len(fields) == current + 1:
            backoff = 0.0
        elif len(fields) == current + 2:
            try:
                backoff = float(fields[-1]) * LN10
            except ValueError:
                raise ParseError(i, "bad backoff weight: %r" % fields[-1]) from None
        else:
            raise ParseError(i, "expected %d or %d fields, got %d"
                             % (current + 1, current + 2, len(fields)))
        try:
            logp = float(fields[0]) * LN10
        except ValueError:
            raise ParseError(i, "bad log probability: %r" % fields[0]) from None
        gram = tuple(fields[1:current + 1])
        if gram in tables[current]:
            raise ParseError(i, "duplicate %d-gram %r" % (current, " ".join(gram)))
        tables[current][gram] = (logp, backoff)

    if not saw_end:
        raise MissingSection("no \\end\\ marker found")
    for k, count in declared.items():
        if k not in tables:
            raise MissingSection("declared section \\%d-grams: is missing" % k)
        if len(tables[k]) != count:
            raise CountMismatch("order %d declares %d entries but has %d"
                                % (k, count, len(tables[k])))
    order = max(declared)
    for k in range(2, order + 1):
        lower = tables.get(k - 1, {})
        for gram in tables.get(k, {}):
            if gram[:-1] not in lower:
                raise ParseError(0, "%d-gram %r lacks its prefix in the %d-gram table"
                                 % (k, " ".join(gram), k - 1))
    vocab = {gram[0] for gram in tables.get(1, {})}
    return NGramModel(order=order, tables=tables, vocab=vocab)


def write_arpa(model: NGramModel, path) -> None:
    """Write the model as ARPA text (log10 values, entries sorted per order)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\\data\\\n")
        for k in range(1, model.order + 1):
            fh.write("ngram %d=%d\n" % (k, len(model.tables.get(k, {}))))
        for k in range(1, model.order + 1):
            fh.write("\n\\%d-grams:\n" % k)
            for gram in sorted(model.tables.get(k, {})):
                logp, backoff = model.tables[k][gram]
                line = "%.7f\t%s" % (logp / LN10, " ".join(gram))
                if k < model.order:
                    line += "\t%.7f" % (backoff / LN10)
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


def build_from_corpus(
    corpus: Iterable[Sequence[str]],
    order: int,
    discount: float = 0.4,
) -> NGramModel:
    """Estimate a model by interpolated absolute discounting.

    Every context distribution sums to one over the emittable vocabulary
    (all corpus tokens plus </s> and <unk>, excluding <s>): each observed
    count is discounted by `discount` and the freed mass is spread over the
    lower order, down to a uniform base distribution at the unigram level.
    """
    if order < 1:
        raise ValueError("order must be >= 1, got %d" % order)
    if not 0.0 < discount < 1.0:
        raise ValueError("discount must be in (0, 1), got %r" % discount)
    sentences = [list(s) for s in corpus]
    if not sentences:
        raise EmptyCorpus("corpus has no sentences")

    counts: Dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
    for sent in sentences:
        toks = [SENTENCE_START] + [str(w) for w in sent] + [SENTENCE_END]
        for k in range(1, order + 1):
            for i in range(len(toks) - k + 1):
                counts[k][tuple(toks[i:i + k])] += 1

    emit_vocab = sorted(
        {g[0] for g in counts[1]} - {SENTENCE_START} | {SENTENCE_END, UNK}
    )
    uniform = 1.0 / len(emit_vocab)

    # probabilities are built bottom-up in linear space, then stored as logs
    probs: Dict[int, Dict[Tuple[str, ...], float]] = {k: {} for k in range(1, order + 1)}
    backoffs: Dict[int, Dict[Tuple[str, ...], float]] = {k: {} for k in range(1, order)}

    total = sum(c for g, c in counts[1].items() if g != (SENTENCE_START,))
    observed = sum(1 for g in counts[1] if g != (SENTENCE_START,))
    reserve = discount * observed / total
    for word in emit_vocab:
        c = counts[1].get((word,), 0)
        probs[1][(word,)] = max(c - discount, 0.0) / total + reserve * uniform

    for k in range(2, order + 1):
        by_context: Dict[Tuple[str, ...], List[Tuple[str, int]]] = {}
        for gram, c in counts[k].items():
            by_context.setdefault(gram[:-1], []).append((gram[-1], c))
        for ctx in sorted(by_context):
            continuations = by_context[ctx]
            ctx_total = sum(c for _, c in continuations)
            spread = discount * len(continuations) / ctx_total
            backoffs[k - 1][ctx] = spread
            for word, c in continuations:
                lower = probs[k - 1][ctx[1:] + (word,)]
                probs[k][ctx + (word,)] = (c - discount) / ctx_total + spread * lower

    tables: Dict[int, NGramTable] = {}
    for k in range(1, order + 1):
        table: NGramTable = {}
        grams = sorted(probs[k])
        if k == 1:
            grams = sorted(set(grams) | {(SENTENCE_START,)})
        for gram in grams:
            if gram == (SENTENCE_START,):
                logp = _START_LOG10 * LN10
            else:
                logp = math.log(probs[k][gram])
            bo = backoffs.get(k, {}).get(gram)
            table[gram] = (logp, math.log(bo) if bo is not None else 0.0)
        tables[k] = table

    vocab = {gram[0] for gram in tables[1]}
    return NGramModel(order=order, tables=tables, vocab=vocab)
