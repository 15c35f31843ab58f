"""Entity P/R/F1 and word error rate.

Entity scoring pools exact-match counts over utterances: both sides are
uppercased, parsed leniently (incomplete spans are dropped, not charged)
and collapsed to (category, surface) sets per utterance.  Micro metrics
come from counts pooled across categories; macro is the unweighted mean of
the per-category metrics.  WER strips tag symbols before tokenizing.
"""

import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .alphabet import TagScheme, strip_tags
from .entities import parse_tagged, to_entity_set


class LengthMismatch(ValueError):
    """Reference and hypothesis lists differ in length."""


def _prf(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class EvalReport:
    per_category: Dict[str, Dict[str, float]]
    micro: Dict[str, float]
    macro: Dict[str, float]
    utterances: int
    dropped_hyp_tags: int
    dropped_ref_tags: int

    def to_json_dict(self) -> dict:
        return {
            "per_category": self.per_category,
            "micro": self.micro,
            "macro": self.macro,
            "utterances": self.utterances,
            "dropped_hyp_tags": self.dropped_hyp_tags,
            "dropped_ref_tags": self.dropped_ref_tags,
        }


def evaluate_ner(
    refs: Sequence[str], hyps: Sequence[str], scheme: TagScheme
) -> EvalReport:
    """Score hypothesis transcripts against references, entity by entity."""
    if len(refs) != len(hyps):
        raise LengthMismatch("got %d references but %d hypotheses" % (len(refs), len(hyps)))
    categories = list(scheme.start_symbols)
    counts = {cat: {"tp": 0, "fp": 0, "fn": 0} for cat in categories}
    dropped_ref = dropped_hyp = 0
    for ref, hyp in zip(refs, hyps):
        ref_spans, ref_drop = parse_tagged(ref.upper(), scheme, "lenient")
        hyp_spans, hyp_drop = parse_tagged(hyp.upper(), scheme, "lenient")
        dropped_ref += ref_drop
        dropped_hyp += hyp_drop
        ref_set = to_entity_set(ref_spans)
        hyp_set = to_entity_set(hyp_spans)
        for cat in categories:
            r = {s for c, s in ref_set if c == cat}
            h = {s for c, s in hyp_set if c == cat}
            counts[cat]["tp"] += len(r & h)
            counts[cat]["fp"] += len(h - r)
            counts[cat]["fn"] += len(r - h)

    per_category: Dict[str, Dict[str, float]] = {}
    for cat in categories:
        tp, fp, fn = counts[cat]["tp"], counts[cat]["fp"], counts[cat]["fn"]
        p, r, f1 = _prf(tp, fp, fn)
        per_category[cat] = {"tp": tp, "fp": fp, "fn": fn,
                             "precision": p, "recall": r, "f1": f1}
    tp = sum(counts[c]["tp"] for c in categories)
    fp = sum(counts[c]["fp"] for c in categories)
    fn = sum(counts[c]["fn"] for c in categories)
    mp, mr, mf = _prf(tp, fp, fn)
    micro = {"precision": mp, "recall": mr, "f1": mf}
    n = len(categories)
    macro = {
        "precision": sum(per_category[c]["precision"] for c in categories) / n,
        "recall": sum(per_category[c]["recall"] for c in categories) / n,
        "f1": sum(per_category[c]["f1"] for c in categories) / n,
    }
    return EvalReport(
        per_category=per_category,
        micro=micro,
        macro=macro,
        utterances=len(refs),
        dropped_hyp_tags=dropped_hyp,
        dropped_ref_tags=dropped_ref,
    )


_CATEGORY_LABELS = {"PER": "Person", "LOC": "Location", "ORG": "Organization"}


def format_report_table(report: EvalReport) -> str:
    """Fixed-width Category / Precision / Recall / F1 table with micro and macro rows."""
    rows = []
    for cat, stats in report.per_category.items():
        rows.append((_CATEGORY_LABELS.get(cat, cat), stats))
    rows.append(("Micro average", report.micro))
    rows.append(("Macro average", report.macro))
    lines = ["%-16s %9s %9s %9s" % ("Category", "Precision", "Recall", "F1")]
    for label, stats in rows:
        lines.append("%-16s %9.4f %9.4f %9.4f"
                     % (label, stats["precision"], stats["recall"], stats["f1"]))
    return "\n".join(lines)


def edit_distance(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> int:
    """Levenshtein distance over tokens with unit costs."""
    if not ref_tokens:
        return len(hyp_tokens)
    if not hyp_tokens:
        return len(ref_tokens)
    prev = list(range(len(hyp_tokens) + 1))
    for i, r in enumerate(ref_tokens, start=1):
        cur = [i] + [0] * len(hyp_tokens)
        for j, h in enumerate(hyp_tokens, start=1):
            cur[j] = min(prev[j] + 1,
                         cur[j - 1] + 1,
                         prev[j - 1] + (0 if r == h else 1))
        prev = cur
    return prev[-1]


def _tokens(text: str, scheme: TagScheme) -> List[str]:
    return strip_tags(text, scheme).upper().split()


def wer(ref: str, hyp: str, scheme: TagScheme) -> float:
    """Word error rate of one pair: token edit distance over reference length.

    An empty reference against a non-empty hypothesis is reported with
    denominator one (i.e. the raw insertion count) and flagged with a warning.
    """
    ref_tokens = _tokens(ref, scheme)
    hyp_tokens = _tokens(hyp, scheme)
    if not ref_tokens:
        if not hyp_tokens:
            return 0.0
        warnings.warn("empty reference: reporting insertions over denominator 1")
        return float(len(hyp_tokens))
    return edit_distance(ref_tokens, hyp_tokens) / len(ref_tokens)


def wer_corpus(refs: Sequence[str], hyps: Sequence[str], scheme: TagScheme) -> float:
    """Pooled word error rate: summed edit distances over summed reference lengths."""
    if len(refs) != len(hyps):
        raise LengthMismatch("got %d references but %d hypotheses" % (len(refs), len(hyps)))
    distance = 0
    length = 0
    for ref, hyp in zip(refs, hyps):
        ref_tokens = _tokens(ref, scheme)
        hyp_tokens = _tokens(hyp, scheme)
        distance += edit_distance(ref_tokens, hyp_tokens)
        length += len(ref_tokens)
    if length == 0:
        if distance == 0:
            return 0.0
        warnings.warn("empty reference corpus: reporting insertions over denominator 1")
        return float(distance)
    return distance / length
