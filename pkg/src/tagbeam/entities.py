"""Entity span extraction from tagged transcripts.

Decoded transcripts can carry malformed markup: a start symbol with no end,
an end with no start, or a new start while a span is open.  Lenient parsing
drops each such incomplete span and counts it; strict parsing raises.
Duplicate (category, surface) pairs within one utterance collapse to a
single set entry.
"""

from dataclasses import dataclass
from typing import List, Set, Tuple

from .alphabet import HalfLabeled, TagScheme, strip_tags


@dataclass(frozen=True)
class EntitySpan:
    """One complete entity: category, surface text and offsets into the stripped text."""

    category: str
    surface: str
    start_offset: int
    end_offset: int


# (category, raw start incl. start symbol, raw end incl. end symbol,
#  stripped start, stripped end)
_RawSpan = Tuple[str, int, int, int, int]


def scan_spans(text: str, scheme: TagScheme) -> Tuple[List[_RawSpan], int, List[int]]:
    """Single pass over `text` collecting complete spans and incomplete-span drops.

    Returns (complete spans with raw and stripped offsets, dropped count,
    raw positions of the tag symbols that began each dropped span).
    """
    starts = {sym: cat for cat, sym in scheme.start_symbols.items()}
    end = scheme.end_symbol
    complete: List[_RawSpan] = []
    drop_positions: List[int] = []
    open_cat = None
    open_raw = open_strip = 0
    strip_pos = 0
    for i, ch in enumerate(text):
        if ch in starts:
            if open_cat is not None:
                drop_positions.append(open_raw)
            open_cat = starts[ch]
            open_raw = i
            open_strip = strip_pos
        elif ch == end:
            if open_cat is None:
                drop_positions.append(i)
            else:
                complete.append((open_cat, open_raw, i + 1, open_strip, strip_pos))
                open_cat = None
        else:
            strip_pos += 1
    if open_cat is not None:
        drop_positions.append(open_raw)
    return complete, len(drop_positions), drop_positions


def parse_tagged(
    text: str, scheme: TagScheme, mode: str = "lenient"
) -> Tuple[List[EntitySpan], int]:
    """Extract entity spans; returns (spans in order, number of dropped spans).

    mode "lenient" drops incomplete spans (and spans whose surface is blank)
    and counts them; mode "strict" raises HalfLabeled on the first one.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError("mode must be 'strict' or 'lenient', got %r" % mode)
    stripped = strip_tags(text, scheme)
    complete, dropped, positions = scan_spans(text, scheme)
    spans: List[EntitySpan] = []
    for cat, raw_start, _raw_end, strip_start, strip_end in complete:
        surface = stripped[strip_start:strip_end]
        if not surface.strip():
            dropped += 1
            positions.append(raw_start)
            continue
        spans.append(EntitySpan(cat, surface, strip_start, strip_end))
    if mode == "strict" and dropped:
        raise HalfLabeled(min(positions))
    return spans, dropped


def to_entity_set(spans: List[EntitySpan]) -> Set[Tuple[str, str]]:
    """Collapse spans to a set of (category, surface) pairs."""
    return {(span.category, span.surface) for span in spans}
