"""Class-token handling for out-of-vocabulary entity words.

Replacing entity surfaces with per-category class tokens (``<PER>`` etc.)
before LM training removes entity names from the OOV set: the class token
is always in vocabulary, so decoding can lean on the LM without penalizing
unseen names.  Decoding with such an LM scores any completed token that
forms a complete entity span as its class token instead of its surface, and
can add a bonus when the surface appears in a name dictionary.
"""

import json
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from .alphabet import Alphabet, TagScheme, strip_tags
from .decoder import DecodeConfig, TokenPolicy, prefix_beam_search
from .entities import parse_tagged, scan_spans
from .posteriorgram import Posteriorgram

DEFAULT_CLASS_LITERALS = {"PER": "<PER>", "LOC": "<LOC>", "ORG": "<ORG>"}
DEFAULT_GAMMA = math.log(2.0)

_TOKEN = re.compile(r"\S+")


@dataclass
class OovStats:
    total_words: int
    oov_words: int
    oov_entity_words: int
    oov_rate: float
    entity_share_of_oov: float

    def to_json_dict(self) -> dict:
        return {
            "total_words": self.total_words,
            "oov_words": self.oov_words,
            "oov_entity_words": self.oov_entity_words,
            "oov_rate": self.oov_rate,
            "entity_share_of_oov": self.entity_share_of_oov,
        }


def replace_spans(
    text: str,
    scheme: TagScheme,
    categories: Sequence[str],
    literals: Dict[str, str] = DEFAULT_CLASS_LITERALS,
) -> Tuple[str, List[Tuple[str, str]]]:
    """Replace each complete span of a selected category with its class literal.

    Returns the rewritten text plus (category, surface) for every complete
    span found, replaced or not.  Incomplete markup is left untouched.
    """
    complete, _, _ = scan_spans(text, scheme)
    selected = set(categories)
    spans: List[Tuple[str, str]] = []
    out = []
    pos = 0
    for cat, raw_start, raw_end, _s, _e in complete:
        surface = text[raw_start + 1:raw_end - 1]
        spans.append((cat, surface))
        if cat in selected:
            out.append(text[pos:raw_start])
            out.append(literals[cat])
            pos = raw_end
    out.append(text[pos:])
    return "".join(out), spans


def transform_corpus(
    tagged_corpus: Iterable[str],
    scheme: TagScheme,
    categories: Sequence[str] = ("PER",),
    literals: Dict[str, str] = DEFAULT_CLASS_LITERALS,
) -> List[str]:
    """Rewrite every complete entity span of the selected categories to a class token."""
    return [replace_spans(line, scheme, categories, literals)[0] for line in tagged_corpus]


def oov_stats(
    train_vocab: Set[str], eval_corpus: Iterable[str], scheme: TagScheme
) -> OovStats:
    """Count OOV tokens in an evaluation corpus, split by entity membership.

    Tokens are the whitespace tokens of the tag-stripped evaluation text and
    are compared to `train_vocab` exactly.  An OOV token counts as an entity
    word when its character range intersects a parsed span.
    """
    total = oov = oov_entity = 0
    for line in eval_corpus:
        stripped = strip_tags(line, scheme)
        spans, _ = parse_tagged(line, scheme, "lenient")
        for match in _TOKEN.finditer(stripped):
            total += 1
            if match.group(0) in train_vocab:
                continue
            oov += 1
            a, b = match.span()
            if any(s.start_offset < b and a < s.end_offset for s in spans):
                oov_entity += 1
    return OovStats(
        total_words=total,
        oov_words=oov,
        oov_entity_words=oov_entity,
        oov_rate=oov / total if total else 0.0,
        entity_share_of_oov=oov_entity / oov if oov else 0.0,
    )


class ClassTokenMapper:
    """Maps a completed token to its LM form and a name-dictionary bonus.

    Complete spans of the selected categories are rewritten to their class
    literals; every complete span whose surface is in the dictionary for its
    category earns `gamma`.
    """

    def __init__(
        self,
        scheme: TagScheme,
        categories: Sequence[str],
        literals: Dict[str, str],
        name_dict: Dict[str, Set[str]],
        gamma: float,
    ):
        self.scheme = scheme
        self.categories = tuple(categories)
        self.literals = dict(literals)
        self.name_dict = {cat: {s.upper() for s in names}
                          for cat, names in name_dict.items()}
        self.gamma = gamma

    def __call__(self, token: str) -> Tuple[str, float]:
        lm_token, spans = replace_spans(token, self.scheme, self.categories, self.literals)
        bonus = 0.0
        for cat, surface in spans:
            if surface.upper() in self.name_dict.get(cat, ()):
                bonus += self.gamma
        return lm_token, bonus


def decode_with_class_lm(
    pg: Posteriorgram,
    alphabet: Alphabet,
    config: DecodeConfig,
    name_dict: Dict[str, Set[str]],
    gamma: float = DEFAULT_GAMMA,
    categories: Sequence[str] = ("PER",),
    literals: Dict[str, str] = DEFAULT_CLASS_LITERALS,
) -> Tuple[str, float]:
    """Prefix beam search against a class-token LM.

    `config.lm` should be trained on a transform_corpus output with the same
    categories and literals.  The decoded surface form is kept; the class
    mapping affects scoring only.  `gamma` must be non-negative.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0, got %r" % gamma)
    scheme = alphabet.tag_scheme
    if scheme is None:
        raise ValueError("alphabet has no tag scheme")
    policy = TokenPolicy(
        span_start_chars=frozenset(scheme.start_symbols.values()),
        span_end_char=scheme.end_symbol,
        map_token=ClassTokenMapper(scheme, categories, literals, name_dict, gamma),
    )
    return prefix_beam_search(pg, alphabet, config, token_policy=policy)


def load_name_dict(path) -> Dict[str, Set[str]]:
    """Read a JSON map of category to name list, e.g. {"PER": ["MODI", ...]}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {cat: set(names) for cat, names in raw.items()}
