"""Entity-aware CTC decoding toolkit.

Transcripts carry named entities as inline tag symbols; decoding runs a
prefix beam search over acoustic posteriorgrams with optional n-gram LM
shallow fusion, and evaluation scores exact-match entity F1 and word error
rate.  A synthetic posteriorgram generator makes the full pipeline testable
without an acoustic model.
"""

__version__ = "0.1.0"

from .alphabet import (Alphabet, TagScheme, strip_tags, tag_map, tag_unmap)
from .ctc import (brute_force_best_labeling, ctc_log_prob, ctc_loss_and_grad,
                  greedy_decode)
from .decoder import BeamHypothesis, DecodeConfig, decode_batch, prefix_beam_search
from .entities import EntitySpan, parse_tagged, to_entity_set
from .evalkit import EvalReport, evaluate_ner, wer, wer_corpus
from .ngram_lm import (NGramModel, build_from_corpus, load_arpa, score_sequence,
                       score_word, write_arpa)
from .posteriorgram import (Posteriorgram, read_posteriorgram, synth_generate,
                            write_posteriorgram)
from .semlm import (OovStats, decode_with_class_lm, oov_stats, transform_corpus)

__all__ = [
    "Alphabet",
    "TagScheme",
    "tag_map",
    "tag_unmap",
    "strip_tags",
    "Posteriorgram",
    "read_posteriorgram",
    "write_posteriorgram",
    "synth_generate",
    "ctc_log_prob",
    "ctc_loss_and_grad",
    "greedy_decode",
    "brute_force_best_labeling",
    "NGramModel",
    "load_arpa",
    "write_arpa",
    "build_from_corpus",
    "score_word",
    "score_sequence",
    "DecodeConfig",
    "BeamHypothesis",
    "prefix_beam_search",
    "decode_batch",
    "EntitySpan",
    "parse_tagged",
    "to_entity_set",
    "EvalReport",
    "evaluate_ner",
    "wer",
    "wer_corpus",
    "OovStats",
    "transform_corpus",
    "oov_stats",
    "decode_with_class_lm",
    "__version__",
]
