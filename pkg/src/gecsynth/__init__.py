"""Artificial grammatical error generation and GEC evaluation toolkit."""

__version__ = "0.1.0"

from .align import apply_edits, classify_edit, extract_edits, flag_suspect_edit, Lexicon
from .evaluate import ScoreReport, category_recall_table, compare, score
from .m2 import Edit, M2Record, parse_m2, serialize_m2
from .text import Corpus, TokenSequence, detokenize, normalize, sample_corpus, tokenize

__all__ = [
    "Corpus", "Edit", "Lexicon", "M2Record", "ScoreReport", "TokenSequence",
    "apply_edits", "category_recall_table", "classify_edit", "compare", "detokenize",
    "extract_edits", "flag_suspect_edit", "normalize", "parse_m2", "sample_corpus",
    "score", "serialize_m2", "tokenize",
]
