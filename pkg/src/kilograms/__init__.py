"""Top-k byte n-gram extraction for large n, with features and Yara rules."""

__version__ = "0.1.0"

from .corpus import FileCorpus, MemoryCorpus, PackedCorpus, as_corpus
from .features import FeatureMatrix, PatternMatcher, vectorize
from .hashgram import ExtractionConfig, HashGramTable, TopKHashSet, select_topk, tabulate
from .oracle import exact_count, exact_topk, spatial_stride_topk
from .pipeline import TopKResult, run_kilograms
from .rolling_hash import HashParams, hash_window, roll
from .signatures import SignatureRule, build_rule, emit_rule, select_best_n
from .spacesaving import Entry, SpaceSaving, merge
from .zipf import ZipfModel, bound_limit, expected_collisions

__all__ = [
    "FileCorpus", "MemoryCorpus", "PackedCorpus", "as_corpus",
    "FeatureMatrix", "PatternMatcher", "vectorize",
    "ExtractionConfig", "HashGramTable", "TopKHashSet", "select_topk", "tabulate",
    "exact_count", "exact_topk", "spatial_stride_topk",
    "TopKResult", "run_kilograms",
    "HashParams", "hash_window", "roll",
    "SignatureRule", "build_rule", "emit_rule", "select_best_n",
    "Entry", "SpaceSaving", "merge",
    "ZipfModel", "bound_limit", "expected_collisions",
]
