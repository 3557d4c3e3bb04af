"""Brute-force ground truth for desk-sized corpora.

Counts every window exactly in a dictionary. The hash is used only to
decide which n-grams pass the hashing stride, so the oracle ranks the
same population the two-pass pipeline targets.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import as_corpus
from .hashgram import ExtractionConfig
from .rolling_hash import window_hashes
from .spacesaving import Entry

MAX_WINDOWS = 10**8


class GuardError(RuntimeError):
    """Corpus too large for exact in-memory counting."""


@dataclass
class ExactCounts:
    counts: Counter
    total: int
    n: int

    def ranked(self, k: int) -> list[Entry]:
        if k <= 0:
            return []
        rows = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        return [Entry(g, c, 0) for g, c in rows]


def exact_counts(corpus, cfg: ExtractionConfig, limit: int = MAX_WINDOWS) -> ExactCounts:
    corpus = as_corpus(corpus)
    B, s = np.uint64(cfg.table_size), np.uint64(cfg.stride)
    counts: Counter = Counter()
    total = 0
    for doc in corpus.documents():
        h = window_hashes(doc, cfg.hash_params)
        keep = np.flatnonzero((h % B) % s == 0)
        total += len(keep)
        if total > limit:
            raise GuardError(f"more than {limit} stride-passing windows")
        n = cfg.n
        counts.update(doc[o:o + n] for o in keep.tolist())
    return ExactCounts(counts, total, cfg.n)


def exact_topk(corpus, cfg: ExtractionConfig, k: int | None = None,
               limit: int = MAX_WINDOWS) -> list[Entry]:
    """Exact top-``k`` stride-passing n-grams, ranked like the pipeline."""
    return exact_counts(corpus, cfg, limit).ranked(cfg.k if k is None else k)


def spatial_stride_counts(corpus, n: int, z: int) -> Counter:
    if z < 1:
        raise ValueError(f"spatial stride must be >= 1, got {z}")
    counts: Counter = Counter()
    for doc in as_corpus(corpus).documents():
        counts.update(doc[o:o + n] for o in range(0, len(doc) - n + 1, z))
    return counts


def spatial_stride_topk(corpus, n: int, k: int, z: int) -> list[Entry]:
    """Baseline that only looks at windows starting at multiples of ``z``."""
    if k <= 0:
        return []
    rows = sorted(spatial_stride_counts(corpus, n, z).items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [Entry(g, c, 0) for g, c in rows]


def exact_count(corpus, ngram: bytes, n: int | None = None) -> int:
    """Overlapping occurrences of ``ngram`` across all documents."""
    if not ngram or (n is not None and len(ngram) != n):
        raise ValueError(f"n-gram has {len(ngram)} bytes, expected {n or '>= 1'}")
    total = 0
    for doc in as_corpus(corpus).documents():
        i = doc.find(ngram)
        while i >= 0:
            total += 1
            i = doc.find(ngram, i + 1)
    return total
