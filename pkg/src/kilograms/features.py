"""Per-document n-gram occurrence features and their export.

Occurrences are counted at every offset, including overlaps; the hashing
stride only matters when choosing which n-grams to keep. All patterns of
one length are found in a single rolling-hash scan with byte verification,
so cost grows with corpus size, not with the number of patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from . import _kernels
from .corpus import DEFAULT_BATCH_BYTES, as_corpus, ordered_map
from .hashgram import filter_bits, set_bits
from .rolling_hash import DEFAULT_MULTIPLIER, HashParams, hash_window


class _LengthGroup:
    def __init__(self, patterns: list[bytes], index: np.ndarray, multiplier: int):
        n = len(patterns[0])
        self.n = n
        self.index = index
        self.params = HashParams(n, multiplier)
        hv = np.array([hash_window(p, self.params) for p in patterns], dtype=np.uint64)
        uniq = np.unique(hv)
        self.bits = set_bits(len(uniq))
        self.slots = _kernels.build_set(uniq, self.bits)
        self.fbits = filter_bits(len(uniq))
        self.filter = _kernels.build_filter(uniq, self.fbits)
        self.slot_first = np.full(len(self.slots), -1, dtype=np.int64)
        self.chain = np.full(len(patterns), -1, dtype=np.int64)
        where = np.flatnonzero(self.slots != np.uint64(2**64 - 1))
        slot_of = dict(zip(self.slots[where].tolist(), where.tolist()))
        for i in range(len(patterns) - 1, -1, -1):
            s = slot_of[int(hv[i])]
            self.chain[i] = self.slot_first[s]
            self.slot_first[s] = i
        self.patterns = np.frombuffer(b"".join(patterns), dtype=np.uint8).reshape(len(patterns), n)

    def match(self, data, offsets):
        n, a, tab = self.params.kernel_args
        docs, pats = _kernels.match_patterns(data, offsets, n, a, tab, self.slots, self.bits,
                                             self.filter, self.fbits, self.slot_first,
                                             self.chain, self.patterns)
        return docs, self.index[pats]


class PatternMatcher:
    """Exact multi-pattern byte matcher; patterns may differ in length."""

    def __init__(self, patterns: Sequence[bytes], multiplier: int = DEFAULT_MULTIPLIER):
        self.patterns = [bytes(p) for p in patterns]
        if any(len(p) == 0 for p in self.patterns):
            raise ValueError("empty pattern")
        by_len: dict[int, list[int]] = {}
        for i, p in enumerate(self.patterns):
            by_len.setdefault(len(p), []).append(i)
        self._groups = [
            _LengthGroup([self.patterns[i] for i in idx], np.array(idx, dtype=np.int64), multiplier)
            for _, idx in sorted(by_len.items())
        ]

    def __len__(self) -> int:
        return len(self.patterns)

    def match_batch(self, data: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(document, pattern) index pairs, one per occurrence."""
        if not self._groups:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        parts = [g.match(data, offsets) for g in self._groups]
        return np.concatenate([d for d, _ in parts]), np.concatenate([p for _, p in parts])

    def count(self, doc: bytes) -> dict[int, int]:
        data = np.frombuffer(doc, dtype=np.uint8)
        _, pats = self.match_batch(data, np.array([0, len(data)], dtype=np.int64))
        idx, cnt = np.unique(pats, return_counts=True)
        return dict(zip(idx.tolist(), cnt.tolist()))

    def any_match(self, doc: bytes) -> bool:
        return bool(self.count(doc))


@dataclass
class FeatureMatrix:
    """Sparse document-by-feature counts (CSR) with optional row labels."""

    features: list[bytes]
    values: sparse.csr_matrix
    mode: str = "count"
    labels: list[str] | None = None
    doc_ids: list[str] | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("count", "binary"):
            raise ValueError(f"mode must be 'count' or 'binary', got {self.mode!r}")
        if self.values.shape[1] != len(self.features):
            raise ValueError("column count does not match feature list")
        if self.labels is not None and len(self.labels) != self.values.shape[0]:
            raise ValueError("label count does not match row count")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row(self, i: int) -> dict[int, int]:
        r = self.values.getrow(i)
        return dict(zip(r.indices.tolist(), r.data.tolist()))

    def presence(self) -> sparse.csr_matrix:
        p = self.values.copy()
        p.data = np.ones_like(p.data)
        return p

    def binary(self) -> "FeatureMatrix":
        return FeatureMatrix(self.features, self.presence(), "binary", self.labels, self.doc_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (self.features == other.features and self.mode == other.mode
                and self.labels == other.labels and self.values.shape == other.values.shape
                and (self.values != other.values).nnz == 0)


def vectorize(corpus, features: Sequence[bytes], mode: str = "count", labels=None,
              threads: int = 1, batch_bytes: int = DEFAULT_BATCH_BYTES) -> FeatureMatrix:
    """Exact overlapping occurrence counts of each feature in each document."""
    if mode not in ("count", "binary"):
        raise ValueError(f"mode must be 'count' or 'binary', got {mode!r}")
    features = [bytes(f) for f in features]
    if len({len(f) for f in features}) > 1:
        raise ValueError("features must all have the same length")
    corpus = as_corpus(corpus)
    matcher = PatternMatcher(features)

    def run(batch):
        docs, pats = matcher.match_batch(batch.data, batch.offsets)
        return docs + batch.first_doc, pats

    rows, cols = [], []
    for d, p in ordered_map(run, corpus.batches(batch_bytes), threads):
        rows.append(d)
        cols.append(p)
    r = np.concatenate(rows) if rows else np.empty(0, np.int64)
    c = np.concatenate(cols) if cols else np.empty(0, np.int64)
    values = sparse.coo_matrix((np.ones(len(r), dtype=np.int64), (r, c)),
                               shape=(len(corpus), len(features))).tocsr()
    values.sum_duplicates()
    values.sort_indices()
    m = FeatureMatrix(features, values, "count", list(labels) if labels is not None else None,
                      list(corpus.ids))
    return m.binary() if mode == "binary" else m


def feature_map_path(path) -> Path:
    return Path(str(path) + ".features.tsv")


def _label(m: FeatureMatrix, i: int) -> str:
    return "0" if m.labels is None else str(m.labels[i])


def write_feature_map(path, features: Sequence[bytes]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, f in enumerate(features):
            fh.write(f"{i}\t{f.hex().upper()}\n")


def read_feature_map(path) -> list[bytes]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            idx, gram = line.rstrip("\n").split("\t")
            if int(idx) != i:
                raise ValueError(f"{path}: feature map out of order at line {i + 1}")
            out.append(bytes.fromhex(gram))
    return out


def write_sparse(path, m: FeatureMatrix) -> None:
    """``label idx:val ...`` per row (0-based, ascending) plus a feature-map sidecar.

    Rows of an unlabelled matrix get label ``0``.
    """
    if m.shape[0] == 0:
        raise ValueError("empty matrix")
    v = m.values
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(m.shape[0]):
            lo, hi = v.indptr[i], v.indptr[i + 1]
            cells = " ".join(f"{j}:{x}" for j, x in zip(v.indices[lo:hi].tolist(), v.data[lo:hi].tolist()))
            fh.write(_label(m, i) + (" " + cells if cells else "") + "\n")
    write_feature_map(feature_map_path(path), m.features)


def read_sparse(path, features: Sequence[bytes] | None = None, mode: str = "count") -> FeatureMatrix:
    if features is None:
        features = read_feature_map(feature_map_path(path))
    labels, rows, cols, vals = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            parts = line.split()
            labels.append(parts[0])
            for cell in parts[1:]:
                j, x = cell.split(":")
                rows.append(i)
                cols.append(int(j))
                vals.append(int(x))
    values = sparse.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)),
                               shape=(len(labels), len(features)))
    values.sort_indices()
    return FeatureMatrix(list(features), values, mode, labels)


def write_delimited(path, m: FeatureMatrix, delimiter: str = ",") -> None:
    """Dense table: a ``label`` column, then one column per hex n-gram."""
    if m.shape[0] == 0:
        raise ValueError("empty matrix")
    dense = m.values.toarray()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(delimiter.join(["label"] + [f.hex().upper() for f in m.features]) + "\n")
        for i in range(m.shape[0]):
            fh.write(delimiter.join([_label(m, i)] + [str(x) for x in dense[i].tolist()]) + "\n")


def read_delimited(path, delimiter: str = ",", mode: str = "count") -> FeatureMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(delimiter)
        features = [bytes.fromhex(h) for h in header[1:]]
        labels, rows = [], []
        for line in fh:
            cells = line.rstrip("\n").split(delimiter)
            labels.append(cells[0])
            rows.append([int(x) for x in cells[1:]])
    dense = np.array(rows, dtype=np.int64).reshape(len(rows), len(features))
    values = sparse.csr_matrix(dense)
    values.sort_indices()
    return FeatureMatrix(features, values, mode, labels)
