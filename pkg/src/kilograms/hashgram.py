"""First pass: hashed bucket counting with the hashing-stride filter.

Every window is hashed, reduced to a bucket ``q = h mod B`` and counted
only when ``q mod s == 0``. Counters are 32-bit and saturate. The
``k`` fullest buckets then form the whitelist for the second pass.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import DEFAULT_BATCH_BYTES, CorpusSource, IngestReport, as_corpus, ordered_map
from .rolling_hash import DEFAULT_MULTIPLIER, HashParams

DEFAULT_TABLE_SIZE = 2**31 - 19
SS_SLACK = 300_000
COUNTER_MAX = 2**32 - 1


def default_stride(n: int) -> int:
    return math.ceil(n / 4)


def default_ss_capacity(k: int) -> int:
    """Space-Saving capacity ``max(k + 300000, 3k)``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return max(k + SS_SLACK, 3 * k)


def is_prime(x: int) -> bool:
    from sympy import isprime

    return bool(isprime(x))


@dataclass(frozen=True)
class ExtractionConfig:
    """Parameters of one extraction run.

    ``table_size`` is the bucket count B, ``stride`` the hashing stride s
    and ``ss_capacity`` the Space-Saving capacity. Unset values take the
    defaults ``B = 2^31 - 19``, ``s = ceil(n/4)``, ``max(k + 300000, 3k)``.
    """

    n: int
    k: int
    table_size: int = DEFAULT_TABLE_SIZE
    stride: int | None = None
    ss_capacity: int | None = None
    multiplier: int = DEFAULT_MULTIPLIER
    hash_params: HashParams = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.stride is None:
            object.__setattr__(self, "stride", default_stride(self.n))
        if self.ss_capacity is None:
            object.__setattr__(self, "ss_capacity", default_ss_capacity(self.k))
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.table_size >= 2**32:
            raise ValueError("table_size must fit 32-bit bucket indices")
        if self.table_size < self.k * self.stride:
            raise ValueError(
                f"table_size {self.table_size} < k*stride = {self.k * self.stride}")
        if self.ss_capacity < self.k:
            raise ValueError(f"ss_capacity {self.ss_capacity} < k = {self.k}")
        object.__setattr__(self, "hash_params", HashParams(self.n, self.multiplier))

    def check_table_size(self) -> bool:
        """True when B is prime; warns otherwise."""
        ok = is_prime(self.table_size)
        if not ok:
            warnings.warn(f"table size {self.table_size} is not prime", stacklevel=2)
        return ok

    def as_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "B": self.table_size, "s": self.stride,
                "Bs": self.ss_capacity, "multiplier": self.multiplier}


@dataclass
class HashGramTable:
    counts: np.ndarray
    total: int = 0
    n: int = 0
    stride: int = 1
    lengths: np.ndarray | None = None
    report: IngestReport = field(default_factory=IngestReport)

    @property
    def size(self) -> int:
        return len(self.counts)

    def save(self, path) -> None:
        write_table(path, self)

    @classmethod
    def load(cls, path) -> "HashGramTable":
        return read_table(path)


@dataclass(frozen=True)
class TopKHashSet:
    """Whitelisted bucket indices, ascending, plus the count at the cut."""

    indices: np.ndarray
    threshold: int
    _slots: np.ndarray = field(repr=False, compare=False, default=None)
    _bits: int = field(repr=False, compare=False, default=0)
    _filter: np.ndarray = field(repr=False, compare=False, default=None)
    _fbits: int = field(repr=False, compare=False, default=0)

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.uint64)
        bits, fbits = set_bits(len(idx)), filter_bits(len(idx))
        object.__setattr__(self, "_bits", bits)
        object.__setattr__(self, "_slots", _kernels.build_set(idx, bits))
        object.__setattr__(self, "_fbits", fbits)
        object.__setattr__(self, "_filter", _kernels.build_filter(idx, fbits))

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, q: int) -> bool:
        return bool(_kernels.set_contains(self._slots, self._bits, np.array([q], dtype=np.uint64))[0])

    @property
    def probe(self) -> tuple[np.ndarray, int, np.ndarray, int]:
        """``(slots, bits, filter, filter_bits)`` for the scan kernels."""
        return self._slots, self._bits, self._filter, self._fbits


def set_bits(count: int) -> int:
    """Slot-count exponent for ``count`` keys at load factor at most 1/2."""
    return max(4, math.ceil(math.log2(count + 1)) + 1)


def filter_bits(count: int) -> int:
    """Bitmap exponent for the scan prefilter.

    128 bits per key (false-positive rate under 1%) while the bitmap fits
    in 32 KB, i.e. stays in L1; larger key sets fall back to 16 bits per key.
    Almost every rejected window then costs one predictable branch and no
    probe of the set itself.
    """
    need = math.ceil(math.log2(count + 1))
    return max(9, min(need + 7, max(18, need + 4)))


def _batch_buckets(cfg: ExtractionConfig):
    n, a, tab = cfg.hash_params.kernel_args

    def run(batch):
        return batch.lengths, _kernels.pass1_buckets(
            batch.data, batch.offsets, n, a, tab, cfg.table_size, cfg.stride)

    return run


def tabulate(corpus, cfg: ExtractionConfig, threads: int = 1,
             batch_bytes: int = DEFAULT_BATCH_BYTES) -> HashGramTable:
    """Count stride-passing windows per bucket over the whole corpus.

    Batches are hashed on ``threads`` workers; increments are applied in
    batch order by the caller thread, so the table never depends on
    scheduling. Unreadable documents are recorded in ``table.report``.
    """
    corpus = as_corpus(corpus)
    report = IngestReport()
    counts = np.zeros(cfg.table_size, dtype=np.uint32)
    lengths = np.zeros(len(corpus), dtype=np.int64)
    total = 0
    pos = 0
    for lens, buckets in ordered_map(_batch_buckets(cfg), corpus.batches(batch_bytes, report), threads):
        lengths[pos:pos + len(lens)] = lens
        pos += len(lens)
        _kernels.saturating_increment(counts, buckets)
        total += len(buckets)
    report.short_docs = int(np.count_nonzero(lengths < cfg.n))
    return HashGramTable(counts, total, cfg.n, cfg.stride, lengths, report)


def select_topk(table: HashGramTable, k: int, stride: int | None = None) -> TopKHashSet:
    """The ``k`` largest nonzero buckets; ties at the cut go to smaller indices.

    Only stride buckets can be nonzero, so selection runs on that view.
    """
    s = table.stride if stride is None else stride
    if k <= 0:
        return TopKHashSet(np.empty(0, dtype=np.int64), 0)
    view = table.counts[::s]
    nz = np.flatnonzero(view)
    if len(nz) <= k:
        chosen = nz
        threshold = int(view[nz].min()) if len(nz) else 0
    else:
        vals = view[nz]
        # k-th largest value via introselect
        threshold = int(np.partition(vals, len(vals) - k)[len(vals) - k])
        above = nz[vals > threshold]
        at = nz[vals == threshold][: k - len(above)]
        chosen = np.sort(np.concatenate([above, at]))
    return TopKHashSet(chosen.astype(np.int64) * s, threshold)


_MAGIC = b"KGHT"
_VERSION = 1
_HEADER = struct.Struct("<4sIQIIQ")


def write_table(path, table: HashGramTable) -> None:
    """Flat little-endian ``uint32`` counters after a 32-byte header
    (magic, version, B, n, s, L)."""
    header = _HEADER.pack(_MAGIC, _VERSION, table.size, table.n, table.stride, table.total)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(table.counts.astype("<u4", copy=False).tobytes())


def read_table(path) -> HashGramTable:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated table header")
        magic, version, size, n, stride, total = _HEADER.unpack(raw)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"{path}: not a hash-gram table (magic={magic!r}, version={version})")
        counts = np.fromfile(fh, dtype="<u4", count=size)
    if len(counts) != size:
        raise ValueError(f"{path}: expected {size} counters, found {len(counts)}")
    return HashGramTable(counts.astype(np.uint32, copy=False), total, n, stride)
