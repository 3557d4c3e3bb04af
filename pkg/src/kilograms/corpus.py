"""Document sources for the two passes.

A corpus is an ordered collection of opaque byte documents. Both passes
iterate it in the same order, in *batches*: one flat ``uint8`` buffer plus
document offsets, so that millions of tiny documents cost one compiled
call rather than millions of Python iterations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

DEFAULT_BATCH_BYTES = 8 << 20


@dataclass
class Batch:
    first_doc: int
    data: np.ndarray
    offsets: np.ndarray

    @property
    def ndocs(self) -> int:
        return len(self.offsets) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def doc(self, i: int) -> np.ndarray:
        return self.data[self.offsets[i]:self.offsets[i + 1]]


@dataclass
class IngestReport:
    """Per-document problems met while reading a corpus."""

    errors: list[tuple[str, str]] = field(default_factory=list)
    short_docs: int = 0
    docs: int = 0
    bytes: int = 0


class CorpusSource:
    """Base class: subclasses provide ``ids`` and ``batches``."""

    ids: list[str]

    def __len__(self) -> int:
        return len(self.ids)

    def batches(self, batch_bytes: int = DEFAULT_BATCH_BYTES,
                report: IngestReport | None = None) -> Iterator[Batch]:
        raise NotImplementedError

    def documents(self) -> Iterator[bytes]:
        for batch in self.batches():
            for i in range(batch.ndocs):
                yield batch.doc(i).tobytes()


class MemoryCorpus(CorpusSource):
    def __init__(self, docs: Sequence[bytes], ids: Sequence[str] | None = None):
        self._docs = [bytes(d) for d in docs]
        self.ids = list(ids) if ids is not None else [f"doc{i}" for i in range(len(self._docs))]
        if len(self.ids) != len(self._docs):
            raise ValueError("ids and docs differ in length")

    def batches(self, batch_bytes=DEFAULT_BATCH_BYTES, report=None):
        start = 0
        while start < len(self._docs):
            stop, size = start, 0
            while stop < len(self._docs) and (stop == start or size + len(self._docs[stop]) <= batch_bytes):
                size += len(self._docs[stop])
                stop += 1
            chunk = self._docs[start:stop]
            offsets = np.zeros(len(chunk) + 1, dtype=np.int64)
            np.cumsum([len(d) for d in chunk], out=offsets[1:])
            data = np.frombuffer(b"".join(chunk), dtype=np.uint8)
            if report is not None:
                report.docs += len(chunk)
                report.bytes += int(offsets[-1])
            yield Batch(start, data, offsets)
            start = stop


class PackedCorpus(CorpusSource):
    """Documents stored contiguously in one buffer, delimited by ``offsets``."""

    def __init__(self, data: np.ndarray, offsets: np.ndarray, ids: Sequence[str] | None = None):
        self.data = np.ascontiguousarray(data, dtype=np.uint8)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        if self.offsets[0] != 0 or self.offsets[-1] != len(self.data) or np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must start at 0, end at len(data) and be nondecreasing")
        ndocs = len(self.offsets) - 1
        self._ids = list(ids) if ids is not None else None
        self._ndocs = ndocs

    @property
    def ids(self) -> list[str]:
        if self._ids is None:
            self._ids = [f"doc{i}" for i in range(self._ndocs)]
        return self._ids

    def __len__(self) -> int:
        return self._ndocs

    @classmethod
    def from_documents(cls, docs: Iterable[bytes], ids=None) -> "PackedCorpus":
        docs = [bytes(d) for d in docs]
        offsets = np.zeros(len(docs) + 1, dtype=np.int64)
        np.cumsum([len(d) for d in docs], out=offsets[1:])
        return cls(np.frombuffer(b"".join(docs), dtype=np.uint8), offsets, ids)

    def batches(self, batch_bytes=DEFAULT_BATCH_BYTES, report=None):
        start = 0
        while start < self._ndocs:
            base = self.offsets[start]
            stop = int(np.searchsorted(self.offsets, base + batch_bytes, side="right")) - 1
            stop = min(max(stop, start + 1), self._ndocs)
            data = self.data[base:self.offsets[stop]]
            offsets = self.offsets[start:stop + 1] - base
            if report is not None:
                report.docs += stop - start
                report.bytes += len(data)
            yield Batch(start, data, offsets)
            start = stop


class FileCorpus(CorpusSource):
    """One document per file. Files at least ``batch_bytes`` long are memory-mapped."""

    def __init__(self, paths: Sequence[str | os.PathLike]):
        self.paths = [Path(p) for p in paths]
        self.ids = [str(p) for p in self.paths]

    @classmethod
    def from_input(cls, spec: str | os.PathLike) -> "FileCorpus":
        """A directory (all regular files, recursively, sorted) or a list file of paths."""
        p = Path(spec)
        if p.is_dir():
            return cls(sorted(q for q in p.rglob("*") if q.is_file()))
        if p.is_file():
            base = p.parent
            lines = [ln.strip() for ln in p.read_text().splitlines()]
            return cls([(base / ln) if not os.path.isabs(ln) else Path(ln) for ln in lines if ln])
        raise FileNotFoundError(f"no such corpus input: {spec}")

    def _read(self, i: int, mmap_at: int) -> np.ndarray:
        path = self.paths[i]
        size = path.stat().st_size
        if size == 0:
            return np.empty(0, dtype=np.uint8)
        if size >= mmap_at:
            return np.memmap(path, dtype=np.uint8, mode="r")
        return np.fromfile(path, dtype=np.uint8)

    def batches(self, batch_bytes=DEFAULT_BATCH_BYTES, report=None):
        pending: list[np.ndarray] = []
        start = 0
        size = 0

        def flush() -> Batch:
            offsets = np.zeros(len(pending) + 1, dtype=np.int64)
            np.cumsum([len(d) for d in pending], out=offsets[1:])
            data = pending[0] if len(pending) == 1 else (
                np.concatenate(pending) if pending else np.empty(0, dtype=np.uint8))
            return Batch(start, np.asarray(data), offsets)

        for i in range(len(self.paths)):
            try:
                doc = self._read(i, batch_bytes)
            except OSError as exc:
                if report is None:
                    raise
                # unreadable documents stay in place as empty ones
                report.errors.append((self.ids[i], str(exc)))
                doc = np.empty(0, dtype=np.uint8)
            if report is not None:
                report.docs += 1
                report.bytes += len(doc)
            if pending and size + len(doc) > batch_bytes:
                yield flush()
                pending, start, size = [], i, 0
            pending.append(doc)
            size += len(doc)
        if pending:
            yield flush()


def as_corpus(source) -> CorpusSource:
    """Accept a corpus, a directory / list-file path, or a sequence of byte strings."""
    if isinstance(source, CorpusSource):
        return source
    if isinstance(source, (str, os.PathLike)):
        return FileCorpus.from_input(source)
    return MemoryCorpus(list(source))


def ordered_map(fn: Callable, items: Iterable, threads: int) -> Iterator:
    """``map(fn, items)`` over a worker pool, results in input order.

    At most ``2 * threads`` items are in flight so file batches are not
    all read into memory at once.
    """
    if threads <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window = []
        for item in items:
            window.append(pool.submit(fn, item))
            if len(window) >= 2 * threads:
                yield window.pop(0).result()
        for fut in window:
            yield fut.result()


def default_threads() -> int:
    return os.cpu_count() or 1
