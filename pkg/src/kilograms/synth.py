"""Synthetic corpora with known structure, for verification and demos."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PackedCorpus
from .hashgram import ExtractionConfig
from .rolling_hash import hash_window


def _rand(rng: np.random.Generator, size: int) -> bytes:
    return rng.integers(0, 256, size, dtype=np.uint8).tobytes()


def stride_passing_grams(rng: np.random.Generator, cfg: ExtractionConfig, count: int) -> list[bytes]:
    """Random distinct n-grams whose bucket passes the hashing stride."""
    out: dict[bytes, None] = {}
    while len(out) < count:
        g = _rand(rng, cfg.n)
        if (hash_window(g, cfg.hash_params) % cfg.table_size) % cfg.stride == 0:
            out[g] = None
    return list(out)


def _assemble(rng, pieces: list[bytes], docs: int, filler: int) -> list[bytes]:
    """Shuffle pieces into ``docs`` documents separated by random filler."""
    order = rng.permutation(len(pieces))
    where = rng.integers(0, docs, len(pieces))
    parts: list[list[bytes]] = [[] for _ in range(docs)]
    for i in order:
        d = int(where[i])
        parts[d].append(_rand(rng, int(rng.integers(0, filler + 1))))
        parts[d].append(pieces[i])
    return [b"".join(p) + _rand(rng, int(rng.integers(0, filler + 1))) for p in parts]


@dataclass
class PlantedCorpus:
    corpus: PackedCorpus
    top: list[bytes]
    runners_up: list[bytes]


def planted_corpus(seed: int, cfg: ExtractionConfig, hi: tuple[int, int] = (6, 9), lo: int = 2,
                   extra: int = 5, docs: int = 20, filler: int = 64,
                   background: int = 100_000) -> PlantedCorpus:
    """``cfg.k`` stride-passing grams planted ``hi`` times each, ``extra`` more planted ``lo`` times.

    Everything else is uniform random bytes, so rank ``k`` and ``k+1``
    are separated by a wide count margin.
    """
    rng = np.random.default_rng(seed)
    grams = stride_passing_grams(rng, cfg, cfg.k + extra)
    top, runners = grams[:cfg.k], grams[cfg.k:]
    pieces = []
    for g in top:
        pieces += [g] * int(rng.integers(hi[0], hi[1] + 1))
    for g in runners:
        pieces += [g] * lo
    pieces += [_rand(rng, 256) for _ in range(background // 256)]
    return PlantedCorpus(PackedCorpus.from_documents(_assemble(rng, pieces, docs, filler)), top, runners)


@dataclass
class UbiquitousCorpus:
    corpus: PackedCorpus
    families: list[bytes]
    copies: list[int]


def ubiquitous_corpus(seed: int, n: int = 64, families: int = 20, docs: int = 200,
                      max_copies: int = 60, doc_bytes: int = 2048) -> UbiquitousCorpus:
    """Random documents carrying long shared sequences of ``4 n`` bytes.

    Sequence ``i`` appears in ``max_copies - 2 i`` documents, at random offsets.
    """
    rng = np.random.default_rng(seed)
    seqs = [_rand(rng, 4 * n) for _ in range(families)]
    copies = [max_copies - 2 * i for i in range(families)]
    holders: list[list[int]] = [[] for _ in range(docs)]
    for i, c in enumerate(copies):
        for d in rng.choice(docs, size=c, replace=False):
            holders[int(d)].append(i)
    out = []
    for d in range(docs):
        chunks = [_rand(rng, int(rng.integers(1, doc_bytes)))]
        for i in rng.permutation(holders[d]):
            chunks.append(seqs[int(i)])
            chunks.append(_rand(rng, int(rng.integers(1, 64))))
        out.append(b"".join(chunks))
    return UbiquitousCorpus(PackedCorpus.from_documents(out), seqs, copies)


@dataclass
class FamilyCorpus:
    docs: list[bytes]
    labels: list[str]
    markers: dict[str, list[bytes]]
    noise: list[bytes]


def family_corpus(seed: int, families: int = 20, per_family: int = 50, markers: int = 4,
                  marker_len: int = 256, noise: int = 10, noise_rate: float = 0.5,
                  doc_bytes: tuple[int, int] = (2048, 8192), benign: int = 0,
                  noise_seqs: list[bytes] | None = None) -> FamilyCorpus:
    """Labelled documents: each family document holds two of its family's markers.

    Shared noise sequences appear in any document (benign ones too) with
    probability ``noise_rate``. Benign documents are labelled ``benign``.
    """
    rng = np.random.default_rng(seed)
    names = [f"family{i:02d}" for i in range(families)]
    marks = {f: [_rand(rng, marker_len) for _ in range(markers)] for f in names}
    shared = noise_seqs if noise_seqs is not None else [_rand(rng, marker_len) for _ in range(noise)]

    def doc(extra: list[bytes]) -> bytes:
        pieces = list(extra) + [s for s in shared if rng.random() < noise_rate]
        chunks = [_rand(rng, int(rng.integers(*doc_bytes)) // (len(pieces) + 1))]
        for i in rng.permutation(len(pieces)):
            chunks.append(pieces[int(i)])
            chunks.append(_rand(rng, int(rng.integers(*doc_bytes)) // (len(pieces) + 1)))
        return b"".join(chunks)

    docs, labels = [], []
    for f in names:
        for _ in range(per_family):
            pick = rng.choice(markers, size=2, replace=False)
            docs.append(doc([marks[f][int(j)] for j in pick]))
            labels.append(f)
    for _ in range(benign):
        docs.append(doc([]))
        labels.append("benign")
    return FamilyCorpus(docs, labels, marks, shared)


def runtime_corpus(seed: int, size: int = 200 << 20, doc_bytes: int = 1 << 20,
                   shared: int = 256, shared_len: int = 4096, shared_share: float = 0.1) -> PackedCorpus:
    """``size`` bytes of mostly random documents; about ``shared_share`` of the
    bytes are copies of ``shared`` common ``shared_len``-byte blocks."""
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 256, size, dtype=np.uint8)
    blocks = rng.integers(0, 256, (shared, shared_len), dtype=np.uint8)
    copies = int(size * shared_share) // shared_len
    starts = rng.integers(0, size - shared_len, copies)
    which = rng.integers(0, shared, copies)
    for s, w in zip(starts.tolist(), which.tolist()):
        data[s:s + shared_len] = blocks[w]
    offsets = np.append(np.arange(0, size, doc_bytes, dtype=np.int64), size)
    return PackedCorpus(data, offsets)


def write_corpus(docs, directory, prefix: str = "doc") -> list[Path]:
    """One file per document, zero-padded names so sorted order is document order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    docs = list(docs)
    width = max(4, len(str(len(docs))))
    paths = []
    for i, d in enumerate(docs):
        p = directory / f"{prefix}{i:0{width}d}.bin"
        p.write_bytes(bytes(d))
        paths.append(p)
    return paths


def write_labels(path, paths, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p, lab in zip(paths, labels):
            fh.write(f"{os.fspath(p)}\t{lab}\n")


def fixture_corpus(seed: int = 7) -> PlantedCorpus:
    """The ~1 MB reference corpus used by the CLI checks (16-grams, k=50)."""
    cfg = ExtractionConfig(16, 50, table_size=FIXTURE_TABLE_SIZE)
    return planted_corpus(seed, cfg, hi=(20, 40), lo=5, extra=20, docs=64, filler=512,
                          background=900_000)


FIXTURE_TABLE_SIZE = 4_194_301
