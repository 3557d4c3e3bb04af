"""Two-pass top-k n-gram extraction.

Pass 1 counts hashed buckets and keeps the ``k`` fullest as a whitelist.
Pass 2 rescans the corpus and feeds only windows that fall in a
whitelisted bucket to a Space-Saving summary, which separates the
frequent n-grams from the infrequent ones that collided with them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import DEFAULT_BATCH_BYTES, IngestReport, as_corpus, ordered_map
from .hashgram import ExtractionConfig, HashGramTable, TopKHashSet, select_topk, tabulate
from .spacesaving import Entry, SpaceSaving


class ConsistencyError(RuntimeError):
    """The corpus changed between the two passes."""


@dataclass
class TopKResult:
    config: ExtractionConfig
    entries: list[Entry]
    total: int
    inserted: int
    whitelist: TopKHashSet
    timings: dict[str, float] = field(default_factory=dict)
    report: IngestReport = field(default_factory=IngestReport)

    @property
    def collision_surplus(self) -> int:
        """Pass-2 insertions not accounted for by the returned entries."""
        return self.inserted - sum(e.count for e in self.entries)

    @property
    def ngrams(self) -> list[bytes]:
        return [e.ngram for e in self.entries]


def _batch_matches(cfg: ExtractionConfig, whitelist: TopKHashSet):
    n, a, tab = cfg.hash_params.kernel_args
    probe = whitelist.probe

    def run(batch):
        pos, hv = _kernels.pass2_matches(batch.data, batch.offsets, n, a, tab,
                                         cfg.table_size, *probe)
        return batch, pos, hv

    return run


def _grouped(data: np.ndarray, pos: np.ndarray, hv: np.ndarray, n: int):
    """Distinct windows among ``pos`` with their multiplicities, in first-seen order.

    Windows are grouped by full 61-bit hash, then each group is checked
    byte-for-byte; a group that mixes distinct windows is split exactly.
    """
    if len(pos) == 0:
        return []
    order = np.argsort(hv, kind="stable")
    sh = hv[order]
    starts = np.flatnonzero(np.concatenate(([True], sh[1:] != sh[:-1])))
    bounds = np.append(starts, len(sh)).astype(np.int64)
    spos = pos[order]
    ok = _kernels.homogeneous_groups(data, spos, bounds, n)
    out = []
    for g in range(len(starts)):
        lo, hi = bounds[g], bounds[g + 1]
        if ok[g]:
            p = int(spos[lo])
            out.append((p, data[p:p + n].tobytes(), int(hi - lo)))
        else:
            seen: dict[bytes, list[int]] = {}
            for p in spos[lo:hi]:
                key = data[p:p + n].tobytes()
                row = seen.setdefault(key, [int(p), 0])
                row[1] += 1
            out.extend((p, key, c) for key, (p, c) in seen.items())
    out.sort(key=lambda t: t[0])
    return out


def second_pass(corpus, cfg: ExtractionConfig, whitelist: TopKHashSet,
                lengths: np.ndarray | None = None, threads: int = 1,
                batch_bytes: int = DEFAULT_BATCH_BYTES) -> SpaceSaving:
    """Offer every whitelisted-bucket window to a Space-Saving summary.

    Batches are scanned on worker threads but offered to the single
    summary in corpus order, so the result does not depend on ``threads``.
    Within a batch, repeats of a window are offered as one weighted update
    at its first position. When ``lengths`` (from pass 1) is given, any
    document whose length changed raises ``ConsistencyError``.
    """
    corpus = as_corpus(corpus)
    summary = SpaceSaving(cfg.ss_capacity, cfg.n)
    if len(whitelist) == 0:
        return summary
    report = IngestReport()
    for batch, pos, hv in ordered_map(_batch_matches(cfg, whitelist),
                                      corpus.batches(batch_bytes, report), threads):
        if lengths is not None:
            got = batch.lengths
            want = lengths[batch.first_doc:batch.first_doc + len(got)]
            if len(want) != len(got):
                raise ConsistencyError("corpus gained documents between passes")
            diff = np.flatnonzero(want != got)
            if len(diff):
                name = corpus.ids[batch.first_doc + int(diff[0])]
                raise ConsistencyError(f"document {name} changed length between passes")
        for _, gram, weight in _grouped(batch.data, pos, hv, cfg.n):
            summary.offer(gram, weight)
    if lengths is not None and report.docs != len(lengths):
        raise ConsistencyError(f"corpus had {len(lengths)} documents in pass 1, {report.docs} in pass 2")
    return summary


def run_kilograms(corpus, cfg: ExtractionConfig, threads: int = 1,
                  batch_bytes: int = DEFAULT_BATCH_BYTES,
                  table: HashGramTable | None = None) -> TopKResult:
    """Top-``k`` n-grams of the corpus under the hashing stride.

    A previously saved pass-1 ``table`` may be supplied to skip tabulation;
    document lengths are then not re-verified.
    """
    corpus = as_corpus(corpus)
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    timings = {}
    t0 = time.perf_counter()
    if table is None:
        table = tabulate(corpus, cfg, threads=threads, batch_bytes=batch_bytes)
    elif table.size != cfg.table_size or table.n != cfg.n or table.stride != cfg.stride:
        raise ValueError("saved table does not match the configuration")
    t1 = time.perf_counter()
    whitelist = select_topk(table, cfg.k, cfg.stride)
    t2 = time.perf_counter()
    summary = second_pass(corpus, cfg, whitelist, table.lengths, threads, batch_bytes)
    entries = summary.top_entries(cfg.k)
    t3 = time.perf_counter()
    timings.update(pass1=t1 - t0, select=t2 - t1, pass2=t3 - t2, total=t3 - t0)
    return TopKResult(cfg, entries, table.total, summary.inserted_total, whitelist,
                      timings, table.report)


def format_tsv(entries, cfg: ExtractionConfig, total: int) -> str:
    """Header comments then ``HEX<TAB>count<TAB>error`` rows."""
    head = [f"# n={cfg.n}", f"# k={cfg.k}", f"# B={cfg.table_size}", f"# s={cfg.stride}",
            f"# Bs={cfg.ss_capacity}", f"# L={total}"]
    rows = [f"{e.ngram.hex().upper()}\t{e.count}\t{e.error}" for e in entries]
    return "\n".join(head + rows) + "\n"


def write_tsv(path, result: TopKResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_tsv(result.entries, result.config, result.total))


def read_tsv(path) -> tuple[dict[str, int], list[Entry]]:
    """Parse a result file into its header fields and entries."""
    header: dict[str, int] = {}
    entries: list[Entry] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key] = int(value)
                continue
            gram, count, error = line.split("\t")
            entries.append(Entry(bytes.fromhex(gram), int(count), int(error)))
    return header, entries
