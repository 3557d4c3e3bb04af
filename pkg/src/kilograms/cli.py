"""Command-line entry point: ``kilograms <subcommand> ...``.

Every file the tool writes is accompanied by ``<file>.manifest.json``
holding the resolved configuration, a digest of each input file, the
tool version, timings and the list of outputs.

Exit codes: 0 ok, 1 usage or invalid arguments, 2 I/O failure,
3 corpus changed between passes, 4 oracle size guard tripped.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import DEFAULT_BATCH_BYTES, FileCorpus, default_threads
from .features import (FeatureMatrix, read_sparse, vectorize, write_delimited,
                       write_sparse, feature_map_path)
from .hashgram import DEFAULT_TABLE_SIZE, ExtractionConfig
from .oracle import MAX_WINDOWS, GuardError, exact_counts
from .pipeline import ConsistencyError, format_tsv, read_tsv, run_kilograms
from .signatures import DEFAULT_LIMIT, DEFAULT_MAX_FPR, build_rule, select_best_n
from .zipf import ZipfModel, bound_limit, expected_collisions, sample_zipf_stream

EXIT_USAGE, EXIT_IO, EXIT_CONSISTENCY, EXIT_GUARD = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _digest(path: Path) -> dict:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return {"path": str(path), "size": path.stat().st_size, "sha256": h.hexdigest()}


def write_manifest(out: Path, command: str, config: dict, inputs, timings: dict,
                   outputs) -> Path:
    manifest = {
        "tool": "kilograms",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": [_digest(Path(p)) for p in inputs],
        "timings": {k: round(v, 6) for k, v in timings.items()},
        "outputs": [str(p) for p in outputs],
    }
    path = Path(str(out) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _config(args) -> ExtractionConfig:
    cfg = ExtractionConfig(args.n, args.k, table_size=args.table_size, stride=args.stride,
                           ss_capacity=args.ss_capacity)
    cfg.check_table_size()
    return cfg


def _corpus(spec) -> FileCorpus:
    corpus = FileCorpus.from_input(spec)
    if len(corpus) == 0:
        raise UsageError(f"input {spec} holds no documents")
    return corpus


def _ingest_errors(report) -> None:
    if report.errors:
        name, msg = report.errors[0]
        raise OSError(f"could not read {len(report.errors)} document(s), first {name}: {msg}")


def cmd_topk(args) -> None:
    cfg = _config(args)
    corpus = _corpus(args.input)
    result = run_kilograms(corpus, cfg, threads=args.threads, batch_bytes=args.batch_bytes)
    _ingest_errors(result.report)
    out = Path(args.out)
    _write_text(out, format_tsv(result.entries, cfg, result.total))
    config = cfg.as_dict() | {"windows": result.total, "inserted": result.inserted,
                              "short_docs": result.report.short_docs}
    write_manifest(out, "topk", config, corpus.paths, result.timings, [out])


def cmd_oracle(args) -> None:
    cfg = _config(args)
    corpus = _corpus(args.input)
    t0 = time.perf_counter()
    exact = exact_counts(corpus, cfg, limit=args.limit)
    entries = exact.ranked(cfg.k)
    out = Path(args.out)
    _write_text(out, format_tsv(entries, cfg, exact.total))
    write_manifest(out, "oracle", cfg.as_dict() | {"limit": args.limit}, corpus.paths,
                   {"total": time.perf_counter() - t0}, [out])


def _read_labels(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            key, sep, label = line.rpartition("\t")
            if not sep or not label:
                raise UsageError(f"{path}:{i}: expected '<path>\\t<label>'")
            out[os.path.realpath(key)] = label
    return out


def _labels_for(ids, labels_file) -> list[str] | None:
    if labels_file is None:
        return None
    table = _read_labels(labels_file)
    missing = [d for d in ids if os.path.realpath(d) not in table]
    if missing:
        raise UsageError(f"{len(missing)} document(s) lack a label, first {missing[0]}")
    return [table[os.path.realpath(d)] for d in ids]


def docs_path(path) -> Path:
    return Path(str(path) + ".docs.txt")


def cmd_vectorize(args) -> None:
    _, entries = read_tsv(args.ngrams)
    if not entries:
        raise UsageError(f"{args.ngrams} lists no n-grams")
    corpus = _corpus(args.input)
    t0 = time.perf_counter()
    labels = _labels_for(corpus.ids, args.labels)
    m = vectorize(corpus, [e.ngram for e in entries], mode=args.mode, labels=labels,
                  threads=args.threads, batch_bytes=args.batch_bytes)
    out = Path(args.out)
    outputs = [out]
    if args.format == "sparse":
        write_sparse(out, m)
        outputs.append(feature_map_path(out))
    else:
        write_delimited(out, m)
    _write_text(docs_path(out), "".join(f"{d}\n" for d in corpus.ids))
    outputs.append(docs_path(out))
    config = {"ngrams": str(args.ngrams), "mode": args.mode, "format": args.format,
              "n": len(entries[0].ngram), "features": len(entries),
              "labels": None if args.labels is None else str(args.labels)}
    write_manifest(out, "vectorize", config, list(corpus.paths), {"total": time.perf_counter() - t0},
                   outputs)


def _matrix_labels(m: FeatureMatrix, path, labels_file) -> list[str]:
    if labels_file is None:
        return list(m.labels)
    ids_file = docs_path(path)
    if not ids_file.exists():
        raise UsageError(f"{path}: --labels needs the {ids_file.name} sidecar written by vectorize")
    ids = ids_file.read_text(encoding="utf-8").splitlines()
    if len(ids) != m.shape[0]:
        raise UsageError(f"{ids_file} lists {len(ids)} documents, matrix has {m.shape[0]} rows")
    return _labels_for(ids, labels_file)


def _restrict(m: FeatureMatrix, keep: set[bytes] | None) -> FeatureMatrix:
    if keep is None:
        return m
    cols = [j for j, f in enumerate(m.features) if f in keep]
    return FeatureMatrix([m.features[j] for j in cols], m.values[:, cols].tocsr(), m.mode,
                         m.labels, m.doc_ids)


def cmd_yara(args) -> None:
    t0 = time.perf_counter()
    keep = None
    if args.ngrams:
        keep = {e.ngram for p in args.ngrams for e in read_tsv(p)[1]}
    candidates = []
    report = []
    for path in args.matrix:
        m = read_sparse(path)
        labels = _matrix_labels(m, path, args.labels)
        m = _restrict(m, keep)
        if m.shape[1] == 0:
            continue
        lens = {len(f) for f in m.features}
        if len(lens) != 1:
            raise UsageError(f"{path}: mixed n-gram lengths")
        n = lens.pop()
        positive = np.array([lab == args.target for lab in labels])
        if not positive.any() or positive.all():
            raise UsageError(f"{path}: target {args.target!r} must label some but not all rows")
        weights = None if args.weights is None else np.loadtxt(args.weights, ndmin=1)
        built = build_rule(m, positive, args.name, weights=weights, limit=args.max_candidates,
                           max_fpr=args.max_fpr, meta={"target": args.target, "n": str(n)})
        if built is None:
            report.append({"matrix": str(path), "n": n, "rule": None})
            continue
        rule, metrics = built
        candidates.append((n, rule, metrics))
        report.append({"matrix": str(path), "n": n, "patterns": len(rule.patterns),
                       "precision": metrics.precision, "recall": metrics.recall, "f1": metrics.f1,
                       "fpr": metrics.fpr})
    if not candidates:
        raise UsageError("no n-gram survived the candidate filters")
    n, rule, metrics = select_best_n(candidates)
    out = Path(args.out)
    rule.write(out)
    config = {"target": args.target, "name": args.name, "max_candidates": args.max_candidates,
              "max_fpr": args.max_fpr, "chosen_n": n, "train_f1": metrics.f1,
              "per_n": report, "weights": args.weights}
    inputs = list(args.matrix) + [feature_map_path(p) for p in args.matrix]
    inputs += list(args.ngrams or []) + ([args.labels] if args.labels else [])
    write_manifest(out, "yara", config, inputs, {"total": time.perf_counter() - t0}, [out])
    print(f"{args.name}: n={n} patterns={len(rule.patterns)} train_f1={metrics.f1:.4f}")


def cmd_zipf(args) -> None:
    t0 = time.perf_counter()
    model = ZipfModel(args.p, args.alphabet)
    corpus = sample_zipf_stream(model, args.length, args.seed, token_length=args.token_length,
                                tokens_per_doc=args.tokens_per_doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(6, len(str(len(corpus))))
    paths = []
    for batch in corpus.batches():
        for i in range(batch.ndocs):
            p = out / f"zipf{batch.first_doc + i:0{width}d}.bin"
            p.write_bytes(batch.doc(i).tobytes())
            paths.append(p)
    config = {"p": args.p, "alphabet": args.alphabet, "length": args.length, "seed": args.seed,
              "token_length": args.token_length, "tokens_per_doc": args.tokens_per_doc}
    write_manifest(out / "corpus", "zipf", config, [], {"total": time.perf_counter() - t0}, paths)


def cmd_bound(args) -> None:
    print(f"limit\t{bound_limit(args.L, args.B):.1f}")
    if args.k is not None and args.p is not None:
        model = ZipfModel(args.p, args.alphabet)
        print(f"expected\t{expected_collisions(args.k, args.L, args.B, model):.1f}")


def cmd_bench(args) -> None:
    try:
        ns = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --n-list {args.n_list!r}") from None
    if not ns:
        raise UsageError("--n-list is empty")
    corpus = _corpus(args.input)
    rows = ["n\tstride\tpass1\tselect\tpass2\ttotal"]
    print(rows[0], flush=True)
    for n in ns:
        cfg = ExtractionConfig(n, args.k, table_size=args.table_size)
        res = run_kilograms(corpus, cfg, threads=args.threads, batch_bytes=args.batch_bytes)
        _ingest_errors(res.report)
        t = res.timings
        rows.append(f"{n}\t{cfg.stride}\t{t['pass1']:.3f}\t{t['select']:.3f}\t{t['pass2']:.3f}\t{t['total']:.3f}")
        print(rows[-1], flush=True)
    if args.out:
        out = Path(args.out)
        _write_text(out, "\n".join(rows) + "\n")
        write_manifest(out, "bench", {"n_list": ns, "k": args.k, "B": args.table_size},
                       corpus.paths, {}, [out])


def _positive_int(text: str) -> int:
    v = int(float(text)) if "e" in text.lower() else int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _extraction_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_positive_int, required=True, help="n-gram length in bytes")
    p.add_argument("--k", type=_positive_int, required=True, help="number of n-grams to return")
    p.add_argument("--stride", type=_positive_int, default=None, help="hashing stride (default ceil(n/4))")
    p.add_argument("--table-size", type=_positive_int, default=DEFAULT_TABLE_SIZE,
                   help="pass-1 bucket count B (default 2^31-19, about 8.6 GB of counters)")
    p.add_argument("--ss-capacity", type=_positive_int, default=None,
                   help="Space-Saving capacity (default max(k+300000, 3k))")
    p.add_argument("--input", required=True, help="corpus directory or file listing paths")
    p.add_argument("--out", required=True, help="output TSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kilograms", description="Top-k byte n-grams for large n, features and Yara rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=default_threads(),
                        help="worker threads (results do not depend on this)")
    common.add_argument("--batch-bytes", type=_positive_int, default=DEFAULT_BATCH_BYTES,
                        help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("topk", parents=[common], help="two-pass top-k extraction")
    _extraction_flags(p)
    p.set_defaults(func=cmd_topk)

    p = sub.add_parser("oracle", parents=[common], help="exact top-k by brute force (small corpora)")
    _extraction_flags(p)
    p.add_argument("--limit", type=_positive_int, default=MAX_WINDOWS,
                   help="refuse corpora with more stride-passing windows than this")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("vectorize", parents=[common], help="per-document n-gram counts")
    p.add_argument("--ngrams", required=True, help="TSV from topk or oracle")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["count", "binary"], default="count")
    p.add_argument("--format", choices=["sparse", "csv"], default="sparse")
    p.add_argument("--labels", default=None, help="file of '<path>\\t<label>' lines")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("yara", parents=[common], help="generate a Yara rule for one class")
    p.add_argument("--ngrams", action="append", default=None,
                   help="restrict features to n-grams listed in these TSVs (repeatable)")
    p.add_argument("--matrix", action="append", required=True,
                   help="sparse training matrix from vectorize, one per n (repeatable)")
    p.add_argument("--labels", default=None,
                   help="'<path>\\t<label>' file; default is the labels stored in the matrix")
    p.add_argument("--target", default=None, help="positive class label (default: --name)")
    p.add_argument("--weights", default=None, help="text file of per-feature weights")
    p.add_argument("--max-candidates", type=_positive_int, default=DEFAULT_LIMIT)
    p.add_argument("--max-fpr", type=float, default=DEFAULT_MAX_FPR)
    p.add_argument("--name", required=True, help="rule name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_yara)

    p = sub.add_parser("zipf", help="write a synthetic Zipf token corpus")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alphabet", type=_positive_int, default=None, help="omit for an infinite alphabet")
    p.add_argument("--length", type=_positive_int, required=True, help="number of tokens")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--token-length", type=_positive_int, default=8)
    p.add_argument("--tokens-per-doc", type=_positive_int, default=4096)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_zipf)

    p = sub.add_parser("bound", help="expected collision volume and its limit")
    p.add_argument("--L", type=float, required=True, help="number of windows")
    p.add_argument("--B", type=_positive_int, default=DEFAULT_TABLE_SIZE)
    p.add_argument("--k", type=_positive_int, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--alphabet", type=_positive_int, default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("bench", parents=[common], help="pass timings across n")
    p.add_argument("--n-list", default="8,16,32,64,128,256,512,1024")
    p.add_argument("--k", type=_positive_int, default=1000)
    p.add_argument("--table-size", type=_positive_int, default=DEFAULT_TABLE_SIZE)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "target", "unset") is None:
        args.target = args.name
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda m, *a, **k: print(f"warning: {m}", file=sys.stderr)
            args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"kilograms {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConsistencyError as exc:
        print(f"kilograms {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except GuardError as exc:
        print(f"kilograms {args.command}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"kilograms {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
