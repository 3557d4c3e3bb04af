"""Yara signature generation from selected n-grams.

The recipe: rank n-grams by how indicative they are of the target class,
keep the best ``limit``, drop those present in more than ``max_fpr`` of the
negative training documents, keep one n-gram per group of n-grams that
always co-occur, and emit a rule that fires if any of them is present.
Across several n-gram lengths, the rule with the best training F1 wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .corpus import as_corpus
from .features import FeatureMatrix, PatternMatcher

DEFAULT_LIMIT = 4000
DEFAULT_MAX_FPR = 0.05
DEFAULT_ALPHA = 0.05

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]{0,127}\Z")
_KEYWORDS = frozenset(
    "all and any ascii at base64 base64wide condition contains endswith entrypoint false "
    "filesize for fullword global icontains iendswith iequals import in include int16 "
    "int16be int32 int32be int8 int8be istartswith matches meta nocase none not of or "
    "private rule startswith strings them true uint16 uint16be uint32 uint32be uint8 "
    "uint8be wide xor defined".split())


@dataclass
class SignatureRule:
    name: str
    patterns: list[str]
    condition: str = "any of them"
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ValueError("a rule needs at least one pattern")
        if not _IDENT.match(self.name) or self.name in _KEYWORDS:
            raise ValueError(f"invalid rule name {self.name!r}")
        seen = set()
        for p in self.patterns:
            if p in seen:
                raise ValueError(f"duplicate pattern {p[:16]}...")
            seen.add(p)

    @property
    def ngrams(self) -> list[bytes]:
        return [bytes.fromhex(p) for p in self.patterns]

    def text(self) -> str:
        lines = [f"rule {self.name}", "{"]
        if self.meta:
            lines.append("    meta:")
            lines.extend(f'        {k} = "{_escape(v)}"' for k, v in self.meta.items())
        lines.append("    strings:")
        for i, p in enumerate(self.patterns):
            spaced = " ".join(p[j:j + 2] for j in range(0, len(p), 2))
            lines.append(f"        $s{i} = {{ {spaced} }}")
        lines += ["    condition:", f"        {self.condition}", "}"]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())


def _escape(v: str) -> str:
    return str(v).replace("\\", "\\\\").replace('"', '\\"')


@dataclass(frozen=True)
class RuleMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.0


def metrics_from_firings(fired: Sequence[bool], positive: Sequence[bool]) -> RuleMetrics:
    fired = np.asarray(fired, dtype=bool)
    positive = np.asarray(positive, dtype=bool)
    if fired.shape != positive.shape:
        raise ValueError("firings and labels differ in length")
    if not positive.any():
        raise ValueError("no positive documents: recall is undefined")
    return RuleMetrics(tp=int(np.sum(fired & positive)), fp=int(np.sum(fired & ~positive)),
                       tn=int(np.sum(~fired & ~positive)), fn=int(np.sum(~fired & positive)))


def presence_log_odds(matrix: FeatureMatrix, positive: Sequence[bool]) -> np.ndarray:
    """Per-feature weight ``logit(p_pos) - logit(p_neg)`` of presence rates.

    Each class rate gets one pseudo-document at the pooled rate ``r``:
    ``(docs with feature + r) / (docs + 1)``. Equal class rates give weight
    0 whatever the class sizes, so absence from the positives never scores
    positive. A stand-in for learned linear-model coefficients.
    """
    pos = np.asarray(positive, dtype=bool)
    pres = matrix.presence()
    a = np.asarray(pres[pos].sum(axis=0)).ravel()
    b = np.asarray(pres[~pos].sum(axis=0)).ravel()
    r = (a + b) / len(pos)
    p = (a + r) / (pos.sum() + 1)
    q = (b + r) / ((~pos).sum() + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.log(p) - np.log1p(-p) - np.log(q) + np.log1p(-q)
    # present in every document, or in none: both rates equal
    return np.nan_to_num(w, nan=0.0)


def enrichment_pvalues(matrix: FeatureMatrix, positive: Sequence[bool]) -> np.ndarray:
    """One-sided hypergeometric p-value that each feature is over-represented in positives."""
    pos = np.asarray(positive, dtype=bool)
    pres = matrix.presence()
    a = np.asarray(pres[pos].sum(axis=0)).ravel()
    total = np.asarray(pres.sum(axis=0)).ravel()
    return stats.hypergeom.sf(a - 1, len(pos), total, pos.sum())


def proxy_weights(matrix: FeatureMatrix, positive: Sequence[bool],
                  alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Log-odds weights, zeroed unless enrichment is significant at family-wise ``alpha``.

    The Bonferroni cut (``alpha`` over the feature count) plays the part of
    a sparse model's penalty: rare n-grams seen in a couple of positives by
    chance get weight 0 instead of a large log-odds.
    """
    w = presence_log_odds(matrix, positive)
    cut = alpha / max(len(matrix.features), 1)
    return np.where(enrichment_pvalues(matrix, positive) <= cut, w, 0.0)


def select_candidates(features: Sequence[bytes], weights, limit: int = DEFAULT_LIMIT,
                      min_weight: float | None = None) -> list[int]:
    """Indices of the ``limit`` highest-weight features; ties by n-gram bytes.

    With ``min_weight``, only features weighted strictly above it qualify.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(features):
        raise ValueError(f"{len(weights)} weights for {len(features)} features")
    pool = range(len(features)) if min_weight is None else np.flatnonzero(weights > min_weight).tolist()
    order = sorted(pool, key=lambda i: (-weights[i], features[i]))
    return order[:max(limit, 0)]


def filter_fpr(candidates: Sequence[int], matrix: FeatureMatrix, positive: Sequence[bool],
               max_fpr: float = DEFAULT_MAX_FPR) -> list[int]:
    """Drop candidates present in more than ``max_fpr`` of negative documents."""
    neg = ~np.asarray(positive, dtype=bool)
    if not neg.any():
        raise ValueError("no negative documents: false-positive rate is undefined")
    rates = np.asarray(matrix.presence()[neg].sum(axis=0)).ravel() / neg.sum()
    return [c for c in candidates if rates[c] <= max_fpr]


def dedupe_cooccurring(candidates: Sequence[int], matrix: FeatureMatrix) -> list[int]:
    """Keep one candidate per identical document-presence pattern.

    The survivor is the lexicographically smallest n-gram of its group;
    survivors keep their order in ``candidates``.
    """
    cols = matrix.presence().tocsc()
    best: dict[bytes, int] = {}
    for c in candidates:
        key = cols.indices[cols.indptr[c]:cols.indptr[c + 1]].tobytes()
        cur = best.get(key)
        if cur is None or matrix.features[c] < matrix.features[cur]:
            best[key] = c
    keep = set(best.values())
    return [c for c in candidates if c in keep]


def emit_rule(ngrams: Sequence[bytes], name: str, meta: dict[str, str] | None = None) -> SignatureRule:
    ngrams = list(dict.fromkeys(bytes(g) for g in ngrams))
    if not ngrams:
        raise ValueError("cannot emit a rule without n-grams")
    return SignatureRule(name, [g.hex().upper() for g in ngrams], meta=dict(meta or {}))


def evaluate_rule(rule: SignatureRule, corpus, positive: Sequence[bool]) -> RuleMetrics:
    """Scan documents; the rule fires when any pattern occurs as a substring."""
    matcher = PatternMatcher(rule.ngrams)
    corpus = as_corpus(corpus)
    fired = np.zeros(len(corpus), dtype=bool)
    for batch in corpus.batches():
        docs, _ = matcher.match_batch(batch.data, batch.offsets)
        fired[np.unique(docs) + batch.first_doc] = True
    return metrics_from_firings(fired, positive)


def rule_firings(rule: SignatureRule, matrix: FeatureMatrix) -> np.ndarray:
    """Firings computed from a feature matrix that contains every rule pattern."""
    col = {f: j for j, f in enumerate(matrix.features)}
    cols = [col[g] for g in rule.ngrams]
    return np.asarray(matrix.presence()[:, cols].sum(axis=1)).ravel() > 0


def build_rule(matrix: FeatureMatrix, positive: Sequence[bool], name: str, weights=None,
               limit: int = DEFAULT_LIMIT, max_fpr: float = DEFAULT_MAX_FPR,
               meta: dict[str, str] | None = None,
               min_weight: float | None = 0.0) -> tuple[SignatureRule, RuleMetrics] | None:
    """Full recipe on one training matrix; returns the rule and its training metrics.

    Without ``weights`` the built-in ``proxy_weights`` are used. Only
    positively weighted n-grams are candidates unless ``min_weight`` says
    otherwise. Returns None when no candidate survives the filters.
    """
    if weights is None:
        weights = proxy_weights(matrix, positive)
    cands = select_candidates(matrix.features, weights, limit, min_weight)
    cands = filter_fpr(cands, matrix, positive, max_fpr)
    cands = dedupe_cooccurring(cands, matrix)
    if not cands:
        return None
    rule = emit_rule([matrix.features[c] for c in cands], name, meta)
    return rule, metrics_from_firings(rule_firings(rule, matrix), positive)


def select_best_n(candidates: Sequence[tuple[int, SignatureRule, RuleMetrics]]):
    """The ``(n, rule, metrics)`` with the best training F1; ties go to smaller n."""
    if not candidates:
        raise ValueError("no candidate rules")
    return min(candidates, key=lambda t: (-t[2].f1, t[0]))


def combine_rules(rules: Sequence[SignatureRule], name: str) -> SignatureRule:
    """Union of the patterns of several rules, first occurrence kept."""
    pats = list(dict.fromkeys(p for r in rules for p in r.patterns))
    return SignatureRule(name, pats, meta={"combined": ",".join(r.name for r in rules)})
