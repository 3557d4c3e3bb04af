import numpy as np
import pytest
import yara
from hypothesis import given, strategies as st
from scipy import sparse

from kilograms.features import FeatureMatrix, vectorize
from kilograms.oracle import exact_count
from kilograms.signatures import (RuleMetrics, SignatureRule, build_rule, combine_rules,
                                  dedupe_cooccurring, emit_rule, evaluate_rule, filter_fpr,
                                  enrichment_pvalues, metrics_from_firings, presence_log_odds, proxy_weights,
                                  select_best_n,
                                  select_candidates)


def _matrix(dense, features=None):
    dense = np.asarray(dense, dtype=np.int64)
    features = features or [bytes([65 + j]) * 2 for j in range(dense.shape[1])]
    return FeatureMatrix(features, sparse.csr_matrix(dense))


def test_select_candidates_examples(rng):
    feats = [b"c", b"a", b"b"]
    assert sorted(select_candidates(feats, [0.1, 0.2, 0.3], limit=10)) == [0, 1, 2]
    assert select_candidates(feats, [1, 1, 1], limit=2) == [1, 2]
    w = rng.normal(size=300)
    fs = [bytes([i % 256, i // 256]) for i in range(300)]
    want = [i for _, i in sorted((-w[i], i) for i in range(300))][:40]
    assert select_candidates(fs, w, limit=40) == want
    with pytest.raises(ValueError):
        select_candidates(feats, [1, 2])


def test_select_candidates_min_weight():
    assert select_candidates([b"a", b"b", b"c"], [0.5, 0.0, -1.0], min_weight=0.0) == [0]


def test_filter_fpr_examples():
    pos = [True, True, False, False, False, False]
    m = _matrix([[1, 1, 1], [1, 0, 1], [1, 0, 0], [1, 0, 0], [1, 0, 1], [1, 0, 0]])
    assert filter_fpr([0, 1, 2], m, pos, 0.05) == [1]
    assert filter_fpr([0, 1, 2], m, pos, 0.25) == [1, 2]
    with pytest.raises(ValueError):
        filter_fpr([0], m, [True] * 6)


@given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=3, max_size=12),
       st.floats(0, 1))
def test_filter_fpr_matches_direct_rates(rows, max_fpr):
    pos = [i % 3 == 0 for i in range(len(rows))]
    m = _matrix(rows)
    neg = [r for r, p in zip(rows, pos) if not p]
    want = [j for j in range(4) if sum(r[j] for r in neg) / len(neg) <= max_fpr]
    assert filter_fpr(range(4), m, pos, max_fpr) == want


def test_dedupe_examples():
    m = _matrix([[1, 1, 0], [0, 0, 1], [1, 1, 0]], [b"zz", b"aa", b"mm"])
    assert dedupe_cooccurring([0, 1, 2], m) == [1, 2]
    m2 = _matrix([[1, 0], [0, 1]])
    assert dedupe_cooccurring([0, 1], m2) == [0, 1]


def test_dedupe_counts_are_not_presence():
    m = _matrix([[3, 1], [0, 0]], [b"bb", b"aa"])
    assert dedupe_cooccurring([0, 1], m) == [1]


def test_dedupe_adversarial_duplicates(rng):
    base = rng.integers(0, 2, (40, 25))
    dense = np.repeat(base, 10, axis=1)
    feats = [rng.integers(0, 256, 4, dtype=np.uint8).tobytes() for _ in range(250)]
    m = _matrix(dense, feats)
    kept = dedupe_cooccurring(list(range(250)), m)
    groups = {}
    for j in range(250):
        groups.setdefault(tuple(dense[:, j] > 0), []).append(j)
    assert len(kept) == len(groups)
    assert sorted(kept) == sorted(min(g, key=lambda j: feats[j]) for g in groups.values())


GOLDEN_ONE = """rule one
{
    strings:
        $s0 = { 00 01 FE FF 41 42 43 44 }
    condition:
        any of them
}
"""

GOLDEN_THREE = """rule three
{
    meta:
        n = "2"
    strings:
        $s0 = { 61 62 }
        $s1 = { 63 64 }
        $s2 = { 0A 0B }
    condition:
        any of them
}
"""


def test_emit_rule_golden():
    assert emit_rule([b"\x00\x01\xfe\xffABCD"], "one").text() == GOLDEN_ONE
    r = emit_rule([b"ab", b"cd", b"\n\x0b", b"ab"], "three", {"n": "2"})
    assert r.text() == GOLDEN_THREE
    assert r.ngrams == [b"ab", b"cd", b"\n\x0b"]


@given(st.lists(st.binary(min_size=1, max_size=64), min_size=1, max_size=20))
def test_emitted_patterns_decode(grams):
    r = emit_rule(grams, "r")
    assert r.ngrams == list(dict.fromkeys(grams))


def test_rule_validation():
    with pytest.raises(ValueError):
        emit_rule([], "r")
    for bad in ("1abc", "rule", "has space", ""):
        with pytest.raises(ValueError):
            emit_rule([b"ab"], bad)
    with pytest.raises(ValueError):
        SignatureRule("r", ["AB", "AB"])


def test_emitted_rule_compiles_and_scans(tmp_path):
    r = emit_rule([b"\x90\x90\xcc", b"evil"], "demo", {"target": 'a "quoted" name'})
    r.write(tmp_path / "r.yar")
    compiled = yara.compile(filepath=str(tmp_path / "r.yar"))
    assert compiled.match(data=b"xx evil yy")
    assert compiled.match(data=b"\x00\x90\x90\xcc")
    assert not compiled.match(data=b"nothing here")


def test_evaluate_rule_on_planted_corpus(rng):
    g1, g2 = b"marker-one-bytes", b"marker-two-bytes"
    docs, pos = [], []
    for i in range(60):
        body = rng.integers(0, 256, 300, dtype=np.uint8).tobytes()
        if i < 30:
            body += g1 if i % 3 else (g2 if i % 2 else b"")
        docs.append(body)
        pos.append(i < 30)
    r = emit_rule([g1, g2], "planted")
    got = evaluate_rule(r, docs, pos)
    fired = [any(exact_count([d], g) > 0 for g in (g1, g2)) for d in docs]
    assert got == metrics_from_firings(fired, pos)
    assert got.fp == 0 and got.fpr == 0.0
    assert got.recall == pytest.approx(sum(fired[:30]) / 30)


def test_evaluate_nothing_matches():
    r = emit_rule([b"never"], "r")
    m = evaluate_rule(r, [b"a", b"b"], [True, False])
    assert m.f1 == 0.0 and m.tp == 0
    with pytest.raises(ValueError):
        evaluate_rule(r, [b"a"], [False])


def test_metrics_rates():
    m = RuleMetrics(tp=8, fp=2, tn=88, fn=2)
    assert m.precision == pytest.approx(0.8)
    assert m.recall == pytest.approx(0.8)
    assert m.f1 == pytest.approx(0.8)
    assert m.fpr == pytest.approx(2 / 90)
    z = RuleMetrics(0, 0, 0, 0)
    assert (z.precision, z.recall, z.f1, z.fpr) == (0.0, 0.0, 0.0, 0.0)


def _m(f1_tp, fp=0):
    return RuleMetrics(tp=f1_tp, fp=fp, tn=10, fn=10 - f1_tp)


def test_select_best_n():
    r = emit_rule([b"ab"], "r")
    one = [(64, r, _m(5))]
    assert select_best_n(one) == one[0]
    cands = [(n, r, _m(tp)) for n, tp in ((8, 3), (16, 9), (32, 6), (64, 9))]
    assert select_best_n(cands)[0] == 16
    zeros = [(n, r, _m(0)) for n in (256, 16, 1024)]
    assert select_best_n(zeros)[0] == 16
    with pytest.raises(ValueError):
        select_best_n([])


def test_build_rule_and_monotonicity(rng):
    feats = [rng.integers(0, 256, 8, dtype=np.uint8).tobytes() for _ in range(30)]
    docs, pos = [], []
    for i in range(80):
        p = i < 40
        chosen = [feats[j] for j in range(30) if (j < 10 and p and rng.random() < 0.6)
                  or (j >= 10 and rng.random() < 0.3)]
        docs.append(b"|".join(chosen + [rng.integers(0, 256, 50, dtype=np.uint8).tobytes()]))
        pos.append(p)
    m = vectorize(docs, feats)
    w = presence_log_odds(m, pos)
    cands = select_candidates(m.features, w, 4000, 0.0)
    kept = filter_fpr(cands, m, pos, 0.05)
    deduped = dedupe_cooccurring(kept, m)
    assert len(deduped) <= len(kept) <= len(cands)
    rule, metrics = build_rule(m, pos, "target", meta={"n": "8"})
    assert set(rule.ngrams) <= set(feats[:10])
    assert metrics == evaluate_rule(rule, docs, pos)
    assert metrics.fpr <= 0.05 * len(rule.patterns)


def test_build_rule_nothing_survives():
    m = _matrix([[1], [1]])
    assert build_rule(m, [True, False], "r") is None


def test_combine_rules():
    a = emit_rule([b"ab", b"cd"], "a")
    b = emit_rule([b"cd", b"ef"], "b")
    c = combine_rules([a, b], "both")
    assert c.ngrams == [b"ab", b"cd", b"ef"]
    assert c.meta == {"combined": "a,b"}


def test_log_odds_signs():
    pos = [True] * 3 + [False] * 9
    dense = np.zeros((12, 5), dtype=np.int64)
    dense[0, 0] = 1          # positives only
    dense[3, 1] = 1          # one negative only
    dense[:, 2] = 1          # everywhere
    dense[[0, 3, 4, 5], 3] = 1  # equal rates, 1/3 in each class
    w = presence_log_odds(_matrix(dense), pos)
    assert w[0] > 0 and w[1] < 0
    assert w[2] == 0 and w[4] == 0
    assert w[3] == pytest.approx(0, abs=1e-12)


def test_enrichment_pvalues_match_fisher(rng):
    from scipy.stats import fisher_exact
    pos = np.array([True] * 8 + [False] * 30)
    dense = (rng.random((38, 12)) < rng.random(12)).astype(np.int64)
    m = _matrix(dense, [bytes([j]) for j in range(12)])
    got = enrichment_pvalues(m, pos)
    for j in range(12):
        a, b = dense[pos, j].sum(), dense[~pos, j].sum()
        table = [[a, 8 - a], [b, 30 - b]]
        assert got[j] == pytest.approx(fisher_exact(table, alternative="greater")[1], rel=1e-9)


def test_proxy_weights_drop_chance_enrichment():
    pos = [True] * 40 + [False] * 760
    dense = np.zeros((800, 100), dtype=np.int64)  # the cut is alpha / 100
    dense[:20, 0] = 1                  # marker: half the positives, no negatives
    dense[[0, 1, 100, 200], 1] = 1     # 2 of 40 positives, 2 of 760 negatives
    dense[[5], 2] = 1                  # a single positive
    m = _matrix(dense)
    raw = presence_log_odds(m, pos)
    w = proxy_weights(m, pos)
    assert raw[1] > 0 and raw[2] > 0
    assert w[0] == raw[0] > 0
    assert w[1] == 0 and w[2] == 0
