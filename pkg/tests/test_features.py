import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kilograms.features import (FeatureMatrix, PatternMatcher, feature_map_path, read_delimited,
                                read_sparse, vectorize, write_delimited, write_sparse)
from kilograms.oracle import exact_count


def test_overlapping_count():
    m = vectorize([b"aaaa"], [b"aa"])
    assert m.row(0) == {0: 3}


def test_absent_feature_has_no_entry():
    m = vectorize([b"abcd", b"zzzz"], [b"zz", b"bc"])
    assert m.row(0) == {1: 1}
    assert m.row(1) == {0: 3}
    assert m.values.nnz == 2


def test_planted_features_match_oracle(rng):
    feats = [rng.integers(0, 256, 16, dtype=np.uint8).tobytes() for _ in range(50)]
    docs = []
    for _ in range(200):
        pieces = [rng.integers(0, 256, 64, dtype=np.uint8).tobytes()]
        for j in rng.choice(50, size=int(rng.integers(0, 6)), replace=True):
            pieces.append(feats[int(j)])
            pieces.append(rng.integers(0, 256, int(rng.integers(0, 20)), dtype=np.uint8).tobytes())
        docs.append(b"".join(pieces))
    m = vectorize(docs, feats, batch_bytes=4096)
    dense = m.values.toarray()
    for i, d in enumerate(docs):
        for j, f in enumerate(feats):
            assert dense[i, j] == exact_count([d], f)


@settings(max_examples=200)
@given(st.lists(st.binary(max_size=40), min_size=1, max_size=5),
       st.lists(st.binary(min_size=2, max_size=2), min_size=1, max_size=6, unique=True))
def test_counts_equal_oracle_property(docs, feats):
    m = vectorize(docs, feats)
    dense = m.values.toarray()
    for i, d in enumerate(docs):
        for j, f in enumerate(feats):
            assert dense[i, j] == exact_count([d], f)
    b = vectorize(docs, feats, mode="binary")
    assert np.array_equal(b.values.toarray(), (dense > 0).astype(np.int64))


def test_binary_mode(rng):
    m = vectorize([b"abab ab", b"cd"], [b"ab", b"cd"], mode="binary")
    assert m.mode == "binary"
    assert set(m.values.data.tolist()) == {1}


def test_rejects_mixed_lengths_and_bad_mode():
    with pytest.raises(ValueError):
        vectorize([b"abc"], [b"ab", b"abc"])
    with pytest.raises(ValueError):
        vectorize([b"abc"], [b"ab"], mode="tfidf")


def test_thread_invariance(rng):
    docs = [rng.integers(0, 4, 3000, dtype=np.uint8).tobytes() for _ in range(30)]
    feats = [bytes(x) for x in {tuple(rng.integers(0, 4, 6).tolist()) for _ in range(40)}]
    a = vectorize(docs, feats)
    b = vectorize(docs, feats, threads=4, batch_bytes=5000)
    assert a == b


def test_matcher_mixed_lengths():
    m = PatternMatcher([b"ab", b"abc", b"c"])
    assert m.count(b"abcab") == {0: 2, 1: 1, 2: 1}
    assert not m.any_match(b"zzz")
    with pytest.raises(ValueError):
        PatternMatcher([b""])


def test_many_patterns_one_length():
    pats = [bytes([i, j]) for i in range(40) for j in range(40)]
    m = PatternMatcher(pats)
    doc = bytes(range(40)) * 3 + b"\x05\x05\x05"
    got = m.count(doc)
    for i, p in enumerate(pats):
        assert got.get(i, 0) == exact_count([doc], p)


def _three_docs():
    m = vectorize([b"aaaa", b"xyz", b"aaxyaa"], [b"aa", b"xy"], labels=["pos", "neg", "pos"])
    return m


GOLDEN_SPARSE = "pos 0:3\nneg 1:1\npos 0:2 1:1\n"
GOLDEN_MAP = "0\t6161\n1\t7879\n"
GOLDEN_CSV = "label,6161,7879\npos,3,0\nneg,0,1\npos,2,1\n"


def test_golden_files(tmp_path):
    m = _three_docs()
    write_sparse(tmp_path / "m.txt", m)
    write_delimited(tmp_path / "m.csv", m)
    assert (tmp_path / "m.txt").read_bytes() == GOLDEN_SPARSE.encode()
    assert feature_map_path(tmp_path / "m.txt").read_bytes() == GOLDEN_MAP.encode()
    assert (tmp_path / "m.csv").read_bytes() == GOLDEN_CSV.encode()


def test_roundtrips(tmp_path):
    m = _three_docs()
    write_sparse(tmp_path / "m.txt", m)
    write_delimited(tmp_path / "m.csv", m)
    assert read_sparse(tmp_path / "m.txt") == m
    assert read_delimited(tmp_path / "m.csv") == m


def test_empty_row_is_label_only(tmp_path):
    m = vectorize([b"nothing", b"aa"], [b"aa"], labels=["x", "y"])
    write_sparse(tmp_path / "m.txt", m)
    assert (tmp_path / "m.txt").read_text().splitlines() == ["x", "y 0:1"]
    assert read_sparse(tmp_path / "m.txt") == m


def test_unlabelled_rows_get_zero(tmp_path):
    m = vectorize([b"aa"], [b"aa"])
    write_sparse(tmp_path / "m.txt", m)
    assert (tmp_path / "m.txt").read_text() == "0 0:1\n"


def test_empty_matrix_refused(tmp_path):
    m = vectorize([], [b"aa"])
    with pytest.raises(ValueError):
        write_sparse(tmp_path / "m.txt", m)


def test_matrix_validation():
    from scipy import sparse
    with pytest.raises(ValueError):
        FeatureMatrix([b"a"], sparse.csr_matrix((2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        FeatureMatrix([b"a"], sparse.csr_matrix((2, 1), dtype=np.int64), labels=["x"])
