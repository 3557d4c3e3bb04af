import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from kilograms.hashgram import DEFAULT_TABLE_SIZE, default_ss_capacity
from kilograms.zipf import (ZipfModel, bound_limit, expected_collisions, expected_collisions_zeta,
                            harmonic, rank_tokens, sample_ranks, sample_zipf_stream, trigamma)


def test_pmf_small_alphabet():
    m = ZipfModel(1.0, 3)
    want = Fraction(1) / (Fraction(1) + Fraction(1, 4) + Fraction(1, 9))
    assert want == Fraction(36, 49)
    assert m.pmf(1) == pytest.approx(float(want), abs=1e-15)


def test_pmf_p0_ratio():
    m = ZipfModel(0.0, 50)
    assert m.pmf(1) / m.pmf(2) == pytest.approx(2.0)
    assert m.pmf(1) == pytest.approx(1 / sum(1 / i for i in range(1, 51)))


@pytest.mark.parametrize("p,alphabet", [(0.0, 1000), (1.0, 10**5), (2.5, 77), (1.0, 1)])
def test_pmf_normalised_and_cdf_monotone(p, alphabet):
    m = ZipfModel(p, alphabet)
    assert abs(m.pmf_array(alphabet).sum() - 1.0) <= 1e-9
    cdf = [m.cdf(x) for x in range(1, min(alphabet, 500) + 1)]
    assert all(b >= a for a, b in zip(cdf, cdf[1:]))
    assert m.cdf(alphabet) == pytest.approx(1.0, abs=1e-12)


def test_pmf_rank_range():
    with pytest.raises(ValueError):
        ZipfModel(1.0, 3).pmf(4)
    with pytest.raises(ValueError):
        ZipfModel(1.0, 3).pmf(0)
    with pytest.raises(ValueError):
        ZipfModel(0.0)
    with pytest.raises(ValueError):
        ZipfModel(-1.0, 3)


@pytest.mark.parametrize("z,q", [(10**8, 2.0), (3 * 10**7, 1.0), (10**9, 1.5), (1000, 2.0)])
def test_harmonic_against_mpmath(z, q):
    mpmath.mp.dps = 30
    want = mpmath.zeta(q, 1) - mpmath.zeta(q, z + 1) if q != 1 else mpmath.harmonic(z)
    assert harmonic(z, q) == pytest.approx(float(want), rel=1e-12)


def test_infinite_alphabet_is_zeta():
    m = ZipfModel(1.0)
    assert m.norm == pytest.approx(math.pi**2 / 6)
    assert m.tail(10) == pytest.approx(float(mpmath.zeta(2, 11)) * 6 / math.pi**2)


def test_expected_collisions_edges():
    m = ZipfModel(1.0, 1000)
    assert expected_collisions(1000, 1e9, DEFAULT_TABLE_SIZE, m) == 0.0
    assert expected_collisions(10, 0, DEFAULT_TABLE_SIZE, m) == 0.0
    with pytest.raises(ValueError):
        expected_collisions(1001, 1e9, DEFAULT_TABLE_SIZE, m)


def test_expected_collisions_example_below_bound():
    L, B = 1e9, DEFAULT_TABLE_SIZE
    got = expected_collisions(1000, L, B, ZipfModel(1.0, 10**6))
    mpmath.mp.dps = 30
    tail = mpmath.zeta(2, 1001) - mpmath.zeta(2, 10**6 + 1)
    norm = mpmath.zeta(2, 1) - mpmath.zeta(2, 10**6 + 1)
    assert got == pytest.approx(float(1000 * L * tail / norm / B), rel=1e-10)
    assert got <= bound_limit(L, B)


def test_zeta_closed_form_matches_tail():
    for k in (1, 10, 1000):
        assert expected_collisions_zeta(k, 1e9, 1009) == pytest.approx(
            expected_collisions(k, 1e9, 1009, ZipfModel(1.0)), rel=1e-10)


def test_bound_values():
    assert 283_000 <= bound_limit(1e15, 2**31 - 19) <= 283_200
    assert bound_limit(0, 1009) == 0
    assert bound_limit(1e12, 2 * 1009) == pytest.approx(bound_limit(1e12, 1009) / 2)
    with pytest.raises(ValueError):
        bound_limit(1.0, 0)


def test_reciprocal_dominates_trigamma():
    k = np.arange(1, 10**6 + 1, dtype=np.float64)
    assert np.all(1 / k > trigamma(k + 1))


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
@pytest.mark.parametrize("alphabet", [10**4, 10**6, None])
def test_tail_formula_never_exceeds_bound(p, alphabet):
    m = ZipfModel(p, alphabet)
    B, L = DEFAULT_TABLE_SIZE, 1e12
    lim = bound_limit(L, B)
    for k in [1, 2, 3, 10, 57, 100, 999, 5000, 10**4]:
        if alphabet is not None and k > alphabet:
            continue
        assert expected_collisions(k, L, B, m) <= lim * (1 + 1e-12)


def test_bound_is_approached_for_p1():
    B, L = DEFAULT_TABLE_SIZE, 1e12
    ratios = [expected_collisions(k, L, B, ZipfModel(1.0)) / bound_limit(L, B) for k in (1, 10, 100, 10**4)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.999


def test_default_capacity():
    assert default_ss_capacity(100_000) == 400_000
    assert default_ss_capacity(200_000) == 600_000
    assert default_ss_capacity(1) == 300_001


def test_large_exponent_concentrates():
    r = sample_ranks(ZipfModel(20.0, 1000), 100_000, seed=1)
    assert np.mean(r == 1) >= 0.99


def test_stream_is_deterministic():
    a = sample_zipf_stream(ZipfModel(1.0, 1000), 5000, seed=3, tokens_per_doc=7)
    b = sample_zipf_stream(ZipfModel(1.0, 1000), 5000, seed=3, tokens_per_doc=7)
    c = sample_zipf_stream(ZipfModel(1.0, 1000), 5000, seed=4, tokens_per_doc=7)
    assert a.data.tobytes() == b.data.tobytes() and np.array_equal(a.offsets, b.offsets)
    assert a.data.tobytes() != c.data.tobytes()
    assert len(a) == 715 and int(a.offsets[-1]) == 5000 * 8


@pytest.mark.parametrize("alphabet", [1000, None])
def test_empirical_pmf(alphabet):
    m = ZipfModel(1.0, alphabet)
    r = sample_ranks(m, 10**6, seed=11)
    freq = np.bincount(r, minlength=21)[1:21] / len(r)
    assert np.max(np.abs(freq - m.pmf_array(20))) <= 0.01


def test_tokens_distinct_per_rank():
    t = rank_tokens(np.arange(1, 200_001), 8)
    assert len({row.tobytes() for row in t}) == 200_000
    long = rank_tokens(np.array([5, 5, 6]), 20)
    assert long[0].tobytes() == long[1].tobytes() != long[2].tobytes()


@given(st.floats(0, 6), st.integers(1, 2000), st.integers(1, 2000))
def test_cdf_within_unit_interval(p, alphabet, x):
    m = ZipfModel(p, alphabet)
    x = min(x, alphabet)
    assert 0 < m.cdf(x) <= 1 + 1e-12
    assert m.tail(x) >= 0
