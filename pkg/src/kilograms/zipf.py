"""Zipf rank-frequency model, collision estimates and synthetic streams.

The model with exponent ``p`` over an alphabet of size ``|A|`` has pmf
``x^-(p+1) / H_|A|^(p+1)`` where ``H_z^(q) = sum_{i<=z} i^-q``. An
alphabet of ``None`` means infinite, i.e. the zeta distribution.

Expected infrequent-collision volume for a top-``k`` whitelist over a
``B``-bucket table after ``L`` windows is ``k L (1 - F(k)) / B``; for
``p >= 1`` this never exceeds ``6 L / (B pi^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .corpus import PackedCorpus
from .hashgram import DEFAULT_TABLE_SIZE, default_ss_capacity

DIRECT_SUM_LIMIT = 10**7

__all__ = [
    "ZipfModel", "harmonic", "zipf_pmf", "zipf_cdf", "expected_collisions",
    "expected_collisions_zeta", "bound_limit", "default_ss_capacity", "trigamma",
    "sample_ranks", "rank_tokens", "sample_zipf_stream",
]


def _power_sum(lo: int, hi: int, q: float) -> float:
    """``sum_{i=lo}^{hi} i^-q``, smallest terms first."""
    if hi < lo:
        return 0.0
    if hi - lo < DIRECT_SUM_LIMIT:
        i = np.arange(hi, lo - 1, -1, dtype=np.float64)
        return float(np.sum(i ** -q))
    if q == 1.0:
        return float(special.digamma(hi + 1) - special.digamma(lo))
    return float(special.zeta(q, lo) - special.zeta(q, hi + 1))


def harmonic(z: int | None, q: float) -> float:
    """Generalised harmonic number ``H_z^(q)``; ``z=None`` is the limit."""
    if z is None:
        if q <= 1:
            raise ValueError(f"H_inf^({q}) diverges")
        return float(special.zeta(q, 1))
    return _power_sum(1, int(z), q)


def _tail(k: int, z: int | None, q: float) -> float:
    """``H_z^(q) - H_k^(q)`` without cancellation."""
    if z is None:
        return float(special.zeta(q, k + 1)) if k >= 0 else math.inf
    return _power_sum(k + 1, int(z), q)


@dataclass(frozen=True)
class ZipfModel:
    p: float
    alphabet: int | None = None

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.alphabet is None and self.p == 0:
            raise ValueError("p = 0 needs a finite alphabet")
        if self.alphabet is not None and self.alphabet < 1:
            raise ValueError(f"alphabet must be >= 1, got {self.alphabet}")
        object.__setattr__(self, "_norm", harmonic(self.alphabet, self.p + 1))

    @property
    def q(self) -> float:
        return self.p + 1

    @property
    def norm(self) -> float:
        """``H_|A|^(p+1)``."""
        return self._norm

    def _check(self, x: int) -> None:
        if x < 1 or (self.alphabet is not None and x > self.alphabet):
            raise ValueError(f"rank {x} outside [1, {self.alphabet or 'inf'}]")

    def pmf(self, x: int) -> float:
        self._check(x)
        return x ** -self.q / self.norm

    def cdf(self, x: int) -> float:
        self._check(x)
        return 1.0 - self.tail(x)

    def tail(self, k: int) -> float:
        """``1 - F(k)``: mass beyond rank ``k``."""
        if self.alphabet is not None and k >= self.alphabet:
            return 0.0
        return _tail(k, self.alphabet, self.q) / self.norm

    def pmf_array(self, upto: int) -> np.ndarray:
        x = np.arange(1, upto + 1, dtype=np.float64)
        return x ** -self.q / self.norm


def zipf_pmf(x: int, model: ZipfModel) -> float:
    return model.pmf(x)


def zipf_cdf(x: int, model: ZipfModel) -> float:
    return model.cdf(x)


def expected_collisions(k: int, L: float, B: int, model: ZipfModel) -> float:
    """``k L (1 - H_k / H_|A|) / B`` with the tail summed directly."""
    if model.alphabet is not None and k > model.alphabet:
        raise ValueError(f"k = {k} exceeds alphabet {model.alphabet}")
    if L == 0:
        return 0.0
    return k * L * model.tail(k) / B


def expected_collisions_zeta(k: int, L: float, B: int) -> float:
    """Infinite-alphabet ``p = 1`` case, ``6 k L psi1(k+1) / (B pi^2)``."""
    return 6 * k * L * trigamma(k + 1) / (B * math.pi**2)


def bound_limit(L: float, B: int = DEFAULT_TABLE_SIZE) -> float:
    """Upper bound ``6 L / (B pi^2)`` on expected colliding infrequent windows."""
    if B <= 0:
        raise ValueError(f"B must be positive, got {B}")
    return 6 * L / (B * math.pi**2)


def trigamma(x):
    """``psi^(1)(x)``, accepts arrays."""
    return special.polygamma(1, x)


def sample_ranks(model: ZipfModel, size: int, seed: int) -> np.ndarray:
    """``size`` i.i.d. ranks (1-based, ``int64``) from the model."""
    rng = np.random.default_rng(seed)
    if model.alphabet is None:
        return rng.zipf(model.q, size=size).astype(np.int64)
    cdf = np.cumsum(model.pmf_array(model.alphabet))
    cdf /= cdf[-1]
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1


_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xD1B54A32D192ED03)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def rank_tokens(ranks: np.ndarray, length: int, salt: int = 0) -> np.ndarray:
    """Map ranks to pseudo-random byte tokens, one row per rank.

    The first 8 bytes are a bijection of the rank, so tokens of length
    ``>= 8`` are distinct for distinct ranks. Shorter tokens may collide.
    """
    r = np.asarray(ranks, dtype=np.uint64)
    words = -(-length // 8)
    out = np.empty((len(r), words), dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = r * _C1 + np.uint64(salt)
        for j in range(words):
            out[:, j] = _splitmix(base + np.uint64(j) * _C2)
    return out.astype("<u8").view(np.uint8).reshape(len(r), words * 8)[:, :length]


def sample_zipf_stream(model: ZipfModel, length: int, seed: int, token_length: int = 8,
                       tokens_per_doc: int = 1, salt: int = 0) -> PackedCorpus:
    """``length`` Zipf draws rendered as tokens and packed into documents.

    With ``tokens_per_doc=1`` every document is exactly one token, so the
    ``token_length``-gram stream is the draw stream itself.
    """
    if tokens_per_doc < 1:
        raise ValueError("tokens_per_doc must be >= 1")
    ranks = sample_ranks(model, length, seed)
    data = np.ascontiguousarray(rank_tokens(ranks, token_length, salt)).reshape(-1)
    ndocs = -(-length // tokens_per_doc)
    offsets = np.minimum(np.arange(ndocs + 1, dtype=np.int64) * tokens_per_doc, length) * token_length
    return PackedCorpus(data, offsets)
