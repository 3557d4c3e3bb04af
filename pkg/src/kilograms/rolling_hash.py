"""Polynomial rolling hash over fixed-width byte windows.

A window ``w`` of ``n`` bytes hashes to ``sum(w[i] * a**(n-1-i)) mod M``
with ``M = 2**61 - 1``. Sliding one byte costs a single modular multiply.
Scalar helpers below use Python integers and serve as the reference for
the compiled bulk paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

MODULUS = _kernels.MERSENNE_61
DEFAULT_MULTIPLIER = 0x1D8E4E27C47D124F


@dataclass(frozen=True)
class HashParams:
    """Hash family member for windows of ``n`` bytes.

    ``power`` is ``a**(n-1) mod M``, the weight of the outgoing byte.
    """

    n: int
    multiplier: int = DEFAULT_MULTIPLIER
    power: int = field(init=False, repr=False)
    _out_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"window length must be >= 1, got {self.n}")
        a = self.multiplier
        if not (1 < a < MODULUS) or a % 2 == 0:
            raise ValueError(f"multiplier must be odd and in (1, 2^61-1), got {a}")
        object.__setattr__(self, "power", pow(a, self.n - 1, MODULUS))
        an = pow(a, self.n, MODULUS)
        table = np.array([(b * an) % MODULUS for b in range(256)], dtype=np.uint64)
        table.setflags(write=False)
        object.__setattr__(self, "_out_table", table)

    @property
    def modulus(self) -> int:
        return MODULUS

    @property
    def out_table(self) -> np.ndarray:
        """``b * a**n mod M`` for every byte value ``b``."""
        return self._out_table

    @property
    def kernel_args(self) -> tuple:
        return self.n, np.uint64(self.multiplier), self._out_table


def hash_window(window: bytes, params: HashParams) -> int:
    if len(window) != params.n:
        raise ValueError(f"window has {len(window)} bytes, expected {params.n}")
    a = params.multiplier
    h = 0
    for b in window:
        h = (h * a + b) % MODULUS
    return h


def roll(prev: int, outgoing: int, incoming: int, params: HashParams) -> int:
    """Hash of ``w[1:] + incoming`` given ``prev = hash(w)`` and ``outgoing = w[0]``."""
    return ((prev - outgoing * params.power) * params.multiplier + incoming) % MODULUS


def window_hashes(data, params: HashParams) -> np.ndarray:
    """Hash of every window of a single document, as ``uint64``.

    Returns an empty array when the document is shorter than ``n``.
    """
    buf = as_bytes_array(data)
    n, a, tab = params.kernel_args
    return _kernels.window_hashes(buf, n, a, tab)


def as_bytes_array(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.dtype != np.uint8:
            raise TypeError(f"expected uint8 array, got {data.dtype}")
        return np.ascontiguousarray(data)
    return np.frombuffer(data, dtype=np.uint8)
