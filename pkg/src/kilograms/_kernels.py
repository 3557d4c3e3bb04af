"""Compiled inner loops shared by the two passes, the oracle and the matcher.

Every kernel walks a *batch*: a flat ``uint8`` buffer holding several
documents back to back plus an ``int64`` offsets array of length
``ndocs + 1``. Windows never straddle two documents.

Hashes are polynomial over GF(2^61 - 1); products of two 61-bit residues
are reduced without 128-bit integers by splitting into 32-bit halves.
All kernels release the GIL so batches can be scanned from worker threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MERSENNE_61 = (1 << 61) - 1

_M = np.uint64(MERSENNE_61)
_MASK32 = np.uint64(0xFFFFFFFF)
_MASK29 = np.uint64((1 << 29) - 1)
_U3 = np.uint64(3)
_U29 = np.uint64(29)
_U32 = np.uint64(32)
_U61 = np.uint64(61)
_EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(inline="always")
def mulmod61(a, b):
    a_hi = a >> _U32
    a_lo = a & _MASK32
    b_hi = b >> _U32
    b_lo = b & _MASK32
    lo = a_lo * b_lo
    mid = a_hi * b_lo + a_lo * b_hi
    hi = a_hi * b_hi
    r = (lo & _M) + (lo >> _U61) + (hi << _U3) + (mid >> _U29) + ((mid & _MASK29) << _U32)
    r = (r & _M) + (r >> _U61)
    r = (r & _M) + (r >> _U61)
    if r >= _M:
        r -= _M
    return r


@njit(inline="always")
def _fold(h):
    h = (h & _M) + (h >> _U61)
    if h >= _M:
        h -= _M
    return h


@njit(inline="always")
def _first(data, start, n, a):
    h = np.uint64(0)
    for i in range(start, start + n):
        h = _fold(mulmod61(h, a) + np.uint64(data[i]))
    return h


@njit(inline="always")
def _step(h, out_byte, in_byte, a, out_tab):
    # out_tab[b] = b * a^n mod M, so this is a*h - out*a^n + in
    return _fold(mulmod61(h, a) + (_M - out_tab[out_byte]) + np.uint64(in_byte))


@njit(inline="always")
def _slot(key, bits):
    return (key * _GOLDEN) >> np.uint64(64 - bits)


FAST_MOD_MIN = 1024


@njit(inline="always")
def _mod(h, B, Bi, inv):
    """``h % B`` for ``h < 2^61``; float reciprocal when ``B >= FAST_MOD_MIN``.

    The float quotient is within 1 of ``h / B`` (conversion error at most
    128 / B, product error at most 2^-52 * 2^61 / B), so one conditional
    correction each way makes the remainder exact.
    """
    if Bi < FAST_MOD_MIN:
        return h % B
    x = np.int64(h)
    r = x - np.int64(np.float64(x) * inv) * Bi
    r += Bi & (r >> 63)
    r -= Bi & ~((r - Bi) >> 63)
    return np.uint64(r)


@njit(nogil=True, cache=True)
def reduce_mod(hashes, table_size):
    """Vector form of ``_mod``, exposed for testing."""
    B = np.uint64(table_size)
    Bi = np.int64(table_size)
    inv = 1.0 / table_size
    out = np.empty_like(hashes)
    for i in range(hashes.shape[0]):
        out[i] = _mod(hashes[i], B, Bi, inv)
    return out


@njit(nogil=True, cache=True)
def window_hashes(data, n, a, out_tab):
    m = data.shape[0] - n + 1
    if m <= 0:
        return np.empty(0, dtype=np.uint64)
    out = np.empty(m, dtype=np.uint64)
    h = _first(data, 0, n, a)
    out[0] = h
    for o in range(1, m):
        h = _step(h, data[o - 1], data[o + n - 1], a, out_tab)
        out[o] = h
    return out


@njit(nogil=True, cache=True)
def batch_hashes(data, offsets, n, a, out_tab):
    """Hash of every window of every document, plus its absolute position."""
    ndocs = offsets.shape[0] - 1
    total = 0
    for d in range(ndocs):
        w = offsets[d + 1] - offsets[d] - n + 1
        if w > 0:
            total += w
    hashes = np.empty(total, dtype=np.uint64)
    pos = np.empty(total, dtype=np.int64)
    j = 0
    for d in range(ndocs):
        start = offsets[d]
        end = offsets[d + 1]
        if end - start < n:
            continue
        h = _first(data, start, n, a)
        hashes[j] = h
        pos[j] = start
        j += 1
        for o in range(start + 1, end - n + 1):
            h = _step(h, data[o - 1], data[o + n - 1], a, out_tab)
            hashes[j] = h
            pos[j] = o
            j += 1
    return hashes, pos


LANE_MIN = 64


@njit(nogil=True, cache=True)
def pass1_buckets(data, offsets, n, a, out_tab, table_size, stride):
    """Bucket index of every stride-passing window.

    Long documents are scanned as two interleaved halves so two hash
    chains are in flight; the order of the output is therefore not stream
    order, which is fine because the increments commute.
    """
    ndocs = offsets.shape[0] - 1
    total = 0
    for d in range(ndocs):
        w = offsets[d + 1] - offsets[d] - n + 1
        if w > 0:
            total += w
    out = np.empty(total, dtype=np.uint32)
    B = np.uint64(table_size)
    Bi = np.int64(table_size)
    inv = 1.0 / table_size
    s = np.uint64(stride)
    zero = np.uint64(0)
    j = 0
    for d in range(ndocs):
        start = offsets[d]
        w = offsets[d + 1] - start - n + 1
        if w <= 0:
            continue
        half = w // 2 if w >= LANE_MIN else 0
        # lane x covers windows [start, start + half), lane y the rest
        x = start
        y = start + half
        hx = _first(data, x, n, a)
        hy = _first(data, y, n, a)
        for i in range(half):
            if i > 0:
                hx = _step(hx, data[x - 1], data[x + n - 1], a, out_tab)
                hy = _step(hy, data[y - 1], data[y + n - 1], a, out_tab)
            qx = _mod(hx, B, Bi, inv)
            qy = _mod(hy, B, Bi, inv)
            # unconditional store, conditional advance: no unpredictable branch
            out[j] = qx
            j += np.int64(qx % s == zero)
            out[j] = qy
            j += np.int64(qy % s == zero)
            x += 1
            y += 1
        for o in range(y, start + w):
            if o > start + half:
                hy = _step(hy, data[o - 1], data[o + n - 1], a, out_tab)
            qy = _mod(hy, B, Bi, inv)
            out[j] = qy
            j += np.int64(qy % s == zero)
    return out[:j]


@njit(nogil=True, cache=True)
def saturating_increment(table, buckets):
    top = np.uint32(0xFFFFFFFF)
    one = np.uint32(1)
    for i in range(buckets.shape[0]):
        q = buckets[i]
        if table[q] != top:
            table[q] += one


@njit(nogil=True, cache=True)
def build_set(keys, bits):
    """Open-addressed (linear probing) set of uint64 keys; empty slot = 2^64-1."""
    cap = 1 << bits
    slots = np.full(cap, _EMPTY, dtype=np.uint64)
    mask = np.uint64(cap - 1)
    for i in range(keys.shape[0]):
        k = keys[i]
        p = _slot(k, bits)
        while slots[p] != _EMPTY and slots[p] != k:
            p = (p + np.uint64(1)) & mask
        slots[p] = k
    return slots


@njit(inline="always")
def _find(slots, bits, key):
    mask = np.uint64(slots.shape[0] - 1)
    p = _slot(key, bits)
    while True:
        v = slots[p]
        if v == key:
            return np.int64(p)
        if v == _EMPTY:
            return np.int64(-1)
        p = (p + np.uint64(1)) & mask


@njit(nogil=True, cache=True)
def set_contains(slots, bits, keys):
    out = np.empty(keys.shape[0], dtype=np.bool_)
    for i in range(keys.shape[0]):
        out[i] = _find(slots, bits, keys[i]) >= 0
    return out


@njit(nogil=True, cache=True)
def build_filter(keys, fbits):
    """Bitmap over ``fbits``-bit multiplicative slots of ``keys``; a cheap first test."""
    filt = np.zeros(1 << (fbits - 6), dtype=np.uint64)
    for i in range(keys.shape[0]):
        f = _slot(keys[i], fbits)
        filt[f >> np.uint64(6)] |= np.uint64(1) << (f & np.uint64(63))
    return filt


@njit(inline="always")
def _maybe(filt, fbits, key):
    f = _slot(key, fbits)
    return (filt[f >> np.uint64(6)] >> (f & np.uint64(63))) & np.uint64(1)


@njit(inline="always")
def _collect(pos, hv, j, cand, hashes, count, base, B, slots, bits):
    """Append candidates that really are whitelisted; returns the grown arrays."""
    for i in range(count):
        h = hashes[i]
        if _find(slots, bits, h % B) < 0:
            continue
        if j == pos.shape[0]:
            pos2 = np.empty(2 * j, dtype=np.int64)
            hv2 = np.empty(2 * j, dtype=np.uint64)
            pos2[:j] = pos[:j]
            hv2[:j] = hv[:j]
            pos = pos2
            hv = hv2
        pos[j] = base + cand[i]
        hv[j] = h
        j += 1
    return pos, hv, j


@njit(nogil=True, cache=True)
def pass2_matches(data, offsets, n, a, out_tab, table_size, slots, bits, filt, fbits):
    """Positions (ascending) and full hashes of windows whose bucket is whitelisted.

    No stride test is needed: every whitelisted bucket already passes it.
    Long documents are scanned as two interleaved halves like pass 1.
    Windows that pass the bitmap prefilter are recorded per lane with an
    unconditional store and a conditional advance, then checked against
    the set after the document.
    """
    ndocs = offsets.shape[0] - 1
    B = np.uint64(table_size)
    Bi = np.int64(table_size)
    inv = 1.0 / table_size
    longest = 1
    for d in range(ndocs):
        longest = max(longest, offsets[d + 1] - offsets[d] - n + 2)
    xc = np.empty(longest, dtype=np.int64)
    xh = np.empty(longest, dtype=np.uint64)
    yc = np.empty(longest, dtype=np.int64)
    yh = np.empty(longest, dtype=np.uint64)
    pos = np.empty(1024, dtype=np.int64)
    hv = np.empty(1024, dtype=np.uint64)
    j = 0
    for d in range(ndocs):
        start = offsets[d]
        w = offsets[d + 1] - start - n + 1
        if w <= 0:
            continue
        half = w // 2 if w >= LANE_MIN else 0
        x = start
        y = start + half
        hx = _first(data, x, n, a)
        hy = _first(data, y, n, a)
        kx = 0
        ky = 0
        for i in range(half):
            if i > 0:
                hx = _step(hx, data[x - 1], data[x + n - 1], a, out_tab)
                hy = _step(hy, data[y - 1], data[y + n - 1], a, out_tab)
            xc[kx] = i
            xh[kx] = hx
            kx += np.int64(_maybe(filt, fbits, _mod(hx, B, Bi, inv)))
            yc[ky] = i
            yh[ky] = hy
            ky += np.int64(_maybe(filt, fbits, _mod(hy, B, Bi, inv)))
            x += 1
            y += 1
        for o in range(y, start + w):
            if o > start + half:
                hy = _step(hy, data[o - 1], data[o + n - 1], a, out_tab)
            yc[ky] = o - start - half
            yh[ky] = hy
            ky += np.int64(_maybe(filt, fbits, _mod(hy, B, Bi, inv)))
        if kx:
            pos, hv, j = _collect(pos, hv, j, xc, xh, kx, start, B, slots, bits)
        if ky:
            pos, hv, j = _collect(pos, hv, j, yc, yh, ky, start + half, B, slots, bits)
    return pos[:j], hv[:j]


@njit(nogil=True, cache=True)
def windows_equal(data, p, q, n):
    for i in range(n):
        if data[p + i] != data[q + i]:
            return False
    return True


@njit(nogil=True, cache=True)
def homogeneous_groups(data, pos, group_starts, n):
    """For each run of equal-hash windows, whether all bytes agree with the first."""
    g = group_starts.shape[0] - 1
    ok = np.ones(g, dtype=np.bool_)
    for i in range(g):
        first = pos[group_starts[i]]
        for j in range(group_starts[i] + 1, group_starts[i + 1]):
            if not windows_equal(data, first, pos[j], n):
                ok[i] = False
                break
    return ok


@njit(nogil=True, cache=True)
def match_patterns(data, offsets, n, a, out_tab, slots, bits, filt, fbits, slot_first, chain,
                   patterns):
    """Every (document, pattern) occurrence of equal-length patterns.

    ``slot_first[p]`` is the first pattern index whose hash sits in slot
    ``p``; ``chain`` links further patterns sharing that exact hash.
    """
    ndocs = offsets.shape[0] - 1
    cap = 1024
    docs = np.empty(cap, dtype=np.int64)
    pats = np.empty(cap, dtype=np.int64)
    j = 0
    for d in range(ndocs):
        start = offsets[d]
        end = offsets[d + 1]
        if end - start < n:
            continue
        h = _first(data, start, n, a)
        for o in range(start, end - n + 1):
            if o > start:
                h = _step(h, data[o - 1], data[o + n - 1], a, out_tab)
            if _maybe(filt, fbits, h) == 0:
                continue
            p = _find(slots, bits, h)
            if p < 0:
                continue
            f = slot_first[p]
            while f >= 0:
                same = True
                for i in range(n):
                    if data[o + i] != patterns[f, i]:
                        same = False
                        break
                if same:
                    if j == cap:
                        cap *= 2
                        d2 = np.empty(cap, dtype=np.int64)
                        p2 = np.empty(cap, dtype=np.int64)
                        d2[:j] = docs[:j]
                        p2[:j] = pats[:j]
                        docs = d2
                        pats = p2
                    docs[j] = d
                    pats[j] = f
                    j += 1
                    break
                f = chain[f]
    return docs[:j], pats[:j]
