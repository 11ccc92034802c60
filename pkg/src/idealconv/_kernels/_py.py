"""Numpy implementations of the streaming kernels.

This module is the always-available backend. It mirrors the compiled
extension function-for-function: chunked vectorised passes, with block
partial sums combined under Kahan compensation so harmonic-scale
accumulations keep their digits at horizons up to 1e8.

Integer-valued accumulations (counting, constant or integer weights) are
exact in both backends; float-weight sums may differ from the compiled
backend by a few ulp because the intra-block summation order differs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

CHUNK = 1 << 16

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64

# weight rule identifiers shared with the compiled backend
W_CONST = 0
W_ONE_OVER_N = 1
W_ONE_OVER_N_LOG = 2
W_ALTERNATING01 = 3
W_POW = 4


def mix64(seed: int, index: int) -> int:
    """Counter-based mixer: stateless (seed, index) -> 64-bit word."""
    mask = (1 << 64) - 1
    z = (seed + index * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def _mix_array(seed: int, idx: np.ndarray) -> np.ndarray:
    z = idx.astype(np.uint64, copy=True)
    z *= _GOLDEN
    z += _U64(seed & ((1 << 64) - 1))
    z ^= z >> _U64(30)
    z *= _MIX1
    z ^= z >> _U64(27)
    z *= _MIX2
    z ^= z >> _U64(31)
    return z


def counter_mask(seed: int, lo: int, hi: int, threshold: int) -> np.ndarray:
    """0/1 array over indices [lo, hi): 1 iff mix64(seed, i) < threshold."""
    if hi <= lo:
        return np.zeros(0, dtype=np.uint8)
    idx = np.arange(lo, hi, dtype=np.uint64)
    return (_mix_array(seed, idx) < _U64(threshold)).astype(np.uint8)


def counter_mask_idx(seed: int, idx: np.ndarray, threshold: int) -> np.ndarray:
    """0/1 array: 1 iff mix64(seed, idx[j]) < threshold, arbitrary positions."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        return np.zeros(0, dtype=np.uint8)
    return (_mix_array(seed, idx.astype(np.uint64)) < _U64(threshold)).astype(np.uint8)


def counter_select(seed: int, lo: int, hi: int, threshold: int) -> np.ndarray:
    """Sorted indices i in [lo, hi) with mix64(seed, i) < threshold."""
    out = []
    for a in range(lo, hi, CHUNK):
        b = min(a + CHUNK, hi)
        mask = counter_mask(seed, a, b, threshold)
        out.append(np.nonzero(mask)[0].astype(np.int64) + a)
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(out)


def counter_count_at(seed: int, ns: np.ndarray, threshold: int) -> np.ndarray:
    """|{1 <= i <= n : mix64(seed, i) < threshold}| for each n (ns sorted)."""
    ns = np.asarray(ns, dtype=np.int64)
    out = np.zeros(len(ns), dtype=np.int64)
    if len(ns) == 0:
        return out
    total = 0
    pos = 0
    top = int(ns[-1])
    for a in range(1, top + 1, CHUNK):
        b = min(a + CHUNK - 1, top)
        mask = counter_mask(seed, a, b + 1, threshold)
        cum = np.cumsum(mask)
        while pos < len(ns) and ns[pos] <= b:
            n = int(ns[pos])
            out[pos] = total + (cum[n - a] if n >= a else 0)
            pos += 1
        total += int(cum[-1]) if len(cum) else 0
    while pos < len(ns):
        out[pos] = total
        pos += 1
    return out


def weight_values(kind: int, param: float, idx: np.ndarray) -> np.ndarray:
    """w(i) elementwise for int64 index arrays (indices >= 1)."""
    i = np.asarray(idx, dtype=np.int64)
    if kind == W_CONST:
        return np.full(len(i), param, dtype=np.float64)
    if kind == W_ONE_OVER_N:
        return 1.0 / i
    if kind == W_ONE_OVER_N_LOG:
        return 1.0 / (i * np.log(i + 1.0))
    if kind == W_ALTERNATING01:
        return (i % 2 == 0).astype(np.float64)
    if kind == W_POW:
        if param == 0.0:
            return np.ones(len(i), dtype=np.float64)
        if abs(param) > 4.0:
            return np.exp(param * np.log(i.astype(np.float64)))
        return i.astype(np.float64) ** param
    raise ValueError(f"unknown weight kind {kind}")


class KahanAccumulator:
    """Running compensated sum; block totals feed into it."""

    __slots__ = ("total", "carry")

    def __init__(self) -> None:
        self.total = 0.0
        self.carry = 0.0

    def add(self, value: float) -> None:
        y = value - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t


def kahan_sum(values: np.ndarray) -> float:
    """Compensated total of a float64 array (block pairwise + Kahan merge)."""
    acc = KahanAccumulator()
    v = np.asarray(values, dtype=np.float64)
    for a in range(0, len(v), CHUNK):
        acc.add(float(v[a:a + CHUNK].sum()))
    return acc.total


def prefix_weight_at(kind: int, param: float, ns: np.ndarray) -> np.ndarray:
    """S(n) = sum_{i<=n} w(i) at each n in sorted ns, single compensated pass."""
    ns = np.asarray(ns, dtype=np.int64)
    out = np.zeros(len(ns), dtype=np.float64)
    if len(ns) == 0:
        return out
    acc = KahanAccumulator()
    pos = 0
    top = int(ns[-1])
    for a in range(1, top + 1, CHUNK):
        b = min(a + CHUNK - 1, top)
        w = weight_values(kind, param, np.arange(a, b + 1, dtype=np.int64))
        cut_ns = []
        while pos < len(ns) and ns[pos] <= b:
            cut_ns.append(pos)
            pos += 1
        if cut_ns:
            cum = np.cumsum(w)
            for p in cut_ns:
                out[p] = acc.total + float(cum[int(ns[p]) - a])
        acc.add(float(w.sum()))
    while pos < len(ns):
        out[pos] = acc.total
        pos += 1
    return out


def masked_weight_at(kind: int, param: float, members: np.ndarray,
                     ns: np.ndarray) -> np.ndarray:
    """sum of w(m) over members m <= n, for each n in sorted ns."""
    members = np.asarray(members, dtype=np.int64)
    ns = np.asarray(ns, dtype=np.int64)
    out = np.zeros(len(ns), dtype=np.float64)
    if len(ns) == 0:
        return out
    acc = KahanAccumulator()
    pos = 0
    k = 0
    cuts = np.searchsorted(members, ns, side="right")
    for a in range(0, len(members), CHUNK):
        b = min(a + CHUNK, len(members))
        w = weight_values(kind, param, members[a:b])
        cut_here = []
        while pos < len(ns) and cuts[pos] <= b:
            cut_here.append(pos)
            pos += 1
        if cut_here:
            cum = np.cumsum(w)
            for p in cut_here:
                c = int(cuts[p])
                out[p] = acc.total + (float(cum[c - a - 1]) if c > a else 0.0)
        acc.add(float(w.sum()))
        k = b
    while pos < len(ns):
        out[pos] = acc.total
        pos += 1
    return out


def mask_count_at(mask: np.ndarray, ns: np.ndarray) -> np.ndarray:
    """Counts of nonzero entries among the first n of `mask` (1-based n)."""
    mask = np.asarray(mask)
    ns = np.asarray(ns, dtype=np.int64)
    cum = np.cumsum(mask != 0, dtype=np.int64)
    out = np.zeros(len(ns), dtype=np.int64)
    nz = ns > 0
    out[nz] = cum[np.minimum(ns[nz], len(mask)) - 1]
    return out


def hit_count_at(values: np.ndarray, center: float, eps: float,
                 ns: np.ndarray) -> np.ndarray:
    """|{j <= n : |values[j-1] - center| < eps}| for each n in ns."""
    v = np.asarray(values, dtype=np.float64)
    return mask_count_at(np.abs(v - center) < eps, ns)
