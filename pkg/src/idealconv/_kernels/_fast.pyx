# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled streaming kernels.

Single fused passes over the index range: counter-based bit generation,
checkpointed counting, and Kahan-compensated weighted prefix sums. The
function surface matches idealconv._kernels._py exactly; integer results
are bit-identical to the fallback, float sums agree to a few ulp.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, pow

cnp.import_array()

ctypedef unsigned long long u64
ctypedef long long i64

BACKEND = "compiled"

W_CONST = 0
W_ONE_OVER_N = 1
W_ONE_OVER_N_LOG = 2
W_ALTERNATING01 = 3
W_POW = 4

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 _M1 = 0xBF58476D1CE4E5B9ULL
cdef u64 _M2 = 0x94D049BB133111EBULL


cdef inline u64 _mix(u64 seed, u64 i) nogil:
    cdef u64 z = seed + i * _GOLDEN
    z = (z ^ (z >> 30)) * _M1
    z = (z ^ (z >> 27)) * _M2
    return z ^ (z >> 31)


def mix64(seed, index):
    """Counter-based mixer: stateless (seed, index) -> 64-bit word."""
    return int(_mix(<u64>(seed & 0xFFFFFFFFFFFFFFFF), <u64>index))


def counter_mask(seed, lo, hi, threshold):
    """0/1 array over indices [lo, hi): 1 iff mix64(seed, i) < threshold."""
    cdef i64 clo = lo, chi = hi
    if chi <= clo:
        return np.zeros(0, dtype=np.uint8)
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 thr = <u64>(threshold & 0xFFFFFFFFFFFFFFFF)
    out_arr = np.empty(chi - clo, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef i64 i
    with nogil:
        for i in range(clo, chi):
            out[i - clo] = 1 if _mix(s, <u64>i) < thr else 0
    return out_arr


def counter_mask_idx(seed, idx, threshold):
    """0/1 array: 1 iff mix64(seed, idx[j]) < threshold, arbitrary positions."""
    idx_arr = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const i64[::1] ci = idx_arr
    cdef Py_ssize_t m = ci.shape[0]
    out_arr = np.empty(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 thr = <u64>(threshold & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t j
    with nogil:
        for j in range(m):
            out[j] = 1 if _mix(s, <u64>ci[j]) < thr else 0
    return out_arr


def counter_select(seed, lo, hi, threshold):
    """Sorted indices i in [lo, hi) with mix64(seed, i) < threshold."""
    cdef i64 clo = lo, chi = hi
    if chi <= clo:
        return np.zeros(0, dtype=np.int64)
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 thr = <u64>(threshold & 0xFFFFFFFFFFFFFFFF)
    buf_arr = np.empty(chi - clo, dtype=np.int64)
    cdef i64[::1] buf = buf_arr
    cdef i64 i, k = 0
    with nogil:
        for i in range(clo, chi):
            if _mix(s, <u64>i) < thr:
                buf[k] = i
                k += 1
    return buf_arr[:k].copy()


def counter_count_at(seed, ns, threshold):
    """|{1 <= i <= n : mix64(seed, i) < threshold}| for each n (ns sorted)."""
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const i64[::1] cns = ns_arr
    cdef Py_ssize_t m = cns.shape[0]
    out_arr = np.zeros(m, dtype=np.int64)
    if m == 0:
        return out_arr
    cdef i64[::1] out = out_arr
    cdef u64 s = <u64>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef u64 thr = <u64>(threshold & 0xFFFFFFFFFFFFFFFF)
    cdef i64 total = 0, i, top = cns[m - 1]
    cdef Py_ssize_t pos = 0
    while pos < m and cns[pos] <= 0:
        pos += 1
    with nogil:
        for i in range(1, top + 1):
            if _mix(s, <u64>i) < thr:
                total += 1
            while pos < m and cns[pos] == i:
                out[pos] = total
                pos += 1
    while pos < m:
        out[pos] = total
        pos += 1
    return out_arr


cdef inline double _w(int kind, double param, i64 i) nogil:
    cdef double x
    if kind == 0:
        return param
    elif kind == 1:
        return 1.0 / i
    elif kind == 2:
        return 1.0 / (i * log(i + 1.0))
    elif kind == 3:
        return 1.0 if i % 2 == 0 else 0.0
    else:
        # common exponents bypass libc pow
        if param == 0.0:
            return 1.0
        if param == 1.0:
            return <double>i
        if param == 2.0:
            x = <double>i
            return x * x
        if param == 3.0:
            x = <double>i
            return x * x * x
        if param == -1.0:
            return 1.0 / i
        if fabs(param) > 4.0:
            return exp(param * log(<double>i))
        return pow(<double>i, param)


def weight_values(kind, param, idx):
    """w(i) elementwise for int64 index arrays (indices >= 1)."""
    idx_arr = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const i64[::1] ci = idx_arr
    cdef Py_ssize_t m = ci.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int ck = kind
    cdef double cp = param
    cdef Py_ssize_t j
    with nogil:
        for j in range(m):
            out[j] = _w(ck, cp, ci[j])
    return out_arr


def kahan_sum(values):
    """Compensated total of a float64 array."""
    v_arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] v = v_arr
    cdef double total = 0.0, carry = 0.0, y, t
    cdef Py_ssize_t j
    with nogil:
        for j in range(v.shape[0]):
            y = v[j] - carry
            t = total + y
            carry = (t - total) - y
            total = t
    return total


def prefix_weight_at(kind, param, ns):
    """S(n) = sum_{i<=n} w(i) at each n in sorted ns, single compensated pass."""
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const i64[::1] cns = ns_arr
    cdef Py_ssize_t m = cns.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    if m == 0:
        return out_arr
    cdef double[::1] out = out_arr
    cdef int ck = kind
    cdef double cp = param
    cdef double total = 0.0, carry = 0.0, y, t
    cdef i64 i, top = cns[m - 1]
    cdef Py_ssize_t pos = 0
    with nogil:
        for i in range(1, top + 1):
            y = _w(ck, cp, i) - carry
            t = total + y
            carry = (t - total) - y
            total = t
            while pos < m and cns[pos] == i:
                out[pos] = total
                pos += 1
    while pos < m:
        out[pos] = total
        pos += 1
    return out_arr


def masked_weight_at(kind, param, members, ns):
    """sum of w(m) over members m <= n, for each n in sorted ns."""
    mem_arr = np.ascontiguousarray(members, dtype=np.int64)
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const i64[::1] mem = mem_arr
    cdef const i64[::1] cns = ns_arr
    cdef Py_ssize_t nm = mem.shape[0], m = cns.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    if m == 0:
        return out_arr
    cdef double[::1] out = out_arr
    cdef int ck = kind
    cdef double cp = param
    cdef double total = 0.0, carry = 0.0, y, t
    cdef Py_ssize_t j = 0, pos = 0
    with nogil:
        for j in range(nm):
            while pos < m and cns[pos] < mem[j]:
                out[pos] = total
                pos += 1
            y = _w(ck, cp, mem[j]) - carry
            t = total + y
            carry = (t - total) - y
            total = t
    while pos < m:
        out[pos] = total
        pos += 1
    return out_arr


def mask_count_at(mask, ns):
    """Counts of nonzero entries among the first n of `mask` (1-based n)."""
    mask_arr = np.ascontiguousarray(mask, dtype=np.uint8)
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const unsigned char[::1] cm = mask_arr
    cdef const i64[::1] cns = ns_arr
    cdef Py_ssize_t nm = cm.shape[0], m = cns.shape[0]
    out_arr = np.zeros(m, dtype=np.int64)
    cdef i64[::1] out = out_arr
    cdef i64 total = 0
    cdef Py_ssize_t j, pos = 0
    with nogil:
        for j in range(nm):
            while pos < m and cns[pos] == j:
                out[pos] = total
                pos += 1
            if cm[j]:
                total += 1
        while pos < m:
            if cns[pos] <= 0:
                out[pos] = 0
            else:
                out[pos] = total
            pos += 1
    return out_arr


def hit_count_at(values, center, eps, ns):
    """|{j <= n : |values[j-1] - center| < eps}| for each n in ns."""
    v_arr = np.ascontiguousarray(values, dtype=np.float64)
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const double[::1] v = v_arr
    cdef const i64[::1] cns = ns_arr
    cdef Py_ssize_t nv = v.shape[0], m = cns.shape[0]
    out_arr = np.zeros(m, dtype=np.int64)
    cdef i64[::1] out = out_arr
    cdef double c = center, e = eps
    cdef i64 total = 0
    cdef Py_ssize_t j, pos = 0
    with nogil:
        for j in range(nv):
            while pos < m and cns[pos] == j:
                out[pos] = total
                pos += 1
            if fabs(v[j] - c) < e:
                total += 1
        while pos < m:
            if cns[pos] <= 0:
                out[pos] = 0
            else:
                out[pos] = total
            pos += 1
    return out_arr
