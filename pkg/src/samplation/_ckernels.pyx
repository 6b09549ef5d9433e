# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Bit-compatible with ``_pykernels``: same SplitMix64 substream layout, same
bitmask rejection, same per-element float expressions, and distances
accumulated in dimension order.  Any divergence is a bug caught by
``tests/test_kernels.py``.
"""

from libc.stdint cimport uint64_t, int64_t

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL

BACKEND_NAME = "compiled"


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t substream(uint64_t key, uint64_t index) nogil:
    return mix64(key + (index + 1) * GAMMA)


cdef inline uint64_t mask_for(uint64_t r) nogil:
    # smallest all-ones mask >= r (r >= 1)
    cdef uint64_t m = r
    m |= m >> 1; m |= m >> 2; m |= m >> 4
    m |= m >> 8; m |= m >> 16; m |= m >> 32
    return m


cdef inline int64_t bounded(uint64_t key, uint64_t index, int64_t bound) nogil:
    cdef uint64_t k, mask, attempt, v
    if bound <= 1:
        return 0
    k = substream(key, index)
    mask = mask_for(<uint64_t>(bound - 1))
    attempt = 0
    while True:
        v = substream(k, attempt) & mask
        if v < <uint64_t>bound:
            return <int64_t>v
        attempt += 1


def reservoir_indices(int64_t m, int64_t n, object seed):
    """Algorithm R over stream positions 0..m-1; returns reservoir content."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t n_eff = n if n < m else m
    res_arr = np.arange(n_eff, dtype=np.int64)
    if n == 0 or m <= n:
        return res_arr
    cdef int64_t[::1] res = res_arr
    cdef int64_t j, alpha
    with nogil:
        for j in range(n, m):
            alpha = bounded(s, <uint64_t>j, j + 1)
            if alpha < n:
                res[alpha] = j
    return res_arr


def reservoir_counts(int64_t m, int64_t n, int64_t trials, object seed):
    """Inclusion counts of items 0..m-1 over seeded reservoir trials."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    counts_arr = np.zeros(m, dtype=np.int64)
    if trials == 0 or n == 0 or m == 0:
        return counts_arr
    if m <= n:
        counts_arr[:] = trials
        return counts_arr
    cdef int64_t[::1] counts = counts_arr
    res_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] res = res_arr
    cdef uint64_t tkey
    cdef int64_t t, j, alpha, i
    with nogil:
        for t in range(trials):
            tkey = substream(s, <uint64_t>t)
            for i in range(n):
                res[i] = i
            for j in range(n, m):
                alpha = bounded(tkey, <uint64_t>j, j + 1)
                if alpha < n:
                    res[alpha] = j
            for i in range(n):
                counts[res[i]] += 1
    return counts_arr


def srs_indices(int64_t m, int64_t n, object seed):
    """Partial Fisher-Yates: n distinct indices from 0..m-1."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    a_arr = np.arange(m, dtype=np.int64)
    if n == 0:
        return a_arr[:0]
    cdef int64_t[::1] a = a_arr
    cdef int64_t i, r, tmp
    with nogil:
        for i in range(n):
            r = i + bounded(s, <uint64_t>i, m - i)
            tmp = a[i]; a[i] = a[r]; a[r] = tmp
    return a_arr[:n]


def srs_counts(int64_t m, int64_t n, int64_t trials, object seed):
    """Inclusion counts over seeded ``srs_indices`` trials."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    counts_arr = np.zeros(m, dtype=np.int64)
    if trials == 0 or n == 0:
        return counts_arr
    cdef int64_t[::1] counts = counts_arr
    a_arr = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] a = a_arr
    cdef uint64_t tkey
    cdef int64_t t, i, r, tmp
    with nogil:
        for t in range(trials):
            tkey = substream(s, <uint64_t>t)
            for i in range(m):
                a[i] = i
            for i in range(n):
                r = i + bounded(tkey, <uint64_t>i, m - i)
                tmp = a[i]; a[i] = a[r]; a[r] = tmp
            for i in range(n):
                counts[a[i]] += 1
    return counts_arr


def smote_fill(const double[:, ::1] pool, const int64_t[:, ::1] nn, int64_t count,
               object seed):
    """Interpolated synthetic rows; see the numpy twin for the contract."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t p = pool.shape[0]
    cdef int64_t d = pool.shape[1]
    cdef int64_t k = nn.shape[1]
    synth_arr = np.empty((count, d), dtype=np.float64)
    base_arr = np.empty(count, dtype=np.int64)
    pick_arr = np.empty(count, dtype=np.int64)
    lam_arr = np.empty(count, dtype=np.float64)
    cdef double[:, ::1] synth = synth_arr
    cdef int64_t[::1] base = base_arr
    cdef int64_t[::1] pick = pick_arr
    cdef double[::1] lam = lam_arr
    cdef uint64_t ki
    cdef int64_t i, t, b, nb
    cdef double lm, bv
    with nogil:
        for i in range(count):
            ki = substream(s, <uint64_t>i)
            b = bounded(ki, 0, p)
            base[i] = b
            pick[i] = bounded(ki, 1, k)
            lm = <double>(substream(substream(ki, 2), 0) >> 11) * (2.0 ** -53)
            lam[i] = lm
            nb = nn[b, pick[i]]
            for t in range(d):
                bv = pool[b, t]
                synth[i, t] = bv + lm * (pool[nb, t] - bv)
    return synth_arr, base_arr, pick_arr, lam_arr


def knn_table(const double[:, ::1] pool, int64_t k):
    """k nearest neighbors per row, ordered by (distance, index)."""
    cdef int64_t p = pool.shape[0]
    cdef int64_t d = pool.shape[1]
    out_arr = np.empty((p, k), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    best_d_arr = np.empty(k, dtype=np.float64)
    best_i_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] best_d = best_d_arr
    cdef int64_t[::1] best_i = best_i_arr
    cdef int64_t i, j, t, filled, pos
    cdef double acc, diff
    with nogil:
        for i in range(p):
            filled = 0
            for j in range(p):
                if j == i:
                    continue
                acc = 0.0
                for t in range(d):
                    diff = pool[i, t] - pool[j, t]
                    acc += diff * diff
                if filled == k and acc >= best_d[k - 1]:
                    # candidates arrive in index order, so on an exact
                    # distance tie the incumbent (lower index) wins
                    continue
                pos = filled if filled < k else k - 1
                while pos > 0 and acc < best_d[pos - 1]:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = acc
                best_i[pos] = j
                if filled < k:
                    filled += 1
            for t in range(k):
                out[i, t] = best_i[t]
    return out_arr
