# Compiled kernel: hashed n-gram featurization, scoring, and SGD epochs.
#
# Mirrors prosub._kernel_py operation for operation; both backends must stay
# bit-identical (same hash, same aggregation order, same float op order).
# See the pure module for the contract documentation.

import numpy as np

from libc.math cimport exp, log1p, sqrt

ctypedef unsigned long long u64
ctypedef long long i64

BACKEND = "cython"

cdef u64 FNV_OFFSET = 0xCBF29CE484222325u
cdef u64 FNV_PRIME = 0x100000001B3u
cdef u64 SEPARATOR = 0x1F

_BOUNDARY_BYTES = b"\x02"


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double t
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    t = exp(z)
    return t / (1.0 + t)


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline u64 _fnv_bytes(u64 h, const unsigned char[::1] data) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h = (h ^ <u64> data[i]) * FNV_PRIME
    return h


def ngram_features(tokens, int ngram_min, int ngram_max, u64 mask):
    cdef list padded = [_BOUNDARY_BYTES]
    for token in tokens:
        padded.append((<str> token).encode("utf-8"))
    padded.append(_BOUNDARY_BYTES)

    cdef Py_ssize_t m = len(padded)
    cdef Py_ssize_t events = 0
    cdef int n
    for n in range(ngram_min, ngram_max + 1):
        if m - n + 1 > 0:
            events += m - n + 1

    raw_arr = np.empty(events, dtype=np.int64)
    cdef i64[::1] raw = raw_arr
    cdef Py_ssize_t i, pos = 0
    cdef int top
    cdef u64 h
    for i in range(m):
        h = FNV_OFFSET
        top = ngram_max if ngram_max < m - i else <int> (m - i)
        for n in range(1, top + 1):
            if n > 1:
                h = (h ^ SEPARATOR) * FNV_PRIME
            h = _fnv_bytes(h, padded[i + n - 1])
            if n >= ngram_min:
                raw[pos] = <i64> (h & mask)
                pos += 1

    sorted_arr = np.sort(raw_arr)
    cdef i64[::1] srt = sorted_arr
    cdef Py_ssize_t uniq = 0
    if events > 0:
        uniq = 1
        for i in range(1, events):
            if srt[i] != srt[i - 1]:
                uniq += 1
    indices_arr = np.empty(uniq, dtype=np.int64)
    counts_arr = np.empty(uniq, dtype=np.float64)
    cdef i64[::1] indices = indices_arr
    cdef double[::1] counts = counts_arr
    cdef Py_ssize_t w = -1
    for i in range(events):
        if w < 0 or srt[i] != indices[w]:
            w += 1
            indices[w] = srt[i]
            counts[w] = 1.0
        else:
            counts[w] += 1.0
    return indices_arr, counts_arr


def featurize_all(token_seqs, int ngram_min, int ngram_max, u64 mask):
    indptr = np.zeros(len(token_seqs) + 1, dtype=np.int64)
    all_indices = []
    all_counts = []
    cdef Py_ssize_t k = 0
    for tokens in token_seqs:
        idx, cnt = ngram_features(tokens, ngram_min, ngram_max, mask)
        all_indices.append(idx)
        all_counts.append(cnt)
        indptr[k + 1] = indptr[k] + len(idx)
        k += 1
    if all_indices:
        indices = np.concatenate(all_indices)
        counts = np.concatenate(all_counts)
    else:
        indices = np.zeros(0, dtype=np.int64)
        counts = np.zeros(0, dtype=np.float64)
    return indptr, indices, counts


def score_csr(double[::1] weights, double bias, i64[::1] indptr,
              i64[::1] indices, double[::1] counts):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef i64 j
    cdef double z
    with nogil:
        for k in range(n):
            z = bias
            for j in range(indptr[k], indptr[k + 1]):
                z += weights[indices[j]] * counts[j]
            out[k] = _sigmoid(z)
    return out_arr


def sgd_epoch(double[::1] weights, double bias, i64[::1] indptr,
              i64[::1] indices, double[::1] counts, double[::1] labels,
              i64[::1] order, double lr0, double l2, i64 step):
    cdef Py_ssize_t t
    cdef i64 k, j, lo, hi, wj
    cdef double z, g, lr
    with nogil:
        for t in range(order.shape[0]):
            k = order[t]
            lo = indptr[k]
            hi = indptr[k + 1]
            z = bias
            for j in range(lo, hi):
                z += weights[indices[j]] * counts[j]
            g = _sigmoid(z) - labels[k]
            step += 1
            lr = lr0 / sqrt(<double> step)
            for j in range(lo, hi):
                wj = indices[j]
                weights[wj] -= lr * (g * counts[j] + l2 * weights[wj])
            bias -= lr * g
    return bias, step


def mean_logloss(double[::1] weights, double bias, i64[::1] indptr,
                 i64[::1] indices, double[::1] counts, double[::1] labels):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k
    cdef i64 j
    cdef double z, total = 0.0
    if n == 0:
        return 0.0
    with nogil:
        for k in range(n):
            z = bias
            for j in range(indptr[k], indptr[k + 1]):
                z += weights[indices[j]] * counts[j]
            if labels[k] >= 0.5:
                total += _softplus(-z)
            else:
                total += _softplus(z)
    return total / n
