# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
from libc.math cimport exp, log


def mixture_moments(const double[:, ::1] x, double t,
                    const double[::1] log_weights,
                    const double[:, ::1] means,
                    const double[::1] variances):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t k = means.shape[0]
    cdef Py_ssize_t i, j, c
    cdef double a = 1.0 - t
    cdef double sq, diff, mx, total, r

    s2_arr = np.empty(k)
    gain_arr = np.empty(k)
    logp_arr = np.empty(k)
    post_arr = np.zeros((n, d))
    score_arr = np.zeros((n, d))
    cdef double[::1] s2 = s2_arr
    cdef double[::1] gain = gain_arr
    cdef double[::1] logp = logp_arr
    cdef double[:, ::1] post = post_arr
    cdef double[:, ::1] score = score_arr

    for c in range(k):
        s2[c] = a * a * variances[c] + t * t
        gain[c] = a * variances[c] / s2[c]

    for i in range(n):
        mx = -1e300
        for c in range(k):
            sq = 0.0
            for j in range(d):
                diff = x[i, j] - a * means[c, j]
                sq += diff * diff
            logp[c] = log_weights[c] - 0.5 * d * log(s2[c]) - 0.5 * sq / s2[c]
            if logp[c] > mx:
                mx = logp[c]
        total = 0.0
        for c in range(k):
            logp[c] = exp(logp[c] - mx)
            total += logp[c]
        for c in range(k):
            r = logp[c] / total
            for j in range(d):
                diff = x[i, j] - a * means[c, j]
                score[i, j] -= r * diff / s2[c]
                post[i, j] += r * (means[c, j] + gain[c] * diff)
    return post_arr, score_arr


def circular_convolve_rows(const double[:, ::1] x, const double[::1] kernel):
    cdef Py_ssize_t rows = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t m = kernel.shape[0]
    cdef Py_ssize_t c = m // 2
    cdef Py_ssize_t r, i, j, shift, split
    cdef double kj
    out_arr = np.zeros((rows, n))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for r in range(rows):
            for j in range(m):
                kj = kernel[j]
                # out[i] += k[j] * x[(i + shift) mod n], split where the index wraps
                shift = (c - j) % n
                if shift < 0:
                    shift += n
                split = n - shift
                for i in range(split):
                    out[r, i] += kj * x[r, i + shift]
                for i in range(split, n):
                    out[r, i] += kj * x[r, i - split]
    return out_arr
