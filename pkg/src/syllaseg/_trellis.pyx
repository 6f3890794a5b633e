# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward pass of the duration-informed Viterbi trellis.

Mirrors ``_trellis_py.forward`` operation for operation; the two must produce
bitwise identical tables.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def forward(const double[:, ::1] lp, const double[::1] obs,
            const cnp.int64_t[::1] lo, const cnp.int64_t[::1] hi):
    cdef Py_ssize_t L = lp.shape[0]
    cdef Py_ssize_t N = obs.shape[0]
    delta_arr = np.full((L, N), -np.inf)
    psi_arr = np.full((L, N), -1, dtype=np.int64)
    cdef double[:, ::1] delta = delta_arr
    cdef cnp.int64_t[:, ::1] psi = psi_arr
    cdef Py_ssize_t r, j, i, j_lo, j_hi, a, b, arg
    cdef double best, cand

    with nogil:
        for r in range(L):
            if r == L - 1:
                j_lo = N - 1
                j_hi = N - 1
            else:
                j_lo = r + 1
                j_hi = N - L + r
            for j in range(j_lo, j_hi + 1):
                if r == 0:
                    if lo[0] <= j <= hi[0]:
                        best = lp[0, j]
                        arg = 0
                    else:
                        continue
                else:
                    a = j - hi[r]
                    if a < r:
                        a = r
                    b = j - lo[r]
                    if b > j - 1:
                        b = j - 1
                    best = -INFINITY
                    arg = -1
                    for i in range(a, b + 1):
                        cand = delta[r - 1, i] + lp[r, j - i]
                        if cand > best:
                            best = cand
                            arg = i
                    if arg < 0:
                        continue
                if r < L - 1:
                    best = best + obs[j]
                delta[r, j] = best
                psi[r, j] = arg
    return delta_arr, psi_arr


def work_count(Py_ssize_t L, Py_ssize_t N, const cnp.int64_t[::1] lo,
               const cnp.int64_t[::1] hi):
    """Number of (i, j) transitions the forward pass evaluates."""
    cdef Py_ssize_t r, j, j_lo, j_hi, a, b
    cdef long long total = 0
    for r in range(L):
        if r == L - 1:
            j_lo = N - 1
            j_hi = N - 1
        else:
            j_lo = r + 1
            j_hi = N - L + r
        for j in range(j_lo, j_hi + 1):
            if r == 0:
                total += 1 if lo[0] <= j <= hi[0] else 0
                continue
            a = max(j - hi[r], r)
            b = min(j - lo[r], j - 1)
            if b >= a:
                total += b - a + 1
    return total
