# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled top-k kernel: fused dot product + bounded-heap selection.

One pass over the float32 corpus, accumulating each dot product in float64
and keeping the k strongest rows in a binary heap ordered so the weakest
survivor sits at the root. No O(n) score buffer, no full sort.
"""

import numpy as np

cimport cython


cdef inline bint _weaker(double s1, long long r1, double s2, long long r2) noexcept nogil:
    # Ordering for survival: higher score wins, ties go to the lower row.
    if s1 != s2:
        return s1 < s2
    return r1 > r2


cdef inline void _sift_down(double* hs, long long* hr, Py_ssize_t size) noexcept nogil:
    cdef Py_ssize_t pos = 0, child
    cdef double s = hs[0]
    cdef long long r = hr[0]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _weaker(hs[child + 1], hr[child + 1], hs[child], hr[child]):
            child += 1
        if _weaker(hs[child], hr[child], s, r):
            hs[pos] = hs[child]
            hr[pos] = hr[child]
            pos = child
        else:
            break
    hs[pos] = s
    hr[pos] = r


cdef inline void _sift_up(double* hs, long long* hr, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t parent
    cdef double s = hs[pos]
    cdef long long r = hr[pos]
    while pos > 0:
        parent = (pos - 1) // 2
        if _weaker(s, r, hs[parent], hr[parent]):
            hs[pos] = hs[parent]
            hr[pos] = hr[parent]
            pos = parent
        else:
            break
    hs[pos] = s
    hr[pos] = r


def topk_dot(const float[:, ::1] matrix, const double[::1] query, Py_ssize_t k):
    """Return (rows int64, scores float64) for the top k dot products.

    matrix: (n, d) float32, C-contiguous; query: (d,) float64; 1 <= k <= n.
    Scores are clamped to [-1, 1]; output ordered by (score desc, row asc).
    """
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if query.shape[0] != d:
        raise ValueError(f"query dim {query.shape[0]} != matrix dim {d}")

    rows_out = np.empty(k, dtype=np.int64)
    scores_out = np.empty(k, dtype=np.float64)
    cdef long long[::1] hr = rows_out
    cdef double[::1] hs = scores_out
    cdef double* hs_p = &hs[0]
    cdef long long* hr_p = &hr[0]

    cdef Py_ssize_t size = 0, i, j, end
    cdef double acc, s, tmp_s
    cdef long long tmp_r

    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += (<double> matrix[i, j]) * query[j]
            s = acc
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            if size < k:
                hs_p[size] = s
                hr_p[size] = i
                _sift_up(hs_p, hr_p, size)
                size += 1
            elif _weaker(hs_p[0], hr_p[0], s, i):
                hs_p[0] = s
                hr_p[0] = i
                _sift_down(hs_p, hr_p, size)

        # Heap-sort in place: repeatedly park the weakest survivor at the end,
        # leaving the array ordered strongest-first.
        for end in range(size - 1, 0, -1):
            tmp_s = hs_p[0]
            tmp_r = hr_p[0]
            hs_p[0] = hs_p[end]
            hr_p[0] = hr_p[end]
            hs_p[end] = tmp_s
            hr_p[end] = tmp_r
            _sift_down(hs_p, hr_p, end)

    return rows_out, scores_out
