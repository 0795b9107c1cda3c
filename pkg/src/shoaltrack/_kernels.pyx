# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pairwise IoU and dense square assignment.

Both functions mirror ``_kernels_py`` operation for operation so either
backend yields bit-identical results.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

from libc.math cimport INFINITY


def iou_matrix(const double[:, ::1] a, const double[:, ::1] b):
    """IoU between every row of ``a`` and every row of ``b`` (ltwh boxes)."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef double al, at, ar, ab, area_a, bl, bt, br, bb, iw, ih, inter
    for i in range(n):
        al = a[i, 0]
        at = a[i, 1]
        ar = al + a[i, 2]
        ab = at + a[i, 3]
        area_a = (ar - al) * (ab - at)
        for j in range(m):
            bl = b[j, 0]
            bt = b[j, 1]
            br = bl + b[j, 2]
            bb = bt + b[j, 3]
            iw = min(ar, br) - max(al, bl)
            if iw <= 0.0:
                continue
            ih = min(ab, bb) - max(at, bt)
            if ih <= 0.0:
                continue
            inter = iw * ih
            res[i, j] = inter / (area_a + (br - bl) * (bb - bt) - inter)
    return out


def lap_square(const double[:, ::1] cost):
    """Minimum-cost perfect matching on a finite square matrix.

    Shortest augmenting path with row/column potentials, O(n^3).
    Returns ``col_of_row`` as an int64 array.
    """
    cdef Py_ssize_t n = cost.shape[0]
    if cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    col_of_row = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return col_of_row
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef double[::1] minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef cnp.int64_t[::1] res = col_of_row
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    for j in range(1, n + 1):
        res[p[j] - 1] = j - 1
    return col_of_row
