# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors _kernels_py.py operation for operation:
the two backends must return bit-identical float64 results, so the
accumulation order here (low-side pass, then high-side pass, both in edge
order) matches the NumPy add.at sequence exactly.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def run_rounds(times0, edges_u, edges_v, n_ordinary, masks, delta_t, round0=0):
    """See _kernels_py.run_rounds; identical contract and identical results."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t0 = np.ascontiguousarray(times0, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] eu = np.ascontiguousarray(edges_u, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ev = np.ascontiguousarray(edges_v, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] mk = np.ascontiguousarray(
        np.asarray(masks, dtype=bool).view(np.uint8))
    cdef Py_ssize_t n = n_ordinary
    cdef Py_ssize_t rounds = mk.shape[0]
    cdef Py_ssize_t n_edges = mk.shape[1]
    cdef double dt = delta_t
    cdef Py_ssize_t base = round0

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rounds + 1, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] told = np.empty(n + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sums = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(n, dtype=np.int64)

    cdef Py_ssize_t rnd, k, i, u, v
    for i in range(n):
        out[0, i] = t0[i]
        told[i] = t0[i]
    for rnd in range(rounds):
        told[n] = dt * (base + rnd)
        for i in range(n):
            sums[i] = 0.0
            counts[i] = 0
        # low-side pass: node u hears v (v may be the gateway)
        for k in range(n_edges):
            if mk[rnd, k]:
                u = eu[k]
                sums[u] += told[ev[k]]
                counts[u] += 1
        # high-side pass: node v hears u, gateway rows excluded
        for k in range(n_edges):
            if mk[rnd, k]:
                v = ev[k]
                if v < n:
                    sums[v] += told[eu[k]]
                    counts[v] += 1
        for i in range(n):
            if counts[i] > 0:
                told[i] = sums[i] / counts[i]
            out[rnd + 1, i] = told[i]
    return out


def filter_series(x, c_f):
    """See _kernels_py.filter_series; identical contract and identical results."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef double cf = c_f
    cdef Py_ssize_t length = xs.shape[0]
    if length < 7:
        return np.empty(0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.empty(length - 6, dtype=np.float64)
    cdef Py_ssize_t j
    for j in range(length - 6):
        y[j] = 0.2 * ((cf * xs[j + 6] - xs[j + 2]) + (cf * xs[j + 4] - xs[j])) \
            + 0.5 * (cf * xs[j + 5] - xs[j + 1])
    return y
