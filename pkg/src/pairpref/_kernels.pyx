# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pull loop for LiL'UCB; mirrors ``_kernels_py`` operation for operation."""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_E, log, sqrt

cnp.import_array()


cdef inline bint _less(double ka, Py_ssize_t ia, double kb, Py_ssize_t ib) nogil:
    # (key, arm) lexicographic order, same as Python tuple comparison
    return ka < kb or (ka == kb and ia < ib)


cdef void _sift_down(double[::1] keys, Py_ssize_t[::1] ids, Py_ssize_t n, Py_ssize_t pos) nogil:
    cdef Py_ssize_t child, right
    cdef double k = keys[pos]
    cdef Py_ssize_t i = ids[pos]
    while True:
        child = 2 * pos + 1
        if child >= n:
            break
        right = child + 1
        if right < n and _less(keys[right], ids[right], keys[child], ids[child]):
            child = right
        if _less(keys[child], ids[child], k, i):
            keys[pos] = keys[child]
            ids[pos] = ids[child]
            pos = child
        else:
            break
    keys[pos] = k
    ids[pos] = i


cdef inline double _index(long n, long r, double scale, double grow, double omega) nogil:
    cdef double inner = log(grow * n) / omega
    if inner < M_E:
        inner = M_E
    return (<double>r) / n + scale * sqrt(2.0 * grow * log(inner) / n)


def lil_ucb_pulls(probs, uniforms, double double_eps, double beta, double omega):
    cdef const double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n_arms = p.shape[0]
    cdef Py_ssize_t budget = u.shape[0]
    cdef Py_ssize_t n_init = n_arms if n_arms < budget else budget
    counts_arr = np.zeros(n_arms, dtype=np.int64)
    rewards_arr = np.zeros(n_arms, dtype=np.int64)
    cdef long[::1] counts = counts_arr
    cdef long[::1] rewards = rewards_arr
    keys_arr = np.empty(n_init, dtype=np.float64)
    ids_arr = np.empty(n_init, dtype=np.intp)
    cdef double[::1] keys = keys_arr
    cdef Py_ssize_t[::1] ids = ids_arr
    cdef double scale = (1.0 + beta) * (1.0 + sqrt(double_eps))
    cdef double grow = 1.0 + double_eps
    cdef Py_ssize_t a, t, pos
    with nogil:
        for a in range(n_init):
            counts[a] = 1
            rewards[a] = 0 if u[a] < p[a] else 1
            keys[a] = -_index(1, rewards[a], scale, grow, omega)
            ids[a] = a
        pos = n_init // 2
        while pos > 0:
            pos -= 1
            _sift_down(keys, ids, n_init, pos)
        for t in range(n_arms, budget):
            a = ids[0]
            counts[a] += 1
            if not u[t] < p[a]:
                rewards[a] += 1
            keys[0] = -_index(counts[a], rewards[a], scale, grow, omega)
            _sift_down(keys, ids, n_init, 0)
    return counts_arr, rewards_arr
