# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory counter; see ``rspsim._sampling_py`` for the reference."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def count_trajectories(const double[::1] u_branch, const double[::1] u_ancilla,
                       const double[::1] cumulative, const double[::1] pass_prob,
                       cnp.int64_t[::1] branch_counts):
    cdef Py_ssize_t n = u_branch.shape[0]
    cdef Py_ssize_t nb = cumulative.shape[0]
    cdef Py_ssize_t t, k
    cdef long long successes = 0
    cdef double u
    for t in range(n):
        u = u_branch[t]
        k = 0
        while k < nb - 1 and u >= cumulative[k]:
            k += 1
        branch_counts[k] += 1
        if u_ancilla[t] < pass_prob[k]:
            successes += 1
    return successes
