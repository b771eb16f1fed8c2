# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled DGFF leaf maxima; draws match ``_dgff_py`` normal for normal."""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

import numpy as np


def leaf_max(rng, const int64_t[::1] parent, const double[::1] sd,
             const int64_t[::1] gen_start, double[::1] out):
    cdef object bg = rng.bit_generator
    cdef bitgen_t *g = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")
    cdef Py_ssize_t nn = parent.shape[0], i, t
    cdef double[::1] eta = np.zeros(nn)
    cdef double mx
    cdef Py_ssize_t leaf_lo = gen_start[gen_start.shape[0] - 2]
    with bg.lock:
        with nogil:
            for t in range(out.shape[0]):
                for i in range(1, nn):
                    eta[i] = eta[parent[i]] + sd[i] * random_standard_normal(g)
                mx = eta[leaf_lo]
                for i in range(leaf_lo + 1, nn):
                    if eta[i] > mx:
                        mx = eta[i]
                out[t] = mx
