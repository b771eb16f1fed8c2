# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop for the continuous-time lambda-biased walk.

Must consume the bit generator exactly like ``_walk_py``: one double per
holding time, one more per jump out of a vertex with children.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log
from libc.stdint cimport int64_t, int32_t
from numpy.random cimport bitgen_t

import numpy as np


cdef inline Py_ssize_t _jump(bitgen_t *rng, Py_ssize_t x, const int64_t[::1] parent,
                             const int64_t[::1] cstart, const int32_t[::1] nch,
                             double lam) noexcept nogil:
    cdef int nu = nch[x]
    cdef double w
    cdef Py_ssize_t c
    if nu == 0:
        return parent[x]
    w = rng.next_double(rng.state) * (lam + nu)
    if w < lam:
        return parent[x]
    c = <Py_ssize_t>(w - lam)
    if c >= nu:
        c = nu - 1
    return cstart[x] + c


def cover(rng, const int64_t[::1] parent, const int64_t[::1] cstart,
          const int32_t[::1] nch, double lam):
    cdef object bg = rng.bit_generator
    cdef bitgen_t *g = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")
    cdef Py_ssize_t nn = parent.shape[0]
    cdef unsigned char[::1] seen = np.zeros(nn, dtype=np.uint8)
    cdef Py_ssize_t x = 0, left = nn - 1
    cdef int64_t steps = 0
    cdef double now = 0.0, troot = 0.0, h
    if left == 0:
        return 0.0, 0, 0.0, 0
    seen[0] = 1
    with bg.lock:
      with nogil:
        while True:
            h = -log(1.0 - g.next_double(g.state))
            now += h
            if x == 0:
                troot += h
                x = 1
            else:
                x = _jump(g, x, parent, cstart, nch, lam)
            steps += 1
            if not seen[x]:
                seen[x] = 1
                left -= 1
                if left == 0:
                    break
    return now, steps, troot, x


def budget(rng, const int64_t[::1] parent, const int64_t[::1] cstart,
           const int32_t[::1] nch, double lam, double t, double[::1] occ):
    cdef object bg = rng.bit_generator
    cdef bitgen_t *g = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")
    cdef Py_ssize_t x = 0
    cdef int64_t steps = 0
    cdef double now = 0.0, troot = 0.0, h
    with bg.lock:
      with nogil:
        while True:
            h = -log(1.0 - g.next_double(g.state))
            if x == 0:
                if troot + h >= t:
                    now += t - troot
                    break
                troot += h
                now += h
                x = 1
            else:
                occ[x] += h
                now += h
                x = _jump(g, x, parent, cstart, nch, lam)
            steps += 1
    occ[0] = t
    return now, steps
