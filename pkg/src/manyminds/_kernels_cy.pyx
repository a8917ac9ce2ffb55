# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_kernels_py``; output is bit-identical."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

REL_SPACELIKE, REL_PAST, REL_FUTURE, REL_MIXED = 0, 1, 2, 3

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t _M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _M2 = 0x94D049BB133111EBULL
cdef double _INV53 = 1.0 / 9007199254740992.0
cdef double _SQRT2 = sqrt(2.0)
MASK64 = (1 << 64) - 1


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + _GOLDEN
    z = (z ^ (z >> 30)) * _M1
    z = (z ^ (z >> 27)) * _M2
    return z ^ (z >> 31)


cdef inline uint64_t _hash(uint64_t seed, uint64_t traj, uint64_t step) nogil:
    cdef uint64_t h = _mix(seed)
    h = _mix(h ^ traj)
    return _mix(h ^ step)


def counter_hash(seed, traj, step):
    return _hash(<uint64_t>(seed & MASK64), <uint64_t>(traj & MASK64), <uint64_t>(step & MASK64))


def uniform(seed, traj, step):
    cdef uint64_t h = _hash(<uint64_t>(seed & MASK64), <uint64_t>(traj & MASK64), <uint64_t>(step & MASK64))
    return (h >> 11) * _INV53


def uniform_array(seed, traj, step):
    cdef cnp.uint64_t[::1] t = np.ascontiguousarray(traj, dtype=np.uint64).ravel()
    cdef Py_ssize_t i, n = t.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t s = <uint64_t>(seed & MASK64)
    cdef uint64_t st = <uint64_t>(step & MASK64)
    for i in range(n):
        o[i] = (_hash(s, t[i], st) >> 11) * _INV53
    return out.reshape(np.shape(traj))


def sample_chain(cdf, absorbing, Py_ssize_t start, Py_ssize_t count, Py_ssize_t max_steps, seed):
    cdef double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef cnp.uint8_t[::1] ab = np.ascontiguousarray(absorbing, dtype=np.uint8)
    cdef Py_ssize_t n_states = c.shape[0]
    final = np.empty(count, dtype=np.int64)
    steps = np.zeros(count, dtype=np.int64)
    cdef int64_t[::1] f = final
    cdef int64_t[::1] st = steps
    cdef uint64_t s = <uint64_t>(seed & MASK64)
    cdef Py_ssize_t i, j, step, state
    cdef double u
    with nogil:
        for i in range(count):
            state = start
            step = 0
            while step < max_steps and not ab[state]:
                u = (_hash(s, <uint64_t>i, <uint64_t>step) >> 11) * _INV53
                j = 0
                while j < n_states - 1 and c[state, j] <= u:
                    j += 1
                state = j
                step += 1
            f[i] = state
            st[i] = step
    return final, steps


def relation_matrix(lo, hi, radius, double eps=1e-12):
    cdef double[:, ::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[:, ::1] h = np.ascontiguousarray(hi, dtype=np.float64)
    cdef double[::1] r = np.ascontiguousarray(radius, dtype=np.float64)
    cdef Py_ssize_t m = l.shape[0], dim = l.shape[1]
    out = np.empty((m, m), dtype=np.int8)
    cdef int8_t[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double dlo, dhi, min_dt, max_dt, mx2, mn2, a, b, g, thresh, max_abs_t
    for i in range(m):
        for j in range(m):
            min_dt = l[j, 0] - h[i, 0]
            max_dt = h[j, 0] - l[i, 0]
            mx2 = 0.0
            mn2 = 0.0
            for k in range(1, dim):
                dlo = l[j, k] - h[i, k]
                dhi = h[j, k] - l[i, k]
                a = fabs(dlo)
                b = fabs(dhi)
                if b > a:
                    a = b
                mx2 += a * a
                g = dlo
                if -dhi > g:
                    g = -dhi
                if g > 0.0:
                    mn2 += g * g
            max_abs_t = fabs(min_dt)
            if fabs(max_dt) > max_abs_t:
                max_abs_t = fabs(max_dt)
            thresh = _SQRT2 * (r[i] + r[j]) + eps
            if min_dt - sqrt(mx2) > thresh:
                o[i, j] = REL_PAST
            elif -max_dt - sqrt(mx2) > thresh:
                o[i, j] = REL_FUTURE
            elif sqrt(mn2) - max_abs_t > thresh:
                o[i, j] = REL_SPACELIKE
            else:
                o[i, j] = REL_MIXED
    return out
