# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; see ``_kernels_py`` for the reference semantics."""

from libc.math cimport fabs


def project_out(double[:, ::1] W, const double[::1] pivot, double[::1] v2,
                const unsigned char[::1] active):
    cdef Py_ssize_t n = W.shape[0], m = W.shape[1], i, k
    cdef double pp = 0.0, d, s, w
    for k in range(m):
        pp += pivot[k] * pivot[k]
    if pp <= 0.0:
        return
    with nogil:
        for i in range(n):
            if not active[i]:
                continue
            d = 0.0
            for k in range(m):
                d = d + W[i, k] * pivot[k]
            d = d / pp
            s = 0.0
            for k in range(m):
                w = W[i, k] - d * pivot[k]
                W[i, k] = w
                s = s + w * w
            v2[i] = s


cdef Py_ssize_t _masked_argmax(const double[::1] v, const unsigned char[::1] active,
                               double rtol) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], i, best = -1
    cdef double vmax = 0.0, cut
    for i in range(n):
        if active[i] and (best < 0 or v[i] > vmax):
            vmax = v[i]
            best = i
    if best < 0:
        return -1
    cut = vmax - rtol * fabs(vmax)
    for i in range(best):
        if active[i] and v[i] >= cut:
            return i
    return best


def masked_argmax(const double[::1] v, const unsigned char[::1] active, double rtol):
    cdef Py_ssize_t j
    with nogil:
        j = _masked_argmax(v, active, rtol)
    return j

