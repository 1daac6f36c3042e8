# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stencil kernels for the Toda flow.

Same contract as ``_flow_py``: arrays are C-contiguous float64 of shape
(k, n_r, n_t); ``slope`` has length k.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


cdef void _residual(double[:, :, ::1] psi, double[:, :, ::1] a, double[::1] slope,
                    double hr, double ht, int shift, double[:, :, ::1] q,
                    double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t k = psi.shape[0], nr = psi.shape[1], nt = psi.shape[2]
    cdef Py_ssize_t j, i, t, jp, jm, jn, jv
    cdef double ir2 = 1.0 / (hr * hr), it2 = 1.0 / (ht * ht)
    cdef double c, up, dn, lap
    for j in range(k):
        jp = (j + 1) % k
        for i in range(nr):
            for t in range(nt):
                q[j, i, t] = a[jp, i, t] * exp(psi[j, i, t] - psi[jp, i, t])
    for j in range(k):
        jm = (j - 1 + k) % k
        jn = (j + shift) % k
        jv = (j - shift + k) % k
        for i in range(nr):
            for t in range(nt):
                c = psi[j, i, t]
                up = psi[j, i, t + 1] if t + 1 < nt else psi[jn, i, 0]
                dn = psi[j, i, t - 1] if t > 0 else psi[jv, i, nt - 1]
                lap = (up + dn - 2.0 * c) * it2
                if i == 0:
                    lap += 2.0 * (psi[j, 1, t] - c + hr * slope[j]) * ir2
                elif i == nr - 1:
                    lap += 2.0 * (psi[j, nr - 2, t] - c + hr * slope[j]) * ir2
                else:
                    lap += (psi[j, i + 1, t] + psi[j, i - 1, t] - 2.0 * c) * ir2
                out[j, i, t] = lap - (q[j, i, t] - q[jm, i, t])


def residual(psi, a, slope, double hr, double ht, int shift):
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    slope = np.ascontiguousarray(slope, dtype=np.float64)
    q = np.empty_like(psi)
    out = np.empty_like(psi)
    _residual(psi, a, slope, hr, ht, shift, q, out)
    return out


def explicit_steps(double[:, :, ::1] psi, a, slope, double hr, double ht, int shift,
                   double dt, long nsteps):
    cdef double[:, :, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(slope, dtype=np.float64)
    cdef Py_ssize_t k = psi.shape[0], nr = psi.shape[1], nt = psi.shape[2]
    cdef double[:, :, ::1] q = np.empty((k, nr, nt))
    cdef double[:, :, ::1] r = np.empty((k, nr, nt))
    cdef Py_ssize_t j, i, t
    cdef long n
    cdef double rmax = 0.0, mean
    with nogil:
        for n in range(nsteps):
            _residual(psi, av, sv, hr, ht, shift, q, r)
            rmax = 0.0
            for i in range(nr):
                for t in range(nt):
                    mean = 0.0
                    for j in range(k):
                        if fabs(r[j, i, t]) > rmax:
                            rmax = fabs(r[j, i, t])
                        psi[j, i, t] += dt * r[j, i, t]
                        mean += psi[j, i, t]
                    mean /= k
                    for j in range(k):
                        psi[j, i, t] -= mean
    return rmax
