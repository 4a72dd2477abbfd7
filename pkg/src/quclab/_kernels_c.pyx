# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_np``: scalar loops for the Bessel heat kernel."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, lgamma, sqrt, pow, M_PI

cnp.import_array()

BACKEND = "cython"


cdef double _scaled_iv_e_one(double nu, double z, double switch, int terms) nogil:
    cdef double acc, term, z2, mu
    cdef int k
    if z < switch:
        acc = 0.0
        term = exp(-nu * 0.6931471805599453 - lgamma(1.0 + nu))
        z2 = z * z
        for k in range(terms):
            acc += term
            term = term * z2 / (4.0 * (k + 1.0) * (k + 1.0 + nu))
        return acc * exp(-z)
    acc = 1.0
    term = 1.0
    mu = 4.0 * nu * nu
    for k in range(1, 16):
        term = term * (mu - (2 * k - 1.0) * (2 * k - 1.0)) / (8.0 * k) / z
        if k % 2:
            acc -= term
        else:
            acc += term
    return acc / sqrt(2.0 * M_PI * z) * pow(z, -nu)


def scaled_iv_e(double nu, z, double switch=20.0, int terms=40):
    """exp(-z) * z**(-nu) * I_nu(z) elementwise; see the numpy twin."""
    z_arr = np.ascontiguousarray(np.asarray(z, dtype=np.float64).ravel())
    if np.any(z_arr < 0):
        raise ValueError("argument of the modified Bessel kernel must be >= 0")
    cdef double[::1] zv = z_arr
    out = np.empty_like(z_arr)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, m = zv.shape[0]
    with nogil:
        for i in range(m):
            ov[i] = _scaled_iv_e_one(nu, zv[i], switch, terms)
    return out.reshape(np.shape(z))


def bessel_heat_kernel_grid(x, y, double t, double a, double switch=20.0, int terms=40):
    """p_a(x, y; t) elementwise over broadcast arrays x, y >= 0, fixed t > 0."""
    x_b, y_b = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                   np.asarray(y, dtype=np.float64))
    shape = x_b.shape
    x_arr = np.ascontiguousarray(x_b.ravel())
    y_arr = np.ascontiguousarray(y_b.ravel())
    cdef double[::1] xv = x_arr
    cdef double[::1] yv = y_arr
    out = np.empty_like(x_arr)
    cdef double[::1] ov = out
    cdef double nu = 0.5 * (a - 1.0)
    cdef double pref = pow(2.0 * t, -0.5 * (1.0 + a))
    cdef double zeta, g
    cdef Py_ssize_t i, m = xv.shape[0]
    with nogil:
        for i in range(m):
            zeta = xv[i] * yv[i] / (2.0 * t)
            g = _scaled_iv_e_one(nu, zeta, switch, terms)
            ov[i] = pref * exp(-(xv[i] - yv[i]) * (xv[i] - yv[i]) / (4.0 * t)) * g
    return out.reshape(shape)
