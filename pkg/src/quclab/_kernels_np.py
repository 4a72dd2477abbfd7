"""Pure-numpy implementation of the hot kernel primitives.

The compiled twin in ``_kernels_c`` exports the same functions; the public
module :mod:`quclab.kernels` selects whichever is available at import time.
"""

import math

import numpy as np

BACKEND = "numpy"


def scaled_iv_e(nu, z, switch=20.0, terms=40):
    """exp(-z) * z**(-nu) * I_nu(z), elementwise for z >= 0.

    The combination is entire in z (the z**nu prefactor of the modified
    Bessel series cancels) and exp-scaled so large arguments cannot overflow.
    Power series of positive terms below ``switch``, uniform asymptotic
    expansion beyond.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("argument of the modified Bessel kernel must be >= 0")
    out = np.empty_like(z)
    small = z < switch
    zs = z[small]
    # series: sum_k z^(2k) / (2^(nu+2k) k! Gamma(k+1+nu))
    acc = np.zeros_like(zs)
    term = np.full_like(zs, 1.0 / (2.0 ** nu * math.gamma(1.0 + nu)))
    z2 = zs * zs
    for k in range(terms):
        acc += term
        term = term * z2 / (4.0 * (k + 1.0) * (k + 1.0 + nu))
    out[small] = acc * np.exp(-zs)
    zl = z[~small]
    if zl.size:
        # I_nu(z) ~ e^z/sqrt(2 pi z) * sum_k (-1)^k a_k(nu) / z^k
        acc = np.ones_like(zl)
        term = np.ones_like(zl)
        mu = 4.0 * nu * nu
        for k in range(1, 16):
            term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k) / zl
            acc -= term if k % 2 else -term
        out[~small] = acc / np.sqrt(2.0 * np.pi * zl) * zl ** (-nu)
    return out


def bessel_heat_kernel_grid(x, y, t, a, switch=20.0, terms=40):
    """p_a(x, y; t) elementwise over broadcast arrays x, y >= 0, fixed t > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    nu = 0.5 * (a - 1.0)
    zeta = x * y / (2.0 * t)
    g = scaled_iv_e(nu, zeta, switch, terms)
    return (2.0 * t) ** (-0.5 * (1.0 + a)) * np.exp(-((x - y) ** 2) / (4.0 * t)) * g
