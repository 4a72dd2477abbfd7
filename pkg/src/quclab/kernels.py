"""Special kernels: modified Bessel I_nu, the Bessel heat kernel p_a, the
caloric kernel on the thick half-space and the Gaussian Carleman weight.

Hot loops are served by the compiled core ``_kernels_c`` when it has been
built, with ``_kernels_np`` as a drop-in pure-Python fallback.  Set
``QUCLAB_PURE_PY=1`` to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_np

if os.environ.get("QUCLAB_PURE_PY"):
    _impl = _kernels_np
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_np

BACKEND = _impl.BACKEND


def gamma(x: float) -> float:
    """Gamma function (Lanczos-backed libm implementation)."""
    return math.gamma(x)


@dataclass(frozen=True)
class KernelParams:
    a: float
    n: int

    def __post_init__(self):
        if not (-1.0 < self.a < 1.0):
            raise ValueError("weight exponent a must lie in (-1, 1)")
        if self.n not in (1, 2):
            raise ValueError("tangential dimension must be 1 or 2")

    @property
    def s(self) -> float:
        return 0.5 * (1.0 - self.a)


@dataclass(frozen=True)
class BesselEvaluator:
    """I_nu by power series below the switch point, asymptotics beyond."""

    order: float
    series_terms: int = 40
    asymptotic_switch_z: float = 20.0

    def __post_init__(self):
        if self.order <= -1.0:
            raise ValueError("Bessel order must exceed -1")
        if self.series_terms < 8:
            raise ValueError("need at least 8 series terms")
        # next-term magnitude at the switch must be below 1e-14 of the sum
        z = self.asymptotic_switch_z
        k = self.series_terms
        log_next = (2 * k) * math.log(z / 2.0) - math.lgamma(k + 1.0) \
            - math.lgamma(k + 1.0 + self.order)
        log_sum = z  # I_nu(z) >= e^z / sqrt(2 pi z) up to O(1) factors
        if log_next - log_sum > math.log(1e-14):
            raise ValueError("series truncation too coarse at the switch point")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        g = _impl.scaled_iv_e(self.order, z, self.asymptotic_switch_z,
                              self.series_terms)
        with np.errstate(divide="ignore"):
            out = np.where(z > 0, z ** self.order * np.exp(z) * g,
                           0.0 if self.order > 0 else np.inf)
        if self.order == 0:
            out = np.where(z == 0, 1.0, out)
        return out if out.shape else float(out)


def bessel_i(nu, z, series_terms=40, switch=20.0):
    """Modified Bessel function of the first kind I_nu(z), z >= 0."""
    return BesselEvaluator(nu, series_terms, switch)(z)


def bessel_heat_kernel(x, y, t, a):
    """Fundamental solution p_a of the Bessel operator d^2/dy^2 + (a/y) d/dy.

    Symmetric in (x, y); the x*y -> 0 limit is taken through the leading
    series term, so values on the boundary axis are finite.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    out = _impl.bessel_heat_kernel_grid(x, y, float(t), float(a))
    return out if np.ndim(out) else float(out)


def caloric_kernel(Y, X, t, n, a):
    """Product kernel: n-dim Gaussian heat kernel in x times p_a in y.

    ``Y`` and ``X`` have shape (..., n+1) with the extension coordinate last.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    dx2 = np.sum((Y[..., :n] - X[..., :n]) ** 2, axis=-1)
    gauss = (4.0 * np.pi * t) ** (-0.5 * n) * np.exp(-dx2 / (4.0 * t))
    out = gauss * _impl.bessel_heat_kernel_grid(X[..., n], Y[..., n], float(t), float(a))
    return out if np.ndim(out) else float(out)


def caloric_kernel_thin(y_thin, X, t, n, a):
    """Closed form of the caloric kernel with one argument on {y = 0}."""
    if t <= 0:
        raise ValueError("time must be positive")
    y_thin = np.asarray(y_thin, dtype=float)
    X = np.asarray(X, dtype=float)
    const = (4.0 * np.pi) ** (-0.5 * n) * 2.0 ** (-a) / gamma(0.5 * (1.0 + a))
    dx2 = np.sum((y_thin[..., :n] - X[..., :n]) ** 2, axis=-1)
    out = const * t ** (-0.5 * (n + a + 1)) * np.exp(-(dx2 + X[..., n] ** 2) / (4.0 * t))
    return out if np.ndim(out) else float(out)


def gaussian_weight(X, t, n, a, c=0.0):
    """Carleman Gaussian G(X, t) = t^{-(n+1+a)/2} exp(-|X|^2/4t).

    With ``c`` nonzero this evaluates the shifted weight G_c(X, t) = G(X, t+c).
    """
    tc = np.asarray(t, dtype=float) + c
    if np.any(tc <= 0):
        raise ValueError("shifted time t + c must be positive")
    X = np.asarray(X, dtype=float)
    r2 = np.sum(X ** 2, axis=-1)
    out = tc ** (-0.5 * (n + 1 + a)) * np.exp(-r2 / (4.0 * tc))
    return out if np.ndim(out) else float(out)


def log_gaussian_weight(r2, t, n, a, c=0.0):
    """log G_c as a function of |X|^2, for log-space weight assembly."""
    tc = np.asarray(t, dtype=float) + c
    if np.any(tc <= 0):
        raise ValueError("shifted time t + c must be positive")
    return -0.5 * (n + 1 + a) * np.log(tc) - np.asarray(r2, float) / (4.0 * tc)
