import math

import mpmath
import numpy as np
import pytest
from scipy.special import roots_genlaguerre

from quclab import _kernels_np
from quclab.kernels import (BesselEvaluator, KernelParams, bessel_heat_kernel,
                            bessel_i, caloric_kernel, caloric_kernel_thin,
                            gamma, gaussian_weight, log_gaussian_weight)

try:
    from quclab import _kernels_c
except ImportError:
    _kernels_c = None


def scaled_iv_oracle(nu, z):
    """e^{-z} z^{-nu} I_nu(z) at 30 digits."""
    with mpmath.workdps(30):
        if z == 0:
            return float(1 / mpmath.gamma(nu + 1) / mpmath.mpf(2) ** nu)
        val = mpmath.exp(-z) * mpmath.mpf(z) ** (-nu) * mpmath.besseli(nu, z)
        return float(val)


@pytest.mark.parametrize("nu", [-0.49, -0.25, 0.0, 0.3, 0.75, 1.5])
def test_scaled_bessel_against_multiprecision(nu):
    zs = [0.0, 1e-8, 0.1, 1.0, 7.0, 19.9, 20.1, 80.0, 1e4]
    got = _kernels_np.scaled_iv_e(nu, np.array(zs))
    for z, g in zip(zs, got):
        ref = scaled_iv_oracle(nu, z)
        assert abs(g - ref) <= 5e-14 * abs(ref), (nu, z)


@pytest.mark.skipif(_kernels_c is None, reason="compiled core not built")
def test_backends_agree():
    rng = np.random.default_rng(0)
    z = rng.uniform(0.0, 100.0, size=2000)
    for nu in (-0.49, 0.0, 0.7):
        a = _kernels_np.scaled_iv_e(nu, z)
        b = _kernels_c.scaled_iv_e(nu, z)
        assert np.max(np.abs(a - b)) <= 1e-14 * np.max(np.abs(a))


def test_bessel_evaluator_guards():
    with pytest.raises(ValueError):
        BesselEvaluator(-1.2)
    with pytest.raises(ValueError):
        BesselEvaluator(0.0, series_terms=4)
    with pytest.raises(ValueError):
        # far too few terms for the default switch point
        BesselEvaluator(0.0, series_terms=8, asymptotic_switch_z=60.0)
    assert np.isclose(bessel_i(0.0, 0.0), 1.0)
    assert bessel_i(0.5, 0.0) == 0.0


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.6])
@pytest.mark.parametrize("t", [0.1, 0.7])
def test_heat_kernel_mass_and_symmetry(a, t):
    x = 0.8
    r, w = roots_genlaguerre(160, 0.5 * (a - 1.0))
    y = np.sqrt(4.0 * t * r)
    mass = 0.5 * (4.0 * t) ** (0.5 * (1 + a)) * np.sum(
        w * np.exp(r) * bessel_heat_kernel(x, y, t, a))
    assert abs(mass - 1.0) < 1e-10
    ys = np.linspace(0.0, 3.0, 11)
    assert np.allclose(bessel_heat_kernel(x, ys, t, a),
                       bessel_heat_kernel(ys, x, t, a), rtol=1e-14)


def test_reflected_gaussian_at_a_zero():
    # a = 0: p_0(x, y, t) equals the reflected heat kernel on the half line
    t = 0.4
    x, y = 0.7, np.linspace(0.0, 3.0, 17)
    ref = (4 * math.pi * t) ** -0.5 * (np.exp(-(x - y) ** 2 / (4 * t))
                                       + np.exp(-(x + y) ** 2 / (4 * t)))
    assert np.allclose(bessel_heat_kernel(x, y, t, 0.0), ref, rtol=1e-13)


@pytest.mark.parametrize("a", [-0.5, 0.3])
def test_chapman_kolmogorov(a):
    t = 0.3
    x, x2 = 0.5, 1.4
    r, w = roots_genlaguerre(200, 0.5 * (a - 1.0))
    y = np.sqrt(4.0 * t * r)
    g = bessel_heat_kernel(x, y, t, a) * bessel_heat_kernel(y, x2, t, a)
    # assemble w e^r g in log space: the e^r factor overflows on its own but
    # the product decays
    with np.errstate(divide="ignore"):
        terms = np.where(g > 0, np.exp(np.log(w) + r
                                       + np.log(np.where(g > 0, g, 1.0))), 0.0)
    conv = 0.5 * (4.0 * t) ** (0.5 * (1 + a)) * np.sum(terms)
    direct = bessel_heat_kernel(x, x2, 2 * t, a)
    assert abs(conv - direct) < 1e-5 * direct


def test_caloric_kernel_thin_limit():
    # thin closed form equals the kernel limit as one y argument tends to 0
    n, a, t = 1, -0.4, 0.6
    X = np.array([0.3, 0.9])
    thin_pt = np.array([1.1])
    full = caloric_kernel(np.array([1.1, 1e-12]), X, t, n, a)
    thin = caloric_kernel_thin(thin_pt, X, t, n, a)
    assert np.isclose(full, thin, rtol=1e-6)


def test_gaussian_weight_and_log_agree():
    X = np.array([[0.5, 0.2], [1.0, 0.0]])
    t, n, a, c = 0.3, 1, -0.5, 0.01
    g = gaussian_weight(X, t, n, a, c)
    lg = log_gaussian_weight(np.sum(X ** 2, axis=-1), t, n, a, c)
    assert np.allclose(np.log(g), lg, rtol=1e-14)
    with pytest.raises(ValueError):
        gaussian_weight(X, -0.5, n, a)
    with pytest.raises(ValueError):
        bessel_heat_kernel(1.0, 1.0, 0.0, 0.0)


def test_kernel_params():
    p = KernelParams(-0.5, 1)
    assert p.s == 0.75
    with pytest.raises(ValueError):
        KernelParams(1.0, 1)
    with pytest.raises(ValueError):
        KernelParams(0.0, 3)
    assert np.isclose(gamma(0.5), math.sqrt(math.pi))
