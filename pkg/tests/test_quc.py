import math

import numpy as np
import pytest

from quclab.grid import build_graded_grid
from quclab.quc import (compute_theta, compute_theta_ratios,
                        compute_theta_rho, compute_theta_tilde,
                        doubling_series, effective_potential,
                        eigenfunction_pair, export_sweep_csv,
                        fit_vanishing_order, rescaled_sequence,
                        sweep_quadrature_order, two_ball_one_cylinder)
from quclab.regions import Region, region_integral


def half_ball_mass(n, a, r):
    from quclab.regions import half_ball_measure
    return half_ball_measure(n, a, r)


ONE = lambda x, y, t: np.ones_like(x)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_theta_closed_forms_for_constant_field(a):
    n = 1
    # cylinder Q_r carries a time factor r^2; for U == 1 the ratios collapse
    # to measure ratios
    m1 = half_ball_mass(n, a, 1.0)
    theta = compute_theta(ONE, n=n, a=a)
    expect = 25.0 * half_ball_mass(n, a, 5.0) / m1
    assert abs(theta - expect) < 1e-10 * expect
    tt = compute_theta_tilde(ONE, n=n, a=a)
    expect_tt = 16.0 * half_ball_mass(n, a, 4.0) / m1
    assert abs(tt - expect_tt) < 1e-10 * expect_tt
    rho = 0.25
    tr = compute_theta_rho(ONE, rho, n=n, a=a)
    expect_tr = 16.0 * half_ball_mass(n, a, 4.0) \
        / (rho ** 2 * half_ball_mass(n, a, rho))
    assert abs(tr - expect_tr) < 1e-10 * expect_tr
    ratios = compute_theta_ratios(ONE, rhos=(rho,), n=n, a=a)
    assert ratios.theta == theta
    assert ratios.theta_rho[rho] == tr


def test_theta_degenerate_initial_slice():
    zero = lambda x, y, t: np.zeros_like(x)
    with pytest.raises(ValueError):
        compute_theta(zero, n=1, a=0.0)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_doubling_series_constant_field(a):
    n = 1
    series = doubling_series(ONE, [0.1, 0.25, 0.5], n=n, a=a)
    expect = 2.0 ** (n + 1 + a)
    for q in series.ratios:
        assert abs(q - expect) < 1e-6 * expect
    assert series.exceed == ()
    assert np.isfinite(series.N_formula)


def test_doubling_series_homogeneous_field():
    # u = Re (x1 + i x2)^kappa extended constantly in y: thin-slice masses
    # scale like r^{2 kappa + n + 1 + a}
    kappa, n, a = 2, 2, 0.0

    def U(x1, x2, y, t):
        return np.real((x1 + 1j * x2) ** kappa) * np.ones_like(y)

    series = doubling_series(U, [0.125, 0.25, 0.5], n=n, a=a)
    expect = 2.0 ** (2 * kappa + n + 1 + a)
    for q in series.ratios:
        assert abs(q - expect) < 0.02 * expect


def test_doubling_series_guards():
    with pytest.raises(ValueError):
        doubling_series(ONE, [0.25, 0.6], n=1, a=0.0)
    grid = build_graded_grid(1, 1.0, 9, 8, extension_extent=1.0,
                             time_nodes=np.linspace(0, 1, 5))
    from quclab.grid import ScalarField
    fld = ScalarField(grid, np.ones(grid.shape), 0.0)
    with pytest.raises(ValueError):
        # 0.01 spans fewer than 3 cells of the 9-node tangential axis
        doubling_series(fld, [0.01, 0.25, 0.5])


def test_two_ball_one_cylinder_constant_field():
    rep = two_ball_one_cylinder(ONE, 0.25, 0.5, 10.0, n=1, a=0.0)
    assert rep.holds
    # r = rho: L = 1, tau = 1/11, both sides still comparable
    rep2 = two_ball_one_cylinder(ONE, 0.5, 0.5, 10.0, n=1, a=0.0)
    assert rep2.holds
    with pytest.raises(ValueError):
        two_ball_one_cylinder(ONE, 0.5, 0.25, 10.0, n=1, a=0.0)


def test_vanishing_order_fit_constant_and_homogeneous():
    n = 2
    radii = [2.0 ** (-k) for k in range(1, 7)]
    one_thin = lambda x1, x2: np.ones_like(x1)
    fit = fit_vanishing_order(one_thin, "thin", radii, n=n, a=0.0)
    assert abs(fit.slope - n) < 1e-3
    assert fit.r_squared > 1.0 - 1e-10

    kappa = 3
    hom = lambda x1, x2: np.real((x1 + 1j * x2) ** kappa)
    fit2 = fit_vanishing_order(hom, "thin", radii, n=n, a=0.0)
    assert abs(fit2.slope - (2 * kappa + n)) < 0.02 * (2 * kappa + n)

    with pytest.raises(ValueError):
        fit_vanishing_order(one_thin, "thin", radii[:3], n=n, a=0.0)
    with pytest.raises(ValueError):
        fit_vanishing_order(one_thin, "middle", radii, n=n, a=0.0)


def test_rescaled_sequence_normalization_and_self_similarity():
    n, a = 1, 0.0
    U = lambda x, y, t: np.exp(-(x ** 2 + y ** 2) - t)
    flds = rescaled_sequence(U, [1.0, 0.5, 0.25], "cylinder", n=n, a=a)
    for f in flds:
        norm = region_integral(f, Region("cylinder", 1.0))
        assert abs(norm - 1.0) < 1e-12
    # a homogeneous field is exactly self-similar after normalization
    hom = lambda x, y, t: x * np.ones_like(y)
    g1, g2 = rescaled_sequence(hom, [1.0, 0.5], "slice", n=n, a=a)
    assert np.max(np.abs(g1.values - g2.values)) < 1e-10
    with pytest.raises(ValueError):
        rescaled_sequence(U, [1.0], "boundary", n=n, a=a)


def test_effective_potential_scaling():
    V = lambda x, t: np.cos(x) + t
    a = 0.5
    rj = 0.5
    W = effective_potential(V, rj, a)
    x, t = 1.2, 0.3
    expect = rj ** (1 - a) * (math.cos(rj * x) + rj ** 2 * t)
    assert abs(W(x, t) - expect) < 1e-14


def test_eigenfunction_pair_properties():
    lam, s = 16.0, 0.5
    u, U, kappa = eigenfunction_pair(lam, s)
    assert kappa == 4
    # boundary value of the extension is u itself
    x1 = np.linspace(0.1, 1.5, 7)
    x2 = np.full_like(x1, 0.2)
    assert np.allclose(U(x1, x2, np.zeros_like(x1), 0.0), u(x1, x2),
                       rtol=1e-12)
    # u is a Laplace eigenfunction: check with a 5-point stencil
    h = 1e-4
    lap = (u(x1 + h, x2) + u(x1 - h, x2) + u(x1, x2 + h) + u(x1, x2 - h)
           - 4 * u(x1, x2)) / h ** 2
    assert np.max(np.abs(lap + lam * u(x1, x2))) < 1e-4 * lam


def test_sweep_quadrature_order():
    assert sweep_quadrature_order(0.5, 16.0) == 40
    assert sweep_quadrature_order(5.0, 64.0) > 40
    with pytest.raises(ValueError):
        sweep_quadrature_order(5.0, 1e6)


def test_export_sweep_csv(tmp_path):
    rows = [{"lambda": 16.0, "V_norm": 5.0, "order": 9.9, "ratio": 0.38,
             "theta": 100.0, "N_formula": 1e3}]
    p = tmp_path / "sweep.csv"
    export_sweep_csv(rows, p)
    text = p.read_text().splitlines()
    assert text[0] == "lambda,V_norm,order,ratio,theta,N_formula"
    assert len(text) == 2
