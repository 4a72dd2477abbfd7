import numpy as np
import pytest

from quclab.carleman import build_sigma
from quclab.extension import weighted_neumann_trace_values
from quclab.inequalities import (TestFunction, ThinBump,
                                 build_carleman_test_function, check_carleman,
                                 check_gaussian_doubling, check_hardy,
                                 check_monotonicity, check_trace,
                                 cubic_bump_profile,
                                 doubling_hypothesis_constant,
                                 gaussian_half_space_rule,
                                 random_carleman_test_function,
                                 smooth_bump_family)

TestFunction.__test__ = False   # keep pytest from collecting the dataclass


def test_gaussian_rule_normalizes_mass():
    # int x^a e^{-|X|^2/4b} dX over the half space, closed form via gamma
    import math
    for n, a, b in [(1, 0.0, 0.3), (1, -0.5, 1.0), (2, 0.6, 0.05)]:
        mesh, W = gaussian_half_space_rule(n, a, b)
        got = float(np.sum(W))
        fac = math.sqrt(4.0 * b)
        expect = (math.sqrt(math.pi) * fac) ** n \
            * 0.5 * math.gamma(0.5 * (1 + a)) * fac ** (1 + a)
        assert abs(got - expect) < 1e-12 * expect


@pytest.mark.parametrize("a", [-0.5, 0.5])
def test_hardy_battery_holds(a):
    fams = smooth_bump_family(1, 6, rng=11)
    for h in fams:
        for b in (0.1, 1.0):
            rep = check_hardy(h, b, a, 1)
            assert rep.holds, (h.label, b, rep)
            assert rep.empirical_constant <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        check_hardy(fams[0], 0.0, a, 1)


@pytest.mark.parametrize("a", [-0.5, 0.5])
def test_trace_battery_holds(a):
    fams = smooth_bump_family(1, 6, rng=12)
    for f in fams:
        for A in (2.0, 50.0):
            rep = check_trace(f, A, a, 1)
            # lhs <= C0 * bracket: finite empirical constant, uniform in A
            assert np.isfinite(rep.empirical_constant)
            assert rep.empirical_constant < 50.0, (f.label, A, rep)
    with pytest.raises(ValueError):
        check_trace(fams[0], 1.0, a, 1)


def test_doubling_implication_on_bumps():
    # support inside the unit ball: the regime where the implication is used;
    # wider bumps can exceed the bare e^N bound
    for h in smooth_bump_family(1, 4, rng=13, radius=1.0):
        rep = check_gaussian_doubling(h, None, [0.1, 0.25, 0.5], 0.0, 1)
        assert not rep.vacuous
        assert rep.holds, rep
    with pytest.raises(ValueError):
        check_gaussian_doubling(smooth_bump_family(1, 1, rng=1)[0],
                                None, [0.6], 0.0, 1)


def test_doubling_hypothesis_fixed_point_is_moderate():
    h = smooth_bump_family(1, 1, rng=14)[0]
    N = doubling_hypothesis_constant(h, 0.0, 1)
    assert 1.0 <= N < 50.0
    # supplying the computed N re-verifies the hypothesis without vacuity
    rep = check_gaussian_doubling(h, N * 1.001, [0.25], 0.0, 1)
    assert not rep.vacuous


def test_doubling_vacuous_for_concentrated_shell():
    # mass concentrated near |x| = 0.8: the Gaussian hypothesis fails at
    # small scales, so the check reports vacuous instead of a conclusion
    R2 = 0.15 ** 2

    def value(x, y):
        return np.clip(1.0 - ((x - 0.8) ** 2 + y ** 2) / R2, 0.0, None) ** 3

    def grad(x, y):
        base = np.clip(1.0 - ((x - 0.8) ** 2 + y ** 2) / R2, 0.0, None)
        c = -6.0 * base ** 2 / R2
        return [c * (x - 0.8), c * y]

    h = TestFunction(value, grad, 1.0, label="shell")
    rep = check_gaussian_doubling(h, None, [0.25], 0.0, 1)
    assert rep.vacuous
    assert not rep.holds


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_admissible_trace_identity(a):
    # the built w satisfies lim y^a w_y = V w|_{y=0} exactly; cross-check
    # against the discrete weighted Neumann trace fit
    lam = 8.0
    w = random_carleman_test_function(2.0, a, lam, rng=5)
    x = np.linspace(-2.0, 2.0, 9)
    y = np.concatenate([[0.0], np.geomspace(1e-7, 1e-3, 14)])
    X, Y = np.meshgrid(x, y, indexing="ij")
    t = 0.2 / (np.e * lam)
    vals = w.value(X, Y, np.full_like(X, t))[..., None]
    trace, fit = weighted_neumann_trace_values(vals, y, a)
    expect = w.weighted_trace(x, np.full_like(x, t))
    scale = max(np.max(np.abs(expect)), 1e-30)
    assert np.max(np.abs(trace[:, 0] - expect)) < 1e-3 * scale


def test_carleman_trivial_function():
    zero = ThinBump(lambda x, t: np.zeros_like(x),
                    lambda x, t: [np.zeros_like(x)],
                    lambda x, t: np.zeros_like(x))
    w = build_carleman_test_function(zero, cubic_bump_profile(2.8), 0.0, 0.0)
    alpha, delta = 8.0, 1.0
    lam = alpha / delta ** 2
    table = build_sigma(0.5, lam)
    rep = check_carleman(w, 0.5, alpha, delta, 1.0 / (8 * lam), table,
                         t_nodes=40)
    assert rep.empirical_constant == 0.0
    assert not rep.vacuous


def test_carleman_finite_constant_and_resolution():
    alpha, delta = 8.0, 1.0
    lam = alpha / delta ** 2
    table = build_sigma(0.5, lam)
    for V in (0.0, 2.0):
        w = random_carleman_test_function(V, 0.0, lam, rng=7)
        rep = check_carleman(w, 0.5, alpha, delta, 1.0 / (8 * lam), table)
        assert np.isfinite(rep.empirical_constant)
        assert rep.empirical_constant > 0
        assert not rep.params["under_resolved"], rep.params
        assert rep.margin >= -1e-9 * abs(rep.rhs)
    with pytest.raises(ValueError):
        check_carleman(w, 0.5, alpha, delta, 1.0 / lam, table)


def test_monotonicity_exact_solutions():
    one = lambda x, y, t: np.ones_like(x)
    rep = check_monotonicity(one, 1.0, 0.5, 0.0)
    assert rep.holds
    assert rep.empirical_constant <= 1.0 + 1e-12

    a = 0.5
    poly = lambda x, y, t: y ** 2 - 2.0 * (1 + a) * t
    rep2 = check_monotonicity(poly, 1.0, 0.25, a)
    assert rep2.holds
    assert abs(rep2.params["theta_tilde"]
               - rep2.params["theta_tilde"]) < 1e-6  # finite, reproducible
    assert np.isfinite(rep2.empirical_constant)


def test_monotonicity_error_paths():
    zero = lambda x, y, t: np.zeros_like(x)
    with pytest.raises(ValueError):
        check_monotonicity(zero, 1.0, 0.5, 0.0)
    one = lambda x, y, t: np.ones_like(x)
    rep = check_monotonicity(one, 1.0, 0.5, 0.0, M_grid=np.array([1.0]),
                             theta_tilde=1.0)
    assert rep.vacuous   # M log(M Theta~) >= 1 unattainable on the grid
