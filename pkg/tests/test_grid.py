import numpy as np
import pytest

from quclab.grid import (HalfSpaceGrid, ScalarField, box_quadrature_weights,
                         build_graded_grid, default_grading_exponent,
                         field_from_function, gradient, integrate_box,
                         load_snapshot, partial_t, save_snapshot,
                         trapezoid_weights, weighted_divergence,
                         weighted_y_weights)


def make_grid(n=1, a=0.0, ny=24, nx=33, nt=9):
    return build_graded_grid(n, 1.0, nx, ny,
                             grading_exponent=default_grading_exponent(a),
                             time_nodes=np.linspace(0.0, 0.5, nt))


def test_node_validation():
    with pytest.raises(ValueError):
        build_graded_grid(3, 1.0, 8, 8)
    with pytest.raises(ValueError):
        build_graded_grid(1, -1.0, 8, 8)
    with pytest.raises(ValueError):
        HalfSpaceGrid(1, 1.0, (np.linspace(-1, 1, 8),),
                      np.array([0.1, 0.2, 0.3]),     # must start at 0
                      np.linspace(0, 1, 4))


def test_trapezoid_weights_integrate_linear_exactly():
    nodes = np.array([0.0, 0.1, 0.35, 0.7, 1.0])
    w = trapezoid_weights(nodes)
    assert np.isclose(w @ (2 * nodes + 1), 2.0, rtol=1e-14)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.6])
def test_weighted_y_weights_exact_for_constants_and_linear(a):
    # cell masses integrate y^a exactly, so int c y^a dy is exact
    y = 1.3 * (np.arange(25) / 24.0) ** 2
    w = weighted_y_weights(y, a)
    exact = 1.3 ** (1 + a) / (1 + a)
    assert np.isclose(np.sum(w), exact, rtol=1e-13)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_box_quadrature_polynomial(a):
    grid = make_grid(a=a, ny=24, nx=33)
    f = field_from_function(grid, lambda x, y, t: np.ones_like(x), a=a)
    got = integrate_box(f, power=2)
    # space-time integral: int_{[-1,1]} dx int_0^1 y^a dy int_0^0.5 dt,
    # exact because the weighted cell masses integrate y^a exactly
    exact = 2.0 / (1 + a) * 0.5
    assert np.isclose(got, exact, rtol=1e-13)


def test_gradient_and_time_derivative_orders():
    grid = make_grid(ny=40, nx=41)
    f = field_from_function(grid,
                            lambda x, y, t: np.sin(x) * (1 + y ** 2) + t ** 2)
    gx, gy = gradient(f).components
    mesh = grid.meshgrid()
    assert np.max(np.abs(gx - np.cos(mesh[0]) * (1 + mesh[1] ** 2))) < 2e-3
    assert np.max(np.abs(gy - np.sin(mesh[0]) * 2 * mesh[1])) < 2e-2
    ft = partial_t(f).values
    assert np.max(np.abs(ft - 2 * mesh[2])) < 1e-10


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_weighted_divergence_on_smooth_field(a):
    # f = x^2 + y^2: div(y^a grad f) = (2 + 2(1+a)) y^a exactly
    grid = make_grid(a=a, ny=64, nx=33)
    f = field_from_function(grid, lambda x, y, t: x ** 2 + y ** 2, a=a)
    div = weighted_divergence(gradient(f), a).values
    y = grid.extension_nodes
    exact = (4.0 + 2.0 * a) * np.where(y > 0, y, np.nan) ** a
    rel = np.abs(div[:, 8:-2, :] / exact[None, 8:-2, None] - 1.0)
    assert np.max(rel) < 5e-2
    # away from the degenerate boundary the match is tight
    assert np.max(np.abs(div[:, 32:-2, :] / exact[None, 32:-2, None] - 1.0)) \
        < 2e-3


def test_snapshot_roundtrip(tmp_path):
    grid = make_grid()
    f = field_from_function(grid, lambda x, y, t: x + y + t, a=0.0)
    path = tmp_path / "snap.npz"
    save_snapshot(f, path)
    g = load_snapshot(path)
    assert np.array_equal(g.values, f.values)
    assert g.weight_exponent_a == f.weight_exponent_a
    for ax_g, ax_f in zip(g.grid.axes, grid.axes):
        assert np.array_equal(ax_g, ax_f)


def test_scalar_field_shape_guard():
    grid = make_grid()
    with pytest.raises(ValueError):
        ScalarField(grid, np.zeros((3, 3, 3)), 0.0)
    with pytest.raises(ValueError):
        ScalarField(grid, np.zeros(grid.shape), 1.5)
