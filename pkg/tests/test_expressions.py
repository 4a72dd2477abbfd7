import numpy as np
import pytest

from quclab.expressions import (expression_norm_1, expression_potential,
                                parse_potential_expression)
from quclab.grid import build_graded_grid


def test_norm_of_constants():
    # the norm convention carries a +1 offset on top of the C^1 seminorms
    assert expression_norm_1("0", 1) == 1.0
    assert expression_norm_1("2", 1) == 3.0


def test_norm_of_cosine():
    # sup|0.5 cos| + sup|0.5 sin| + 0 + 1 = 2
    got = expression_norm_1("0.5*cos(x1)", 1)
    assert abs(got - 2.0) < 1e-3
    # with a bounded time factor: sup|V| = sup|grad| = sup|d_t V| = 0.5
    got2 = expression_norm_1("0.5*cos(x1)*cos(t)", 1)
    assert abs(got2 - 2.5) < 1e-3


def test_two_dimensional_gradient_norm():
    # grad = (-sin(x1), cos(x2)) has pointwise euclidean sup sqrt(2)
    got = expression_norm_1("cos(x1) + sin(x2)", 2)
    assert abs(got - (2.0 + np.sqrt(2.0) + 1.0)) < 1e-3


def test_parse_rejections():
    with pytest.raises(ValueError):
        parse_potential_expression("Abs(x1)", 1)
    with pytest.raises(ValueError):
        parse_potential_expression("x2", 1)        # unknown variable for n=1
    with pytest.raises(ValueError):
        parse_potential_expression("floor(x1)", 1)
    with pytest.raises(ValueError):
        parse_potential_expression("cos(x1", 1)    # parse error
    with pytest.raises(ValueError):
        expression_norm_1("1/(x1 - 5)", 1)         # singular on the domain


def test_expression_potential_samples_grid():
    grid = build_graded_grid(1, 2.0, 17, 8, extension_extent=1.0,
                             time_nodes=np.linspace(0.0, 0.5, 5))
    p = expression_potential("0.5*cos(x1)", grid)
    assert p.values.shape == (17, 5)
    x = grid.tangential_axes[0]
    assert np.allclose(p.values[:, 0], 0.5 * np.cos(x), rtol=1e-12)
    assert abs(p.norm_1 - 2.0) < 1e-4
