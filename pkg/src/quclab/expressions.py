"""Symbolic thin-set potentials.

Potentials are given as expression strings in the variables x1[, x2] and t.
The C^1-type norm sup|V| + sup|grad_x V| + sup|d_t V| + 1 is computed from
the analytic derivatives of the expression tree (differentiated symbolically,
then maximized on a dense sample of the grid's thin domain), not from finite
differences of the sampled values.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from .extension import Potential
from .grid import HalfSpaceGrid

_ALLOWED_FUNCS = (sp.sin, sp.cos, sp.exp)


def parse_potential_expression(expr: str, n: int):
    """Parse and validate an expression in x1..xn, t.

    Only +, -, *, /, pow, sin, cos, exp and numeric constants are accepted;
    anything non-smooth (abs, sign, piecewise, ...) is rejected.
    """
    syms = [sp.Symbol(f"x{i + 1}", real=True) for i in range(n)]
    tsym = sp.Symbol("t", real=True)
    local = {s.name: s for s in syms}
    local["t"] = tsym
    local.update({"sin": sp.sin, "cos": sp.cos, "exp": sp.exp})
    try:
        tree = sp.sympify(expr, locals=local, rational=False)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse potential expression {expr!r}: {exc}")
    bad_symbols = tree.free_symbols - set(syms) - {tsym}
    if bad_symbols:
        raise ValueError(f"unknown variables {sorted(map(str, bad_symbols))}; "
                         f"allowed: x1..x{n}, t")
    for node in sp.preorder_traversal(tree):
        if isinstance(node, sp.Function) and not isinstance(node, _ALLOWED_FUNCS):
            raise ValueError(f"non-differentiable or unsupported function "
                             f"{node.func.__name__!r} in {expr!r}")
        if node.has(sp.Abs, sp.sign, sp.Piecewise, sp.floor, sp.ceiling):
            raise ValueError(f"non-differentiable construct in {expr!r}")
    return tree, syms, tsym


def expression_norm_1(expr: str, n: int, extent=5.0, t_span=(0.0, 25.0),
                      samples=200) -> float:
    """sup|V| + sup|grad_x V| + sup|d_t V| + 1 via symbolic derivatives."""
    tree, syms, tsym = parse_potential_expression(expr, n)
    allvars = syms + [tsym]
    axes = [np.linspace(-extent, extent, samples) for _ in range(n)]
    axes.append(np.linspace(t_span[0], t_span[1], max(samples // 4, 8)))
    mesh = np.meshgrid(*axes, indexing="ij")

    def sup(e):
        fn = sp.lambdify(allvars, e, "numpy")
        vals = np.broadcast_to(np.asarray(fn(*mesh), dtype=float),
                               mesh[0].shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"expression {expr!r} is singular on the domain")
        return float(np.max(np.abs(vals)))

    total = sup(tree) + 1.0
    grads = [sp.diff(tree, s) for s in syms]
    if grads:
        gfns = [sp.lambdify(allvars, g, "numpy") for g in grads]
        gv = [np.broadcast_to(np.asarray(f(*mesh), dtype=float),
                              mesh[0].shape) for f in gfns]
        total += float(np.max(np.sqrt(sum(g ** 2 for g in gv))))
    total += sup(sp.diff(tree, tsym))
    return total


def expression_potential(expr: str, grid: HalfSpaceGrid) -> Potential:
    """Sample V on the thin grid with the analytic-derivative norm."""
    tree, syms, tsym = parse_potential_expression(expr, grid.n)
    fn = sp.lambdify(syms + [tsym], tree, "numpy")
    axes = list(grid.tangential_axes) + [np.asarray(grid.time_nodes)]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.broadcast_to(np.asarray(fn(*mesh), dtype=float),
                           mesh[0].shape).copy()
    t_nodes = np.asarray(grid.time_nodes)
    norm = expression_norm_1(expr, grid.n, extent=grid.tangential_extent,
                             t_span=(float(t_nodes[0]), float(t_nodes[-1])))
    return Potential(vals, norm)
