"""Half-space grids, weighted quadrature and discrete differential operators.

The computational domain is a box in R^n_x x R^+_y x [0, T] where the
extension axis y carries the Muckenhoupt weight y^a, a in (-1, 1).  Extension
nodes are graded toward y = 0 so that the degenerate weight is resolved;
tangential and time axes are uniform unless explicit nodes are supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator


def default_grading_exponent(a: float) -> float:
    """Grading that roughly equidistributes the weighted measure y^a dy."""
    return 2.0 if a >= 0 else 2.0 / (1.0 + a)


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Tensor grid on [-L, L]^n x [0, Y] x [t0, t1].

    ``extension_nodes`` must start at 0 and increase strictly; when built by
    :func:`build_graded_grid` they follow y_j = Y * (j / M)**grading_exponent.
    """

    n: int
    tangential_extent: float
    tangential_axes: tuple = field(repr=False)
    extension_nodes: np.ndarray = field(repr=False)
    time_nodes: np.ndarray = field(repr=False)
    grading_exponent: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"tangential dimension must be 1 or 2, got {self.n}")
        if self.grading_exponent < 1.0:
            raise ValueError("grading_exponent must be >= 1")
        y = np.asarray(self.extension_nodes, dtype=float)
        if y[0] != 0.0:
            raise ValueError("extension nodes must start at y = 0")
        for nodes in (*self.tangential_axes, y, np.asarray(self.time_nodes)):
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("grid node sequences must be strictly increasing")

    @property
    def axes(self) -> tuple:
        """All axes in field index order: x1 [, x2], y, t."""
        return (*self.tangential_axes, np.asarray(self.extension_nodes),
                np.asarray(self.time_nodes))

    @property
    def shape(self) -> tuple:
        return tuple(len(ax) for ax in self.axes)

    @property
    def y_axis_index(self) -> int:
        return self.n

    @property
    def t_axis_index(self) -> int:
        return self.n + 1

    def meshgrid(self):
        return np.meshgrid(*self.axes, indexing="ij")


def build_graded_grid(n, tangential_extent, tangential_count, extension_count,
                      grading_exponent=2.0, extension_extent=None,
                      time_extent=1.0, time_count=2, time_nodes=None):
    """Build a half-space grid with power-law grading toward y = 0.

    ``tangential_count`` is the node count per tangential axis and
    ``extension_count`` the number M of extension cells (M + 1 nodes).
    """
    if tangential_extent <= 0:
        raise ValueError("tangential_extent must be positive")
    if tangential_count < 4 or extension_count < 4:
        raise ValueError("need at least 4 nodes per axis")
    if grading_exponent < 1.0:
        raise ValueError("grading_exponent must be >= 1")
    if extension_extent is None:
        extension_extent = tangential_extent
    L = float(tangential_extent)
    tang = tuple(np.linspace(-L, L, tangential_count) for _ in range(n))
    j = np.arange(extension_count + 1, dtype=float)
    y = extension_extent * (j / extension_count) ** grading_exponent
    if time_nodes is None:
        time_nodes = np.linspace(0.0, time_extent, time_count)
    return HalfSpaceGrid(n=n, tangential_extent=L, tangential_axes=tang,
                         extension_nodes=y, time_nodes=np.asarray(time_nodes, float),
                         grading_exponent=float(grading_exponent))


@dataclass(frozen=True)
class ScalarField:
    """Nodal values on a HalfSpaceGrid together with the weight exponent."""

    grid: HalfSpaceGrid
    values: np.ndarray = field(repr=False)
    weight_exponent_a: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} != grid shape {self.grid.shape}")
        if not (-1.0 < self.weight_exponent_a < 1.0):
            raise ValueError("weight exponent must lie in (-1, 1)")
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.weight_exponent_a)

    def interpolator(self, fill_value=0.0):
        """Multilinear interpolant on the grid; outside points -> fill_value."""
        return RegularGridInterpolator(self.grid.axes, self.values, method="linear",
                                       bounds_error=False, fill_value=fill_value)


@dataclass(frozen=True)
class VectorField:
    grid: HalfSpaceGrid
    components: tuple  # one array per spatial axis (x1 [, x2], y)
    weight_exponent_a: float = 0.0


def field_from_function(grid, fn, a=0.0) -> ScalarField:
    """Sample fn(x1 [, x2], y, t) on the grid nodes."""
    mesh = grid.meshgrid()
    return ScalarField(grid, fn(*mesh), a)


# ---------------------------------------------------------------------------
# quadrature weights
# ---------------------------------------------------------------------------

def trapezoid_weights(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    d = np.diff(nodes)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def weighted_y_weights(nodes, a) -> np.ndarray:
    """Nodal weights W with sum_j W_j f(y_j) = int y^a f dy for piecewise-linear f.

    Each cell integrates y^a against the linear interpolant in closed form,
    so the integrable singularity of y^a at the first cell is handled exactly.
    """
    y = np.asarray(nodes, dtype=float)
    if y[0] < 0:
        raise ValueError("extension nodes must be nonnegative")
    w = np.zeros_like(y)
    yl, yr = y[:-1], y[1:]
    h = yr - yl
    p1 = (yr ** (1 + a) - yl ** (1 + a)) / (1 + a)   # int y^a
    p2 = (yr ** (2 + a) - yl ** (2 + a)) / (2 + a)   # int y^(1+a)
    w[:-1] += (yr * p1 - p2) / h
    w[1:] += (p2 - yl * p1) / h
    return w


def box_quadrature_weights(grid: HalfSpaceGrid, a=0.0, weighted=True) -> np.ndarray:
    """Tensor-product nodal quadrature weights over the whole grid box."""
    per_axis = [trapezoid_weights(ax) for ax in grid.tangential_axes]
    if weighted:
        per_axis.append(weighted_y_weights(grid.extension_nodes, a))
    else:
        per_axis.append(trapezoid_weights(grid.extension_nodes))
    per_axis.append(trapezoid_weights(grid.time_nodes))
    w = per_axis[0]
    for axis_w in per_axis[1:]:
        w = np.multiply.outer(w, axis_w)
    return w


def integrate_box(f: ScalarField, power=2, weighted=True) -> float:
    """Integral of field^power [* y^a] over the full grid box and time span."""
    vals = f.values
    if not np.all(np.isfinite(vals)):
        raise ValueError("field contains non-finite values")
    w = box_quadrature_weights(f.grid, f.weight_exponent_a, weighted)
    return float(np.sum(w * vals ** power))


# ---------------------------------------------------------------------------
# discrete differential operators
# ---------------------------------------------------------------------------

def _diff_along(values, nodes, axis):
    """Second-order first derivative on a (possibly nonuniform) axis."""
    x = np.asarray(nodes, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 nodes per differentiated axis")
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    h1 = (x[1:-1] - x[:-2]).reshape((-1,) + (1,) * (v.ndim - 1))
    h2 = (x[2:] - x[1:-1]).reshape((-1,) + (1,) * (v.ndim - 1))
    out[1:-1] = (-h2 / (h1 * (h1 + h2)) * v[:-2]
                 + (h2 - h1) / (h1 * h2) * v[1:-1]
                 + h1 / (h2 * (h1 + h2)) * v[2:])
    # one-sided second-order at the ends
    for idx, sl in ((0, (0, 1, 2)), (-1, (-1, -2, -3))):
        x0, x1_, x2_ = x[sl[0]], x[sl[1]], x[sl[2]]
        d1, d2 = x1_ - x0, x2_ - x0
        c1 = d2 / (d1 * (d2 - d1))
        c2 = -d1 / (d2 * (d2 - d1))
        c0 = -(c1 + c2)
        out[idx] = c0 * v[sl[0]] + c1 * v[sl[1]] + c2 * v[sl[2]]
    return np.moveaxis(out, 0, axis)


def gradient(f: ScalarField) -> VectorField:
    """Spatial gradient (tangential axes and y) by centered differences."""
    comps = tuple(_diff_along(f.values, ax, i)
                  for i, ax in enumerate(f.grid.axes[:-1]))
    return VectorField(f.grid, comps, f.weight_exponent_a)


def partial_t(f: ScalarField) -> ScalarField:
    vals = _diff_along(f.values, f.grid.time_nodes, f.grid.t_axis_index)
    return f.with_values(vals)


def weighted_divergence(vec: VectorField, a: float) -> ScalarField:
    """Conservative discretization of div(y^a v).

    Tangential terms use y^a * centered d/dx_i; the extension term differences
    face-averaged fluxes y_face^a * v_y so y^a is never evaluated at y = 0.
    The first and last y rows carry one-sided estimates built from interior
    faces only; residual-style diagnostics should restrict to interior cells.
    """
    if not (-1.0 < a < 1.0):
        raise ValueError("weight exponent must lie in (-1, 1)")
    grid = vec.grid
    y = np.asarray(grid.extension_nodes, dtype=float)
    yi = grid.y_axis_index
    out = np.zeros(grid.shape)

    ya = np.where(y > 0, y, np.nan) ** a
    ya_shape = [1] * len(grid.shape)
    ya_shape[yi] = len(y)
    ya = ya.reshape(ya_shape)
    for i in range(grid.n):
        term = ya * _diff_along(vec.components[i], grid.tangential_axes[i], i)
        out += np.where(np.isfinite(term), term, 0.0)

    vy = np.moveaxis(vec.components[grid.n], yi, 0)
    yf = 0.5 * (y[1:] + y[:-1])                      # face coordinates, all > 0
    fshape = (-1,) + (1,) * (vy.ndim - 1)
    flux = yf.reshape(fshape) ** a * 0.5 * (vy[1:] + vy[:-1])
    div_y = np.empty_like(vy)
    dy_c = (0.5 * (y[2:] - y[:-2])).reshape(fshape)
    div_y[1:-1] = (flux[1:] - flux[:-1]) / dy_c
    # one-sided: difference of the two faces nearest the boundary
    div_y[0] = (flux[1] - flux[0]) / (0.5 * (y[2] - y[0]))
    div_y[-1] = (flux[-1] - flux[-2]) / (0.5 * (y[-1] - y[-3]))
    out += np.moveaxis(div_y, 0, yi)
    return ScalarField(grid, out, vec.weight_exponent_a)


# ---------------------------------------------------------------------------
# snapshot persistence
# ---------------------------------------------------------------------------

def save_snapshot(f: ScalarField, path) -> None:
    """Write flat little-endian float64 (row-major x, y, t) plus JSON sidecar."""
    path = Path(path)
    f.values.astype("<f8").tofile(path)
    grid = f.grid
    sidecar = {
        "n": grid.n,
        "extents": {"tangential": grid.tangential_extent,
                    "extension": float(grid.extension_nodes[-1]),
                    "time": [float(grid.time_nodes[0]), float(grid.time_nodes[-1])]},
        "tangential_axes": [ax.tolist() for ax in grid.tangential_axes],
        "extension_nodes": np.asarray(grid.extension_nodes).tolist(),
        "time_nodes": np.asarray(grid.time_nodes).tolist(),
        "grading_exponent": grid.grading_exponent,
        "a": f.weight_exponent_a,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=1))


def load_snapshot(path) -> ScalarField:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = HalfSpaceGrid(
        n=meta["n"],
        tangential_extent=meta["extents"]["tangential"],
        tangential_axes=tuple(np.asarray(ax) for ax in meta["tangential_axes"]),
        extension_nodes=np.asarray(meta["extension_nodes"]),
        time_nodes=np.asarray(meta["time_nodes"]),
        grading_exponent=meta.get("grading_exponent", 1.0),
    )
    values = np.fromfile(path, dtype="<f8").reshape(grid.shape)
    return ScalarField(grid, values, meta["a"])
