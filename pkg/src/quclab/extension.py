"""Degenerate extension problem in the upper half space {y > 0}.

Two independent routes to the extension U of a thin datum u:

* a finite-volume marching solver for the weighted equation
  y^a U_t + div(y^a grad U) = 0 with the weighted Neumann coupling
  lim_{y->0} y^a U_y = V u on the thin set, and
* a semigroup-kernel construction (``extend_via_kernel``) that builds U
  mode-by-mode from tangential Gaussian factors and the Poisson-type profile
  of the Bessel generator, by quadrature in the semigroup variable.

``verify_np`` cross-checks the two sides of the trace identity
2^{-a} Gamma((1-a)/2)/Gamma((1+a)/2) * y^a U_y|_{y=0} = -H^s u against the
spectral fractional operator, which shares no code with the kernel route.

Note on orientation: with data at t = 0 the equation above diffuses toward
*decreasing* t, so the default march prescribes the final time slice and
steps down (unconditionally stable).  ``orientation="forward"`` solves the
companion equation y^a U_t - div(y^a grad U) = 0 upward from t = 0, and
``orientation="literal"`` marches the backward equation upward anyway, which
is ill posed and only usable for short horizons of smooth data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .fractional import SpectralBox, apply_hs_spectral
from .grid import HalfSpaceGrid, ScalarField, trapezoid_weights, weighted_y_weights


# ---------------------------------------------------------------------------
# potentials

@dataclass(frozen=True)
class Potential:
    """Thin-set potential V(x, t) with its C^1-type size ||V||_1.

    ``norm_1`` is sup|V| + sup|grad_x V| + sup|d_t V| + 1, hence always >= 1.
    """

    values: np.ndarray          # shape (tangential..., time)
    norm_1: float

    def __post_init__(self):
        if self.norm_1 < 1.0:
            raise ValueError("norm_1 includes the +1 offset and cannot be < 1")

    @classmethod
    def from_function(cls, grid: HalfSpaceGrid, fn, norm_1=None):
        """Sample V = fn(x..., t) on the thin grid; estimate the norm if absent.

        The finite-difference estimate samples a dense auxiliary mesh, so it
        is reliable to a few percent for smooth V.
        """
        axes = list(grid.tangential_axes) + [grid.time_nodes]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.broadcast_to(np.asarray(fn(*mesh), dtype=float),
                               mesh[0].shape).copy()
        if norm_1 is None:
            norm_1 = estimate_potential_norm(fn, grid)
        return cls(vals, float(norm_1))

    @classmethod
    def zero(cls, grid: HalfSpaceGrid):
        shape = tuple(len(ax) for ax in grid.tangential_axes) + (len(grid.time_nodes),)
        return cls(np.zeros(shape), 1.0)


def estimate_potential_norm(fn, grid: HalfSpaceGrid, samples=160):
    """Finite-difference estimate of sup|V| + sup|grad_x V| + sup|d_t V| + 1."""
    L = grid.tangential_extent
    axes = [np.linspace(-L, L, samples) for _ in range(grid.n)]
    t0, t1 = grid.time_nodes[0], grid.time_nodes[-1]
    axes.append(np.linspace(t0, max(t1, t0 + 1e-12), max(samples // 2, 8)))
    mesh = np.meshgrid(*axes, indexing="ij")
    v = np.broadcast_to(np.asarray(fn(*mesh), dtype=float), mesh[0].shape)
    total = np.max(np.abs(v)) + 1.0
    grads = []
    for ax in range(grid.n):
        grads.append(np.gradient(v, axes[ax], axis=ax))
    if grads:
        total += np.max(np.sqrt(sum(g ** 2 for g in grads)))
    if len(axes[-1]) > 1 and t1 > t0:
        total += np.max(np.abs(np.gradient(v, axes[-1], axis=-1)))
    return float(total)


# ---------------------------------------------------------------------------
# problem / solution containers

@dataclass(frozen=True)
class ExtensionProblem:
    grid: HalfSpaceGrid
    a: float
    potential: Potential
    data: np.ndarray                 # spatial slice (tangential..., y)
    boundary_values: object = None   # callable(x..., y, t) for Dirichlet walls

    def __post_init__(self):
        if not (-1.0 < self.a < 1.0):
            raise ValueError("a must lie in (-1, 1)")
        spatial = self.grid.shape[:-1]
        if self.data.shape != spatial:
            raise ValueError("data slice does not match the spatial grid")
        thin = tuple(len(ax) for ax in self.grid.tangential_axes) \
            + (len(self.grid.time_nodes),)
        if self.potential.values.shape != thin:
            raise ValueError("potential grid mismatch")

    @property
    def s(self) -> float:
        return 0.5 * (1.0 - self.a)


@dataclass(frozen=True)
class SolverConfig:
    orientation: str = "backward"        # backward | forward | literal
    scheme: str = "implicit_euler"       # implicit_euler | crank_nicolson
    linear_solver: str = "auto"          # auto | direct | cg
    cg_tol: float = 1e-10
    thin_bc: str = "flux"                # flux | penalty
    penalty: float = 1e6
    thin_dirichlet: np.ndarray = None    # values for penalty mode (thin shape)

    def __post_init__(self):
        if self.orientation not in ("backward", "forward", "literal"):
            raise ValueError("unknown orientation")
        if self.scheme not in ("implicit_euler", "crank_nicolson"):
            raise ValueError("unknown scheme")


@dataclass(frozen=True)
class Solution:
    U: ScalarField
    residual_norm: float
    neumann_trace: np.ndarray
    trace_fit_residual: float = 0.0


# ---------------------------------------------------------------------------
# finite-volume assembly

def _face_transmissibility(y, a):
    """Exact coupling for the flux y^a U_y: steady flux between two nodes
    carries U_r - U_l = F (y_r^{1-a} - y_l^{1-a}) / (1-a), so the face
    coefficient is (1-a) / (y_r^{1-a} - y_l^{1-a}); this stays exact through
    the degenerate first cell where U ~ c0 + c1 y^{1-a}."""
    p = y ** (1.0 - a)
    return (1.0 - a) / np.diff(p)


def _assemble(grid: HalfSpaceGrid, a):
    """Mass diagonal and V-free stiffness A (rows approximate the cell
    integral of div(y^a grad U)); plus the index bookkeeping."""
    y = grid.extension_nodes
    wy = weighted_y_weights(y, a)                # exact int y^a over cells
    wx = [trapezoid_weights(ax) for ax in grid.tangential_axes]
    spatial_shape = tuple(len(ax) for ax in grid.tangential_axes) + (len(y),)
    ntot = int(np.prod(spatial_shape))
    mass_parts = wx + [wy]
    M = mass_parts[0]
    for p in mass_parts[1:]:
        M = np.multiply.outer(M, p)
    M = M.ravel()

    idx = np.arange(ntot).reshape(spatial_shape)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())

    # y-direction fluxes, tangential mass in front
    ty = _face_transmissibility(y, a)
    tan_mass = wx[0]
    for p in wx[1:]:
        tan_mass = np.multiply.outer(tan_mass, p)
    for j in range(len(y) - 1):
        lo = idx[..., j]
        hi = idx[..., j + 1]
        coeff = tan_mass * ty[j]
        add(lo, hi, coeff)
        add(lo, lo, -coeff)
        add(hi, lo, coeff)
        add(hi, hi, -coeff)

    # tangential fluxes (uniform spacing), weight int y^a in front
    for axn in range(grid.n):
        ax_nodes = grid.tangential_axes[axn]
        h = ax_nodes[1] - ax_nodes[0]
        other = [wx[k] for k in range(grid.n) if k != axn] + [wy]
        om = other[0]
        for p in other[1:]:
            om = np.multiply.outer(om, p)
        sl_lo = [slice(None)] * len(spatial_shape)
        sl_hi = [slice(None)] * len(spatial_shape)
        for i in range(len(ax_nodes) - 1):
            sl_lo[axn] = i
            sl_hi[axn] = i + 1
            lo = idx[tuple(sl_lo)]
            hi = idx[tuple(sl_hi)]
            coeff = om / h
            add(lo, hi, coeff)
            add(lo, lo, -coeff)
            add(hi, lo, coeff)
            add(hi, hi, -coeff)

    A = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(ntot, ntot))

    # Dirichlet walls: tangential extremes and the top of the y column
    bnd = np.zeros(spatial_shape, dtype=bool)
    for axn in range(grid.n):
        sl = [slice(None)] * len(spatial_shape)
        sl[axn] = 0
        bnd[tuple(sl)] = True
        sl[axn] = -1
        bnd[tuple(sl)] = True
    bnd[..., -1] = True
    thin = idx[..., 0].ravel()
    thin_mass = tan_mass.ravel()
    return M, A, bnd.ravel(), thin, thin_mass, spatial_shape


def solve_backward_extension(problem: ExtensionProblem,
                             config: SolverConfig = SolverConfig()) -> Solution:
    """March the weighted extension equation over the grid's time nodes.

    ``orientation="backward"`` (default) reads ``problem.data`` as the final
    time slice and fills earlier slices; the other orientations read it as
    the t = 0 slice.
    """
    grid, a = problem.grid, problem.a
    M, A, bnd, thin, thin_mass, spatial_shape = _assemble(grid, a)
    ntot = M.size
    tnodes = grid.time_nodes
    nt = len(tnodes)
    V = problem.potential.values.reshape(-1, nt)

    down = config.orientation == "backward"
    # step sign: both stable orientations advance the diffusive direction,
    # the literal march flips it
    sign = -1.0 if config.orientation == "literal" else 1.0

    interior = ~bnd
    ii = np.where(interior)[0]
    bb = np.where(bnd)[0]

    def boundary_slice(t):
        if problem.boundary_values is None:
            return np.zeros(len(bb))
        mesh = np.meshgrid(*grid.tangential_axes, grid.extension_nodes,
                           indexing="ij")
        g = np.broadcast_to(np.asarray(problem.boundary_values(*mesh, t),
                                       dtype=float), mesh[0].shape).ravel()
        return g[bb]

    def thin_terms(k):
        """Diagonal add-on and rhs add-on from the thin boundary face."""
        if config.thin_bc == "flux":
            return -V[:, k] * thin_mass, np.zeros(len(thin))
        u = np.asarray(config.thin_dirichlet, dtype=float).reshape(-1, nt)[:, k]
        kappa = config.penalty
        return -np.full(len(thin), kappa) * thin_mass, kappa * thin_mass * u

    theta = 1.0 if config.scheme == "implicit_euler" else 0.5
    U = np.empty(spatial_shape + (nt,))
    order = range(nt - 2, -1, -1) if down else range(1, nt)
    k0 = nt - 1 if down else 0
    U[..., k0] = problem.data
    cur = problem.data.ravel().copy()
    cur[bb] = boundary_slice(tnodes[k0])
    U[..., k0] = cur.reshape(spatial_shape)

    use_direct = config.linear_solver == "direct" or \
        (config.linear_solver == "auto" and grid.n == 1)
    Mdiag = sp.diags(M)

    for k in order:
        kprev = k + 1 if down else k - 1
        dt = abs(tnodes[kprev] - tnodes[k])
        dthin, rthin = thin_terms(k)
        Ak = A + sp.csr_matrix((dthin, (thin, thin)), shape=(ntot, ntot))
        lhs = (Mdiag - sign * theta * dt * Ak).tocsr()
        rhs = M * cur + sign * (1.0 - theta) * dt * (Ak @ cur)
        rhs[thin] += sign * dt * rthin
        g = boundary_slice(tnodes[k])
        rhs_i = rhs[ii] - lhs[ii][:, bb] @ g
        lhs_ii = lhs[ii][:, ii]
        if use_direct:
            try:
                sol = splu(lhs_ii.tocsc()).solve(rhs_i)
            except RuntimeError as exc:
                raise ValueError(f"singular linear system at t={tnodes[k]}: {exc}")
        else:
            prec = sp.diags(1.0 / lhs_ii.diagonal())
            sol, info = cg(lhs_ii, rhs_i, rtol=config.cg_tol, maxiter=5000, M=prec)
            if info != 0:
                raise ValueError(f"conjugate-gradient failure (info={info}) "
                                 f"at t={tnodes[k]}")
        cur = np.empty(ntot)
        cur[ii] = sol
        cur[bb] = g
        U[..., k] = cur.reshape(spatial_shape)

    fld = ScalarField(grid, U, a)
    trace, fit_res = weighted_neumann_trace_values(U, grid.extension_nodes, a)
    resid = _interior_residual(U, M, A, interior, thin, tnodes,
                               orientation=config.orientation)
    return Solution(fld, resid, trace, fit_res)


def _interior_residual(U, M, A, interior, thin, tnodes, orientation="backward"):
    """Cell-integrated residual of y^a U_t +/- div(y^a grad U), interior rows."""
    nt = len(tnodes)
    if nt < 3:
        return 0.0
    flat = U.reshape(-1, nt)
    sgn = -1.0 if orientation == "forward" else 1.0
    num = den = 0.0
    mask = interior.copy()
    mask[thin] = False
    for k in range(1, nt - 1):
        dUdt = (flat[:, k + 1] - flat[:, k - 1]) / (tnodes[k + 1] - tnodes[k - 1])
        r = M * dUdt + sgn * (A @ flat[:, k])
        num += np.sum(r[mask] ** 2)
        den += np.sum((M[mask] * flat[mask, k]) ** 2)
    return float(np.sqrt(num) / max(np.sqrt(den), 1e-300))


def interior_residual(solution: Solution, orientation="backward") -> float:
    """Normalized residual of the weighted equation on interior cells."""
    grid = solution.U.grid
    a = solution.U.weight_exponent_a
    M, A, bnd, thin, _, _ = _assemble(grid, a)
    return _interior_residual(solution.U.values, M, A, ~bnd, thin,
                              grid.time_nodes, orientation)


# ---------------------------------------------------------------------------
# weighted Neumann trace

def weighted_neumann_trace_values(U, y, a, n_fit=4, quadratic_term=True):
    """lim_{y->0} y^a U_y via the boundary expansion U ~ c0 + c1 y^{1-a}.

    A y^2 correction column is included by default (set
    ``quadratic_term=False`` for the bare two-term fit); the trace is
    (1-a) c1.  Returns (trace over the remaining axes, relative fit residual).
    """
    U = np.asarray(U, dtype=float)
    k = max(n_fit, 3 if quadratic_term else 2)
    if len(y) < k + 1:
        raise ValueError("not enough extension nodes for the trace fit")
    ys = y[:k]
    cols = [np.ones_like(ys), ys ** (1.0 - a)]
    if quadratic_term:
        cols.append(ys ** 2)
    Phi = np.column_stack(cols)
    # flatten everything except the y axis (second-to-last for space-time U)
    yax = U.ndim - 2 if U.ndim >= 2 else 0
    moved = np.moveaxis(U, yax, 0)[:k]
    flat = moved.reshape(k, -1)
    coef, res, _, _ = np.linalg.lstsq(Phi, flat, rcond=None)
    fit = Phi @ coef
    rel = float(np.linalg.norm(flat - fit) / max(np.linalg.norm(flat), 1e-300))
    trace = (1.0 - a) * coef[1].reshape(moved.shape[1:])
    return trace, rel


def weighted_neumann_trace(solution: Solution, n_fit=4, quadratic_term=True):
    """Trace field of a solved problem; shape (tangential..., time)."""
    grid = solution.U.grid
    tr, _ = weighted_neumann_trace_values(solution.U.values,
                                          grid.extension_nodes,
                                          solution.U.weight_exponent_a,
                                          n_fit, quadratic_term)
    return tr


# ---------------------------------------------------------------------------
# kernel-route extension and the trace identity

def _poisson_profile(z, y, s, nodes=240, span=18.0):
    """Extension multiplier m(y; z) with m(0) = 1, per heat-symbol value z.

    m = Gamma(s)^{-1} int_0^inf e^{-r} r^{s-1} exp(-z y^2 / 4r) dr, evaluated
    through r = sqrt(w) e^v (w = z y^2/4):
    m = w^{s/2}/Gamma(s) int e^{s v} exp(-2 sqrt(w) cosh v) dv,
    whose integrand decays doubly exponentially since Re sqrt(w) >= |w|^{1/2}
    cos(pi/4) on the right half plane.
    """
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=float)
    w = np.multiply.outer(y ** 2, z) / 4.0          # (ny, nz)
    out = np.ones(w.shape, dtype=complex)
    nzmask = w != 0
    wnz = w[nzmask]
    sqw = np.sqrt(wnz)                              # principal branch
    v = np.linspace(-span, span, nodes)
    dv = v[1] - v[0]
    # trapezoid over v; endpoint terms are below 1e-300 already
    acc = np.zeros_like(wnz)
    for vi in v:
        acc += np.exp(s * vi - 2.0 * sqw * np.cosh(vi))
    acc *= dv
    out[nzmask] = wnz ** (0.5 * s) * acc / math.gamma(s)
    return out                                      # (ny, nz)


def extend_via_kernel(u, box: SpectralBox, y_nodes, s=None):
    """Extension of a thin field u(x, t) into y > 0, mode by mode.

    Returns U with shape box.shape + (len(y_nodes),); U[..., 0] reproduces u
    when y_nodes[0] = 0.
    """
    if s is None:
        s = box.s
    u = np.asarray(u, dtype=float)
    if u.shape != box.shape:
        raise ValueError("thin field shape does not match the box")
    y = np.asarray(y_nodes, dtype=float)
    z = box.heat_symbol()
    zu, inv = np.unique(z.ravel(), return_inverse=True)
    prof = _poisson_profile(zu, y, s)               # (ny, nzu)
    spec = np.fft.fftn(u)
    out = np.empty(box.shape + (len(y),))
    flat_spec = spec.ravel()
    for j in range(len(y)):
        mult = prof[j][inv].reshape(z.shape)
        mult[..., mult.shape[-1] // 2] = mult[..., mult.shape[-1] // 2].real
        slab = np.fft.ifftn(mult * spec)
        out[..., j] = slab.real
    return out


@dataclass(frozen=True)
class TraceIdentityReport:
    discrepancy: float
    lhs_norm: float
    rhs_norm: float
    fit_residual: float

    @property
    def passed(self) -> bool:
        return self.discrepancy <= 1e-2


def trace_constant(s: float) -> float:
    """2^{-a} Gamma((1-a)/2) / Gamma((1+a)/2) with a = 1 - 2s."""
    a = 1.0 - 2.0 * s
    return 2.0 ** (-a) * math.gamma(0.5 * (1.0 - a)) / math.gamma(0.5 * (1.0 + a))


def verify_np(u, box: SpectralBox, s=None, y_fit=None):
    """Compare the kernel-route weighted trace with -H^s u (spectral path).

    The left side never touches the symbol power: U is built by semigroup
    quadrature and its trace read off a small-y fit in 1, y^{1-a}, y^2.
    """
    if s is None:
        s = box.s
    a = 1.0 - 2.0 * s
    if y_fit is None:
        y_fit = np.concatenate([[0.0], np.geomspace(1e-3, 5e-2, 8)])
    U = extend_via_kernel(u, box, y_fit, s)
    # y axis is last here; move it next to the front layout expected by the fit
    Umoved = np.moveaxis(U, -1, -2) if U.ndim >= 3 else U
    trace, fit_res = weighted_neumann_trace_values(Umoved, y_fit, a)
    lhs = trace_constant(s) * trace
    rhs = -apply_hs_spectral(u, box, s)
    nrm = np.linalg.norm(rhs)
    if nrm == 0:
        disc = float(np.linalg.norm(lhs))
    else:
        disc = float(np.linalg.norm(lhs - rhs) / nrm)
    return TraceIdentityReport(disc, float(np.linalg.norm(lhs)), float(nrm),
                               fit_res)
