"""Two independent realizations of the fractional heat operator H^s on a
periodic space-time box: the Fourier-multiplier definition with symbol
(4 pi^2 |xi|^2 + 2 pi i sigma)^s, and the Balakrishnan quadrature

    H^s f = -s / Gamma(1-s) * int_0^inf tau^(-1-s) (P_tau f - f) dtau

driven by the evolutive semigroup P_tau (heat smoothing in x composed with a
backward shift in t).  The two code paths share only the FFT, so agreement is
a genuine cross-check of the fractional power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import poch, roots_legendre

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpectralBox:
    """Periodic sampling box: n tangential axes plus one time axis.

    Samples live at x_i = i*P/m (left-closed uniform grids); frequencies are
    the usual discrete set k/P.
    """

    tangential_periods: tuple
    time_period: float
    tangential_modes: tuple
    time_modes: int
    s: float = 0.5

    def __post_init__(self):
        if len(self.tangential_periods) != len(self.tangential_modes):
            raise ValueError("periods and mode counts must align")
        if any(m % 2 or m < 4 for m in self.tangential_modes) or \
                self.time_modes % 2 or self.time_modes < 4:
            raise ValueError("mode counts must be even and at least 4")
        if not (0.0 < self.s < 1.0):
            raise ValueError("s must lie in (0, 1)")

    @property
    def n(self) -> int:
        return len(self.tangential_periods)

    @property
    def shape(self) -> tuple:
        return tuple(self.tangential_modes) + (self.time_modes,)

    def axes(self):
        """Sample coordinates along each axis (tangential..., time)."""
        out = [p * np.arange(m) / m
               for p, m in zip(self.tangential_periods, self.tangential_modes)]
        out.append(self.time_period * np.arange(self.time_modes) / self.time_modes)
        return out

    def frequencies(self):
        """Broadcastable frequency arrays (xi_1, ..., xi_n, sigma)."""
        freqs = []
        nax = self.n + 1
        for i, (p, m) in enumerate(zip(self.tangential_periods, self.tangential_modes)):
            f = np.fft.fftfreq(m, d=p / m)
            freqs.append(f.reshape([-1 if j == i else 1 for j in range(nax)]))
        ft = np.fft.fftfreq(self.time_modes, d=self.time_period / self.time_modes)
        freqs.append(ft.reshape([1] * self.n + [-1]))
        return freqs

    def heat_symbol(self):
        """z = 4 pi^2 |xi|^2 + 2 pi i sigma on the full mode grid."""
        freqs = self.frequencies()
        xi2 = sum(f ** 2 for f in freqs[:-1])
        return 4.0 * np.pi ** 2 * xi2 + TWO_PI * 1j * freqs[-1]

    def min_spatial_frequency(self) -> float:
        return min(1.0 / p for p in self.tangential_periods)

    def max_time_frequency(self) -> float:
        return 0.5 * self.time_modes / self.time_period

    def sample(self, fn):
        """Evaluate fn(x1, ..., xn, t) on the box mesh."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.asarray(fn(*mesh), dtype=float)


def _symmetrize_nyquist(mult):
    """Real multiplier on the time-Nyquist slice.

    That mode is its own conjugate partner (fftfreq reports only -N/2), so a
    complex multiplier there would break realness of the output; the symmetric
    convention averages the +/- Nyquist symbol values, i.e. takes the real part.
    """
    mult = mult.copy()
    mult[..., mult.shape[-1] // 2] = mult[..., mult.shape[-1] // 2].real
    return mult


def _check_real(out_complex, where):
    norm = np.linalg.norm(out_complex.real)
    resid = np.linalg.norm(out_complex.imag) / max(norm, 1e-300)
    if resid > 1e-8:
        raise FloatingPointError(f"{where}: imaginary residue {resid:.2e}")
    return out_complex.real, resid


def apply_hs_spectral(f, box: SpectralBox, s=None, return_residue=False):
    """H^s f by the principal-branch power of the heat symbol.

    ``s = 1`` is admitted and reduces to the heat operator d/dt - Laplacian.
    """
    if s is None:
        s = box.s
    if not (0.0 < s <= 1.0):
        raise ValueError("s must lie in (0, 1]")
    f = np.asarray(f, dtype=float)
    if f.shape != box.shape:
        raise ValueError("field shape does not match the box")
    z = box.heat_symbol()
    # principal branch: Arg z in (-pi/2, pi/2]; zero mode sent to 0
    mult = np.zeros_like(z)
    nz = z != 0
    mult[nz] = np.exp(s * np.log(z[nz]))
    out = np.fft.ifftn(_symmetrize_nyquist(mult) * np.fft.fftn(f))
    real, resid = _check_real(out, "apply_hs_spectral")
    return (real, resid) if return_residue else real


def evolutive_semigroup(f, box: SpectralBox, tau):
    """P_tau f: Gaussian smoothing in x composed with the shift t -> t - tau."""
    if tau < 0:
        raise ValueError("semigroup time must be nonnegative")
    f = np.asarray(f, dtype=float)
    mult = _symmetrize_nyquist(np.exp(-box.heat_symbol() * tau))
    out = np.fft.ifftn(mult * np.fft.fftn(f))
    real, _ = _check_real(out, "evolutive_semigroup")
    return real


@dataclass(frozen=True)
class BalakrishnanRule:
    """tau-quadrature for the Balakrishnan integral on (0, t_max].

    ``nodes``/``weights`` integrate g(tau) against tau^(-1-s) dtau on
    (0, t_max]; the weights already carry the singular factor.  The endpoint
    singularity is removed by the substitution u = tau^(1-s) on (0, 1]
    (``singular_substitution``); beyond t_max an analytic integration-by-parts
    tail is attached per mode at application time.
    """

    s: float
    nodes: np.ndarray
    weights: np.ndarray
    t_max: float
    singular_substitution: bool = True

    def __post_init__(self):
        if np.any(self.nodes <= 0) or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be positive and increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")


def build_balakrishnan_rule(s, box: SpectralBox, singular_nodes=200,
                            panel_nodes=8, t_max=None) -> BalakrishnanRule:
    """Rule resolving both the tau^(-1-s) endpoint and mode oscillation.

    ``t_max`` defaults to the larger of the spatial-decay scale (smallest
    nonzero tangential mode damped below 1e-12) and eight time periods, so the
    integration-by-parts tail converges for every nonzero mode.
    """
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    if t_max is None:
        xi_min = box.min_spatial_frequency()
        t_spatial = 12.0 * math.log(10.0) / (4.0 * np.pi ** 2 * xi_min ** 2)
        t_max = max(t_spatial, 8.0 * box.time_period, 2.0)
    # (0, 1]: u = tau^(1-s) turns tau^(-1-s) dtau into u^(-1/(1-s)) du/(1-s);
    # against exp(-z tau) - 1 = O(u^(1/(1-s))) the integrand stays bounded,
    # so Gauss-Legendre applies.
    xg, wg = roots_legendre(singular_nodes)
    u = 0.5 * (xg + 1.0)
    wu = 0.5 * wg
    tau_head = u ** (1.0 / (1.0 - s))
    w_head = wu * u ** (-1.0 / (1.0 - s)) / (1.0 - s)   # includes tau^(-1-s) dtau
    # [1, t_max]: composite Gauss panels short enough to resolve the fastest
    # time oscillation exp(-2 pi i sigma_max tau)
    omega_max = TWO_PI * box.max_time_frequency()
    h = min(1.0, TWO_PI / omega_max / 3.0)
    n_panels = max(1, int(np.ceil((t_max - 1.0) / h)))
    edges = np.linspace(1.0, t_max, n_panels + 1)
    xp, wp = roots_legendre(panel_nodes)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    tau_body = (mid[:, None] + half[:, None] * xp[None, :]).ravel()
    w_body = (half[:, None] * wp[None, :]).ravel() * tau_body ** (-1.0 - s)
    nodes = np.concatenate([tau_head, tau_body])
    weights = np.concatenate([w_head, w_body])
    order = np.argsort(nodes)
    return BalakrishnanRule(s, nodes[order], weights[order], float(t_max))


def _tail_integral(z, T, s, terms=12):
    """int_T^inf tau^(-1-s) (exp(-z tau) - 1) dtau per mode, z != 0.

    The -1 part is exact; the exp part is summed by repeated integration by
    parts, valid once |z| T comfortably exceeds the term count.
    """
    out = np.full(z.shape, -T ** (-s) / s, dtype=complex)
    rho = z.real
    live = rho * T < 30.0          # otherwise exp(-z T) is below 1e-13
    zl = z[live]
    acc = np.zeros_like(zl)
    for k in range(terms):
        acc += (-1) ** k * poch(1.0 + s, k) * T ** (-1.0 - s - k) / zl ** (k + 1)
    out[live] += np.exp(-zl * T) * acc
    return out


def balakrishnan_tail_estimate(rule: BalakrishnanRule, box: SpectralBox,
                               terms=12):
    """Bound on the neglected remainder of the analytic tail, worst mode."""
    z = box.heat_symbol()
    zmod = np.abs(z[z != 0])
    T, s = rule.t_max, rule.s
    worst = np.min(zmod)
    return poch(1.0 + s, terms) * T ** (-s - terms) / (worst ** terms * (s + terms))


def balakrishnan_symbol(box: SpectralBox, rule: BalakrishnanRule):
    """Multiplier -s/Gamma(1-s) * int tau^(-1-s)(e^(-z tau) - 1) dtau.

    Computed on the distinct symbol values only (the quadrature is a pure
    function of z), then scattered back to the mode grid.
    """
    s = rule.s
    z = box.heat_symbol()
    zu, inv = np.unique(z.ravel(), return_inverse=True)
    vals = np.zeros(zu.shape, dtype=complex)
    nz = zu != 0
    znz = zu[nz]
    acc = np.zeros_like(znz)
    # head + body: sum_j w_j (e^(-z tau_j) - 1), weights carry tau^(-1-s)
    for tau, w in zip(rule.nodes, rule.weights):
        acc += w * np.expm1(-znz * tau)
    acc += _tail_integral(znz, rule.t_max, s)
    vals[nz] = -s / math.gamma(1.0 - s) * acc
    return _symmetrize_nyquist(vals[inv].reshape(z.shape))


def apply_hs_balakrishnan(f, box: SpectralBox, rule: BalakrishnanRule = None,
                          s=None, return_residue=False, tail_tol=1e-8):
    """H^s f through the semigroup integral; independent of the symbol power."""
    if s is None:
        s = box.s
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie strictly inside (0, 1)")
    if rule is None:
        rule = build_balakrishnan_rule(s, box)
    if abs(rule.s - s) > 1e-14:
        raise ValueError("rule was built for a different s")
    est = balakrishnan_tail_estimate(rule, box)
    if est > tail_tol:
        raise ValueError(f"t_max too small: tail estimate {est:.2e} > {tail_tol:.0e}")
    f = np.asarray(f, dtype=float)
    if f.shape != box.shape:
        raise ValueError("field shape does not match the box")
    mult = balakrishnan_symbol(box, rule)
    out = np.fft.ifftn(mult * np.fft.fftn(f))
    real, resid = _check_real(out, "apply_hs_balakrishnan")
    return (real, resid) if return_residue else real


def random_band_limited(box: SpectralBox, max_mode=4, rng=None, amplitude=1.0):
    """Real random field with modes confined to |k_i| <= max_mode per axis."""
    rng = np.random.default_rng(rng)
    spec = np.zeros(box.shape, dtype=complex)
    coeff = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    keep = np.ones(box.shape, dtype=bool)
    for ax, m in enumerate(box.shape):
        k = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        sl = [1] * (box.n + 1)
        sl[ax] = -1
        keep &= np.abs(k.reshape(sl)) <= max_mode
    spec[keep] = coeff[keep]
    field = np.fft.ifftn(spec).real
    nrm = np.max(np.abs(field))
    return amplitude * field / (nrm if nrm > 0 else 1.0)
