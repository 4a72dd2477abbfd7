"""Configuration-driven experiment runner.

Usage: quclab <subcommand> --config path.toml [--out dir] [--seed N]

Subcommands: verify-weights, verify-kernels, verify-operator,
solve-extension, verify-inequalities, measure-order, doubling,
sweep-potential.  Each reads a TOML config, writes CSV tables and a JSON
summary plus a run manifest (config hash, seed, per-check verdicts,
empirical constants, wall-clock per stage) into the output directory, and
exits nonzero iff a hard assertion fails.  Outputs are deterministic for a
fixed (config, seed).

The thread budget honors the QUCLAB_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                       # python 3.10
    import tomli as tomllib

from . import __version__


class ConfigError(ValueError):
    pass


def _load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        return tomllib.loads(raw.decode()), raw
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")


def _config_hash(raw, seed):
    h = hashlib.sha256()
    h.update(raw)
    h.update(str(seed).encode())
    return h.hexdigest()[:16]


def _atomic_write(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True,
                                   default=float) + "\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            cells.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")


def _need(cfg, section, key, default=None):
    block = cfg.get(section, {})
    if key not in block:
        if default is not None:
            return default
        raise ConfigError(f"missing [{section}] {key} in config")
    return block[key]


class _Stages:
    def __init__(self):
        self.times = {}
        self._t0 = None
        self._name = None

    def start(self, name):
        self._name, self._t0 = name, time.perf_counter()

    def stop(self):
        if self._name is not None:
            self.times[self._name] = round(time.perf_counter() - self._t0, 4)
            self._name = None


# ---------------------------------------------------------------------------
# subcommands

def run_verify_weights(cfg, out, seed, stages):
    from .carleman import (build_sigma, condition_iii_value, export_sigma_csv,
                           verify_sigma_properties)
    s = float(_need(cfg, "weights", "s"))
    lam = float(_need(cfg, "weights", "lam"))
    nodes = int(_need(cfg, "weights", "node_count", 512))
    stages.start("build_sigma")
    table = build_sigma(s, lam, node_count=nodes)
    stages.stop()
    stages.start("verify")
    rep = verify_sigma_properties(table)
    ciii_quad, ciii_closed = condition_iii_value(s)
    stages.stop()
    export_sigma_csv(table, os.path.join(out, "sigma_table.csv"))
    checks = {
        "sigma_at_most_t": rep.max_sigma_over_t <= 1.0 + 1e-12,
        "sigma_prime_bounded": rep.max_sigma_prime <= 1.0 + 1e-12,
        "ode_residual": rep.ode_residual <= 1e-6,
        "properties_finite": rep.all_finite,
    }
    constants = {"N_emp": rep.N_emp, "N_property_1": rep.N_property_1,
                 "N_property_2": rep.N_property_2,
                 "N_property_3": rep.N_property_3,
                 "N_property_4": rep.N_property_4,
                 "ode_residual": rep.ode_residual,
                 "condition_iii_quadrature": ciii_quad,
                 "condition_iii_closed_form": ciii_closed}
    _write_json(os.path.join(out, "weights_summary.json"),
                {"s": s, "lam": lam, "checks": checks,
                 "constants": constants})
    return checks, constants


def run_verify_kernels(cfg, out, seed, stages):
    from .kernels import BACKEND, bessel_heat_kernel
    a_values = [float(v) for v in _need(cfg, "kernels", "a_values",
                                        [-0.5, 0.0, 0.5])]
    t = float(_need(cfg, "kernels", "t", 0.7))
    tol = float(_need(cfg, "kernels", "tol", 1e-8))
    from scipy.special import roots_genlaguerre
    rows, checks = [], {}

    def laguerre_weighted(a, fn_vals, r, w):
        # int_0^inf g(y) y^a dy with y^2 = 4 t r, assembled in log space so
        # the e^r factor never overflows on its own
        with np.errstate(divide="ignore"):
            terms = np.where(fn_vals > 0,
                             np.exp(np.log(w) + r
                                    + np.log(np.where(fn_vals > 0, fn_vals,
                                                      1.0))), 0.0)
        return 0.5 * (4.0 * t) ** (0.5 * (1 + a)) * float(np.sum(terms))

    stages.start("identities")
    for a in a_values:
        x = 0.9
        r, w = roots_genlaguerre(160, 0.5 * (a - 1.0))
        y = np.sqrt(4.0 * t * r)
        # mass: int_0^inf p_a(x, y, t) y^a dy = 1
        mass = laguerre_weighted(a, bessel_heat_kernel(x, y, t, a), r, w)
        mass_err = abs(mass - 1.0)
        # symmetry
        ys = np.linspace(0.1, 3.0, 7)
        sym_err = float(np.max(np.abs(
            bessel_heat_kernel(x, ys, t, a) - bessel_heat_kernel(ys, x, t, a))))
        # Chapman-Kolmogorov: p_{2t}(x, x2) = int p_t(x, y) p_t(y, x2) y^a dy
        x2 = 1.7
        ck = laguerre_weighted(a, bessel_heat_kernel(x, y, t, a)
                               * bessel_heat_kernel(y, x2, t, a), r, w)
        ck_err = abs(ck - bessel_heat_kernel(x, x2, 2 * t, a)) \
            / bessel_heat_kernel(x, x2, 2 * t, a)
        rows.append((a, float(mass_err), sym_err, float(ck_err)))
        checks[f"a={a:g}"] = max(mass_err, sym_err, ck_err) <= tol
    stages.stop()
    _write_csv(os.path.join(out, "kernel_identities.csv"),
               ["a", "mass_error", "symmetry_error", "chapman_error"], rows)
    constants = {"backend": BACKEND,
                 "max_error": max(max(r[1:]) for r in rows)}
    _write_json(os.path.join(out, "kernels_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def run_verify_operator(cfg, out, seed, stages):
    from .fractional import (SpectralBox, apply_hs_balakrishnan,
                             apply_hs_spectral, build_balakrishnan_rule,
                             random_band_limited)
    s_values = [float(v) for v in _need(cfg, "operator", "s_values",
                                        [0.25, 0.5, 0.75])]
    modes = int(_need(cfg, "operator", "modes", 32))
    n_fields = int(_need(cfg, "operator", "fields", 5))
    tol = float(_need(cfg, "operator", "tol", 1e-4))
    rng = np.random.default_rng(seed)
    rows, checks = [], {}
    stages.start("battery")
    for s in s_values:
        box = SpectralBox((2 * np.pi,), 2 * np.pi, (modes,), modes, s=s)
        rule = build_balakrishnan_rule(s, box)
        worst = 0.0
        for _ in range(n_fields):
            f = random_band_limited(box, rng=rng)
            ref = apply_hs_spectral(f, box)
            got = apply_hs_balakrishnan(f, box, rule=rule)
            err = float(np.max(np.abs(got - ref))
                        / max(np.max(np.abs(ref)), 1e-300))
            worst = max(worst, err)
        rows.append((s, worst))
        checks[f"s={s:g}"] = worst <= tol
    stages.stop()
    _write_csv(os.path.join(out, "operator_battery.csv"),
               ["s", "max_rel_error"], rows)
    constants = {"max_rel_error": max(r[1] for r in rows)}
    _write_json(os.path.join(out, "operator_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def _data_expression(expr, n):
    import sympy as sp
    syms = [sp.Symbol(f"x{i + 1}", real=True) for i in range(n)]
    ysym = sp.Symbol("y", real=True, nonnegative=True)
    local = {s.name: s for s in syms}
    local.update({"y": ysym, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp})
    try:
        tree = sp.sympify(expr, locals=local)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse data expression {expr!r}: {exc}")
    fn = sp.lambdify(syms + [ysym], tree, "numpy")
    return lambda *c: np.broadcast_to(np.asarray(fn(*c), float), c[0].shape)


def run_solve_extension(cfg, out, seed, stages):
    from .extension import (ExtensionProblem, SolverConfig,
                            solve_backward_extension)
    from .expressions import expression_potential
    from .grid import build_graded_grid, default_grading_exponent, \
        save_snapshot
    s = float(_need(cfg, "extension", "s"))
    a = 1.0 - 2.0 * s
    if "a" in cfg.get("extension", {}) and \
            abs(float(cfg["extension"]["a"]) - a) > 1e-12:
        raise ConfigError("inconsistent config: a must equal 1 - 2s")
    n = int(_need(cfg, "extension", "n", 1))
    g = cfg.get("grid", {})
    grid = build_graded_grid(
        n, float(g.get("extent", 2.0)), int(g.get("nx", 64)),
        int(g.get("ny", 32)),
        grading_exponent=default_grading_exponent(a),
        extension_extent=float(g.get("y_extent", g.get("extent", 2.0))),
        time_nodes=np.linspace(0.0, float(g.get("time_extent", 0.5)),
                               int(g.get("nt", 33))))
    pot = expression_potential(str(_need(cfg, "extension", "potential", "0")),
                               grid)
    data_fn = _data_expression(_need(cfg, "extension", "data"), n)
    mesh = np.meshgrid(*grid.tangential_axes, grid.extension_nodes,
                       indexing="ij")
    data = data_fn(*mesh)
    problem = ExtensionProblem(grid, a, pot, data)
    solver = SolverConfig(
        orientation=str(_need(cfg, "extension", "orientation", "backward")),
        scheme=str(_need(cfg, "extension", "scheme", "implicit_euler")))
    stages.start("solve")
    sol = solve_backward_extension(problem, solver)
    stages.stop()
    save_snapshot(sol.U, os.path.join(out, "extension_solution.npz"))
    # the interior residual converges with refinement but sits at the
    # discretization scale; the default gate is a sanity bound, tighten it
    # in the config for refined grids
    checks = {"residual": sol.residual_norm <= float(
        _need(cfg, "extension", "residual_tol", 0.5))}
    constants = {"residual_norm": sol.residual_norm,
                 "trace_fit_residual": sol.trace_fit_residual,
                 "potential_norm_1": pot.norm_1}
    _write_json(os.path.join(out, "extension_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def run_verify_inequalities(cfg, out, seed, stages, which=None):
    from . import inequalities as iq
    which = which or _need(cfg, "inequalities", "which")
    if which not in ("hardy", "trace", "doubling", "carleman", "monotonicity"):
        raise ConfigError(f"unknown inequality battery {which!r}")
    rows, checks, constants = [], {}, {}
    blk = cfg.get(which, {})
    stages.start(which)
    if which == "hardy":
        n = int(blk.get("n", 1))
        a = float(blk.get("a", 0.0))
        count = int(blk.get("count", 20))
        b_values = [float(b) for b in blk.get("b_values", [0.05, 0.5, 5.0])]
        fam = iq.smooth_bump_family(n, count, rng=seed)
        worst = 0.0
        for h in fam:
            for b in b_values:
                r = iq.check_hardy(h, b, a, n)
                rows.append((h.label, b, r.lhs, r.rhs, r.margin,
                             r.empirical_constant))
                worst = max(worst, r.empirical_constant)
                checks[f"{h.label}:b={b:g}"] = r.holds
        constants["max_ratio"] = worst
        header = ["function", "b", "lhs", "rhs", "margin", "ratio"]
    elif which == "trace":
        n = int(blk.get("n", 1))
        a = float(blk.get("a", 0.0))
        count = int(blk.get("count", 20))
        A_values = [float(A) for A in blk.get("A_values", [2.0, 10.0, 100.0])]
        fam = iq.smooth_bump_family(n, count, rng=seed)
        worst = 0.0
        for h in fam:
            for A in A_values:
                r = iq.check_trace(h, A, a, n)
                rows.append((h.label, A, r.lhs, r.rhs, r.empirical_constant))
                worst = max(worst, r.empirical_constant)
                checks[f"{h.label}:A={A:g}"] = np.isfinite(
                    r.empirical_constant)
        constants["C0_emp"] = worst
        header = ["function", "A", "lhs", "bracket", "C0"]
    elif which == "doubling":
        n = int(blk.get("n", 1))
        a = float(blk.get("a", 0.0))
        radii = [float(r) for r in blk.get("radii", [0.1, 0.25, 0.5])]
        fam = iq.smooth_bump_family(n, int(blk.get("count", 10)), rng=seed)
        for h in fam:
            r = iq.check_gaussian_doubling(h, None, radii, a, n)
            rows.append((h.label, r.empirical_constant, r.lhs, r.rhs,
                         int(r.vacuous)))
            checks[h.label] = r.vacuous or r.holds
        header = ["function", "N", "worst_ratio", "bound", "vacuous"]
    elif which == "carleman":
        from .carleman import build_sigma
        s = float(blk.get("s", 0.5))
        delta = float(blk.get("delta", 0.5))
        alphas = [float(v) for v in blk.get("alphas", [8.0, 16.0, 32.0])]
        c_dividers = [float(v) for v in blk.get("c_dividers", [8.0, 5.0])]
        V_values = [float(v) for v in blk.get("V_values", [0.0, 2.0])]
        count = int(blk.get("count", 2))
        a = 1.0 - 2.0 * s
        M_all = []
        for alpha in alphas:
            lam = alpha / delta ** 2
            table = build_sigma(s, lam)
            for Vc in V_values:
                for k in range(count):
                    w = iq.random_carleman_test_function(Vc, a, lam,
                                                         rng=seed + k)
                    for div in c_dividers:
                        c = 1.0 / (div * lam)
                        r = iq.check_carleman(w, s, alpha, delta, c, table)
                        rows.append((alpha, Vc, k, c, r.empirical_constant,
                                     r.params["source_resolution_error"]))
                        M_all.append(r.empirical_constant)
                        checks[f"a{alpha:g}V{Vc:g}k{k}c{div:g}"] = \
                            np.isfinite(r.empirical_constant) and \
                            not r.params["under_resolved"]
        constants["M_emp"] = max(M_all)
        constants["M_spread"] = max(M_all) / min(M_all)
        header = ["alpha", "V", "function", "c", "M_emp", "resolution_error"]
    else:  # monotonicity
        s = float(blk.get("s", 0.5))
        a = 1.0 - 2.0 * s
        n = int(blk.get("n", 1))
        cases = {
            "constant": lambda x, y, t: np.ones_like(x),
            "polynomial": lambda x, y, t: y ** 2 - 2.0 * (1 + a) * t,
        }
        for name, U in cases.items():
            r = iq.check_monotonicity(U, 1.0, s, a, n=n)
            rows.append((name, r.empirical_constant,
                         r.params.get("theta_tilde", np.nan),
                         r.params.get("window", np.nan)))
            checks[name] = r.holds
            constants[f"M_emp_{name}"] = r.empirical_constant
        header = ["case", "M_emp", "theta_tilde", "window"]
    stages.stop()
    _write_csv(os.path.join(out, f"{which}_battery.csv"), header, rows)
    _write_json(os.path.join(out, f"{which}_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def run_measure_order(cfg, out, seed, stages):
    from .quc import eigenfunction_pair, fit_vanishing_order
    blk = cfg.get("order", {})
    radii = [float(r) for r in blk.get("radii", [])]
    if not radii:
        raise ConfigError("[order] radii must be a non-empty list")
    kind = str(blk.get("kind", "thin"))
    family = str(blk.get("family", "homogeneous"))
    if family == "homogeneous":
        kappa = int(blk.get("kappa", 3))
        n = int(blk.get("n", 2))
        if n == 2:
            fn = lambda x1, x2: np.real((x1 + 1j * x2) ** kappa)
        else:
            fn = lambda x1: x1 ** kappa
        expected = 2 * kappa + n
        a = float(blk.get("a", 0.0))
    elif family == "eigenfunction":
        lam = float(blk.get("lam", 64.0))
        s = float(blk.get("s", 0.5))
        fn, _, kappa = eigenfunction_pair(lam, s)
        n, a = 2, 1.0 - 2.0 * s
        expected = 2 * kappa + n
    else:
        raise ConfigError(f"unknown family {family!r}")
    stages.start("fit")
    fit = fit_vanishing_order(fn, kind, radii, n=n, a=a)
    stages.stop()
    _write_csv(os.path.join(out, "order_integrals.csv"),
               ["radius", "integral"],
               list(zip(fit.radii, fit.integrals)))
    rel = abs(fit.slope - expected) / expected
    checks = {"slope_matches": rel <= float(blk.get("slope_tol", 0.02))}
    constants = {"slope": fit.slope, "expected": float(expected),
                 "r_squared": fit.r_squared}
    _write_json(os.path.join(out, "order_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def run_doubling(cfg, out, seed, stages):
    from .quc import doubling_series
    blk = cfg.get("doubling", {})
    radii = [float(r) for r in blk.get("radii", [0.125, 0.25, 0.5])]
    if not radii:
        raise ConfigError("[doubling] radii must be a non-empty list")
    M = float(blk.get("M", 10.0))
    n = int(blk.get("n", 1))
    a = float(blk.get("a", 0.0))
    field = str(blk.get("field", "ones"))
    if field == "ones":
        U = lambda *c: np.ones_like(c[0])
        expected = 2.0 ** (n + 1 + a)
    elif field == "homogeneous":
        kappa = int(blk.get("kappa", 3))
        if n != 2:
            raise ConfigError("homogeneous doubling field needs n = 2")
        U = lambda x1, x2, y, t: np.real((x1 + 1j * x2) ** kappa) \
            * np.ones_like(y)
        expected = 2.0 ** (2 * kappa + n + 1 + a)
    else:
        raise ConfigError(f"unknown field {field!r}")
    stages.start("series")
    ds = doubling_series(U, radii, M=M, n=n, a=a)
    stages.stop()
    _write_csv(os.path.join(out, "doubling_series.csv"),
               ["radius", "integral", "ratio"],
               list(zip(ds.radii, ds.integrals, ds.ratios)))
    worst = max(abs(q - expected) / expected for q in ds.ratios)
    checks = {"ratios_match": worst <= float(blk.get("tol", 0.02)),
              "within_bound": not ds.exceed}
    constants = {"N_formula": ds.N_formula, "max_ratio": max(ds.ratios)}
    _write_json(os.path.join(out, "doubling_summary.json"),
                {"checks": checks, "constants": constants})
    return checks, constants


def run_sweep_potential(cfg, out, seed, stages):
    from .quc import export_sweep_csv, order_vs_potential_sweep
    blk = cfg.get("sweep", {})
    lambdas = [float(v) for v in blk.get("lambdas", [16.0, 64.0, 256.0])]
    if not lambdas:
        raise ConfigError("[sweep] lambdas must be a non-empty list")
    s = float(blk.get("s", 0.5))
    M = float(blk.get("M", 10.0))
    stages.start("sweep")
    rows = order_vs_potential_sweep(lambdas, s, M=M)
    stages.stop()
    export_sweep_csv(rows, os.path.join(out, "order_vs_potential.csv"))
    ratios = [r["ratio"] for r in rows]
    spread = max(ratios) / min(ratios)
    checks = {"ratio_stable": spread <= float(blk.get("spread_tol", 2.0))}
    constants = {"ratio_spread": spread, "ratios": ratios}
    _write_json(os.path.join(out, "sweep_summary.json"),
                {"checks": checks, "constants": constants,
                 "rows": rows})
    return checks, constants


_SUBCOMMANDS = {
    "verify-weights": run_verify_weights,
    "verify-kernels": run_verify_kernels,
    "verify-operator": run_verify_operator,
    "solve-extension": run_solve_extension,
    "verify-inequalities": run_verify_inequalities,
    "measure-order": run_measure_order,
    "doubling": run_doubling,
    "sweep-potential": run_sweep_potential,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="quclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        if name == "verify-inequalities":
            p.add_argument("--which", default=None,
                           choices=["hardy", "trace", "doubling", "carleman",
                                    "monotonicity"])
    args = parser.parse_args(argv)

    threads = os.environ.get("QUCLAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    try:
        cfg, raw = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(
            cfg.get("run", {}).get("seed", 0))
        out = args.out or cfg.get("run", {}).get("out", "quclab_out")
        os.makedirs(out, exist_ok=True)
        stages = _Stages()
        t_start = time.perf_counter()
        kwargs = {}
        if args.command == "verify-inequalities":
            kwargs["which"] = args.which
        checks, constants = _SUBCOMMANDS[args.command](cfg, out, seed,
                                                       stages, **kwargs)
    except ConfigError as exc:
        print(f"quclab: config error: {exc}", file=sys.stderr)
        return 2

    manifest = {
        "tool_version": __version__,
        "command": args.command,
        "config_hash": _config_hash(raw, seed),
        "seed": seed,
        "checks": {k: bool(v) for k, v in checks.items()},
        "constants": constants,
        "stage_seconds": stages.times,
        "total_seconds": round(time.perf_counter() - t_start, 4),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    failed = [k for k, v in checks.items() if not v]
    if failed:
        print(f"quclab {args.command}: FAILED {len(failed)} check(s): "
              + ", ".join(failed[:8]), file=sys.stderr)
        return 1
    print(f"quclab {args.command}: all {len(checks)} checks passed "
          f"(outputs in {out})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
