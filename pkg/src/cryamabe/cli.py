"""Command-line entry point.

Every command prints (or writes) a JSON report

    {"command": ..., "params": {...}, "checks": [{"name", "value", "sigma", "pass"}, ...],
     "artifacts": [paths], "notes": {...}}

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid parameters,
3 inadmissible ``gamma`` for ``solve``, 4 solver did not converge.
"""
import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .admissible import admissibility, admissible_intervals, render_table, table_csv, table_text
from .exceptions import ConvergenceError, DomainError
from .harmonics import ZonalKernel, project_component, space_dimension, zonal_trace
from .heisenberg import (
    cayley,
    cayley_jacobian,
    conformal_factor,
    distance_conformal_check,
    heisenberg_integrate,
)
from .operators import (
    SpectralExpansion,
    constant_solution,
    convolution_residual,
    critical_exponent,
    funk_hecke_apply,
    funk_hecke_eigenvalue,
    pullback_to_heisenberg,
    sobolev_inequality_check,
)
from .solver import SolveConfig, pullback_solution, solve_nodal, sphere_lift
from .special_fn import homogeneous_dimension, lambda_gamma
from .sphere_geom import QuadratureSpec, chunk_rng, surface_measure
from .symmetry import apply_word, canonicalize, transport

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INADMISSIBLE, EXIT_NOCONV = 0, 1, 2, 3, 4
NSIGMA = 3.0
ATOL = 1e-12

DEFAULTS = {
    "n": 1,
    "gamma": 1.0,
    "i": 1,
    "j": 2,
    "basis_size": 8,
    "quad_nodes": None,
    "sample_count": 1_000_000,
    "seed": 0,
    "output": None,
    "output_dir": ".",
    "format": "json",
    "n_max": 8,
    "points": 1000,
    "probes": 3,
}


class _Report:
    def __init__(self, command, params):
        self.command = command
        self.params = params
        self.checks = []
        self.artifacts = []
        self.notes = {}

    def mc(self, name, estimate, expected, std_error, other_std=0.0):
        """Record a Monte Carlo check as a signed sigma distance.

        Differences at rounding level (``ATOL`` relative to ``max(1, |expected|)``)
        pass even when the estimator happens to have zero variance.
        """
        err = math.hypot(std_error, other_std)
        diff = float(np.real(estimate) - expected)
        sigma = diff / err if err > 0 else (0.0 if diff == 0 else math.inf)
        ok = abs(diff) <= NSIGMA * err + ATOL * max(1.0, abs(float(expected)))
        self.checks.append({
            "name": name,
            "value": float(np.real(estimate)),
            "expected": float(expected),
            "std_error": float(err),
            "sigma": sigma,
            "threshold": NSIGMA,
            "pass": bool(ok),
        })

    def exact(self, name, value, tol):
        self.checks.append({
            "name": name,
            "value": float(value),
            "sigma": None,
            "threshold": tol,
            "pass": bool(value <= tol),
        })

    def flag(self, name, ok, value=None):
        self.checks.append({"name": name, "value": value, "sigma": None, "pass": bool(ok)})

    @property
    def passed(self):
        return all(c["pass"] for c in self.checks)

    def as_dict(self):
        return {
            "command": self.command,
            "params": self.params,
            "checks": self.checks,
            "artifacts": self.artifacts,
            "notes": self.notes,
        }


def _random_heisenberg(rng, n, count, scale=1.0):
    z = scale * (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n)))
    t = scale * rng.standard_normal(count)
    return z, t


def cmd_verify_identities(cfg):
    n, gamma, seed = cfg["n"], float(cfg["gamma"]), cfg["seed"]
    if n > 4:
        raise DomainError("verify-identities is limited to n <= 4")
    critical_exponent(n, gamma)
    N = int(cfg["sample_count"])
    rep = _Report("verify-identities", cfg)
    omega = surface_measure(n)
    rng = chunk_rng(seed, 900, 0)

    # change of measure: int_H G(C(v)) Jac(v) dv = int_S G
    def g(z, t):
        return np.abs(cayley(z, t)[..., -1]) ** 2 * cayley_jacobian(z, t)

    est = heisenberg_integrate(g, n, QuadratureSpec(N, seed, 1), method="direct")
    rep.mc("measure_identity", est.mean, omega / (n + 1), est.std_error)

    z, t = _random_heisenberg(rng, n, 10_000)
    zp, tp = _random_heisenberg(rng, n, 10_000)
    rep.exact("distance_conformality", float(np.max(distance_conformal_check(z, t, zp, tp))), 1e-10)

    worst = max(abs(zonal_trace(n, j, j) - space_dimension(n, j, j)) / space_dimension(n, j, j) for j in range(21))
    rep.exact("zonal_trace", worst, 1e-10)

    # H_{1,1} member |eta_1|^2 - 1/(n+1)
    def h11(eta):
        return np.abs(eta[:, 0]) ** 2 - 1.0 / (n + 1)

    probes = _probe_points(rng, n, cfg["probes"])
    proj = project_component(h11, n, (1, 1), QuadratureSpec(N, seed, 2))
    vals, errs = proj.estimate(probes)
    for k, (v, e, x) in enumerate(zip(vals, errs, h11(probes))):
        rep.mc(f"projection_idempotence[{k}]", v, x, e)
    off = project_component(h11, n, (2, 2), QuadratureSpec(N, seed, 3))
    vals, errs = off.estimate(probes)
    for k, (v, e) in enumerate(zip(vals, errs)):
        rep.mc(f"projection_orthogonality[{k}]", v, 0.0, e)

    e1 = np.zeros(n + 1, dtype=complex)
    e1[0] = 1.0
    zeta = probes[0]
    for j in range(3):
        K = ZonalKernel.of(n, j, j)
        est = funk_hecke_apply(lambda eta: K(eta, e1[None, :]), gamma, zeta, QuadratureSpec(N, seed, 10 + j))
        expected = funk_hecke_eigenvalue(n, gamma, j, j) * float(K(zeta, e1))
        rep.mc(f"funk_hecke[{j},{j}]", est.mean, expected, est.std_error)

    U0 = constant_solution(n, gamma)
    Q = homogeneous_dimension(n)
    alg = abs(lambda_gamma(n, gamma, 0) ** 2 * U0 - U0 ** ((Q + 2 * gamma) / (Q - 2 * gamma)))
    rep.exact("constant_solution_algebra", alg / U0, 1e-12)

    c0 = 2.0 ** ((Q - 2 * gamma) / 2) * U0
    zs, ts = _random_heisenberg(rng, n, 10_000)
    pulled = pullback_to_heisenberg(lambda eta: np.full(eta.shape[0], U0), gamma, zs, ts)
    closed = c0 * conformal_factor(zs, ts) ** ((2 * gamma - Q) / 4)
    rep.exact("constant_solution_pullback", float(np.max(np.abs(pulled - closed) / closed)), 1e-12)

    sob_spec = QuadratureSpec(max(N // 5, 1000), seed, 20)
    const = SpectralExpansion(lambda eta: np.ones(eta.shape[0]), n, gamma, 1, sob_spec)
    chk = sobolev_inequality_check(const, QuadratureSpec(N, seed, 21))
    rep.mc("sobolev_constants_ratio", chk.ratio, 1.0, chk.ratio_err)
    pert = SpectralExpansion(lambda eta: 1.0 + 0.3 * h11(eta), n, gamma, 1, sob_spec)
    chk = sobolev_inequality_check(pert, QuadratureSpec(N, seed, 22))
    rep.flag("sobolev_inequality", chk.holds(NSIGMA), chk.ratio)

    def u_const(z, t):
        return pullback_to_heisenberg(lambda eta: np.full(eta.shape[0], U0), gamma, z, t)

    origin = (np.zeros(n, dtype=complex), 0.0)
    res = convolution_residual(u_const, gamma, origin, QuadratureSpec(N, seed, 30))
    rep.mc("convolution_residual", res.mean, 0.0, res.std_error)
    alt = convolution_residual(u_const, gamma, origin, QuadratureSpec(N, seed, 30),
                               exponent=4 * gamma / (Q - gamma))
    rep.notes["convolution_residual_exponent_4g_over_Q_minus_g"] = {
        "value": alt.mean, "std_error": alt.std_error,
    }
    return rep


def _probe_points(rng, n, count):
    x = rng.standard_normal((count, n + 1)) + 1j * rng.standard_normal((count, n + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def cmd_admissible_table(cfg):
    rows = render_table(int(cfg["n_max"]))
    rep = _Report("admissible-table", cfg)
    fmt = cfg["format"]
    if fmt == "csv":
        text = table_csv(rows)
    elif fmt == "text":
        text = table_text(rows)
    else:
        text = None
    rep.notes["rows"] = [
        {
            "n": r.n,
            "Q": r.Q,
            "groups": r.groups_text(),
            "admissible": [[str(lo), str(hi)] for lo, hi in r.intervals],
            "sequences": r.sequence_count,
        }
        for r in rows
    ]
    return rep, text


def cmd_transitivity(cfg):
    n, i, j = cfg["n"], cfg["i"], cfg["j"]
    rep = _Report("transitivity", cfg)
    rng = chunk_rng(cfg["seed"], 901, 0)
    pts = _probe_points(rng, n, int(cfg["points"]))
    worst = 0.0
    canon = None
    for eta in pts:
        word, canon = canonicalize(eta, i, j)
        worst = max(worst, float(np.linalg.norm(apply_word(word, eta) - np.asarray(canon))))
    rep.exact("canonicalize", worst, 1e-10)
    other = _probe_points(rng, n, int(cfg["points"]))
    worst = 0.0
    for a, b in zip(pts, other):
        worst = max(worst, float(np.linalg.norm(apply_word(transport(a, b, i, j), a) - b)))
    rep.exact("transport", worst, 1e-10)
    rep.notes["canonical_point"] = [float(v.real) for v in np.asarray(canon)]
    return rep


def _solve_config(cfg):
    return SolveConfig(
        gamma=float(cfg["gamma"]),
        basis_size=int(cfg["basis_size"]),
        quad_nodes=cfg["quad_nodes"],
        seed=int(cfg["seed"]),
    )


def _require_n1(cfg):
    if cfg["n"] != 1:
        raise DomainError("the deterministic solver runs at n = 1 only")


def cmd_solve(cfg):
    _require_n1(cfg)
    res = solve_nodal(_solve_config(cfg))
    rep = _Report("solve", cfg)
    rep.exact("euler_lagrange_residual", res.grad_norm, res.config.grad_tol)
    rep.flag("sign_change", res.sign_changes >= 1, res.sign_changes)
    rep.exact("nehari_identity", abs(res.nehari_value - res.pnorm) / res.pnorm, 1e-8)
    xs = np.linspace(0.0, 1.0, 257)
    rep.exact("swap_antisymmetry", float(np.max(np.abs(res.profile(xs) + res.profile(1 - xs)))), 1e-12)
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    tag = f"n1_gamma{float(cfg['gamma']):g}_M{int(cfg['basis_size'])}"
    jpath, cpath = out / f"solution_{tag}.json", out / f"profile_{tag}.csv"
    jpath.write_text(res.to_json())
    cpath.write_text(res.profile_csv())
    rep.artifacts += [str(jpath), str(cpath)]
    rep.notes["energy"] = res.energy
    return rep


def cmd_pullback(cfg):
    _require_n1(cfg)
    res = solve_nodal(_solve_config(cfg))
    gamma = res.profile.gamma
    rep = _Report("pullback", cfg)
    rng = chunk_rng(cfg["seed"], 902, 0)
    z, t = _random_heisenberg(rng, 1, int(cfg["points"]))
    vals = pullback_solution(res, (z, t))
    rep.flag("attains_both_signs", bool(vals.max() > 0 and vals.min() < 0),
             [float(vals.min()), float(vals.max())])
    Q = homogeneous_dimension(1)
    xs = np.linspace(0.0, 1.0, 2049)
    bound = 2.0 ** ((Q - 2 * gamma) / 2) * float(np.max(np.abs(res.profile(xs))))
    env = bound * conformal_factor(z, t) ** ((2 * gamma - Q) / 4)
    rep.flag("decay_bound", bool(np.all(np.abs(vals) <= env * (1 + 1e-12))))
    U = sphere_lift(res.profile)

    def u(zz, tt):
        return pullback_to_heisenberg(U, gamma, zz, tt)

    for k in range(int(cfg["probes"])):
        w = (z[k], float(t[k]))
        est = convolution_residual(u, gamma, w, QuadratureSpec(int(cfg["sample_count"]), cfg["seed"], 40 + k))
        rep.mc(f"convolution_residual[{k}]", est.mean, 0.0, est.std_error)
    return rep


COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "admissible-table": cmd_admissible_table,
    "transitivity": cmd_transitivity,
    "solve": cmd_solve,
    "pullback": cmd_pullback,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cryamabe", description="CR fractional Yamabe toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="JSON file of default parameters (flags override)")
        p.add_argument("--output", help="write the JSON report here instead of stdout")
        opts = {
            "n": dict(type=int),
            "gamma": dict(type=float),
            "i": dict(type=int),
            "j": dict(type=int),
            "basis-size": dict(type=int),
            "quad-nodes": dict(type=int),
            "sample-count": dict(type=int),
            "seed": dict(type=int),
            "output-dir": dict(),
            "format": dict(choices=["csv", "json", "text"]),
            "n-max": dict(type=int),
            "points": dict(type=int),
            "probes": dict(type=int),
        }
        for name in names:
            p.add_argument(f"--{name}", default=None, **opts[name])

    common(sub.add_parser("verify-identities", help="run the identity suites"),
           "n", "gamma", "sample-count", "seed", "probes")
    common(sub.add_parser("admissible-table", help="admissible gamma per dimension"),
           "n-max", "format")
    common(sub.add_parser("transitivity", help="two-subgroup transitivity demonstration"),
           "n", "i", "j", "points", "seed")
    common(sub.add_parser("solve", help="nodal solution at n = 1"),
           "n", "gamma", "basis-size", "quad-nodes", "seed", "output-dir")
    common(sub.add_parser("pullback", help="Heisenberg-side checks of a nodal solution"),
           "n", "gamma", "basis-size", "quad-nodes", "seed", "sample-count", "points", "probes")
    return parser


def _resolve(args):
    cfg = dict(DEFAULTS)
    if args.command == "transitivity":
        cfg["n"] = 3
    if args.command == "pullback":
        cfg["sample_count"] = 200_000
        cfg["points"] = 10_000
        cfg["probes"] = 10
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("command", "config", "output") or value is None:
            continue
        cfg[key] = value
    keys = {"verify-identities": ("n", "gamma", "sample_count", "seed", "probes"),
            "admissible-table": ("n_max", "format"),
            "transitivity": ("n", "i", "j", "points", "seed"),
            "solve": ("n", "gamma", "basis_size", "quad_nodes", "seed", "output_dir"),
            "pullback": ("n", "gamma", "basis_size", "quad_nodes", "seed", "sample_count", "points", "probes")}
    return {k: cfg[k] for k in keys[args.command]}


def _emit(payload, path):
    text = json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command in ("solve", "pullback"):
            report = admissibility(int(cfg["n"]), float(cfg["gamma"]))
            if not report.admissible:
                print(
                    f"error: gamma={cfg['gamma']} is not admissible for n={cfg['n']}; "
                    "admissible set " + " u ".join(f"[{lo}, {hi})" for lo, hi in admissible_intervals(int(cfg["n"]))),
                    file=sys.stderr,
                )
                _emit({"command": args.command, "params": cfg, "admissibility": report.as_dict()}, None)
                return EXIT_INADMISSIBLE
        result = COMMANDS[args.command](cfg)
    except ConvergenceError as exc:
        print(f"error: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NOCONV
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = None
    if isinstance(result, tuple):
        result, text = result
    if text is not None and not args.output:
        sys.stdout.write(text)
    else:
        _emit(result.as_dict(), args.output)
        if text is not None:
            sys.stdout.write(text)
    for c in result.checks:
        if not c["pass"]:
            print(f"FAILED {c['name']}: {c}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
