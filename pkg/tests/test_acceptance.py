"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Each test prints one ``criterion k: PASS|FAIL`` line; the same lines are
repeated in the pytest terminal summary.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_sphere
from test_admissible import parse_domain, parse_groups

from cryamabe.admissible import render_table
from cryamabe.harmonics import ZonalKernel, project_component, zonal_eval
from cryamabe.heisenberg import cayley, cayley_jacobian, distance_conformal_check, heisenberg_integrate
from cryamabe.operators import (
    SpectralExpansion,
    constant_solution,
    convolution_residual,
    funk_hecke_apply,
    funk_hecke_eigenvalue,
    gamma_inner_product,
    pullback_to_heisenberg,
    sobolev_inequality_check,
)
from cryamabe.solver import (
    ReducedProfile,
    SolveConfig,
    energy,
    gradient,
    pullback_solution,
    solve_nodal,
)
from cryamabe.special_fn import lambda_gamma, legendre_eval
from cryamabe.sphere_geom import QuadratureSpec, mc_integrate, surface_measure
from cryamabe.symmetry import (
    GiDescriptor,
    act_on_function,
    apply_word,
    canonicalize,
    haar_sample_augmented,
    invariance_defect,
    transport,
)

NSIG = 3.0


class Criterion:
    """Collects sub-check outcomes, prints the verdict line and enforces the time budget."""

    def __init__(self, number, budget):
        self.number = str(number)
        self.budget = budget
        self.failures = []
        self.start = time.perf_counter()

    def check(self, ok, label):
        if not ok:
            self.failures.append(label)

    def finish(self, summary=""):
        elapsed = time.perf_counter() - self.start
        self.check(elapsed < self.budget, f"runtime {elapsed:.1f}s over {self.budget}s")
        ok = not self.failures
        detail = f"{summary} [{elapsed:.2f}s / {self.budget}s]"
        if not ok:
            detail += " failed: " + "; ".join(self.failures[:5])
        ACCEPTANCE[self.number] = (ok, detail)
        print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail


def test_criterion_01_admissibility_table(final_table):
    c = Criterion(1, 1.0)
    rows = render_table(8)
    for r, ref in zip(rows, final_table):
        c.check(r.Q == ref["Q"], f"Q n={r.n}")
        c.check(list(r.intervals) == parse_domain(ref["domain"], r.n), f"domain n={r.n}")
        c.check(r.groups == parse_groups(ref["groups"]), f"groups n={r.n}")
        c.check(r.sequence_count == ref["count"], f"count n={r.n}")
    c.check([r.sequence_count for r in rows] == [1, 1, 2, 2, 3, 3, 4, 4], "sequence counts")
    c.check(rows[7].intervals[-1] == (Fraction(8), Fraction(18 * 8, 17)), "last interval")
    c.finish("render_table(8) equals the transcribed table")


def test_criterion_02_eigenvalue_degeneration():
    c = Criterion(2, 1.0)
    worst = 0.0
    for n in range(1, 9):
        j = np.arange(51)
        exact = j + n / 2
        rel = np.abs(lambda_gamma(n, 1.0, j) - exact) / exact
        worst = max(worst, float(rel.max()))
    c.check(worst <= 1e-11, f"max rel {worst:.2e}")
    c.finish(f"max relative deviation {worst:.1e}")


MEASURE_FUNCS = {
    "one": lambda e: np.ones(e.shape[0]),
    "|eta_last|^2": lambda e: np.abs(e[:, -1]) ** 2,
    "|eta_1|^4": lambda e: np.abs(e[:, 0]) ** 4,
    "Re(eta_1)^2 + Im(eta_last)": lambda e: e[:, 0].real ** 2 + e[:, -1].imag,
    "|1 + eta_last|^3": lambda e: np.abs(1 + e[:, -1]) ** 3,
}


def test_criterion_03_cayley_identities():
    c = Criterion(3, 60.0)
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (1, 2, 3):
        z = rng.standard_normal((100_000, n)) + 1j * rng.standard_normal((100_000, n))
        zp = rng.standard_normal((100_000, n)) + 1j * rng.standard_normal((100_000, n))
        t, tp = rng.standard_normal(100_000), rng.standard_normal(100_000)
        worst = max(worst, float(np.max(distance_conformal_check(z, t, zp, tp))))
    c.check(worst <= 1e-10, f"distance identity {worst:.1e}")
    sig = []
    for k, (name, f) in enumerate(MEASURE_FUNCS.items()):
        n = 1 + k % 2
        sphere = mc_integrate(f, n, QuadratureSpec(1_000_000, 300 + k))
        heis = heisenberg_integrate(lambda z, t: f(cayley(z, t)) * cayley_jacobian(z, t), n,
                                    QuadratureSpec(1_000_000, 310 + k), method="direct")
        s = heis.sigma_distance(sphere.mean, other_std=sphere.std_error)
        sig.append(s)
        c.check(s <= NSIG, f"measure identity {name}: {s:.2f} sigma")
    c.finish(f"distance {worst:.1e}; measure sigmas {', '.join(f'{s:.2f}' for s in sig)}")


def test_criterion_04_zonal_calculus():
    c = Criterion(4, 60.0)
    omega = surface_measure(1)
    zeta = random_sphere(np.random.default_rng(4), 1, 50)
    worst = 0.0
    for j in range(21):
        val = omega * zonal_eval(ZonalKernel.of(1, j, j), zeta, zeta)
        worst = max(worst, float(np.max(np.abs(val - (2 * j + 1)))) / (2 * j + 1))
    c.check(worst <= 1e-10, f"trace {worst:.1e}")
    probes = random_sphere(np.random.default_rng(41), 1, 10)
    u = lambda e: legendre_eval(2, 2 * np.abs(e[:, 0]) ** 2 - 1) + 0.5 * np.abs(e[:, 1]) ** 4 + e[:, 0].real
    spec = QuadratureSpec(1_000_000, 400)
    once = project_component(u, 1, (2, 2), spec)
    twice = project_component(once, 1, (2, 2), spec.stream(401))
    m1, s1 = once.estimate(probes)
    m2, s2 = twice.estimate(probes)
    idem = np.abs(m2 - m1) / np.hypot(s1, s2)
    c.check(np.all(idem <= NSIG), f"idempotence {idem.max():.2f} sigma")
    worst_orth = 0.0
    for k, d in enumerate([(1, 1), (0, 0), (1, 0)]):
        mc, sc = project_component(once, 1, d, spec.stream(402 + k)).estimate(probes)
        s = float(np.max(np.abs(mc) / sc))
        worst_orth = max(worst_orth, s)
        c.check(s <= NSIG, f"orthogonality {d}: {s:.2f} sigma")
    c.finish(f"trace {worst:.1e}; idempotence max {idem.max():.2f} sigma; orthogonality max {worst_orth:.2f} sigma")


def test_criterion_05_funk_hecke():
    c = Criterion(5, 120.0)
    zeta = np.array([0.6, 0.8j])
    e1 = np.array([[1.0, 0.0]], dtype=complex)
    sig = []
    for gi, g in enumerate((0.8, 1.0, 1.2)):
        for j in range(4):
            K = ZonalKernel.of(1, j, j)
            psi = lambda eta, K=K: K(eta, e1)
            est = funk_hecke_apply(psi, g, zeta, QuadratureSpec(1_000_000, 500 + 10 * gi + j))
            expect = funk_hecke_eigenvalue(1, g, j, j) * float(K(zeta, e1[0]))
            s = est.sigma_distance(expect)
            sig.append(s)
            c.check(s <= NSIG, f"gamma={g} j={j}: {s:.2f} sigma")
    c.finish(f"12 cases, max {max(sig):.2f} sigma")


def _u_const(n, g, scale=1.0):
    Q = 2 * n + 2
    c0 = scale * 2 ** ((Q - 2 * g) / 2) * constant_solution(n, g)

    def u(z, t):
        A = (1 + np.sum(np.abs(z) ** 2, axis=-1)) ** 2 + np.asarray(t) ** 2
        return c0 * A ** ((2 * g - Q) / 4)

    return u


def test_criterion_06_constant_solution():
    c = Criterion(6, 60.0)
    rng = np.random.default_rng(6)
    worst_alg = worst_pb = 0.0
    for n in (1, 2, 3):
        Q = 2 * n + 2
        for g in (0.5, 1.0, 1.2):
            U = constant_solution(n, g)
            lam = lambda_gamma(n, g, 0)
            worst_alg = max(worst_alg, abs(lam ** 2 * U - U ** ((Q + 2 * g) / (Q - 2 * g))) / U)
            z = rng.standard_normal((10_000, n)) + 1j * rng.standard_normal((10_000, n))
            t = 2 * rng.standard_normal(10_000)
            pb = pullback_to_heisenberg(lambda e: np.full(e.shape[0], U), g, z, t)
            ref = _u_const(n, g)(z, t)
            worst_pb = max(worst_pb, float(np.max(np.abs(pb / ref - 1))))
    c.check(worst_alg <= 1e-12, f"algebra {worst_alg:.1e}")
    c.check(worst_pb <= 1e-12, f"pullback {worst_pb:.1e}")
    probes = [(np.zeros(1), 0.0), (np.array([0.5 + 0.3j]), -0.4), (np.array([-1.2j]), 1.5)]
    sig = []
    for k, w in enumerate(probes):
        r = convolution_residual(_u_const(1, 1.0), 1.0, w, QuadratureSpec(1_000_000, 600 + k))
        sig.append(r.sigma_distance(0.0))
        c.check(sig[-1] <= NSIG, f"residual probe {k}: {sig[-1]:.2f} sigma")
    alt = convolution_residual(_u_const(1, 1.0), 1.0, probes[0], QuadratureSpec(1_000_000, 600), exponent=4 / 3)
    c.finish(f"algebra {worst_alg:.1e}; pullback {worst_pb:.1e}; residual sigmas "
             f"{', '.join(f'{s:.2f}' for s in sig)}; alternate exponent 4g/(Q-g) residual "
             f"{alt.mean:.4f} +- {alt.std_error:.4f}")


def _random_real_function(rng):
    a = rng.standard_normal(5) * [1.0, 0.3, 0.3, 0.2, 0.2]
    a[0] = abs(a[0]) + 0.5
    return lambda e: (a[0] + a[1] * legendre_eval(1, 2 * np.abs(e[:, 0]) ** 2 - 1)
                      + a[2] * (e[:, 0] * np.conj(e[:, 1])).real
                      + a[3] * (e[:, 0] * np.conj(e[:, 1])).imag
                      + a[4] * legendre_eval(2, 2 * np.abs(e[:, 0]) ** 2 - 1))


def test_criterion_07_sharp_sobolev():
    c = Criterion(7, 60.0)
    rng = np.random.default_rng(7)
    ratios = []
    for k in range(20):
        U = SpectralExpansion(_random_real_function(rng), 1, 1.0, 2, QuadratureSpec(200_000, 700 + k))
        chk = sobolev_inequality_check(U, QuadratureSpec(200_000, 750 + k))
        ratios.append(chk.ratio)
        c.check(chk.holds(NSIG), f"function {k}: ratio {chk.ratio:.4f} +- {chk.ratio_err:.4f}")
    one = SpectralExpansion(lambda e: np.ones(e.shape[0]), 1, 1.0, 0, QuadratureSpec(100_000, 790))
    chk = sobolev_inequality_check(one, QuadratureSpec(100_000, 791))
    s = abs(chk.ratio - 1.0) / max(chk.ratio_err, 1e-15)
    c.check(abs(chk.ratio - 1.0) <= NSIG * chk.ratio_err + 1e-12, f"constants ratio {chk.ratio}")
    c.finish(f"max ratio over 20 functions {max(ratios):.4f}; constants ratio {chk.ratio:.12f} ({s:.2f} sigma)")


def test_criterion_08_transitivity():
    c = Criterion(8, 10.0)
    rng = np.random.default_rng(8)
    pts = random_sphere(rng, 3, 10_000)
    e2 = np.array([0, 1, 0, 0], dtype=complex)
    worst = 0.0
    for eta in pts:
        word, canon = canonicalize(eta, 1, 2)
        c.check(np.array_equal(np.asarray(canon), e2), "canonical point")
        worst = max(worst, float(np.max(np.abs(apply_word(word, eta) - e2))))
    c.check(worst <= 1e-10, f"canonicalize {worst:.1e}")
    other = random_sphere(rng, 3, 2000)
    worst_t = 0.0
    for a, b in zip(pts[:2000], other):
        worst_t = max(worst_t, float(np.max(np.abs(apply_word(transport(a, b, 1, 2), a) - b))))
    c.check(worst_t <= 1e-10, f"transport {worst_t:.1e}")
    c.finish(f"canonicalize {worst:.1e}; transport {worst_t:.1e}")


def test_criterion_09_group_action():
    c = Criterion(9, 30.0)
    spec = QuadratureSpec(1, 9)
    rng = np.random.default_rng(9)
    worst = 0.0
    U = lambda e: np.abs(e[:, 0]) ** 3 + (e[:, -1] * np.conj(e[:, 0])).imag + e[:, 1].real
    for ni in ((1, 1), (3, 1), (3, 2)):
        d = GiDescriptor(*ni)
        eta = random_sphere(rng, d.n, 64)
        for k in range(50):
            g1, g2 = haar_sample_augmented(d, spec, 2 * k), haar_sample_augmented(d, spec, 2 * k + 1)
            lhs = act_on_function(g1, act_on_function(g2, U))(eta)
            rhs = act_on_function(g1 @ g2, U)(eta)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    c.check(worst <= 1e-12, f"composition {worst:.1e}")

    f = lambda e: 1.0 + 0.5 * np.abs(e[:, 0]) ** 2 + 0.4 * (e[:, 0] * np.conj(e[:, 1])).real
    V = SpectralExpansion(f, 1, 1.0, 2, QuadratureSpec(400_000, 900))
    base = gamma_inner_product(V, V)
    d1 = GiDescriptor(1, 1)
    sig = []
    for k in range(4):
        gh = haar_sample_augmented(d1, spec, 100 + k, swapped=bool(k % 2))
        W = V.with_function(act_on_function(gh, f))
        W = SpectralExpansion(W.U, 1, 1.0, 2, QuadratureSpec(400_000, 901 + k))
        moved = gamma_inner_product(W, W)
        s = abs(moved.value - base.value) / math.hypot(moved.std_error, base.std_error)
        sig.append(s)
        c.check(s <= NSIG, f"isometry sample {k}: {s:.2f} sigma")

    family = {
        "zero": lambda e: np.zeros(e.shape[0]),
        "one": lambda e: np.ones(e.shape[0]),
        "minus_two": lambda e: np.full(e.shape[0], -2.0),
        "outer_diff": lambda e: np.abs(e[:, 0]) ** 2 - np.abs(e[:, 3]) ** 2,
        "half_diff": lambda e: (np.abs(e[:, 0]) ** 2 + np.abs(e[:, 1]) ** 2
                                - np.abs(e[:, 2]) ** 2 - np.abs(e[:, 3]) ** 2),
    }
    G1, G2 = GiDescriptor(3, 1), GiDescriptor(3, 2)
    both = [k for k, h in family.items()
            if invariance_defect(h, G1, True, spec) == 0.0 and invariance_defect(h, G2, True, spec) == 0.0]
    c.check(both == ["zero"], f"doubly invariant members {both}")
    c.finish(f"composition {worst:.1e}; isometry max {max(sig):.2f} sigma; doubly invariant: {both}")


@pytest.mark.parametrize("g", [1.0, 1.2, 1.3])
def test_criterion_10_nodal_solve(g):
    number = {1.0: "10.1", 1.2: "10.2", 1.3: "10.3"}[g]
    c = Criterion(number, 120.0)
    res = solve_nodal(SolveConfig(g, basis_size=8))
    p = res.profile
    pe = 8.0 / (4.0 - 2 * g)
    c.check(res.grad_norm <= 1e-8, f"residual {res.grad_norm:.1e}")
    c.check(res.sign_changes >= 1, "sign change")
    xs = np.linspace(0, 1, 1025)
    odd = float(np.max(np.abs(p(xs) + p(1 - xs))))
    c.check(odd <= 1e-12, f"oddness {odd:.1e}")
    neh = abs(res.nehari_value - res.pnorm) / res.nehari_value
    c.check(neh <= 1e-8, f"Nehari {neh:.1e}")
    c.check(abs(res.energy - (0.5 - 1 / pe) * res.nehari_value) <= 1e-8 * res.energy, "energy identity")
    rng = np.random.default_rng(10)
    worst_fd = 0.0
    for _ in range(20):
        q = ReducedProfile(g, tuple(rng.standard_normal(9) / (1 + np.arange(9))))
        grad = gradient(q)
        fd = np.empty(9)
        for i in range(9):
            h = 1e-5 * max(1.0, abs(q.a[i]))
            up, dn = q.a.copy(), q.a.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (energy(q.with_coeffs(up)) - energy(q.with_coeffs(dn))) / (2 * h)
        worst_fd = max(worst_fd, float(np.linalg.norm(grad - fd) / np.linalg.norm(grad)))
    c.check(worst_fd <= 1e-6, f"gradient vs finite differences {worst_fd:.1e}")
    fine = solve_nodal(SolveConfig(g, basis_size=16))
    ref = abs(fine.energy - res.energy) / abs(res.energy)
    c.check(ref <= 1e-4, f"refinement {ref:.1e}")
    z = rng.standard_normal((10_000, 1)) + 1j * rng.standard_normal((10_000, 1))
    t = rng.standard_normal(10_000)
    vals = pullback_solution(res, (z, t))
    c.check(vals.min() < 0 < vals.max(), "pullback signs")
    c.finish(f"gamma={g}: E={res.energy:.6f}, residual {res.grad_norm:.1e}, sign changes {res.sign_changes}, "
             f"Nehari {neh:.1e}, FD {worst_fd:.1e}, M=16 change {ref:.1e}")
