import math

import numpy as np
import pytest

from cryamabe.exceptions import ConvergenceError, DomainError
from cryamabe.heisenberg import HeisenbergPoint
from cryamabe.operators import (
    SpectralExpansion,
    constant_solution,
    convolution_residual,
    critical_exponent,
    gamma_inner_product,
)
from cryamabe.solver import (
    ReducedProfile,
    SolveConfig,
    energy,
    gradient,
    hessian,
    nehari_scale,
    nodal_count,
    pullback_solution,
    reduced_pnorm,
    reduced_quadratic_form,
    solve_nodal,
    sphere_lift,
)
from cryamabe.special_fn import lambda_gamma
from cryamabe.sphere_geom import QuadratureSpec, mc_integrate, surface_measure
from cryamabe.symmetry import GiDescriptor, invariance_defect

OMEGA3 = surface_measure(1)
GAMMAS = (1.0, 1.2, 1.3)


@pytest.fixture(scope="module")
def solved():
    return {g: solve_nodal(SolveConfig(g)) for g in GAMMAS}


def test_closed_forms():
    p = ReducedProfile.from_modes(1.0, {1: 1.0})
    assert reduced_quadratic_form(p) == pytest.approx(3 * math.pi ** 2 / 2, rel=1e-14)
    assert reduced_pnorm(p) == pytest.approx(2 * math.pi ** 2 / 5, rel=1e-13)
    zero = ReducedProfile(1.0, (0.0, 0.0))
    assert reduced_quadratic_form(zero) == 0.0 and reduced_pnorm(zero) == 0.0 and energy(zero) == 0.0


def test_profile_construction():
    p = ReducedProfile.from_modes(1.2, {3: 2.0})
    assert p.coeffs == (0.0, 2.0) and p.modes() == {1: 0.0, 3: 2.0}
    with pytest.raises(DomainError):
        ReducedProfile.from_modes(1.0, {2: 1.0})
    with pytest.raises(DomainError):
        ReducedProfile(1.0, ())
    with pytest.raises(DomainError):
        ReducedProfile(1.0, (1.0,), n=2)


def test_quadratic_scaling():
    rng = np.random.default_rng(0)
    p = ReducedProfile(1.2, tuple(rng.standard_normal(5)))
    for c in (0.5, 3.0, -2.0):
        assert reduced_quadratic_form(p.with_coeffs(c * p.a)) == pytest.approx(c * c * reduced_quadratic_form(p), rel=1e-14)


def test_single_mode_matches_inner_product():
    p = ReducedProfile.from_modes(1.0, {1: 1.0})
    U = SpectralExpansion(sphere_lift(p), 1, 1.0, 1, QuadratureSpec(1_000_000, 3))
    assert gamma_inner_product(U, U).within(3 * math.pi ** 2 / 2)


def test_quadrature_matches_monte_carlo():
    rng = np.random.default_rng(1)
    for g in GAMMAS:
        p = ReducedProfile(g, tuple(rng.standard_normal(3) / [1, 2, 4]))
        pe = critical_exponent(1, g)
        est = mc_integrate(lambda e: np.abs(p.on_sphere(e)) ** pe, 1, QuadratureSpec(1_000_000, 7))
        assert est.within(reduced_pnorm(p))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for k in range(20):
        g = GAMMAS[k % 3]
        p = ReducedProfile(g, tuple(rng.standard_normal(6) / (1 + np.arange(6))))
        grad = gradient(p)
        fd = np.empty_like(grad)
        for i in range(grad.size):
            h = 1e-5 * max(1.0, abs(p.a[i]))
            up, dn = p.a.copy(), p.a.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (energy(p.with_coeffs(up)) - energy(p.with_coeffs(dn))) / (2 * h)
        assert np.linalg.norm(grad - fd) <= 1e-6 * np.linalg.norm(grad)


def test_hessian_matches_gradient_differences():
    rng = np.random.default_rng(3)
    p = ReducedProfile(1.2, tuple(rng.standard_normal(4)))
    H = hessian(p)
    h = 1e-6
    for i in range(4):
        up, dn = p.a.copy(), p.a.copy()
        up[i] += h
        dn[i] -= h
        col = (gradient(p.with_coeffs(up)) - gradient(p.with_coeffs(dn))) / (2 * h)
        assert np.allclose(col, H[:, i], rtol=1e-6, atol=1e-6 * np.abs(H).max())


def test_nehari_scaling():
    rng = np.random.default_rng(4)
    for g in GAMMAS:
        v = ReducedProfile(g, tuple(rng.standard_normal(4)))
        t = nehari_scale(v)
        pe = critical_exponent(1, g)
        q = reduced_quadratic_form(t)
        assert q == pytest.approx(reduced_pnorm(t), rel=1e-12)
        assert energy(t) == pytest.approx((0.5 - 1 / pe) * q, rel=1e-12)


def test_nodal_count_examples():
    assert nodal_count(ReducedProfile.from_modes(1.0, {1: 1.0})) == 1
    assert nodal_count(ReducedProfile.from_modes(1.0, {1: 0.0, 3: 1.0})) == 3
    rng = np.random.default_rng(5)
    for _ in range(50):
        c = nodal_count(ReducedProfile(1.0, tuple(rng.standard_normal(4))))
        assert c % 2 == 1
    with pytest.raises(DomainError):
        nodal_count(ReducedProfile.from_modes(1.0, {1: 1.0}), grid=32)


def test_config_validation():
    with pytest.raises(DomainError), pytest.warns(RuntimeWarning):
        SolveConfig(4 / 3)
    with pytest.raises(DomainError):
        SolveConfig(0.9)
    with pytest.raises(DomainError):
        SolveConfig(1.0, basis_size=8, quad_nodes=10)


def test_non_convergence_reports_diagnostics():
    with pytest.raises(ConvergenceError) as info:
        solve_nodal(SolveConfig(1.0, max_iters=1))
    assert info.value.diagnostics["iterations"] == 1


@pytest.mark.parametrize("g", GAMMAS)
def test_solution_properties(solved, g):
    res = solved[g]
    p = res.profile
    pe = critical_exponent(1, g)
    assert res.grad_norm <= 1e-8
    assert np.linalg.norm(gradient(p)) <= 1e-8
    assert res.sign_changes >= 1
    xs = np.linspace(0, 1, 1025)
    assert np.max(np.abs(p(xs) + p(1 - xs))) <= 1e-12
    assert abs(res.nehari_value - res.pnorm) <= 1e-8 * res.nehari_value
    assert res.energy == pytest.approx((0.5 - 1 / pe) * res.nehari_value, rel=1e-8)
    # constant Nehari level: c = lambda_0^{(Q - 2g)/(2g)}, q = omega lambda_0^2 c^2
    c = constant_solution(1, g)
    const_level = (0.5 - 1 / pe) * OMEGA3 * lambda_gamma(1, g, 0) ** 2 * c * c
    assert res.energy > const_level


@pytest.mark.parametrize("g", GAMMAS)
def test_basis_refinement(solved, g):
    fine = solve_nodal(SolveConfig(g, basis_size=16))
    assert abs(fine.energy - solved[g].energy) <= 1e-4 * abs(solved[g].energy)


def test_deterministic(solved):
    again = solve_nodal(SolveConfig(1.2))
    assert again.profile.coeffs == solved[1.2].profile.coeffs
    assert again.to_json() == solved[1.2].to_json()
    assert solved[1.2].profile_csv(8).splitlines()[0] == "x,U"


def test_lift_is_invariant(solved):
    d = GiDescriptor(1, 1)
    for g in GAMMAS:
        assert invariance_defect(sphere_lift(solved[g].profile), d, True, QuadratureSpec(1, 0)) <= 1e-10


def test_pullback(solved):
    rng = np.random.default_rng(6)
    res = solved[1.2]
    z = rng.standard_normal((10_000, 1)) + 1j * rng.standard_normal((10_000, 1))
    t = rng.standard_normal(10_000) * 2
    u = pullback_solution(res, (z, t))
    assert u.min() < 0 < u.max()
    Q, g = 4, 1.2
    xs = np.linspace(0, 1, 4097)
    C = 2 ** ((Q - 2 * g) / 2) * np.max(np.abs(res.profile(xs)))
    A = (1 + np.abs(z[:, 0]) ** 2) ** 2 + t ** 2
    assert np.all(np.abs(u) <= C * A ** ((2 * g - Q) / 4) * (1 + 1e-12))
    pts = [HeisenbergPoint(zz, tt) for zz, tt in zip(z[:5], t[:5])]
    assert np.allclose(pullback_solution(res, pts), u[:5])
    zero = ReducedProfile(1.2, (0.0,) * 9)
    assert np.all(pullback_solution(zero, (z, t)) == 0.0)


@pytest.mark.slow
def test_pullback_convolution_residual(solved):
    res = solved[1.3]
    g = 1.3

    def u(z, t):
        return pullback_solution(res.profile, (np.atleast_2d(z), np.atleast_1d(t)))

    rng = np.random.default_rng(7)
    for k in range(4):
        w = HeisenbergPoint(0.6 * (rng.standard_normal(1) + 1j * rng.standard_normal(1)), float(rng.standard_normal()))
        r = convolution_residual(u, g, w, QuadratureSpec(1_000_000, 50 + k))
        assert r.within(0.0)
