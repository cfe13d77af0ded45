"""Least-energy sign-changing solutions at ``n = 1`` on the ``Ghat_1``-invariant subspace.

On ``S^3`` the variable ``x = |eta_1|^2`` is uniform on ``[0, 1]`` and
``P_j(2x - 1)`` lies in ``H_{j,j}``. Functions of ``x`` alone are invariant
under ``G_1 = U(1) x U(1)``, and the swap ``A_1`` sends ``x`` to ``1 - x``, so
the ``Ghat_1``-invariant ones are exactly the odd functions about ``x = 1/2``.
The Galerkin space is spanned by the odd Legendre modes
``P_1, P_3, ..., P_{2M+1}``.

With ``D_j = omega lambda_j^2 / (2j + 1)``:

    q(a) = sum_j D_j a_j^2
    N(a) = omega int_0^1 |U(x)|^p dx
    E(a) = q / 2 - N / p

Since ``|U|^p`` is symmetric about ``1/2``, ``N`` is computed by a
Gauss-Legendre rule on ``[1/2, 1]`` and doubled; this puts the forced zero of
``U`` at an endpoint of the rule.
"""
import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .admissible import admissibility
from .exceptions import ConvergenceError, DomainError
from .operators import critical_exponent, pullback_to_heisenberg
from .special_fn import lambda_gamma, legendre_eval
from .sphere_geom import as_sphere_array, surface_measure

__all__ = [
    "ReducedProfile",
    "SolveConfig",
    "SolveResult",
    "mode_indices",
    "reduced_quadratic_form",
    "reduced_pnorm",
    "energy",
    "gradient",
    "hessian",
    "nehari_scale",
    "solve_nodal",
    "nodal_count",
    "sphere_lift",
    "pullback_solution",
]

log = logging.getLogger(__name__)

N_DIM = 1
OMEGA3 = surface_measure(N_DIM)


def mode_indices(M):
    """Odd degrees ``1, 3, ..., 2M + 1``."""
    return np.arange(1, 2 * M + 2, 2)


@dataclass(frozen=True)
class ReducedProfile:
    """``U(x) = sum_j a_j P_j(2x - 1)`` over odd ``j``; ``coeffs[m]`` multiplies ``P_{2m+1}``."""

    gamma: float
    coeffs: tuple
    n: int = N_DIM

    def __post_init__(self):
        if self.n != N_DIM:
            raise DomainError("reduced profiles are defined for n = 1 only")
        critical_exponent(self.n, self.gamma)
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise DomainError("at least one mode is required")

    @classmethod
    def from_modes(cls, gamma, modes):
        """Build from a ``{j: a_j}`` map with odd ``j``."""
        if any(j % 2 == 0 or j < 1 for j in modes):
            raise DomainError("only odd degrees are allowed")
        top = max(modes)
        a = [0.0] * ((top + 1) // 2)
        for j, v in modes.items():
            a[(j - 1) // 2] = v
        return cls(gamma, tuple(a))

    @property
    def a(self):
        return np.asarray(self.coeffs)

    @property
    def M(self):
        return len(self.coeffs) - 1

    @property
    def degrees(self):
        return mode_indices(self.M)

    def modes(self):
        return {int(j): c for j, c in zip(self.degrees, self.coeffs)}

    def with_coeffs(self, a):
        return ReducedProfile(self.gamma, tuple(np.asarray(a, dtype=float)), self.n)

    def __call__(self, x):
        """Profile value at ``x`` in ``[0, 1]``."""
        return _basis(self.M, x) @ self.a

    def on_sphere(self, eta):
        eta = as_sphere_array(eta)
        return self(np.abs(eta[..., 0]) ** 2)


def _basis(M, x):
    x = np.asarray(x, dtype=float)
    s = np.clip(2.0 * x - 1.0, -1.0, 1.0)
    return np.stack([legendre_eval(int(j), s) for j in mode_indices(M)], axis=-1)


def _weights(gamma, M):
    lam = lambda_gamma(N_DIM, gamma, mode_indices(M))
    return OMEGA3 * lam ** 2 / (2 * mode_indices(M) + 1)


class _Quadrature:
    """Gauss-Legendre nodes on ``[1/2, 1]`` with the basis tabulated."""

    def __init__(self, M, nodes):
        t, w = np.polynomial.legendre.leggauss(int(nodes))
        self.x = 0.75 + 0.25 * t
        # doubled half-interval weights
        self.w = 2.0 * 0.25 * w
        self.B = _basis(M, self.x)

    def pnorm(self, a, p):
        u = self.B @ a
        return OMEGA3 * float(self.w @ np.abs(u) ** p)

    def nonlinear(self, a, p):
        """``omega int |U|^{p-2} U P_j``, componentwise."""
        u = self.B @ a
        return OMEGA3 * (self.B.T @ (self.w * np.abs(u) ** (p - 2.0) * u))

    def jacobian(self, a, p):
        """``omega (p - 1) int |U|^{p-2} P_i P_j``."""
        u = self.B @ a
        return OMEGA3 * (p - 1.0) * (self.B.T * (self.w * np.abs(u) ** (p - 2.0))) @ self.B


def _default_nodes(M):
    return max(4 * (M + 1), 64)


def reduced_quadratic_form(p):
    """``q(U) = omega sum_j lambda_j(gamma)^2 a_j^2 / (2j + 1)``."""
    return float(_weights(p.gamma, p.M) @ (p.a ** 2))


def reduced_pnorm(p, quad_nodes=None):
    """``||U||_p^p = omega int_0^1 |U|^p dx`` with ``p = 2Q/(Q - 2 gamma)``."""
    nodes = _default_nodes(p.M) if quad_nodes is None else quad_nodes
    return _Quadrature(p.M, nodes).pnorm(p.a, critical_exponent(N_DIM, p.gamma))


def energy(p, quad_nodes=None):
    """``E = q/2 - ||U||_p^p / p``."""
    pe = critical_exponent(N_DIM, p.gamma)
    return 0.5 * reduced_quadratic_form(p) - reduced_pnorm(p, quad_nodes) / pe


def gradient(p, quad_nodes=None):
    """Euler-Lagrange residual ``dE/da_j = D_j a_j - omega int |U|^{p-2} U P_j``."""
    nodes = _default_nodes(p.M) if quad_nodes is None else quad_nodes
    quad = _Quadrature(p.M, nodes)
    return _weights(p.gamma, p.M) * p.a - quad.nonlinear(p.a, critical_exponent(N_DIM, p.gamma))


def hessian(p, quad_nodes=None):
    nodes = _default_nodes(p.M) if quad_nodes is None else quad_nodes
    quad = _Quadrature(p.M, nodes)
    return np.diag(_weights(p.gamma, p.M)) - quad.jacobian(p.a, critical_exponent(N_DIM, p.gamma))


def nehari_scale(p, quad_nodes=None):
    """Multiple ``t* v`` of ``v`` on the Nehari manifold: ``t* = (q / N)^{1/(p-2)}``."""
    pe = critical_exponent(N_DIM, p.gamma)
    t = (reduced_quadratic_form(p) / reduced_pnorm(p, quad_nodes)) ** (1.0 / (pe - 2.0))
    return p.with_coeffs(t * p.a)


@dataclass(frozen=True)
class SolveConfig:
    gamma: float
    basis_size: int = 8
    quad_nodes: int = None
    max_iters: int = 2000
    grad_tol: float = 1e-8
    seed: int = 0
    descent_tol: float = 1e-7
    newton_iters: int = 50

    def __post_init__(self):
        if int(self.basis_size) != self.basis_size or self.basis_size < 0:
            raise DomainError("basis_size must be a nonnegative integer")
        nodes = _default_nodes(self.basis_size) if self.quad_nodes is None else int(self.quad_nodes)
        if nodes < 4 * (self.basis_size + 1):
            raise DomainError("quad_nodes must be at least 4 (M + 1)")
        object.__setattr__(self, "quad_nodes", nodes)
        report = admissibility(N_DIM, self.gamma)
        if not report.admissible:
            raise DomainError(f"gamma={self.gamma} is not admissible for n=1: need gamma in [1, 4/3)")


@dataclass(frozen=True)
class SolveResult:
    profile: ReducedProfile
    energy: float
    grad_norm: float
    sign_changes: int
    nehari_value: float
    pnorm: float
    iterations: int
    newton_steps: int
    config: SolveConfig = field(repr=False)

    def to_dict(self):
        return {
            "n": N_DIM,
            "gamma": self.profile.gamma,
            "coefficients": {str(j): v for j, v in self.profile.modes().items()},
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "sign_changes": self.sign_changes,
            "quadratic_form": self.nehari_value,
            "pnorm_p": self.pnorm,
            "iterations": self.iterations,
            "newton_steps": self.newton_steps,
            "config": asdict(self.config),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def profile_csv(self, grid=256):
        xs = np.linspace(0.0, 1.0, grid + 1)
        us = self.profile(xs)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "U"])
        for x, u in zip(xs, us):
            w.writerow([repr(float(x)), repr(float(u))])
        return buf.getvalue()


def _quotient(a, D, quad, pe):
    """``R = q / N^{2/p}`` and its gradient."""
    q = float(D @ (a * a))
    N = quad.pnorm(a, pe)
    dq = 2.0 * D * a
    dN = pe * quad.nonlinear(a, pe)
    scale = N ** (2.0 / pe)
    R = q / scale
    dR = (dq - (2.0 / pe) * q * dN / N) / scale
    return R, dR


def solve_nodal(cfg):
    """Least-energy critical point of ``E`` on the odd-mode Galerkin space.

    Minimises the Sobolev quotient ``R = q / N^{2/p}`` by gradient descent
    preconditioned with ``diag(D)^{-1}`` and Armijo backtracking, moves the
    minimiser onto the Nehari manifold, and polishes the Euler-Lagrange
    system with Newton steps until its residual is below ``cfg.grad_tol``.

    Raises
    ------
    ConvergenceError
        When either phase exhausts its iteration budget.
    """
    M = int(cfg.basis_size)
    pe = critical_exponent(N_DIM, cfg.gamma)
    D = _weights(cfg.gamma, M)
    quad = _Quadrature(M, cfg.quad_nodes)
    rng = np.random.default_rng(cfg.seed)
    a = np.zeros(M + 1)
    a[0] = 1.0
    a[1:] = 1e-2 * rng.standard_normal(M)

    def unit(v):
        return v / math.sqrt(float(D @ (v * v)))

    a = unit(a)
    R, dR = _quotient(a, D, quad, pe)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d = -dR / D
        slope = float(dR @ d)
        # scale-free stationarity measure
        if math.sqrt(-slope) <= cfg.descent_tol * R:
            break
        step = 1.0
        while True:
            trial = unit(a + step * d)
            R_t, dR_t = _quotient(trial, D, quad, pe)
            if R_t <= R + 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        a, R, dR = trial, R_t, dR_t
    else:
        raise ConvergenceError(
            "quotient descent did not converge",
            diagnostics={"iterations": it, "quotient": R, "grad": float(np.linalg.norm(dR))},
        )

    prof = nehari_scale(ReducedProfile(cfg.gamma, tuple(a)), cfg.quad_nodes)
    a = prof.a
    g = D * a - quad.nonlinear(a, pe)
    steps = 0
    while np.linalg.norm(g) > cfg.grad_tol:
        if steps >= cfg.newton_iters:
            raise ConvergenceError(
                "Newton polishing did not reach grad_tol",
                diagnostics={"newton_steps": steps, "grad_norm": float(np.linalg.norm(g))},
            )
        H = np.diag(D) - quad.jacobian(a, pe)
        a = a - np.linalg.solve(H, g)
        g = D * a - quad.nonlinear(a, pe)
        steps += 1
    log.info("solve_nodal: %d descent iterations, %d Newton steps", it, steps)

    prof = ReducedProfile(cfg.gamma, tuple(a))
    q = float(D @ (a * a))
    N = quad.pnorm(a, pe)
    return SolveResult(
        profile=prof,
        energy=0.5 * q - N / pe,
        grad_norm=float(np.linalg.norm(g)),
        sign_changes=nodal_count(prof),
        nehari_value=q,
        pnorm=N,
        iterations=it,
        newton_steps=steps,
        config=cfg,
    )


def nodal_count(p, grid=1024, threshold=1e-10):
    """Sign changes of ``U`` on a uniform grid of ``[0, 1]``, skipping values below ``threshold``."""
    if grid < 64:
        raise DomainError("grid must be at least 64")
    u = p(np.linspace(0.0, 1.0, int(grid) + 1))
    s = np.sign(u[np.abs(u) > threshold])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def sphere_lift(p):
    """Vectorised evaluator ``eta -> U(|eta_1|^2)`` on ``S^3``."""
    return p.on_sphere


def pullback_solution(res, samples):
    """Heisenberg-side values ``(2 Jac)^{(Q - 2 gamma)/(2Q)} U(C(w))`` at ``samples``.

    ``samples`` is a sequence of ``HeisenbergPoint`` or a pair ``(z, t)`` of arrays.
    """
    prof = res.profile if isinstance(res, SolveResult) else res
    U = sphere_lift(prof)
    if isinstance(samples, tuple) and len(samples) == 2 and not hasattr(samples[0], "z"):
        z, t = samples
    else:
        z = np.array([s.z for s in samples])
        t = np.array([s.t for s in samples])
    return np.atleast_1d(pullback_to_heisenberg(U, prof.gamma, z, t))
