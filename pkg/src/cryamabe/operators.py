"""Spectral operators on the CR sphere and their Heisenberg counterparts.

``A_gamma`` acts on ``H_{j,k}`` by ``lambda_j(gamma) lambda_k(gamma)``. On
sampled functions it is applied through the truncated kernel
``sum_{j,k <= J} lambda_j lambda_k Phi_{j,k}``, which is exact for
polynomials of bidegree at most ``(J, J)``.

The nonlinearity exponent is ``4 gamma / (Q - 2 gamma)`` throughout, i.e.
``p = 2Q / (Q - 2 gamma)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .harmonics import Bidegree, KernelTransform, ZonalKernel, evaluate_source, project_component
from .heisenberg import (
    HeisenbergPoint,
    cayley,
    cayley_inverse,
    cayley_jacobian,
    kc_distance,
    near_pole,
)
from .special_fn import (
    fundamental_constant,
    homogeneous_dimension,
    lambda_gamma,
    sharp_sobolev_constant,
)
from .sphere_geom import (
    McEstimate,
    QuadratureSpec,
    as_sphere_array,
    chunk_rng,
    hermitian_pair,
    mc_integrate,
    singular_integrate,
    surface_measure,
)

__all__ = [
    "critical_exponent",
    "eigenvalue",
    "SpectralExpansion",
    "QuadraticFormValue",
    "apply_A_gamma",
    "gamma_inner_product",
    "gamma_form_integral",
    "funk_hecke_apply",
    "funk_hecke_eigenvalue",
    "SobolevCheck",
    "sobolev_inequality_check",
    "constant_solution",
    "pullback_to_heisenberg",
    "convolution_residual",
    "sphere_energy",
]


def critical_exponent(n, gamma):
    """``p = 2Q / (Q - 2 gamma)``."""
    Q = homogeneous_dimension(n)
    if not (0 < gamma < Q / 2):
        raise DomainError(f"gamma must lie in (0, {Q / 2})")
    return 2.0 * Q / (Q - 2.0 * gamma)


def eigenvalue(n, gamma, j, k):
    """Eigenvalue ``lambda_j(gamma) lambda_k(gamma)`` of ``A_gamma`` on ``H_{j,k}``."""
    return lambda_gamma(n, gamma, j) * lambda_gamma(n, gamma, k)


@dataclass(frozen=True)
class QuadraticFormValue:
    value: float
    std_error: float

    def within(self, expected, nsigma=3.0, other_std=0.0, atol=1e-12):
        return abs(self.value - expected) <= nsigma * math.hypot(self.std_error, other_std) + atol


@dataclass(frozen=True)
class SpectralExpansion:
    """A function on ``S^{2n+1}`` together with its truncated bidegree expansion.

    ``cap`` is the largest ``j`` and ``k`` kept. Components are produced on
    demand by :func:`~cryamabe.harmonics.project_component` with ``spec``.
    """

    U: object
    n: int
    gamma: float
    cap: int
    spec: QuadratureSpec

    def __post_init__(self):
        critical_exponent(self.n, self.gamma)
        if self.cap < 0:
            raise DomainError("degree cap must be nonnegative")

    def bidegrees(self):
        return [Bidegree(j, k) for j in range(self.cap + 1) for k in range(self.cap + 1)]

    def component(self, d):
        return project_component(self.U, self.n, d, self.spec)

    def spectral_kernel(self, weights=None):
        """Pairing-kernel ``sum_d weight_d Phi_d`` over the truncation (default: eigenvalues)."""
        kernels = [ZonalKernel(self.n, d) for d in self.bidegrees()]
        if weights is None:
            weights = [eigenvalue(self.n, self.gamma, d.j, d.k) for d in self.bidegrees()]

        def kern(w):
            out = 0.0
            for wt, K in zip(weights, kernels):
                out = out + wt * K.from_pairing(w)
            return out

        return kern

    def with_function(self, U):
        return SpectralExpansion(U, self.n, self.gamma, self.cap, self.spec)


def apply_A_gamma(U):
    """``A_gamma U`` truncated at the expansion's cap, as a Monte Carlo evaluator.

    Parameters
    ----------
    U : SpectralExpansion

    Returns
    -------
    KernelTransform
        Callable at probe points; ``.estimate`` gives standard errors too.
    """
    return KernelTransform(U.U, U.spectral_kernel(), U.n, U.spec)


def _pair_draws(U, V, spec, stream_offset):
    """Independent uniform pairs ``(zeta_i, eta_i)`` with ``U`` and ``V`` evaluated at both points."""
    n = U.n
    for c, size in enumerate(spec.chunk_sizes()):
        rng = chunk_rng(spec.seed, spec.stream_id + stream_offset, c)
        pts = rng.standard_normal((2, size, n + 1)) + 1j * rng.standard_normal((2, size, n + 1))
        pts /= np.linalg.norm(pts, axis=2, keepdims=True)
        zeta, eta = pts
        aux = chunk_rng(spec.seed, spec.stream_id + stream_offset, c, 1)
        yield (zeta, eta,
               evaluate_source(V.U, zeta, aux), evaluate_source(U.U, eta, aux),
               evaluate_source(U.U, zeta, aux), evaluate_source(V.U, eta, aux))


def gamma_inner_product(U, V):
    """``(U, V)_gamma = sum_{j,k} lambda_j lambda_k <P_{j,k} U, P_{j,k} V>``.

    Estimated on independent pairs ``(zeta, eta)`` from the kernel
    ``K = sum lambda_j lambda_k Phi_{j,k}``. Since ``K - lambda_0^2 / omega``
    integrates to zero in either variable, the per-pair value

        omega^2 [conj V(zeta) K U(eta)
                 - (K - lambda_0^2/omega) (conj V(zeta) U(zeta) + conj V(eta) U(eta)) / 2]

    has the same mean as the plain estimator. For ``U = V`` real it reduces to
    ``omega^2 [lambda_0^2/omega U(zeta) U(eta) - (K - lambda_0^2/omega) (U(zeta) - U(eta))^2 / 2]``,
    which stays small where the kernel peaks.
    """
    _check_compatible(U, V)
    n = U.n
    omega = surface_measure(n)
    bideg = U.bidegrees()
    kernels = [ZonalKernel(n, d) for d in bideg]
    lams = [eigenvalue(n, U.gamma, d.j, d.k) for d in bideg]
    c0 = eigenvalue(n, U.gamma, 0, 0) / omega
    per_pair = []
    for zeta, eta, v, u, u_zeta, v_eta in _pair_draws(U, V, U.spec, 0):
        w = np.einsum("md,md->m", zeta, eta.conj())
        acc = np.zeros(w.shape, dtype=complex)
        for lam, K in zip(lams, kernels):
            acc += lam * K.from_pairing(w)
        diag = np.conj(v) * u_zeta + np.conj(v_eta) * u
        per_pair.append(omega * omega * (np.conj(v) * acc * u - 0.5 * (acc - c0) * diag))
    vals = np.concatenate(per_pair)
    mean = vals.mean()
    err = math.sqrt(np.var(vals, ddof=1) / vals.size) if vals.size > 1 else 0.0
    return QuadraticFormValue(float(mean.real), err)


def gamma_form_integral(U, V, inner=16):
    """``int conj(V) A_gamma U`` with ``A_gamma U`` evaluated by nested Monte Carlo.

    An independent route to :func:`gamma_inner_product`: ``N / inner`` outer
    points, each carrying its own ``inner`` fresh samples for ``A_gamma U``.
    """
    _check_compatible(U, V)
    n = U.n
    omega = surface_measure(n)
    AU = apply_A_gamma(U)
    outer = U.spec.resized(max(2, U.spec.sample_count // inner))
    vals = []
    for c, size in enumerate(outer.chunk_sizes()):
        rng = chunk_rng(outer.seed, outer.stream_id + 7919, c)
        zeta = rng.standard_normal((size, n + 1)) + 1j * rng.standard_normal((size, n + 1))
        zeta /= np.linalg.norm(zeta, axis=1, keepdims=True)
        aux = chunk_rng(outer.seed, outer.stream_id + 7919, c, 1)
        v = evaluate_source(V.U, zeta, aux)
        vals.append(omega * np.conj(v) * AU.draw(zeta, aux, inner=inner))
    vals = np.concatenate(vals)
    return QuadraticFormValue(float(vals.mean().real), math.sqrt(np.var(vals, ddof=1) / vals.size))


def _check_compatible(U, V):
    if (U.n, U.gamma, U.cap) != (V.n, V.gamma, V.cap):
        raise DomainError("expansions must share n, gamma and degree cap")


def funk_hecke_eigenvalue(n, gamma, j, k):
    """``2^{Q/2 - gamma} / (lambda_j lambda_k)``, the eigenvalue of ``K_gamma`` on ``H_{j,k}``."""
    Q = homogeneous_dimension(n)
    return 2.0 ** (Q / 2.0 - gamma) / eigenvalue(n, gamma, j, k)


def funk_hecke_apply(psi, gamma, zeta, spec, shards=32):
    """Monte Carlo value of ``c_gamma int psi(eta) |1 - <zeta, conj(eta)>|^{(2 gamma - Q)/2} d eta``.

    The singularity at ``eta = zeta`` is importance sampled (see
    :func:`~cryamabe.sphere_geom.sample_near`) and shards are combined by
    median of means.
    """
    zeta = as_sphere_array(zeta, normalize=True)
    n = zeta.shape[-1] - 1
    Q = homogeneous_dimension(n)
    c = fundamental_constant(n, gamma)
    est = singular_integrate(psi, zeta, (2.0 * gamma - Q) / 2.0, spec, shards=shards)
    return est * c


@dataclass(frozen=True)
class SobolevCheck:
    lhs: float
    rhs: float
    lhs_err: float
    rhs_err: float

    @property
    def ratio(self):
        return self.lhs / self.rhs

    @property
    def ratio_err(self):
        return self.ratio * math.hypot(self.lhs_err / self.lhs, self.rhs_err / self.rhs)

    def holds(self, nsigma=3.0):
        return self.ratio <= 1.0 + nsigma * self.ratio_err + 1e-12


def sobolev_inequality_check(U, spec):
    """Both sides of the sharp fractional Sobolev inequality for a real ``U``.

    ``lhs = (int |U|^p)^{(Q - 2 gamma)/Q}`` by uniform Monte Carlo on ``spec``;
    ``rhs = C(gamma, n) (U, U)_gamma`` by the spectral route on ``U.spec``.
    """
    n, gamma = U.n, U.gamma
    Q = homogeneous_dimension(n)
    p = critical_exponent(n, gamma)
    f = U.U
    norm = mc_integrate(lambda e: np.abs(np.real(f(e))) ** p, n, spec)
    power = (Q - 2.0 * gamma) / Q
    lhs = norm.mean ** power
    lhs_err = power * lhs * norm.std_error / norm.mean if norm.mean > 0 else 0.0
    form = gamma_inner_product(U, U)
    C = sharp_sobolev_constant(n, gamma)
    return SobolevCheck(lhs, C * form.value, lhs_err, C * form.std_error)


def sphere_energy(U, spec):
    """Monte Carlo ``E(U) = (U, U)_gamma / 2 - int |U|^p / p`` for a real ``U``.

    The quadratic part uses the spectral route on ``U.spec``; the power term
    uses uniform samples from ``spec``.
    """
    p = critical_exponent(U.n, U.gamma)
    form = gamma_inner_product(U, U)
    f = U.U
    power = mc_integrate(lambda e: np.abs(np.real(f(e))) ** p, U.n, spec)
    return McEstimate(
        0.5 * form.value - power.mean / p,
        math.hypot(0.5 * form.std_error, power.std_error / p),
        power.sample_count,
    )


def constant_solution(n, gamma):
    """The positive constant solving ``A_gamma U = |U|^{p-2} U``: ``lambda_0^{(Q-2g)/(2g)}``."""
    Q = homogeneous_dimension(n)
    return lambda_gamma(n, gamma, 0) ** ((Q - 2.0 * gamma) / (2.0 * gamma))


def _as_zt(w, t=None):
    if isinstance(w, HeisenbergPoint):
        return w.z, w.t
    if t is None:
        w, t = w
    return np.asarray(w, dtype=complex), t


def pullback_to_heisenberg(U, gamma, w, t=None):
    """``(2 Jac_C(w))^{(Q - 2 gamma)/(2Q)} U(C(w))``.

    ``U`` is a vectorised function on sphere points. ``w`` is a
    :class:`HeisenbergPoint`, a pair ``(z, t)``, or ``z`` with ``t`` passed
    separately (bulk arrays allowed).
    """
    z, t = _as_zt(w, t)
    n = z.shape[-1]
    Q = homogeneous_dimension(n)
    factor = (2.0 * cayley_jacobian(z, t)) ** ((Q - 2.0 * gamma) / (2.0 * Q))
    eta = cayley(z, t)
    flat = eta.reshape(-1, n + 1)
    vals = np.asarray(U(flat)).reshape(eta.shape[:-1])
    out = factor * vals
    return float(out) if np.ndim(out) == 0 else out


def convolution_residual(u, gamma, w, spec, exponent=None, shards=32):
    """Residual of the Heisenberg fixed-point identity at ``w = (z, t)``.

    ``u(w) - (c_gamma / 2) int d_KC(w, v)^{2 gamma - Q} |u(v)|^e u(v) dv`` with
    ``e = 4 gamma / (Q - 2 gamma)`` unless ``exponent`` overrides it. The
    integral over ``H^n`` is moved to the sphere with ``dv = d eta / Jac``,
    and the kernel singularity at ``C(w)`` is importance sampled; samples
    within the pole guard are redrawn.

    Parameters
    ----------
    u : callable
        ``u(z, t)`` vectorised, ``z`` of shape ``(N, n)``.
    w : HeisenbergPoint or tuple
        Single point ``(z, t)`` with ``z`` of shape ``(n,)``.
    """
    z0, t0 = _as_zt(w)
    t0 = float(t0)
    n = z0.shape[-1]
    Q = homogeneous_dimension(n)
    e = 4.0 * gamma / (Q - 2.0 * gamma) if exponent is None else exponent
    c = fundamental_constant(n, gamma)
    zeta = cayley(z0, t0)
    s = (2.0 * gamma - Q) / 2.0
    u0 = float(np.asarray(u(z0[None, :], np.array([t0])))[0])

    def integrand(eta):
        zv, tv = cayley_inverse(eta)
        uv = np.asarray(u(zv, tv))
        d = kc_distance(z0[None, :], t0, zv, tv)
        core = d ** (2.0 * gamma - Q) * np.abs(uv) ** e * uv / cayley_jacobian(zv, tv)
        return core / np.abs(1.0 - hermitian_pair(zeta[None, :], eta)) ** s

    est = singular_integrate(integrand, zeta, s, spec, shards=shards, reject=near_pole)
    return McEstimate(u0 - 0.5 * c * est.mean, 0.5 * c * est.std_error, est.sample_count)
