"""Heisenberg group ``H^n`` and its Cayley identification with ``S^{2n+1}``.

A point is a pair ``(z, t)`` with ``z`` in ``C^n`` and real ``t``. The bulk
functions take ``z`` of shape ``(..., n)`` and ``t`` of shape ``(...)``.

The Cayley transform uses ``1 + |z|^2 - it`` in the denominator. With the
group law below this is the sign that carries the left-invariant gauge
distance to the chordal sphere distance; the ``+it`` variant matches the
right-invariant one instead.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError, PoleError
from .sphere_geom import (
    McEstimate,
    as_sphere_array,
    chunk_rng,
    iter_uniform_chunks,
    sphere_distance,
    surface_measure,
)

__all__ = [
    "HeisenbergPoint",
    "POLE_GUARD",
    "group_mul",
    "group_inv",
    "dilate",
    "gauge_norm",
    "kc_distance",
    "cayley",
    "cayley_inverse",
    "cayley_jacobian",
    "conformal_factor",
    "near_pole",
    "distance_conformal_check",
    "heisenberg_integrate",
    "sample_heisenberg",
]

POLE_GUARD = 1e-9


@dataclass(frozen=True)
class HeisenbergPoint:
    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if z.ndim != 1:
            raise DimensionError("z must be a vector")
        if not (np.all(np.isfinite(z)) and math.isfinite(self.t)):
            raise DomainError("Heisenberg point components must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self):
        return self.z.shape[0]

    @classmethod
    def origin(cls, n):
        return cls(np.zeros(n, dtype=complex), 0.0)

    def __matmul__(self, other):
        z, t = group_mul(self.z, self.t, other.z, other.t)
        return HeisenbergPoint(z, float(t))

    def inverse(self):
        return HeisenbergPoint(-self.z, -self.t)


def _zt(z, t):
    z = np.asarray(z, dtype=complex)
    t = np.asarray(t, dtype=float)
    if z.ndim == 0:
        raise DimensionError("z needs a trailing coordinate axis")
    return z, t


def _twist(z, zp):
    # 2 Im(z . conj(z'))
    return 2.0 * np.imag(np.einsum("...j,...j->...", z, np.conj(zp)))


def group_mul(z, t, zp, tp):
    """Group law ``(z, t)(z', t') = (z + z', t + t' + 2 Im z.conj(z'))``."""
    z, t = _zt(z, t)
    zp, tp = _zt(zp, tp)
    if z.shape[-1] != zp.shape[-1]:
        raise DimensionError(f"dimension mismatch: {z.shape[-1]} vs {zp.shape[-1]}")
    return z + zp, t + tp + _twist(z, zp)


def group_inv(z, t):
    return -np.asarray(z), -np.asarray(t)


def dilate(z, t, lam):
    """Anisotropic dilation ``(lam z, lam^2 t)``."""
    return lam * np.asarray(z), lam * lam * np.asarray(t)


def gauge_norm(z, t):
    """Homogeneous gauge ``(|z|^4 + t^2)^(1/4)``."""
    z, t = _zt(z, t)
    r2 = np.sum(np.abs(z) ** 2, axis=-1)
    val = (r2 * r2 + t * t) ** 0.25
    return float(val) if np.ndim(val) == 0 else val


def kc_distance(z, t, zp, tp):
    """Left-invariant Koranyi-Cygan distance ``N((z', t')^{-1} (z, t))``."""
    z, t = _zt(z, t)
    zp, tp = _zt(zp, tp)
    if z.shape[-1] != zp.shape[-1]:
        raise DimensionError(f"dimension mismatch: {z.shape[-1]} vs {zp.shape[-1]}")
    dz = z - zp
    r2 = np.sum(np.abs(dz) ** 2, axis=-1)
    dt = t - tp + _twist(z, zp)
    val = (r2 * r2 + dt * dt) ** 0.25
    return float(val) if np.ndim(val) == 0 else val


def conformal_factor(z, t):
    """``(1 + |z|^2)^2 + t^2``, shared by the Jacobian and the distance identity."""
    z, t = _zt(z, t)
    s = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    return s * s + t * t


def cayley(z, t):
    """Cayley transform ``H^n -> S^{2n+1}`` minus the pole ``(0, ..., 0, -1)``."""
    z, t = _zt(z, t)
    r2 = np.sum(np.abs(z) ** 2, axis=-1)
    denom = 1.0 + r2 - 1j * t
    head = 2.0 * z / denom[..., None]
    tail = (1.0 - r2 + 1j * t) / denom
    return np.concatenate([head, tail[..., None]], axis=-1)


def near_pole(eta, guard=POLE_GUARD):
    """Mask of points with ``|1 + eta_{n+1}| <= guard``."""
    eta = as_sphere_array(eta)
    return np.abs(1.0 + eta[..., -1]) <= guard


def cayley_inverse(eta, guard=POLE_GUARD):
    """Inverse Cayley transform ``S^{2n+1} \\ {pole} -> H^n``.

    Raises
    ------
    PoleError
        If any point lies within ``guard`` of the removed pole.
    """
    eta = as_sphere_array(eta)
    if np.any(near_pole(eta, guard)):
        raise PoleError("point within the pole guard of (0, ..., 0, -1)")
    denom = 1.0 + eta[..., -1]
    z = eta[..., :-1] / denom[..., None]
    t = -np.imag(2.0 / denom)
    return z, t


def cayley_jacobian(z, t):
    """Jacobian determinant ``2^{2n+1} / ((1 + |z|^2)^2 + t^2)^{n+1}``."""
    z, t = _zt(z, t)
    n = z.shape[-1]
    val = 2.0 ** (2 * n + 1) / conformal_factor(z, t) ** (n + 1)
    return float(val) if np.ndim(val) == 0 else val


def distance_conformal_check(z, t, zp, tp):
    """Relative discrepancy between the sphere distance of the Cayley images
    and ``d_KC`` times the two conformal factors ``(4 / A)^(1/4)``.
    """
    lhs = sphere_distance(cayley(z, t), cayley(zp, tp))
    rhs = (kc_distance(z, t, zp, tp) * (4.0 / conformal_factor(z, t)) ** 0.25
           * (4.0 / conformal_factor(zp, tp)) ** 0.25)
    out = np.abs(lhs - rhs) / np.maximum(lhs, np.finfo(float).tiny)
    out = np.where((lhs == 0) & (rhs == 0), 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def _direct_sample(rng, n, count):
    """Heavy-tailed proposal on ``H^n`` dominating the Cayley Jacobian.

    ``u = |z|^2`` is beta-prime(n, n + 1) distributed with a uniform direction,
    and ``t | z`` is Cauchy with scale ``1 + |z|^2``. Returns points and their
    proposal density.
    """
    u = rng.standard_gamma(n, count) / rng.standard_gamma(n + 1, count)
    d = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    z = np.sqrt(u)[:, None] * d / np.linalg.norm(d, axis=1, keepdims=True)
    s = 1.0 + u
    t = s * np.tan(math.pi * (rng.random(count) - 0.5))
    area = 2.0 * math.pi ** n / math.factorial(n - 1)
    beta_fn = math.exp(math.lgamma(n) + math.lgamma(n + 1) - math.lgamma(2 * n + 1))
    dens_z = 2.0 * s ** (-(2 * n + 1)) / (beta_fn * area)
    dens_t = s / (math.pi * (s * s + t * t))
    return z, t, dens_z * dens_t


def sample_heisenberg(n, spec):
    """Random Heisenberg points (images of uniform sphere points, pole excluded)."""
    zs, ts = [], []
    for _, eta in iter_uniform_chunks(n, spec):
        eta = eta[~near_pole(eta)]
        z, t = cayley_inverse(eta)
        zs.append(z)
        ts.append(t)
    return np.concatenate(zs), np.concatenate(ts)


def heisenberg_integrate(g, n, spec, method="cayley"):
    """Monte Carlo integral of ``g(z, t)`` over ``H^n`` with Lebesgue measure.

    ``method="cayley"`` samples the sphere uniformly, maps through the inverse
    Cayley transform and weights by ``1 / Jac``; points inside the pole guard
    are redrawn. ``method="direct"`` samples ``H^n`` from a heavy-tailed
    proposal and needs no Cayley machinery.
    """
    if method not in ("cayley", "direct"):
        raise ValueError(f"unknown method {method!r}")
    omega = surface_measure(n)
    parts = []
    for c, size in enumerate(spec.chunk_sizes()):
        if method == "cayley":
            rng = chunk_rng(spec.seed, spec.stream_id, c)
            eta = rng.standard_normal((size, n + 1)) + 1j * rng.standard_normal((size, n + 1))
            eta /= np.linalg.norm(eta, axis=1, keepdims=True)
            bad = near_pole(eta)
            while np.any(bad):
                k = int(bad.sum())
                fresh = rng.standard_normal((k, n + 1)) + 1j * rng.standard_normal((k, n + 1))
                eta[bad] = fresh / np.linalg.norm(fresh, axis=1, keepdims=True)
                bad = near_pole(eta)
            z, t = cayley_inverse(eta)
            parts.append(omega * np.asarray(g(z, t)) / cayley_jacobian(z, t))
        else:
            z, t, dens = _direct_sample(chunk_rng(spec.seed, spec.stream_id, c), n, size)
            parts.append(np.asarray(g(z, t)) / dens)
    vals = np.concatenate(parts)
    if not np.all(np.isfinite(vals)):
        raise DomainError("Heisenberg integrand produced non-finite values")
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)), vals.size)
