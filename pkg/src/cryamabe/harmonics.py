"""Bidegree harmonic spaces ``H_{j,k}`` on ``S^{2n+1}`` through their zonal kernels.

No orthonormal basis is ever built. Projections, the fractional operators and
quadratic forms all go through the reproducing kernel ``Phi_{j,k}``:
``(P_{j,k} U)(zeta) = int Phi_{j,k}(zeta, eta) U(eta) d eta``.

Kernel convention: with ``w = <zeta, conj(eta)>``,

    Phi_{j,k} = c_{j,k} * w^(j-k) * P_k^(n-1, j-k)(2|w|^2 - 1)          if j >= k
    Phi_{j,k} = c_{j,k} * conj(w)^(k-j) * P_j^(n-1, k-j)(2|w|^2 - 1)    if j <  k

i.e. the Jacobi degree is ``min(j, k)``, and the power of the pairing is
conjugated when ``k > j`` so that ``Phi(., eta)`` has degree ``j`` in ``zeta``
and ``k`` in ``conj(zeta)``. ``c_{j,k} = (M+n-1)! (j+k+n) / (omega n! M!)``
with ``M = max(j, k)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .special_fn import jacobi_eval
from .sphere_geom import (
    QuadratureSpec,
    as_sphere_array,
    chunk_rng,
    hermitian_pair,
    surface_measure,
)

__all__ = [
    "Bidegree",
    "ZonalKernel",
    "space_dimension",
    "zonal_eval",
    "zonal_trace",
    "KernelTransform",
    "ProjectedFunction",
    "project_component",
    "evaluate_source",
]

_INT64_MAX = 2**63 - 1
_PROBE_BLOCK = 16


@dataclass(frozen=True, order=True)
class Bidegree:
    j: int
    k: int

    def __post_init__(self):
        if int(self.j) != self.j or int(self.k) != self.k or self.j < 0 or self.k < 0:
            raise DomainError(f"bidegree entries must be nonnegative integers: {self}")


def space_dimension(n, j, k):
    """Exact dimension ``m_{j,k}`` of ``H_{j,k}`` on ``S^{2n+1}``.

    Raises
    ------
    OverflowError
        If the value does not fit in a signed 64-bit integer.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    Bidegree(j, k)
    f = math.factorial
    num = f(j + n - 1) * f(k + n - 1) * (j + k + n)
    den = f(n) * f(n - 1) * f(j) * f(k)
    m, rem = divmod(num, den)
    assert rem == 0
    if m > _INT64_MAX:
        raise OverflowError(f"m_{{{j},{k}}} exceeds 64 bits for n={n}")
    return m


@dataclass(frozen=True)
class ZonalKernel:
    """Zonal harmonic ``Phi_{j,k}`` on ``S^{2n+1}`` with its cached leading constant."""

    n: int
    bidegree: Bidegree
    leading: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not isinstance(self.bidegree, Bidegree):
            object.__setattr__(self, "bidegree", Bidegree(*self.bidegree))
        j, k, n = self.bidegree.j, self.bidegree.k, self.n
        top = max(j, k)
        lead = (math.factorial(top + n - 1) * (j + k + n)
                / (math.factorial(n) * math.factorial(top)) / surface_measure(n))
        object.__setattr__(self, "leading", lead)

    @classmethod
    def of(cls, n, j, k):
        return cls(n, Bidegree(j, k))

    def from_pairing(self, w):
        """Kernel value as a function of the pairing ``w = <zeta, conj(eta)>``."""
        j, k = self.bidegree.j, self.bidegree.k
        w = np.asarray(w, dtype=complex)
        x = 2.0 * np.abs(w) ** 2 - 1.0
        x = np.clip(x, -1.0, 1.0)
        if j >= k:
            val = w ** (j - k) * jacobi_eval(k, self.n - 1, j - k, x)
        else:
            val = np.conj(w) ** (k - j) * jacobi_eval(j, self.n - 1, k - j, x)
        val = self.leading * val
        if j == k:
            val = np.real(val)
        return val

    def __call__(self, zeta, eta):
        return zonal_eval(self, zeta, eta)


def zonal_eval(kern, zeta, eta):
    """``Phi_{j,k}(zeta, eta)``; real for ``j == k``, complex otherwise.

    Broadcasts over leading axes of ``zeta`` and ``eta``.
    """
    zeta = as_sphere_array(zeta)
    eta = as_sphere_array(eta)
    if zeta.shape[-1] != kern.n + 1 or eta.shape[-1] != kern.n + 1:
        raise DomainError(f"points must lie in C^{kern.n + 1}")
    out = kern.from_pairing(hermitian_pair(zeta, eta))
    return out[()] if np.ndim(out) == 0 else out


def zonal_trace(n, j, k, jacobi_degree=None):
    """``omega * Phi_{j,k}(zeta, zeta)`` in closed form.

    ``jacobi_degree`` overrides the degree of the Jacobi factor; passing ``k``
    evaluates the literal printed representation, which only reproduces
    ``m_{j,k}`` when ``k <= j``.
    """
    top = max(j, k)
    deg = min(j, k) if jacobi_degree is None else jacobi_degree
    lead = math.factorial(top + n - 1) * (j + k + n) / (math.factorial(n) * math.factorial(top))
    # P_d^(a, b)(1) = binom(d + a, d)
    return lead * math.comb(deg + n - 1, deg)


def evaluate_source(source, eta, rng):
    """Evaluate a function at sample points.

    Plain callables are evaluated directly; Monte Carlo evaluators
    (anything with a ``draw`` method) contribute one unbiased draw per point.
    """
    if hasattr(source, "draw"):
        return source.draw(eta, rng)
    return np.asarray(source(eta))


class KernelTransform:
    """``zeta -> int K(zeta, eta) U(eta) d eta`` for a kernel given on the pairing.

    Parameters
    ----------
    source : callable
        The function ``U`` (vectorised over point arrays), possibly itself a
        Monte Carlo evaluator.
    kernel : callable
        Maps the pairing ``<zeta, conj(eta)>`` to the kernel value.
    n : int
    spec : QuadratureSpec
        Sample used by :meth:`estimate`.
    """

    def __init__(self, source, kernel, n, spec):
        self.source = source
        self.kernel = kernel
        self.n = int(n)
        self.spec = spec

    def estimate(self, zeta):
        """Full-sample estimates at probe points: ``(mean, std_error)`` arrays."""
        zeta = as_sphere_array(zeta)
        single = zeta.ndim == 1
        zeta = np.atleast_2d(zeta)
        omega = surface_measure(self.n)
        total = np.zeros(zeta.shape[0], dtype=complex)
        total_sq = np.zeros(zeta.shape[0])
        count = 0
        is_real = True
        for c, size in enumerate(self.spec.chunk_sizes()):
            rng = chunk_rng(self.spec.seed, self.spec.stream_id, c)
            eta = rng.standard_normal((size, self.n + 1)) + 1j * rng.standard_normal((size, self.n + 1))
            eta /= np.linalg.norm(eta, axis=1, keepdims=True)
            u = evaluate_source(self.source, eta, chunk_rng(self.spec.seed, self.spec.stream_id, c, 1))
            for lo in range(0, zeta.shape[0], _PROBE_BLOCK):
                block = slice(lo, lo + _PROBE_BLOCK)
                vals = self.kernel(zeta[block] @ eta.conj().T) * u[None, :]
                is_real = is_real and not np.iscomplexobj(vals)
                total[block] += vals.sum(axis=1)
                total_sq[block] += (np.abs(vals) ** 2).sum(axis=1)
            count += size
        mean = total / count
        var = np.maximum(total_sq / count - np.abs(mean) ** 2, 0.0) * count / max(count - 1, 1)
        mean = omega * (mean.real if is_real else mean)
        err = omega * np.sqrt(var / count)
        if single:
            return mean[0], err[0]
        return mean, err

    def __call__(self, zeta):
        return self.estimate(zeta)[0]

    def draw(self, zeta, rng, inner=1):
        """Unbiased single estimates: for each row of ``zeta``, average ``inner``
        fresh uniform samples (independent across rows)."""
        zeta = np.atleast_2d(as_sphere_array(zeta))
        m = zeta.shape[0]
        eta = rng.standard_normal((m, inner, self.n + 1)) + 1j * rng.standard_normal((m, inner, self.n + 1))
        eta /= np.linalg.norm(eta, axis=2, keepdims=True)
        flat = eta.reshape(m * inner, self.n + 1)
        u = evaluate_source(self.source, flat, rng).reshape(m, inner)
        w = np.einsum("md,mid->mi", zeta, eta.conj())
        vals = self.kernel(w) * u
        return surface_measure(self.n) * vals.mean(axis=1)


class ProjectedFunction(KernelTransform):
    """Monte Carlo evaluator of ``P_{j,k} U``."""

    def __init__(self, source, zonal, spec):
        super().__init__(source, zonal.from_pairing, zonal.n, spec)
        self.zonal = zonal

    @property
    def bidegree(self):
        return self.zonal.bidegree


def project_component(U, n, d, spec):
    """Projection of ``U`` onto ``H_{j,k}`` as a Monte Carlo evaluator.

    Parameters
    ----------
    U : callable
        Function on ``(N, n + 1)`` point arrays, or another Monte Carlo
        evaluator (nested projections draw one inner sample per point).
    n : int
    d : Bidegree or (j, k)
    spec : QuadratureSpec
        Integration sample; calling the result at probe points uses all of it.

    Returns
    -------
    ProjectedFunction
        Call it for values; ``.estimate`` also returns standard errors.
    """
    if not isinstance(d, Bidegree):
        d = Bidegree(*d)
    if not isinstance(spec, QuadratureSpec):
        raise TypeError("spec must be a QuadratureSpec")
    return ProjectedFunction(U, ZonalKernel(n, d), spec)
