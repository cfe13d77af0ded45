"""Points, distances and Monte Carlo integration on the CR sphere ``S^{2n+1}``.

Sphere points are complex vectors of length ``n + 1``. Bulk routines work on
arrays of shape ``(..., n + 1)``; :class:`SpherePoint` wraps a single point.

Random streams are counter based: chunk ``c`` of the stream ``(seed,
stream_id)`` is generated by a Philox generator keyed by
``(seed, stream_id, c)``, so a stream is identical however its chunks are
scheduled across workers, and any prefix of a longer stream equals the
shorter stream.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DimensionError, DomainError, NonFiniteError

__all__ = [
    "SpherePoint",
    "QuadratureSpec",
    "McEstimate",
    "chunk_rng",
    "as_sphere_array",
    "hermitian_pair",
    "sphere_distance",
    "surface_measure",
    "sample_uniform",
    "iter_uniform_chunks",
    "mc_integrate",
    "median_of_means",
    "sample_near",
    "singular_integrate",
]

CHUNK = 1 << 16

log = logging.getLogger(__name__)


def worker_count():
    """Worker cap from ``CRYAMABE_THREADS`` (default: up to 4 CPUs)."""
    env = os.environ.get("CRYAMABE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def chunk_rng(seed, stream_id, index, sub=0):
    """Generator for chunk ``index`` of stream ``(seed, stream_id)``.

    ``sub`` separates auxiliary draws (e.g. inner Monte Carlo samples) from
    the primary points of the same chunk.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id), int(index), int(sub)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class QuadratureSpec:
    """Sample count and RNG keys of a Monte Carlo run."""

    sample_count: int = 1_000_000
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if int(self.sample_count) < 1:
            raise DomainError("sample_count must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if int(self.stream_id) < 0:
            raise DomainError("stream_id must be nonnegative")

    def stream(self, stream_id):
        """Same seed and size on another stream."""
        return replace(self, stream_id=int(stream_id))

    def resized(self, sample_count):
        return replace(self, sample_count=int(sample_count))

    def chunk_sizes(self):
        full, rest = divmod(int(self.sample_count), CHUNK)
        return [CHUNK] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    sample_count: int

    def sigma_distance(self, expected, other_std=0.0):
        """``|mean - expected|`` in units of the (combined) standard error."""
        err = math.hypot(self.std_error, other_std)
        diff = abs(self.mean - expected)
        if err == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / err

    def within(self, expected, nsigma=3.0, other_std=0.0, atol=1e-12):
        err = math.hypot(self.std_error, other_std)
        return abs(self.mean - expected) <= nsigma * err + atol

    def __mul__(self, c):
        return McEstimate(self.mean * c, self.std_error * abs(c), self.sample_count)

    __rmul__ = __mul__


def as_sphere_array(points, normalize=False):
    arr = np.asarray(points, dtype=complex)
    if arr.ndim == 0:
        raise DimensionError("a sphere point needs at least two coordinates")
    if arr.shape[-1] < 2:
        raise DimensionError("points of S^{2n+1} have n + 1 >= 2 coordinates")
    if normalize:
        arr = arr / np.linalg.norm(arr, axis=-1, keepdims=True)
    return arr


class SpherePoint:
    """A single point of ``S^{2n+1}``; coordinates are renormalised on construction."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        arr = as_sphere_array(coords)
        if arr.ndim != 1:
            raise DimensionError("SpherePoint takes one coordinate vector")
        norm = np.linalg.norm(arr)
        if norm == 0.0 or not np.isfinite(norm):
            raise DomainError("cannot normalise a zero or non-finite vector")
        arr = arr / norm
        arr.setflags(write=False)
        self.coords = arr

    @property
    def n(self):
        return self.coords.shape[0] - 1

    @classmethod
    def basis(cls, n, index):
        """Unit vector ``e_index`` (1-based) in ``C^{n+1}``."""
        e = np.zeros(n + 1, dtype=complex)
        e[index - 1] = 1.0
        return cls(e)

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __repr__(self):
        return f"SpherePoint({self.coords.tolist()!r})"


def hermitian_pair(zeta, eta):
    """``<zeta, conj(eta)> = sum_j zeta_j conj(eta_j)`` (broadcasts over leading axes)."""
    z = as_sphere_array(zeta)
    e = as_sphere_array(eta)
    if z.shape[-1] != e.shape[-1]:
        raise DimensionError(f"dimension mismatch: {z.shape[-1]} vs {e.shape[-1]}")
    out = np.einsum("...j,...j->...", z, e.conj())
    return out[()] if out.ndim == 0 else out


def sphere_distance(zeta, eta):
    """CR sphere distance ``sqrt(2 |1 - <zeta, conj(eta)>|)``.

    Uses ``1 - <zeta, conj(eta)> = |zeta - eta|^2 / 2 - i Im<zeta, conj(eta)>``
    on the unit sphere, which vanishes exactly at ``zeta == eta``.
    """
    pair = hermitian_pair(zeta, eta)
    diff = np.asarray(zeta) - np.asarray(eta)
    re = 0.5 * np.sum(np.abs(diff) ** 2, axis=-1)
    val = np.sqrt(2.0 * np.hypot(re, np.imag(pair)))
    return float(val) if np.ndim(val) == 0 else val


def surface_measure(n):
    """Surface measure ``omega_{2n+1} = 2 pi^{n+1} / n!`` of ``S^{2n+1}``."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    return 2.0 * math.pi ** (n + 1) / math.factorial(int(n))


def _uniform_block(rng, count, dim):
    g = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def iter_uniform_chunks(n, spec):
    """Yield ``(index, points)`` chunks of the uniform stream of ``spec``."""
    for c, size in enumerate(spec.chunk_sizes()):
        yield c, _uniform_block(chunk_rng(spec.seed, spec.stream_id, c), size, n + 1)


def sample_uniform(n, spec):
    """I.i.d. uniform points on ``S^{2n+1}`` as an array ``(sample_count, n + 1)``.

    Points are normalised standard complex Gaussian vectors.
    """
    return np.concatenate([pts for _, pts in iter_uniform_chunks(n, spec)], axis=0)


def _chunk_stats(values):
    values = np.asarray(values, dtype=float)
    m = values.mean()
    return values.size, m, float(((values - m) ** 2).sum())


def _combine(a, b):
    # Chan et al. pairwise update of (count, mean, M2)
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _checked(f, pts):
    vals = np.asarray(f(pts))
    if vals.shape != pts.shape[:1]:
        vals = np.broadcast_to(vals, pts.shape[:1])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise NonFiniteError(f"integrand is not finite at sample {idx}", point=pts[idx])
    return vals


def mc_integrate(f, n, spec):
    """Monte Carlo integral of a real integrand over ``S^{2n+1}``.

    Parameters
    ----------
    f : callable
        Vectorised evaluator mapping an ``(N, n + 1)`` point array to ``N`` reals.
    n : int
        CR dimension.
    spec : QuadratureSpec
        Sample count and RNG keys.

    Returns
    -------
    McEstimate
        ``omega * mean(f)`` with standard error ``omega * std(f) / sqrt(N)``.
    """
    omega = surface_measure(n)
    sizes = spec.chunk_sizes()

    def work(c):
        pts = _uniform_block(chunk_rng(spec.seed, spec.stream_id, c), sizes[c], n + 1)
        return _chunk_stats(_checked(f, pts))

    workers = min(worker_count(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            stats = list(pool.map(work, range(len(sizes))))
    else:
        stats = [work(c) for c in range(len(sizes))]
    total = stats[0]
    for s in stats[1:]:
        total = _combine(total, s)
    count, mean, m2 = total
    var = m2 / (count - 1) if count > 1 else 0.0
    return McEstimate(float(omega * mean), omega * math.sqrt(var / count), count)


def median_of_means(values, shards=32):
    """Median of contiguous shard means and its standard error.

    The error is ``sqrt(pi/2)`` times the standard error of a shard-mean
    average, the asymptotic efficiency of the median of near-normal means.
    Complex values take the median of real and imaginary parts separately.
    """
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re, re_err = median_of_means(values.real, shards)
        im, im_err = median_of_means(values.imag, shards)
        return complex(re, im), math.hypot(re_err, im_err)
    values = values.astype(float)
    shards = max(1, min(int(shards), values.size))
    means = np.array([part.mean() for part in np.array_split(values, shards)])
    if shards == 1:
        return float(means[0]), float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    err = math.sqrt(math.pi / 2.0) * means.std(ddof=1) / math.sqrt(shards)
    return float(np.median(means)), float(err)


def _orthogonal_unit(rng, zeta, count):
    dim = zeta.shape[0]
    g = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    g -= np.outer(g @ zeta.conj(), zeta)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_near(zeta, exponent, count, rng):
    """Importance sample for integrals of ``f(eta) |1 - <zeta, conj(eta)>|^exponent``.

    Writes ``eta = conj(b) zeta + sqrt(1 - |b|^2) xi`` with ``xi`` uniform on
    the unit sphere of ``zeta``'s orthogonal complement, so that
    ``<zeta, conj(eta)> = b``. In polar coordinates ``b = 1 - rho e^{i phi}``
    about the singular point, ``rho`` is drawn with density proportional to
    ``rho^(exponent + n)`` on ``[0, 2 cos phi]``, which absorbs the kernel
    singularity and leaves bounded weights.

    Returns
    -------
    eta : ndarray, shape (count, n + 1)
    weights : ndarray, shape (count,)
        ``weights * f(eta)`` averages to the integral including the kernel.
    """
    zeta = as_sphere_array(zeta)
    n = zeta.shape[0] - 1
    beta = exponent + n
    if beta <= -1.0:
        raise DomainError(f"kernel exponent {exponent} is not integrable on S^{2 * n + 1}")
    phi = rng.uniform(-math.pi / 2.0, math.pi / 2.0, count)
    reach = 2.0 * np.cos(phi)
    u = 1.0 - rng.random(count)  # in (0, 1]
    rho = reach * u ** (1.0 / (beta + 1.0))
    bad = ~(rho > 0.0)
    while np.any(bad):
        # coincidence with zeta: redraw
        k = int(bad.sum())
        phi[bad] = rng.uniform(-math.pi / 2.0, math.pi / 2.0, k)
        reach[bad] = 2.0 * np.cos(phi[bad])
        rho[bad] = reach[bad] * (1.0 - rng.random(k)) ** (1.0 / (beta + 1.0))
        bad = ~(rho > 0.0)
    b = 1.0 - rho * np.exp(1j * phi)
    radial = np.sqrt(np.clip(rho * (reach - rho), 0.0, None))
    xi = _orthogonal_unit(rng, zeta, count)
    eta = np.conj(b)[:, None] * zeta[None, :] + radial[:, None] * xi
    weights = (surface_measure(n) * n * np.clip(reach - rho, 0.0, None) ** (n - 1)
               * reach ** (beta + 1.0) / (beta + 1.0))
    return eta, weights


def singular_integrate(f, zeta, exponent, spec, shards=32, reject=None):
    """Median-of-means estimate of ``int f(eta) |1 - <zeta, conj(eta)>|^exponent d eta``.

    Parameters
    ----------
    f : callable
        Vectorised evaluator on ``(N, n + 1)`` point arrays (kernel excluded).
    zeta : array_like
        Singular point.
    exponent : float
        Kernel exponent; must exceed ``-(n + 1)``.
    spec : QuadratureSpec
    shards : int
        Number of median-of-means shards.
    reject : callable, optional
        Boolean mask of sample points to discard and redraw.
    """
    zeta = as_sphere_array(zeta, normalize=True)
    values = []
    rejected = 0
    for c, size in enumerate(spec.chunk_sizes()):
        rng = chunk_rng(spec.seed, spec.stream_id, c)
        eta, w = sample_near(zeta, exponent, size, rng)
        if reject is not None:
            bad = np.asarray(reject(eta), dtype=bool)
            while np.any(bad):
                rejected += int(bad.sum())
                e2, w2 = sample_near(zeta, exponent, int(bad.sum()), rng)
                eta[bad], w[bad] = e2, w2
                bad = np.asarray(reject(eta), dtype=bool)
        values.append(w * _checked(f, eta))
    mean, err = median_of_means(np.concatenate(values), shards)
    if rejected:
        log.info("singular_integrate: redrew %d rejected samples", rejected)
    return McEstimate(mean, err, spec.sample_count)
