"""Block-unitary subgroups of ``U(n+1)``, their swap augmentations and actions.

``G_i`` is ``U(i) x U(n+1-2i) x U(i)`` (``U(m) x U(m)`` when ``n+1 = 2m = 2i``).
``A_i`` exchanges the two outer blocks and ``Ghat_i = G_i u A_i G_i``. On
functions, ``A_i g`` acts with a sign flip:

    (ghat * U)(eta) = U(g^{-1} eta)               for ghat = g
    (ghat * U)(eta) = -U(g^{-1} A_i^{-1} eta)     for ghat = A_i g

Index conventions for :func:`canonicalize` (0-based slots, ``i < j``): the
first step unitary ``g_j`` in ``G_j`` sends the first block ``eta[:j]`` to
``|eta[:j]| e_{j-1}`` and the last block ``eta[-j:]`` to ``|eta[-j:]| e_0``
(within the block), so the result is supported on slots ``j-1 .. n+1-j``.
Since ``j - 1 >= i`` this lies inside the middle block of ``G_i`` (slots
``i .. n-i``), whose unitary then rotates it onto slot ``i``. The canonical
point is therefore the unit vector with a one in slot ``i`` (1-based slot
``i + 1``).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, DomainError
from .sphere_geom import SpherePoint, as_sphere_array, chunk_rng

__all__ = [
    "BlockPartition",
    "BlockUnitary",
    "AugmentedElement",
    "GiDescriptor",
    "swap_matrix",
    "haar_unitary",
    "haar_sample_block_unitary",
    "haar_sample_augmented",
    "act_on_point",
    "act_on_function",
    "invariance_defect",
    "householder_to_axis",
    "canonicalize",
    "canonical_point",
    "apply_word",
    "word_matrix",
    "transport",
]

_UNITARY_TOL = 1e-12
_HAAR_STREAM = 0x5EED


@dataclass(frozen=True)
class BlockPartition:
    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts or any(p < 1 for p in parts):
            raise DomainError(f"partition parts must be positive integers: {self.parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return sum(self.parts)

    @property
    def n(self):
        return self.dim - 1

    def slices(self):
        out, lo = [], 0
        for p in self.parts:
            out.append(slice(lo, lo + p))
            lo += p
        return out


@dataclass(frozen=True)
class BlockUnitary:
    """Block-diagonal unitary with one square block per partition part."""

    partition: BlockPartition
    blocks: tuple
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.partition, BlockPartition):
            object.__setattr__(self, "partition", BlockPartition(self.partition))
        blocks = tuple(np.array(b, dtype=complex) for b in self.blocks)
        if len(blocks) != len(self.partition.parts):
            raise DimensionError("one block per partition part is required")
        for b, p in zip(blocks, self.partition.parts):
            if b.shape != (p, p):
                raise DimensionError(f"block of shape {b.shape} does not match part {p}")
            if np.max(np.abs(b @ b.conj().T - np.eye(p))) > _UNITARY_TOL * max(1, p):
                raise DomainError("block is not unitary within tolerance")
            b.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        m = np.zeros((self.partition.dim, self.partition.dim), dtype=complex)
        for b, s in zip(blocks, self.partition.slices()):
            m[s, s] = b
        m.setflags(write=False)
        object.__setattr__(self, "_matrix", m)

    @classmethod
    def identity(cls, partition):
        partition = partition if isinstance(partition, BlockPartition) else BlockPartition(partition)
        return cls(partition, tuple(np.eye(p) for p in partition.parts))

    @property
    def matrix(self):
        return self._matrix

    def inverse(self):
        return BlockUnitary(self.partition, tuple(b.conj().T for b in self.blocks))

    def __matmul__(self, other):
        if not isinstance(other, BlockUnitary):
            return NotImplemented
        if other.partition != self.partition:
            raise DimensionError("partitions differ")
        return BlockUnitary(self.partition, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def outer_swapped(self):
        """``A g A`` for the swap ``A`` of the first and last blocks."""
        if self.partition.parts[0] != self.partition.parts[-1]:
            raise DimensionError("outer blocks differ in size")
        blocks = list(self.blocks)
        blocks[0], blocks[-1] = blocks[-1], blocks[0]
        return BlockUnitary(self.partition, tuple(blocks))


@dataclass(frozen=True)
class GiDescriptor:
    n: int
    i: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if int(self.i) != self.i or not 1 <= self.i <= (self.n + 1) // 2:
            raise DomainError(f"i must lie in [1, {(self.n + 1) // 2}] for n={self.n}")

    @property
    def partition(self):
        n1 = self.n + 1
        if n1 == 2 * self.i:
            return BlockPartition((self.i, self.i))
        return BlockPartition((self.i, n1 - 2 * self.i, self.i))

    def swap(self):
        return swap_matrix(self.n, self.i)

    def identity(self, swapped=False):
        return AugmentedElement(self, bool(swapped), BlockUnitary.identity(self.partition))


def swap_matrix(n, i):
    """The involution ``A_i`` exchanging the first and last ``i`` coordinates."""
    GiDescriptor(n, i)
    m = np.eye(n + 1, dtype=complex)
    perm = np.arange(n + 1)
    perm[:i], perm[n + 1 - i:] = np.arange(n + 1 - i, n + 1), np.arange(i)
    return m[perm]


@dataclass(frozen=True)
class AugmentedElement:
    """Element ``g`` or ``A_i g`` of ``Ghat_i``."""

    descriptor: GiDescriptor
    swapped: bool
    g: BlockUnitary

    def __post_init__(self):
        if self.g.partition != self.descriptor.partition:
            raise DimensionError("block unitary does not belong to G_i")

    @property
    def matrix(self):
        if self.swapped:
            return self.descriptor.swap() @ self.g.matrix
        return self.g.matrix

    @property
    def sign(self):
        return -1.0 if self.swapped else 1.0

    def compose(self, other):
        """Product ``self * other`` in ``Ghat_i``, using ``A g = (A g A) A``."""
        if other.descriptor != self.descriptor:
            raise DimensionError("elements of different groups")
        left = self.g.outer_swapped() if other.swapped else self.g
        return AugmentedElement(self.descriptor, self.swapped != other.swapped, left @ other.g)

    __matmul__ = compose

    def inverse(self):
        g_inv = self.g.inverse()
        if self.swapped:
            # (A g)^{-1} = g^{-1} A = A (A g^{-1} A)
            return AugmentedElement(self.descriptor, True, g_inv.outer_swapped())
        return AugmentedElement(self.descriptor, False, g_inv)


def haar_unitary(rng, m):
    """Haar-distributed ``m x m`` unitary: QR of a complex Gaussian, R diagonal made positive."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * phase[None, :]


def _haar_rng(spec, index):
    return chunk_rng(spec.seed, spec.stream_id + _HAAR_STREAM, index, 2)


def haar_sample_block_unitary(p, spec, index=0):
    """Haar sample of the block group of partition ``p``; deterministic in ``(spec, index)``."""
    p = p if isinstance(p, BlockPartition) else BlockPartition(p)
    rng = _haar_rng(spec, index)
    return BlockUnitary(p, tuple(haar_unitary(rng, m) for m in p.parts))


def haar_sample_augmented(d, spec, index=0, swapped=None):
    """Haar sample of ``Ghat_i``; the coset is a fair coin unless ``swapped`` is given."""
    g = haar_sample_block_unitary(d.partition, spec, index)
    if swapped is None:
        swapped = bool(_haar_rng(spec, index).integers(2))
    return AugmentedElement(d, bool(swapped), g)


def _matrix_of(g):
    if isinstance(g, (BlockUnitary, AugmentedElement)):
        return g.matrix
    return np.asarray(g, dtype=complex)


def act_on_point(g, eta):
    """``g eta`` renormalised to the sphere; broadcasts over rows of ``eta``."""
    m = _matrix_of(g)
    single = isinstance(eta, SpherePoint)
    arr = as_sphere_array(eta)
    if arr.shape[-1] != m.shape[0]:
        raise DimensionError(f"point in C^{arr.shape[-1]} but group acts on C^{m.shape[0]}")
    out = arr @ m.T
    out = out / np.linalg.norm(out, axis=-1, keepdims=True)
    return SpherePoint(out) if single else out


def act_on_function(ghat, U):
    """``ghat * U`` as an evaluator. Plain block unitaries act without sign."""
    m = _matrix_of(ghat)
    inv = m.conj().T
    sign = ghat.sign if isinstance(ghat, AugmentedElement) else 1.0

    def moved(eta):
        eta = as_sphere_array(eta)
        return sign * np.asarray(U(eta @ inv.T))

    return moved


def invariance_defect(U, d, augmented, spec, group_samples=64, probes=256):
    """``max |(ghat * U)(eta) - U(eta)|`` over Haar samples ``g`` and probe points.

    With ``augmented`` both cosets ``g`` and ``A_i g`` are tested.
    """
    rng = chunk_rng(spec.seed, spec.stream_id + _HAAR_STREAM, 0, 3)
    n = d.n
    eta = rng.standard_normal((probes, n + 1)) + 1j * rng.standard_normal((probes, n + 1))
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    base = np.asarray(U(eta))
    worst = 0.0
    cosets = (False, True) if augmented else (False,)
    for k in range(group_samples):
        g = haar_sample_block_unitary(d.partition, spec, k)
        for s in cosets:
            moved = act_on_function(AugmentedElement(d, s, g), U)(eta)
            worst = max(worst, float(np.max(np.abs(moved - base))))
    return worst


def householder_to_axis(v, k=0):
    """Unitary ``H`` with ``H v = |v| e_k`` (complex Householder plus a phase fix).

    Returns the identity when ``v`` vanishes or already equals ``|v| e_k``.
    """
    v = np.asarray(v, dtype=complex)
    m = v.shape[0]
    r = np.linalg.norm(v)
    target = np.zeros(m, dtype=complex)
    target[k] = r
    if r == 0.0 or np.linalg.norm(v - target) <= 1e-15 * max(r, 1.0):
        return np.eye(m, dtype=complex)
    alpha = v[k] / abs(v[k]) if v[k] != 0 else 1.0
    u = v.copy()
    u[k] += alpha * r
    u /= np.linalg.norm(u)
    h = np.eye(m, dtype=complex) - 2.0 * np.outer(u, u.conj())
    # h v = -alpha r e_k; rotate slot k back onto the positive axis
    h[k, :] *= -np.conj(alpha)
    return h


def canonical_point(n, i):
    e = np.zeros(n + 1, dtype=complex)
    e[i] = 1.0
    return SpherePoint(e)


def _check_pair(n, i, j):
    if n < 3:
        raise DomainError("transitivity needs n >= 3 (two distinct subgroups)")
    top = (n + 1) // 2
    if not (1 <= i <= top and 1 <= j <= top):
        raise DomainError(f"i and j must lie in [1, {top}]")
    if i == j:
        raise DomainError("i and j must differ")
    if i > j:
        raise DomainError("canonicalize expects i < j")


def canonicalize(eta, i, j):
    """Two-step word ``[g_j, g_i]`` (applied left to right) sending ``eta`` to ``e_{i+1}``.

    Parameters
    ----------
    eta : SpherePoint or array_like
    i, j : int
        ``1 <= i < j <= floor((n+1)/2)``.

    Returns
    -------
    word : list of BlockUnitary
        ``g_j`` in ``G_j`` then ``g_i`` in ``G_i``.
    canonical : SpherePoint
        The unit vector with a one in (1-based) slot ``i + 1``.
    """
    eta = as_sphere_array(eta, normalize=True)
    if eta.ndim != 1:
        raise DimensionError("canonicalize takes a single point")
    n = eta.shape[0] - 1
    _check_pair(n, i, j)
    pj = GiDescriptor(n, j).partition
    first, last = eta[:j], eta[n + 1 - j:]
    blocks = [householder_to_axis(first, j - 1)]
    if len(pj.parts) == 3:
        blocks.append(np.eye(pj.parts[1]))
    blocks.append(householder_to_axis(last, 0))
    g_j = BlockUnitary(pj, tuple(blocks))
    mid = g_j.matrix @ eta
    pi = GiDescriptor(n, i).partition
    inner = mid[i:n + 1 - i]
    g_i = BlockUnitary(pi, (np.eye(i), householder_to_axis(inner, 0), np.eye(i)))
    return [g_j, g_i], canonical_point(n, i)


def word_matrix(word):
    """Matrix of a word applied left to right (first element acts first)."""
    m = None
    for g in word:
        gm = _matrix_of(g)
        m = gm if m is None else gm @ m
    return m


def apply_word(word, eta):
    return act_on_point(word_matrix(word), eta)


def transport(eta_from, eta_to, i, j):
    """Word in ``G_j, G_i, G_j`` sending ``eta_from`` to ``eta_to``.

    With ``g_i g_j eta_to = e = gt_i gt_j eta_from`` the word is
    ``[gt_j, g_i^{-1} gt_i, g_j^{-1}]``.
    """
    (gt_j, gt_i), _ = canonicalize(eta_from, i, j)
    (g_j, g_i), _ = canonicalize(eta_to, i, j)
    return [gt_j, g_i.inverse() @ gt_i, g_j.inverse()]
