"""Eigenvalue map, orthogonal orbits and block-diagonal embeddings.

Convention: ``X = U.T @ diag(lam) @ U``, so the *rows* of ``U`` are
eigenvectors and ``lam`` is sorted in descending order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .numerics import numerical_rank
from .perm_core import OrderedPartition, Partition, partition_of_point

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
JACOBI_MAX_N = 32
JACOBI_SWEEPS = 64
JACOBI_REL_TOL = 1e-14


class NotSymmetricError(ValueError):
    pass


class EigenConvergenceError(RuntimeError):
    pass


def as_symmetric(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {X.shape}")
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    if X.size and np.max(np.abs(X - X.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetricError("matrix is not symmetric")
    return X


def _off_norm(A) -> float:
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def jacobi_eigh(X, tol: float = JACOBI_REL_TOL, max_sweeps: int = JACOBI_SWEEPS):
    """Cyclic Jacobi eigensolver.

    Returns eigenvalues ``w`` (unsorted) and ``V`` with ``X = V diag(w) V^T``.
    """
    A = np.array(X, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(A)
    if n < 2 or fro == 0.0:
        return np.diag(A).copy(), V
    thresh = tol * fro
    for _ in range(max_sweeps):
        off = _off_norm(A)
        if off <= thresh:
            return np.diag(A).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    off = _off_norm(A)
    if off <= thresh:
        return np.diag(A).copy(), V
    raise EigenConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")


def eigh_desc(X) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues and row-eigenvector matrix ``U``."""
    X = as_symmetric(X)
    n = X.shape[0]
    if n <= JACOBI_MAX_N:
        w, V = jacobi_eigh(X)
    else:
        w, V = np.linalg.eigh(X)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order].T.copy()


def eigenvalues(X) -> np.ndarray:
    """The eigenvalue map: eigenvalues in descending order."""
    return eigh_desc(X)[0]


@dataclass(frozen=True)
class SpectralPoint:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenbasis: np.ndarray

    @classmethod
    def from_matrix(cls, X) -> "SpectralPoint":
        X = as_symmetric(X)
        lam, U = eigh_desc(X)
        return cls(X, lam, U)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def reconstruct(self) -> np.ndarray:
        return lift_point(self.eigenvalues, self.eigenbasis)


def lift_point(x, U) -> np.ndarray:
    """``U^T diag(x) U``."""
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    X = (U.T * x) @ U
    return 0.5 * (X + X.T)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_orthogonal(n: int, seed=None) -> np.ndarray:
    """Haar-distributed orthogonal matrix (Gaussian QR with sign fix)."""
    rng = _rng(seed)
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def random_symmetric(n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def orbit_dimension(x, tol: float = 0.0) -> int:
    """Dimension of the orbit of diag(x) under conjugation by O(n)."""
    sizes = partition_of_point(x, tol).sizes
    n = sum(sizes)
    return (n * n - sum(s * s for s in sizes)) // 2


def stabilizer_dimension(x, tol: float = 0.0) -> int:
    return sum(s * (s - 1) // 2 for s in partition_of_point(x, tol).sizes)


def skew_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            A = np.zeros((n, n))
            A[i, j] = 1.0
            A[j, i] = -1.0
            out.append(A)
    return out


def orbit_dimension_numeric(x) -> int:
    """Rank of ``A -> A diag(x) - diag(x) A`` on skew-symmetric matrices."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 0
    D = np.diag(x)
    cols = [(A @ D - D @ A).ravel() for A in skew_basis(n)]
    M = np.array(cols).T
    if not np.any(M):
        return 0
    # entries are exact differences of coordinates, so a tight relative cut is safe
    return numerical_rank(M, rel_tol=1e-12, min_gap=1.0).rank


# ---------------------------------------------------------------------------
# block-diagonal matrices


@dataclass(frozen=True)
class BlockMatrix:
    """Symmetric blocks placed along the diagonal in the order of the partition."""

    ordered_partition: OrderedPartition
    blocks: tuple

    def __post_init__(self):
        sizes = self.ordered_partition.sizes
        if len(sizes) != len(self.blocks):
            raise ValueError("number of blocks does not match the partition")
        for s, B in zip(sizes, self.blocks):
            B = np.asarray(B)
            if B.shape != (s, s):
                raise ValueError(f"block of shape {B.shape} where size {s} expected")
            as_symmetric(B)

    @classmethod
    def from_blocks(cls, blocks) -> "BlockMatrix":
        blocks = tuple(np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks)
        groups, start = [], 1
        for b in blocks:
            groups.append(range(start, start + b.shape[0]))
            start += b.shape[0]
        return cls(OrderedPartition(groups), blocks)

    @property
    def n(self) -> int:
        return self.ordered_partition.n

    def embed(self) -> np.ndarray:
        X = np.zeros((self.n, self.n))
        k = 0
        for B in self.blocks:
            s = B.shape[0]
            X[k:k + s, k:k + s] = B
            k += s
        return X


def lambda_sigma(B: BlockMatrix) -> np.ndarray:
    """Concatenation of the descending spectra of the blocks."""
    return np.concatenate([eigenvalues(b) for b in B.blocks])


def check_block_spectrum_agreement(B: BlockMatrix) -> bool:
    """True when the block spectra are strictly separated and agree with the full spectrum."""
    spectra = [eigenvalues(b) for b in B.blocks]
    for k in range(len(spectra) - 1):
        if not spectra[k].min() > spectra[k + 1].max():
            log.info("block spectra not separated: min of block %d = %g <= max of block %d = %g",
                     k + 1, spectra[k].min(), k + 2, spectra[k + 1].max())
            return False
    ok = np.allclose(np.concatenate(spectra), eigenvalues(B.embed()), atol=1e-10)
    if not ok:
        log.info("block spectra disagree with the spectrum of the embedded matrix")
    return bool(ok)


def block_spectra_near(X, xbar, tol: float = 1e-9) -> list[np.ndarray]:
    """Eigenvalues of ``X`` grouped along the consecutive blocks of ``P(xbar)``.

    A diagnostic for the block split of the spectrum near ``xbar``: for ``X``
    close to a lift of ``xbar`` each group stays close to one value of ``xbar``.
    """
    lam = eigenvalues(X)
    P = partition_of_point(xbar, tol)
    if not P.has_consecutive_blocks():
        raise ValueError("xbar must be sorted so that its blocks are consecutive")
    return [lam[np.array(b) - 1] for b in P.blocks]


def matrix_to_json(X) -> dict:
    X = np.asarray(X, dtype=float)
    return {"n": int(X.shape[0]), "data": [[float(v) for v in row] for row in X]}


def matrix_from_json(obj) -> np.ndarray:
    X = np.array(obj["data"], dtype=float)
    if X.shape != (obj["n"], obj["n"]):
        raise ValueError("matrix shape does not match its n field")
    return X


def sym_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of symmetric matrices under the trace inner product."""
    out = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
            out.append(E)
    return out


def sym_to_vec(X) -> np.ndarray:
    """Isometric coordinates of a symmetric matrix (upper triangle, off-diagonal scaled)."""
    X = np.asarray(X, dtype=float)
    i, j = np.triu_indices(X.shape[0])
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    return X[i, j] * w
