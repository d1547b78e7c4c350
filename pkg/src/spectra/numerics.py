"""Rank utilities shared across modules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class RankResult:
    rank: int
    gap_ratio: float
    singular_values: tuple[float, ...]
    conclusive: bool

    def __int__(self):
        return self.rank


def numerical_rank(A, rel_tol: float = 1e-6, min_gap: float = 10.0) -> RankResult:
    """Rank of ``A`` from its singular values.

    Values below ``rel_tol * s_max`` count as zero.  The split is accepted
    only if the ratio across it is at least ``min_gap``; otherwise the result
    is marked inconclusive.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return RankResult(0, float("inf"), (), True)
    s = np.linalg.svd(A, compute_uv=False)
    return rank_from_singular_values(s, rel_tol, min_gap)


def rank_from_singular_values(s, rel_tol: float = 1e-6, min_gap: float = 10.0) -> RankResult:
    s = np.sort(np.asarray(s, dtype=float))[::-1]
    if s.size == 0 or s[0] == 0.0:
        return RankResult(0, float("inf"), tuple(s), True)
    rank = int(np.sum(s > rel_tol * s[0]))
    if rank == s.size:
        gap = float("inf")
    else:
        below = s[rank]
        gap = float("inf") if below == 0.0 else float(s[rank - 1] / below)
    return RankResult(rank, gap, tuple(float(v) for v in s), gap >= min_gap)


def to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


def is_rational_input(A) -> bool:
    """True if every entry is an integer or Fraction (floats are excluded)."""
    for row in A:
        for v in row:
            if isinstance(v, (Fraction, int, np.integer)):
                continue
            if isinstance(v, (float, np.floating)) and float(v).is_integer():
                continue
            return False
    return True


def exact_rank(rows: Iterable[Sequence]) -> int:
    """Rank over the rationals, by incremental elimination."""
    basis: list[tuple[int, list[Fraction]]] = []  # (pivot column, reduced row)
    ncols = None
    for raw in rows:
        r = [to_fraction(v) for v in raw]
        if ncols is None:
            ncols = len(r)
        for piv, b in basis:
            c = r[piv]
            if c:
                r = [ri - c * bi for ri, bi in zip(r, b)]
        piv = next((j for j, v in enumerate(r) if v), None)
        if piv is None:
            continue
        lead = r[piv]
        r = [v / lead for v in r]
        # keep the basis fully reduced on pivot columns
        basis = [(p, [bi - bb[piv] * ri for bi, ri in zip(bb, r)] if bb[piv] else bb) for p, bb in basis]
        basis.append((piv, r))
        if len(basis) == ncols:
            break
    return len(basis)


def orthonormal_basis(A, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((A.shape[0], 0))
    k = int(np.sum(s > rel_tol * s[0]))
    return u[:, :k]


def null_space(A, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    k = int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    return vt[k:].T.copy()


def subspace_intersection(A, B, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of span(A) ∩ span(B) for orthonormal column blocks."""
    n = A.shape[0]
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((n, 0))
    PA = A @ A.T
    PB = B @ B.T
    stacked = np.vstack([np.eye(n) - PA, np.eye(n) - PB])
    _, s, vt = np.linalg.svd(stacked)
    k = int(np.sum(s > tol))
    return vt[k:].T.copy()


def same_subspace(A, B, tol: float = 1e-8) -> bool:
    """Equality of the spans of two orthonormal column blocks."""
    if A.shape[1] != B.shape[1]:
        return False
    if A.shape[1] == 0:
        return True
    return bool(np.linalg.norm(A @ A.T - B @ B.T, 2) <= tol)
