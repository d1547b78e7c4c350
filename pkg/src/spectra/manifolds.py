"""Locally symmetric submanifolds of R^n and the dimension of their spectral lifts.

A descriptor carries a local equation ``phi(x) = 0`` (with Jacobian) around a
base point ``xbar`` sorted in descending order.  From it we compute tangent
and normal spaces, the characteristic partition (finest coordinate pattern
seen on the manifold near ``xbar``), the predicted dimension of
``{X : lambda(X) in M}`` and a numerical estimate of that dimension from
tangent directions of the lifted set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .numerics import (
    numerical_rank,
    RankResult,
    same_subspace,
    subspace_intersection,
)
from .perm_core import (
    FMSplit,
    Order,
    Partition,
    canonical_split,
    enumerate_S_succsim,
    much_smaller,
    partition_of_point,
    refines,
)
from .spectral import eigenvalues, eigh_desc, lift_point, random_orthogonal, sym_to_vec
from .spectral_fn import Polynomial
from .strata import Stratum

POINT_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
JACOBIAN_MIN_SV = 1e-8
GN_ITERS = 20
GN_RESIDUAL = 1e-10
DEFAULT_DELTA = 0.5
RANK_REL_TOL = 1e-6
RANK_MIN_GAP = 10.0

KINDS = ("stratum", "affine_perpperp", "sphere_in_perpperp", "constant_support", "custom")


class ManifoldError(ValueError):
    pass


class RankDeficientJacobianError(ManifoldError):
    pass


class NonConsecutiveBlocksError(ManifoldError):
    pass


class InconsistentSamplingError(ManifoldError):
    pass


class DomainError(ManifoldError):
    pass


class ChartError(ManifoldError):
    pass


class NotLocallySymmetricManifoldError(ManifoldError):
    pass


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _descending_generic(P: Partition) -> np.ndarray:
    """Point of Delta(P) with block values decreasing in block order."""
    k = len(P)
    return np.arange(k, 0, -1, dtype=float)[P.labels]


@dataclass(frozen=True, eq=False)
class ManifoldDescriptor:
    kind: str
    n: int
    d: int
    base_point: np.ndarray
    partition: Partition | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    zero_indices: tuple[int, ...] = ()
    equation: Callable | None = None
    jacobian_fn: Callable | None = None
    delta: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ManifoldError(f"unknown kind {self.kind!r}")
        x = np.asarray(self.base_point, dtype=float)
        object.__setattr__(self, "base_point", x)
        if x.shape != (self.n,):
            raise ManifoldError(f"base point must have length {self.n}")
        if not 0 <= self.d <= self.n:
            raise ManifoldError("dimension must lie in 0..n")
        if np.any(np.diff(x) > 0):
            raise ManifoldError("base point must be sorted in descending order")
        res = self.equations(x)
        if res.size and np.max(np.abs(res)) > MEMBERSHIP_TOL * max(1.0, np.max(np.abs(x))):
            raise ManifoldError(f"base point is not on the manifold (residual {np.max(np.abs(res)):.2e})")
        if self.kind == "stratum" and partition_of_point(x, POINT_TOL) != self.partition:
            raise ManifoldError("base point does not lie in the stratum")

    # local equation -------------------------------------------------------

    def _block_difference_rows(self) -> np.ndarray:
        rows = []
        for b in self.partition.blocks:
            for j in b[1:]:
                r = np.zeros(self.n)
                r[b[0] - 1] = 1.0
                r[j - 1] = -1.0
                rows.append(r)
        return np.array(rows).reshape(-1, self.n)

    def equations(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind in ("stratum", "affine_perpperp"):
            return self._block_difference_rows() @ x
        if self.kind == "sphere_in_perpperp":
            lin = self._block_difference_rows() @ x
            v = x - self.center
            sph = (v @ v - self.radius**2) / (2 * self.radius)
            return np.concatenate([lin, [sph]])
        if self.kind == "constant_support":
            return x[np.array(self.zero_indices, dtype=int) - 1]
        return np.atleast_1d(np.asarray(self.equation(x), dtype=float))

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind in ("stratum", "affine_perpperp"):
            return self._block_difference_rows()
        if self.kind == "sphere_in_perpperp":
            return np.vstack([self._block_difference_rows(), (x - self.center) / self.radius])
        if self.kind == "constant_support":
            J = np.zeros((len(self.zero_indices), self.n))
            for k, i in enumerate(self.zero_indices):
                J[k, i - 1] = 1.0
            return J
        return np.atleast_2d(np.asarray(self.jacobian_fn(x), dtype=float)).reshape(self.n - self.d, self.n)

    def residual(self, x) -> float:
        r = self.equations(x)
        return float(np.max(np.abs(r))) if r.size else 0.0

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.max(np.abs(x))))

    # locality ---------------------------------------------------------------

    def locality_radius(self, xbar=None) -> float:
        """Half the smallest gap between distinct coordinates, capped by the declared radius."""
        x = self.base_point if xbar is None else np.asarray(xbar, dtype=float)
        vals = np.unique(x)
        gap_half = 0.5 * float(np.min(np.diff(vals))) if vals.size > 1 else math.inf
        declared = self.delta if self.delta is not None else DEFAULT_DELTA
        if self.kind == "sphere_in_perpperp":
            declared = min(declared, 0.5 * self.radius)
        return min(declared, gap_half)

    def with_base_point(self, xbar) -> "ManifoldDescriptor":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["base_point"] = np.asarray(xbar, dtype=float)
        if self.kind == "constant_support":
            kw["zero_indices"] = tuple(int(i) + 1 for i in np.flatnonzero(kw["base_point"] == 0))
            if len(kw["zero_indices"]) != len(self.zero_indices):
                raise ManifoldError("base point has the wrong number of zero coordinates")
        return ManifoldDescriptor(**kw)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "d": self.d, "base_point": self.base_point.tolist()}
        if self.partition is not None:
            out["partition"] = self.partition.to_json()
        if self.center is not None:
            out["center"] = self.center.tolist()
            out["radius"] = self.radius
        if self.kind == "constant_support":
            out["r"] = self.n - len(self.zero_indices)
        if self.delta is not None:
            out["delta"] = self.delta
        if self.name:
            out["name"] = self.name
        return out


# builders -----------------------------------------------------------------


def _partition(P, n=None) -> Partition:
    return P if isinstance(P, Partition) else Partition(P, n)


def stratum(P, base_point=None, delta=None) -> ManifoldDescriptor:
    """An open piece of the stratum Delta(P) around a point of it."""
    P = _partition(P)
    if base_point is None:
        if not P.has_consecutive_blocks():
            raise NonConsecutiveBlocksError("no descending point lies in a stratum with non-consecutive blocks")
        base_point = _descending_generic(P)
    return ManifoldDescriptor("stratum", P.n, len(P), base_point, partition=P, delta=delta,
                              name=f"stratum{P.to_json()}")


def affine_perpperp(P, base_point=None, delta=None) -> ManifoldDescriptor:
    """The subspace of vectors constant on the blocks of P."""
    P = _partition(P)
    if base_point is None:
        base_point = _descending_generic(P) if P.has_consecutive_blocks() else np.zeros(P.n)
    return ManifoldDescriptor("affine_perpperp", P.n, len(P), base_point, partition=P, delta=delta,
                              name=f"affine{P.to_json()}")


def sphere_in_perpperp(P, center, radius: float, base_point=None, delta=None) -> ManifoldDescriptor:
    """Sphere of the given center and radius inside the block-constant subspace."""
    P = _partition(P)
    n = P.n
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()
    if not _block_constant(P, c):
        raise ManifoldError("center must be constant on the blocks")
    if len(P) < 2:
        raise ManifoldError("sphere needs at least two blocks")
    if base_point is None:
        if not P.has_consecutive_blocks():
            raise ManifoldError("base point required for non-consecutive blocks")
        v = _descending_generic(P) - c
        if np.linalg.norm(v) == 0:
            raise ManifoldError("cannot place a default base point")
        base_point = c + radius * v / np.linalg.norm(v)
    return ManifoldDescriptor("sphere_in_perpperp", n, len(P) - 1, base_point, partition=P, center=c,
                              radius=float(radius), delta=delta, name=f"sphere{P.to_json()}")


def _block_constant(P: Partition, x) -> bool:
    return all(np.ptp(x[np.array(b) - 1]) == 0 for b in P.blocks)


def constant_support(n: int, r: int, base_point=None, delta=None) -> ManifoldDescriptor:
    """Vectors with exactly r nonzero entries, near a point with that support."""
    if not 0 <= r <= n:
        raise ManifoldError("r must lie in 0..n")
    if base_point is None:
        base_point = np.concatenate([np.arange(r, 0, -1, dtype=float), np.zeros(n - r)])
    x = np.asarray(base_point, dtype=float)
    zeros = tuple(int(i) + 1 for i in np.flatnonzero(x == 0))
    if len(zeros) != n - r:
        raise ManifoldError(f"base point must have exactly {r} nonzero entries")
    return ManifoldDescriptor("constant_support", n, r, x, zero_indices=zeros, delta=delta,
                              name=f"constant_support(n={n},r={r})")


def custom(n: int, d: int, equation, jacobian, base_point, delta=None, name="custom") -> ManifoldDescriptor:
    return ManifoldDescriptor("custom", n, d, base_point, equation=equation, jacobian_fn=jacobian,
                              delta=delta, name=name)


def custom_polynomial(polys: Sequence[Polynomial], d: int, base_point, delta=None, name="custom") -> ManifoldDescriptor:
    polys = tuple(polys)
    n = polys[0].n
    if len(polys) != n - d:
        raise ManifoldError(f"need {n - d} equations for a {d}-dimensional manifold in R^{n}")
    grads = [[p.derivative(i) for i in range(1, n + 1)] for p in polys]

    def eq(x):
        return np.array([p(x) for p in polys], dtype=float)

    def jac(x):
        return np.array([[float(g(x)) for g in row] for row in grads])

    return custom(n, d, eq, jac, base_point, delta, name)


def descriptor_from_json(obj: dict) -> ManifoldDescriptor:
    kind = obj["kind"].lower()
    delta = obj.get("delta")
    bp = obj.get("base_point")
    if kind == "stratum":
        return stratum(Partition(obj["partition"]), bp, delta)
    if kind in ("affine", "affine_perpperp"):
        return affine_perpperp(Partition(obj["partition"]), bp, delta)
    if kind in ("sphere", "sphere_in_perpperp"):
        return sphere_in_perpperp(Partition(obj["partition"]), obj.get("center", 0.0), obj["radius"], bp, delta)
    if kind == "constant_support":
        return constant_support(int(obj["n"]), int(obj["r"]), bp, delta)
    if kind == "custom":
        polys = [Polynomial.from_json(p, obj.get("n")) for p in obj["equations"]]
        return custom_polynomial(polys, int(obj["d"]), bp, delta, obj.get("name", "custom"))
    raise ManifoldError(f"unknown kind {obj['kind']!r}")


def load_descriptor(path) -> ManifoldDescriptor:
    with open(path) as fh:
        return descriptor_from_json(json.load(fh))


# base point sampling --------------------------------------------------------


def symmetric_tie_pattern(P: Partition, x, tol: float = POINT_TOL) -> bool:
    """True when the ties of ``x`` only merge singleton blocks of ``P``.

    Then every permutation fixing ``x`` maps the block-constant subspace of
    ``P`` to itself, so sets built on that subspace stay locally symmetric.
    """
    Q = partition_of_point(x, tol)
    if not refines(Q, P):
        return False
    return Q == P or much_smaller(Q, P) is Order.SMALLER_NOT_MUCH


def sample_base_points(M: ManifoldDescriptor, k: int, seed=None, ties: bool = True) -> list[np.ndarray]:
    """Random points of M sorted in descending order, some with repeated values."""
    rng = _rng(seed)
    out = []
    n = M.n
    for i in range(k):
        tie = ties and i % 2 == 1
        if M.kind == "stratum" or (M.kind == "affine_perpperp" and 1 < len(M.partition) < n):
            vals = np.sort(rng.uniform(-2, 2, len(M.partition)))[::-1]
            out.append(vals[M.partition.labels])
        elif M.kind == "affine_perpperp":
            if len(M.partition) == 1:
                out.append(np.full(n, rng.uniform(-2, 2)))
            else:
                v = rng.integers(-2, 3, n).astype(float) if tie else rng.uniform(-2, 2, n)
                out.append(np.sort(v)[::-1])
        elif M.kind == "sphere_in_perpperp":
            for _ in range(100):
                raw = rng.integers(-2, 3, len(M.partition)).astype(float) if tie else rng.standard_normal(len(M.partition))
                # blocks are consecutive, so descending block values give a descending point
                v = np.sort(raw)[::-1][M.partition.labels] - M.center
                if np.linalg.norm(v) == 0:
                    continue
                x = M.center + M.radius * v / np.linalg.norm(v)
                if np.all(np.diff(x) <= 0) and symmetric_tie_pattern(M.partition, x):
                    out.append(x)
                    break
            else:
                raise ManifoldError("could not sample a descending sphere point")
        elif M.kind == "constant_support":
            r = n - len(M.zero_indices)
            # keep the zero pattern of the descriptor: positives, zeros, negatives
            pos = M.zero_indices[0] - 1 if M.zero_indices else int(np.sum(M.base_point > 0))
            mags = (rng.integers(1, 3, r) if tie else rng.uniform(0.5, 2.0, r)).astype(float)
            x = np.concatenate([np.sort(mags[:pos])[::-1], np.zeros(n - r), -np.sort(mags[pos:])])
            out.append(x)
        else:
            out.append(M.base_point.copy())
    return out


# tangent and normal spaces -------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReducedSpaces:
    tangent_basis: np.ndarray
    normal_basis: np.ndarray
    reduced_normal_basis: np.ndarray
    reduced_tangent_basis: np.ndarray
    active_partition: Partition

    @property
    def n_red(self) -> int:
        return self.reduced_normal_basis.shape[1]

    @property
    def d(self) -> int:
        return self.tangent_basis.shape[1]


def tangent_normal_at(M: ManifoldDescriptor, xbar=None, tol: float = POINT_TOL) -> ReducedSpaces:
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    n, k = M.n, M.n - M.d
    if not M.contains(x):
        raise ManifoldError("point is not on the manifold")
    if k == 0:
        N = np.zeros((n, 0))
        T = np.eye(n)
    else:
        J = M.jacobian(x)
        _, s, vt = np.linalg.svd(J)
        if s[-1] <= JACOBIAN_MIN_SV:
            raise RankDeficientJacobianError(f"Jacobian has smallest singular value {s[-1]:.2e}")
        N = vt[:k].T.copy()
        T = vt[k:].T.copy()
    P = partition_of_point(x, tol)
    S = Stratum(P)
    Nred = subspace_intersection(N, S.perpperp_basis())
    Tred = subspace_intersection(T, S.perp_basis())
    return ReducedSpaces(T, N, Nred, Tred, P)


def gauss_newton_project(M: ManifoldDescriptor, y, iters: int = GN_ITERS, tol: float = GN_RESIDUAL):
    """Move ``y`` onto ``{phi = 0}`` by minimum-norm Gauss-Newton steps."""
    x = np.asarray(y, dtype=float).copy()
    if M.d == M.n:
        return x, True
    for _ in range(iters):
        r = M.equations(x)
        if np.max(np.abs(r)) < tol:
            return x, True
        x = x - np.linalg.lstsq(M.jacobian(x), r, rcond=None)[0]
    return x, bool(np.max(np.abs(M.equations(x))) < tol)


def sample_manifold_points(M: ManifoldDescriptor, xbar, count: int, radius: float, seed=None,
                           spaces: ReducedSpaces | None = None) -> list[np.ndarray]:
    """Points of M within ``radius`` of ``xbar``, from projected tangent perturbations."""
    rng = _rng(seed)
    xbar = np.asarray(xbar, dtype=float)
    spaces = spaces or tangent_normal_at(M, xbar)
    T = spaces.tangent_basis
    pts = []
    attempts = 0
    while len(pts) < count and attempts < 20 * count:
        attempts += 1
        if T.shape[1] == 0:
            return [xbar.copy()]
        c = rng.standard_normal(T.shape[1])
        c *= 0.5 * radius * rng.uniform(0.2, 1.0) / np.linalg.norm(c)
        x, ok = gauss_newton_project(M, xbar + T @ c)
        if ok and np.linalg.norm(x - xbar) < radius:
            pts.append(x)
    if len(pts) < count:
        raise ChartError("Gauss-Newton projection left the chart too often")
    return pts


# characteristic partition ---------------------------------------------------


def check_consecutive_blocks(P: Partition) -> None:
    """Raise if some block is not a run of consecutive integers."""
    bad = [b for b in P.blocks if b[-1] - b[0] + 1 != len(b)]
    if bad:
        raise NonConsecutiveBlocksError(
            f"partition {P} cannot be characteristic: blocks {[list(b) for b in bad]} are not consecutive")


@dataclass(frozen=True)
class CharacteristicData:
    partition: Partition
    kappa_star: int
    m_star: int
    fm_split: FMSplit

    @classmethod
    def from_partition(cls, P: Partition) -> "CharacteristicData":
        check_consecutive_blocks(P)
        return cls(P, P.kappa, P.m, FMSplit.from_reference(P))


def characteristic_permutation(M: ManifoldDescriptor, xbar=None, delta: float | None = None,
                               samples: int = 64, seed=0, tol: float = POINT_TOL) -> CharacteristicData:
    """Finest coordinate partition attained by M near ``xbar``."""
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    delta = M.locality_radius(x) if delta is None else delta
    pts = sample_manifold_points(M, x, samples, delta, seed)
    observed = {partition_of_point(p, tol) for p in pts}
    finest = max(observed, key=len)
    for P in observed:
        if not refines(P, finest):
            raise InconsistentSamplingError(f"sampled partitions {P} and {finest} are incomparable")
    return CharacteristicData.from_partition(finest)


def predicted_spectral_dimension(d: int, sigma_star: Partition) -> int:
    check_consecutive_blocks(sigma_star)
    n = sigma_star.n
    return d + (n * n - sum(s * s for s in sigma_star.sizes)) // 2


# local symmetry of the descriptor ---------------------------------------------


def check_manifold_symmetry(M: ManifoldDescriptor, xbar=None, samples: int = 32, seed=0,
                            tol: float = 1e-8) -> bool:
    """Probe that block-preserving permutations of ``P(xbar)`` map M to itself near ``xbar``."""
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    group = enumerate_S_succsim(partition_of_point(x, POINT_TOL))
    if len(group) == 1:
        return True
    pts = sample_manifold_points(M, x, samples, M.locality_radius(x), seed)
    for p in pts:
        for g in group[1:]:
            if M.residual(g.apply(p)) > tol * max(1.0, float(np.max(np.abs(p)))):
                return False
    return True


@dataclass
class SymmetryReport:
    ok: bool
    invariance_failures: list = field(default_factory=list)
    tangent_split: tuple[int, int, int] = (0, 0, 0)
    normal_split: tuple[int, int, int] = (0, 0, 0)

    def to_json(self) -> dict:
        return {"ok": self.ok, "invariance_failures": self.invariance_failures,
                "tangent_split": list(self.tangent_split), "normal_split": list(self.normal_split)}


def verify_tangent_normal_symmetry(M: ManifoldDescriptor, xbar=None) -> SymmetryReport:
    """Check g T = T and g N = N for block-preserving g, and the split along perp/perpperp."""
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    sp = tangent_normal_at(M, x)
    S = Stratum(sp.active_partition)
    failures = []
    for g in enumerate_S_succsim(sp.active_partition):
        idx = g.index_array()
        for label, B in (("T", sp.tangent_basis), ("N", sp.normal_basis)):
            if not same_subspace(B, B[idx, :]):
                failures.append([label, g.to_json()])
    U, V = S.perpperp_basis(), S.perp_basis()
    splits = []
    ok_split = True
    for B in (sp.tangent_basis, sp.normal_basis):
        a = subspace_intersection(B, U)
        b = subspace_intersection(B, V)
        orth = a.shape[1] == 0 or b.shape[1] == 0 or np.max(np.abs(a.T @ b)) < 1e-10
        ok_split &= (a.shape[1] + b.shape[1] == B.shape[1]) and orth
        splits.append((B.shape[1], a.shape[1], b.shape[1]))
    return SymmetryReport(bool(not failures and ok_split), failures, splits[0], splits[1])


# dimension of the spectral lift ----------------------------------------------


def _block_orthogonal(P: Partition, rng) -> np.ndarray:
    V = np.zeros((P.n, P.n))
    for b in P.blocks:
        i = np.array(b) - 1
        V[np.ix_(i, i)] = random_orthogonal(len(b), rng)
    return V


def _random_skew(n, rng):
    A = rng.standard_normal((n, n))
    return A - A.T


@dataclass(frozen=True)
class DimensionEstimate:
    dimension: int
    curve_rank: int
    algebraic_rank: int
    gap_ratio: float
    curve_violations: int
    status: str

    def __int__(self):
        return self.dimension

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def estimate_spectral_dimension(M: ManifoldDescriptor, xbar=None, seed=0, n_samples: int | None = None,
                                h: float = 1e-4) -> DimensionEstimate:
    """Numerical dimension of ``lambda^{-1}(M)`` at a lift of ``xbar``.

    Two direction sets are ranked: (a) central differences of curves
    ``t -> U_t^T diag(x_t) U_t`` with ``x_t`` on M, and (b) their closed form,
    commutators ``[diag(xbar), B]`` plus ``V^T diag(w) V`` for tangent vectors
    ``w`` and ``V`` in the stabilizer of ``diag(xbar)``.  Curve points whose
    spectrum leaves M are counted as violations.
    """
    rng = _rng(seed)
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    n = M.n
    if n_samples is None:
        n_samples = n * (n + 1) // 2 + 10
    sp = tangent_normal_at(M, x)
    T = sp.tangent_basis
    P = sp.active_partition
    Ubar = random_orthogonal(n, rng)
    D = np.diag(x)

    def lift(A):
        return Ubar.T @ A @ Ubar

    algebraic = [sym_to_vec(lift(D @ B - B @ D)) for B in _skew_units(n)]
    for _ in range(n_samples):
        V = _block_orthogonal(P, rng)
        if T.shape[1]:
            w = T @ rng.standard_normal(T.shape[1])
            algebraic.append(sym_to_vec(lift(V.T @ np.diag(w) @ V)))

    scale = max(1.0, float(np.max(np.abs(x))))
    curves = []
    violations = 0
    for _ in range(n_samples):
        V = _block_orthogonal(P, rng)
        B = _random_skew(n, rng)
        w = T @ rng.standard_normal(T.shape[1]) if T.shape[1] else np.zeros(n)
        w /= max(1.0, np.linalg.norm(w))
        ends = []
        for t in (h, -h):
            xt, ok = gauss_newton_project(M, x + t * w)
            R = V @ expm(t * B) @ Ubar
            Xt = R.T @ np.diag(xt) @ R
            Xt = 0.5 * (Xt + Xt.T)
            if not ok or M.residual(eigenvalues(Xt)) > 1e-8 * scale:
                violations += 1
            ends.append(Xt)
        curves.append(sym_to_vec((ends[0] - ends[1]) / (2 * h)))

    ra = numerical_rank(np.array(algebraic), RANK_REL_TOL, RANK_MIN_GAP)
    rc = numerical_rank(np.array(curves), RANK_REL_TOL, RANK_MIN_GAP)
    rall = numerical_rank(np.array(algebraic + curves), RANK_REL_TOL, RANK_MIN_GAP)
    gap = min(ra.gap_ratio, rc.gap_ratio, rall.gap_ratio)
    consistent = ra.rank == rc.rank == rall.rank
    ok = ra.conclusive and rc.conclusive and rall.conclusive and consistent and violations == 0
    return DimensionEstimate(rall.rank, rc.rank, ra.rank, gap, violations, "ok" if ok else "inconclusive")


def _skew_units(n):
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            B = np.zeros((n, n))
            B[i, j], B[j, i] = 1.0, -1.0
            out.append(B)
    return out


@dataclass(frozen=True)
class DimensionCheck:
    name: str
    base_point: tuple
    predicted: int
    estimated: int
    status: str
    characteristic: Partition

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def row(self) -> dict:
        return {"name": self.name, "base_point": " ".join(f"{v:.6g}" for v in self.base_point),
                "characteristic": json.dumps(self.characteristic.to_json()),
                "predicted": self.predicted, "estimated": self.estimated, "status": self.status}


def dimension_check(M: ManifoldDescriptor, xbar=None, seed=0, n_samples: int | None = None) -> DimensionCheck:
    """Compare the predicted lifted dimension with the numerical estimate."""
    x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
    rng = _rng(seed)
    chi = characteristic_permutation(M, x, seed=rng)
    pred = predicted_spectral_dimension(M.d, chi.partition)
    est = estimate_spectral_dimension(M, x, seed=rng, n_samples=n_samples)
    status = "PASS" if est.ok and est.dimension == pred else "FAIL"
    return DimensionCheck(M.name, tuple(float(v) for v in x), pred, est.dimension, status, chi.partition)


# lifted local equation -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalChart:
    """Data needed to evaluate the lifted local equation around ``xbar``."""

    manifold: ManifoldDescriptor
    xbar: np.ndarray
    spaces: ReducedSpaces
    characteristic: CharacteristicData
    delta: float

    @property
    def delta1(self) -> float:
        return self.delta / math.sqrt(2.0)

    delta2 = delta1

    @classmethod
    def build(cls, M: ManifoldDescriptor, xbar=None, seed=0, check_symmetry: bool = True) -> "LocalChart":
        x = M.base_point if xbar is None else np.asarray(xbar, dtype=float)
        if check_symmetry and not check_manifold_symmetry(M, x, seed=seed):
            raise NotLocallySymmetricManifoldError(f"{M.name} is not locally symmetric at {x}")
        spaces = tangent_normal_at(M, x)
        chi = characteristic_permutation(M, x, seed=seed)
        return cls(M, x, spaces, chi, M.locality_radius(x))

    def tangential_offset(self, y) -> np.ndarray:
        """phi(y) in N with y + phi(y) on M, for y in xbar + T."""
        M, sp = self.manifold, self.spaces
        y = np.asarray(y, dtype=float)
        if M.kind in ("stratum", "affine_perpperp", "constant_support"):
            return np.zeros(M.n)
        if M.kind == "sphere_in_perpperp":
            u = (self.xbar - M.center) / M.radius
            t = y - self.xbar
            rest = M.radius**2 - float(t @ t)
            if rest <= 0:
                raise ChartError("point is outside the chart of the sphere")
            return (math.sqrt(rest) - M.radius) * u
        N = sp.normal_basis
        c = np.zeros(N.shape[1])
        for _ in range(GN_ITERS):
            r = M.equations(y + N @ c)
            if np.max(np.abs(r)) < 1e-13:
                break
            c = c - np.linalg.solve(M.jacobian(y + N @ c) @ N, r)
        if np.max(np.abs(M.equations(y + N @ c))) > GN_RESIDUAL:
            raise ChartError("Newton iteration for the tangential offset did not converge")
        return N @ c

    def in_domain(self, z) -> bool:
        z = np.asarray(z, dtype=float)
        sp = self.spaces
        W = np.hstack([sp.tangent_basis, sp.reduced_normal_basis])
        v = z - self.xbar
        off = v - W @ (W.T @ v)
        if np.linalg.norm(off) > 1e-8 * max(1.0, np.linalg.norm(self.xbar)):
            return False
        split = self.characteristic.fm_split
        zf, zm = canonical_split(z, split)
        xf, xm = canonical_split(self.xbar, split)
        return bool(np.linalg.norm(zf - xf) < self.delta1 and np.linalg.norm(zm - xm) < self.delta2)

    def phi_bar_vector(self, z) -> np.ndarray:
        """``xbar + phi(pi_T z) - pi_red z`` as a vector (zero exactly on M)."""
        sp = self.spaces
        v = np.asarray(z, dtype=float) - self.xbar
        T, R = sp.tangent_basis, sp.reduced_normal_basis
        return self.tangential_offset(self.xbar + T @ (T.T @ v)) - R @ (R.T @ v)


def lifted_local_equation(chart: LocalChart, X) -> np.ndarray:
    """Coordinates in the reduced normal basis of the lifted local equation at X."""
    z = eigenvalues(X)
    if not chart.in_domain(z):
        raise DomainError(f"lambda(X) = {z} is outside the reduced domain")
    return chart.spaces.reduced_normal_basis.T @ chart.phi_bar_vector(z)


@dataclass(frozen=True)
class JacobianProbe:
    rank: int
    n_red: int
    formula_error: float
    rank_result: RankResult


def jacobian_probe(chart: LocalChart, seed=0, extra: int = 6, h: float = 1e-5) -> JacobianProbe:
    """Rank of the derivative of the lifted equation on tangent directions of the lifted domain.

    Directions are the curves ``U(t)^T diag(xbar + t v) U(t)`` with
    ``U(t) = Ubar expm(tA)``: one for each reduced normal basis vector, plus
    a few with ``v`` random in ``T + N_red``.  Each derivative is computed by
    central differences of the lifted equation and by the closed formula
    ``Dphi[pi_T diag(Ubar H Ubar^T)] - pi_red diag(Ubar H Ubar^T)``.
    """
    rng = _rng(seed)
    sp = chart.spaces
    x = chart.xbar
    n = x.size
    R = sp.reduced_normal_basis
    T = sp.tangent_basis
    Ubar = random_orthogonal(n, rng)
    W = np.hstack([T, R])
    dirs = [R[:, k] for k in range(R.shape[1])]
    dirs += [W @ rng.standard_normal(W.shape[1]) for _ in range(extra)]
    cols, err = [], 0.0
    for v in dirs:
        v = v / max(1.0, np.linalg.norm(v))
        A = _random_skew(n, rng)

        def X_of(t):
            U = Ubar @ expm(t * A)
            Y = U.T @ np.diag(x + t * v) @ U
            return 0.5 * (Y + Y.T)

        fd = (lifted_local_equation(chart, X_of(h)) - lifted_local_equation(chart, X_of(-h))) / (2 * h)
        H = Ubar.T @ np.diag(v) @ Ubar + lift_point(x, Ubar) @ A - A @ lift_point(x, Ubar)
        dg = np.diag(Ubar @ H @ Ubar.T)
        tang = T @ (T.T @ dg)
        dphi = (chart.tangential_offset(x + h * tang) - chart.tangential_offset(x - h * tang)) / (2 * h)
        formula = R.T @ (dphi - R @ (R.T @ dg))
        err = max(err, float(np.max(np.abs(formula - fd), initial=0.0)))
        cols.append(fd)
    if R.shape[1] == 0:
        rr = RankResult(0, float("inf"), (), True)
    else:
        rr = numerical_rank(np.array(cols), RANK_REL_TOL, RANK_MIN_GAP)
    return JacobianProbe(rr.rank, sp.n_red, err, rr)


def jacobian_rank_at(M: ManifoldDescriptor, xbar=None, seed=0) -> int:
    """Rank of the derivative of the lifted local equation at a lift of ``xbar``."""
    chart = LocalChart.build(M, xbar, seed=seed)
    return jacobian_probe(chart, seed=seed).rank
