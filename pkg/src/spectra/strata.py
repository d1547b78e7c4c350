"""The stratification of R^n by coincidence patterns of coordinates.

For a partition ``P`` the stratum ``Delta(P)`` is the set of vectors whose
coordinate partition is exactly ``P``.  Its closure ``perpperp`` consists of
the vectors constant on every block, and ``perp`` is the orthogonal
complement: vectors whose block sums vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import exact_rank, null_space
from .perm_core import (
    CapExceededError,
    Partition,
    Permutation,
    all_permutations,
    apply,
    conjugate,
    enumeration_cap,
    equiv,
    meet,
    partition_of_point,
    precsim,
    refines,
    S_succsim_index_arrays,
    set_partitions,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Stratum:
    partition: Partition

    @property
    def n(self) -> int:
        return self.partition.n

    @classmethod
    def of(cls, obj) -> "Stratum":
        if isinstance(obj, Stratum):
            return obj
        if isinstance(obj, Permutation):
            return cls(obj.partition())
        if isinstance(obj, Partition):
            return cls(obj)
        return cls(Partition(obj))

    @property
    def dim_perpperp(self) -> int:
        return len(self.partition)

    @property
    def dim_perp(self) -> int:
        return self.n - len(self.partition)

    def generic_point(self, values=None) -> np.ndarray:
        """Point with ``P(x)`` equal to this partition; block k gets value k."""
        vals = np.arange(1, len(self.partition) + 1, dtype=float) if values is None else np.asarray(values, float)
        return vals[self.partition.labels]

    def indicator_matrix(self) -> np.ndarray:
        """n x (#blocks) 0/1 matrix whose columns are block indicators."""
        E = np.zeros((self.n, len(self.partition)))
        E[np.arange(self.n), self.partition.labels] = 1.0
        return E

    def perpperp_basis(self) -> np.ndarray:
        E = self.indicator_matrix()
        return E / np.sqrt(E.sum(axis=0))

    def perp_basis(self) -> np.ndarray:
        return null_space(self.indicator_matrix().T)

    def projector(self) -> np.ndarray:
        """Matrix of the orthogonal projection onto ``perpperp``."""
        B = self.perpperp_basis()
        return B @ B.T


def _stratum(S) -> Stratum:
    return Stratum.of(S)


def _vec(S: Stratum, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != S.n:
        raise ValueError(f"vector of length {x.shape[-1]} for stratum in R^{S.n}")
    return x


def contains(S, x, tol: float = DEFAULT_TOL) -> bool:
    S = _stratum(S)
    return partition_of_point(_vec(S, x), tol) == S.partition


def in_perpperp(S, x, tol: float = DEFAULT_TOL) -> bool:
    S = _stratum(S)
    x = _vec(S, x)
    return all(np.ptp(x[np.array(b) - 1]) <= tol for b in S.partition.blocks)


def in_perp(S, x, tol: float = DEFAULT_TOL) -> bool:
    S = _stratum(S)
    x = _vec(S, x)
    return all(abs(x[np.array(b) - 1].sum()) <= tol for b in S.partition.blocks)


def project_perpperp(S, x) -> np.ndarray:
    """Replace every coordinate by the mean over its block."""
    S = _stratum(S)
    x = _vec(S, x)
    E = S.indicator_matrix()
    means = (x @ E) / E.sum(axis=0)
    return means[..., S.partition.labels]


def project_perp(S, x) -> np.ndarray:
    return _vec(_stratum(S), x) - project_perpperp(S, x)


def project_perpperp_by_group(S, x, cap: int | None = None) -> np.ndarray:
    """Average of ``g x`` over the block-preserving group."""
    S = _stratum(S)
    x = _vec(S, x)
    idx = S_succsim_index_arrays(S.partition, cap)
    return x[..., idx].mean(axis=-2)


def ball_preservation_radius(xbar, cap: int | None = None) -> float:
    """Radius r with g B(xbar, r) = B(xbar, r) for g fixing xbar and disjoint images otherwise.

    Brute force over all of the symmetric group.
    """
    x = np.asarray(xbar, dtype=float)
    n = x.size
    cap = enumeration_cap() if cap is None else cap
    if math.factorial(n) > cap:
        raise CapExceededError(f"{n}! exceeds enumeration cap {cap}")
    best = math.inf
    for sigma in all_permutations(n, cap):
        y = apply(sigma, x)
        if np.array_equal(y, x):
            continue
        best = min(best, float(np.linalg.norm(x - y)) / 3.0)
    return best


# ---------------------------------------------------------------------------
# exhaustive verification


@dataclass
class PropertyReport:
    n: int
    checks: dict[str, int] = field(default_factory=dict)
    counterexamples: dict[str, list] = field(default_factory=dict)

    def record(self, name: str, ok: bool, witness=None):
        self.checks[name] = self.checks.get(name, 0) + 1
        bucket = self.counterexamples.setdefault(name, [])
        if not ok and len(bucket) < 10:
            bucket.append(witness)

    @property
    def passed(self) -> bool:
        return all(not v for v in self.counterexamples.values())

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "passed": self.passed,
            "checks": {k: {"cases": self.checks[k], "counterexamples": self.counterexamples.get(k, [])}
                       for k in sorted(self.checks)},
        }


def _random_point_in_perpperp(P: Partition, rng) -> np.ndarray:
    # small integer block values so that coincidences between blocks occur
    vals = rng.integers(0, max(2, len(P) // 2 + 1), size=len(P)).astype(float)
    return vals[P.labels]


def _random_point_in_stratum(P: Partition, rng) -> np.ndarray:
    vals = rng.permutation(len(P)).astype(float) + rng.uniform(0, 0.5, size=len(P))
    return vals[P.labels]


def verify_stratification_properties(n: int, seed: int = 0, samples: int = 3) -> PropertyReport:
    """Exhaustively test the structural properties of the stratification of R^n."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    rep = PropertyReport(n)
    perms = all_permutations(n)
    parts = list(set_partitions(n))
    generic = {P: Stratum(P).generic_point() for P in parts}
    perm_generic = [generic[s.partition()] for s in perms]

    # Ph1: sigma <= sigma' iff Delta(sigma) inside closure of Delta(sigma')
    for i, s in enumerate(perms):
        x = perm_generic[i]
        for j, t in enumerate(perms):
            lhs = precsim(s, t)
            rhs = in_perpperp(t, x, 0.0)
            rep.record("Ph1", lhs == rhs, [s.to_json(), t.to_json()])
            # Ph2: equivalence iff strata meet iff strata equal
            e = equiv(s, t)
            meets = contains(t, x, 0.0)
            same = s.partition() == t.partition()
            rep.record("Ph2", e == meets == same, [s.to_json(), t.to_json()])

    # Ph3: closure is the union of the smaller strata
    for P in parts:
        S = Stratum(P)
        for Q in parts:
            x = generic[Q]
            rep.record("Ph3", in_perpperp(S, x, 0.0) == refines(Q, P), [P.to_json(), Q.to_json()])
        for _ in range(samples):
            x = _random_point_in_perpperp(P, rng)
            rep.record("Ph3", refines(partition_of_point(x), P), [P.to_json(), x.tolist()])

    # Ph4: intersection of closures is the closure of the meet
    for P in parts:
        EP = Stratum(P).indicator_matrix()
        for Q in parts:
            M = meet(P, Q)
            EQ = Stratum(Q).indicator_matrix()
            EM = Stratum(M).indicator_matrix()
            inside = all(in_perpperp(P, v, 0.0) and in_perpperp(Q, v, 0.0) for v in EM.T)
            # dim(A ∩ B) = dim A + dim B - dim(A + B), computed exactly
            dim_sum = exact_rank(np.hstack([EP, EQ]).astype(int).tolist())
            dim_cap = len(P) + len(Q) - dim_sum
            rep.record("Ph4", inside and dim_cap == len(M), [P.to_json(), Q.to_json()])

    # (v): tau Delta(sigma) = Delta(tau sigma tau^-1)
    for s in perms:
        pts = [_random_point_in_stratum(s.partition(), rng) for _ in range(samples)]
        for t in perms:
            c = conjugate(t, s)
            tinv = t.inverse()
            ok = all(contains(c, apply(t, x), 0.0) for x in pts)
            y = _random_point_in_stratum(c.partition(), rng)
            ok = ok and contains(s, apply(tinv, y), 0.0)
            rep.record("conjugation", ok, [t.to_json(), s.to_json()])

    # disjointness and covering: each point lies in exactly one stratum
    probes = [generic[P] for P in parts]
    probes += [rng.integers(0, n, size=n).astype(float) for _ in range(samples * len(parts))]
    probes += [rng.standard_normal(n) for _ in range(samples)]
    for x in probes:
        hits = sum(contains(Stratum(P), x, 0.0) for P in parts)
        rep.record("partition_of_Rn", hits == 1, x.tolist())
    return rep
