"""The full-rank matrix Y, its corollary, and the seeded property-suite runner."""

from __future__ import annotations

import itertools
import json
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import manifolds as mf
from .numerics import exact_rank, is_rational_input, numerical_rank
from .perm_core import (
    CapExceededError,
    FMSplit,
    Order,
    Partition,
    Permutation,
    all_permutations,
    apply,
    canonical_product,
    canonical_split,
    card_S_succsim,
    enumerate_S_succsim,
    enumeration_cap,
    equiv,
    meet,
    much_smaller,
    parse_cycles,
    precsim,
    same_block_size_type,
    partition_of_point,
    refines,
    set_partitions,
)
from .spectral import (
    BlockMatrix,
    check_block_spectrum_agreement,
    eigenvalues,
    lift_point,
    orbit_dimension,
    orbit_dimension_numeric,
    random_orthogonal,
    random_symmetric,
)
from .spectral_fn import (
    BUILTIN_FUNCTIONS,
    Polynomial,
    directional_derivative_F,
    eval_q_of_lambda_via_charpoly,
    gradcheck,
    grad_F,
    symmetrize,
)
from .strata import (
    Stratum,
    ball_preservation_radius,
    project_perpperp,
    project_perpperp_by_group,
    verify_stratification_properties,
)

SCHEMA_VERSION = 1
Y_REL_TOL = 1e-10
Y_MAX_N = 7


# ---------------------------------------------------------------------------
# the matrix Y


@dataclass(frozen=True, eq=False)
class YMatrix:
    n: int
    y: tuple
    rows: np.ndarray

    @property
    def exact_rows(self) -> list[list[Fraction]] | None:
        if not is_rational_input([self.y]):
            return None
        y = [Fraction(v) if not isinstance(v, float) else Fraction(int(v)) for v in self.y]
        out = [[Fraction(1)] * self.n + [Fraction(0)]]
        for images in itertools.permutations(range(self.n)):
            # row for sigma: (sigma y, 1) with (sigma y)_{sigma(i)} = y_i
            sy = [None] * self.n
            for i, j in enumerate(images):
                sy[j] = y[i]
            out.append(sy + [Fraction(1)])
        return out


def build_Y(y) -> YMatrix:
    """First row (1,...,1,0), then (sigma y, 1) for every permutation sigma."""
    yv = np.asarray(y, dtype=float)
    n = yv.size
    if n < 2:
        raise ValueError("Y needs n >= 2")
    if n > Y_MAX_N or math.factorial(n) > enumeration_cap():
        raise CapExceededError(f"{n}! rows exceed the cap")
    rows = np.empty((math.factorial(n) + 1, n + 1))
    rows[0, :n] = 1.0
    rows[0, n] = 0.0
    for k, images in enumerate(itertools.permutations(range(n)), start=1):
        rows[k, np.array(images)] = yv
        rows[k, n] = 1.0
    return YMatrix(n, tuple(y), rows)


def rank_Y(Y: YMatrix) -> int:
    """Numerical rank (threshold 1e-10 * s_max), cross-checked exactly for rational y."""
    s = np.linalg.svd(Y.rows, compute_uv=False)
    r = int(np.sum(s > Y_REL_TOL * s[0]))
    exact = Y.exact_rows
    if exact is not None:
        re = exact_rank(exact)
        if re != r:
            raise ArithmeticError(f"numerical rank {r} disagrees with exact rank {re}")
    return r


def _corollary_rows(P: Partition, y, group) -> list[list]:
    n = P.n
    rows = []
    for g in group:
        gy = apply(g, np.asarray(y, dtype=object))
        rows.append(list(gy) + [-1])
    for b in P.blocks:
        r = [0] * (n + 1)
        for i in b:
            r[i - 1] = 1
        rows.append(r)
    return rows


def check_corollary_A2(sigma, y=None, trials: int = 1, seed=0) -> bool:
    """Only x = 0, alpha = 0 solve <x, g y> = alpha for all block-preserving g with x in perp.

    ``y`` must have distinct entries inside every block; when omitted,
    ``trials`` random integer vectors with that property are drawn.
    """
    P = sigma.partition() if isinstance(sigma, Permutation) else sigma
    group = enumerate_S_succsim(P)
    if y is not None:
        ys = [y]
    else:
        rng = np.random.default_rng(seed)
        ys = []
        for _ in range(trials):
            v = np.zeros(P.n, dtype=int)
            for b in P.blocks:
                v[np.array(b) - 1] = rng.choice(np.arange(-20, 21), size=len(b), replace=False)
            ys.append(v.tolist())
    for yy in ys:
        for b in P.blocks:
            vals = [yy[i - 1] for i in b]
            if len(set(vals)) != len(vals):
                raise ValueError(f"y has repeated entries inside block {list(b)}")
        rows = _corollary_rows(P, yy, group)
        numeric = np.array(rows, dtype=float)
        r = numerical_rank(numeric, rel_tol=Y_REL_TOL, min_gap=1.0).rank
        if is_rational_input(rows):
            re = exact_rank(rows)
            if re != r:
                raise ArithmeticError(f"numerical rank {r} disagrees with exact rank {re}")
        if P.n + 1 - r != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# suite runner


@dataclass
class CheckContext:
    seed: int
    sizes: tuple[int, ...]
    fault: float
    trials: int

    def rng(self):
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class Check:
    check_id: str
    sizes: tuple[int, ...]
    run: Callable[[CheckContext], tuple[bool, float]]


def _c_group_action(ctx):
    rng = ctx.rng()
    bad = 0
    for n in ctx.sizes:
        perms = all_permutations(n)
        x = rng.standard_normal(n)
        for s in perms:
            for t in perms:
                lhs = apply(s * t, x)
                rhs = apply(s, apply(t, x)) + ctx.fault
                bad += not np.array_equal(lhs, rhs)
    return bad == 0, float(bad)


def _c_partial_order(ctx):
    bad = 0
    for n in ctx.sizes:
        parts = list(set_partitions(n))
        R = {(P, Q): refines(P, Q) for P in parts for Q in parts}
        for P in parts:
            bad += not R[P, P]
            for Q in parts:
                if R[P, Q] and R[Q, P] and P != Q:
                    bad += 1
                if R[P, Q]:
                    for S in parts:
                        if R[Q, S] and not R[P, S]:
                            bad += 1
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_equiv_groups(ctx):
    bad = 0
    for n in ctx.sizes:
        perms = all_permutations(n)
        groups = {s: frozenset(enumerate_S_succsim(s)) for s in perms}
        for s in perms:
            for t in perms:
                same = groups[s] == groups[t] and card_S_succsim(s) == card_S_succsim(t)
                bad += equiv(s, t) != same
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_not_much_transitive(ctx):
    bad = 0
    for n in ctx.sizes:
        parts = list(set_partitions(n))
        rel = {(A, B): much_smaller(A, B) for A in parts for B in parts}
        for A in parts:
            for B in parts:
                if rel[A, B] is not Order.SMALLER_NOT_MUCH:
                    continue
                for C in parts:
                    if rel[B, C] is Order.SMALLER_NOT_MUCH and rel[A, C] is not Order.SMALLER_NOT_MUCH:
                        bad += 1
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_meet_lattice(ctx):
    bad = 0
    for n in ctx.sizes:
        parts = list(set_partitions(n))
        for P in parts:
            for Q in parts:
                M = meet(P, Q)
                if not (refines(M, P) and refines(M, Q)):
                    bad += 1
                for C in parts:
                    # any common coarsening is at least as coarse as the meet
                    if refines(C, P) and refines(C, Q) and not refines(C, M):
                        bad += 1
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_split_roundtrip(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.trials * 10):
        n = int(rng.integers(1, 13))
        labels = rng.integers(0, n, size=n)
        P = Partition([np.flatnonzero(labels == k) + 1 for k in np.unique(labels)], n)
        sp = FMSplit.from_reference(P)
        x = rng.standard_normal(n)
        xf, xm = canonical_split(x, sp)
        y = canonical_product(xf, xm, sp) + ctx.fault
        bad += not np.array_equal(x, y)
        xf2, xm2 = canonical_split(canonical_product(xf, xm, sp), sp)
        bad += not (np.array_equal(xf, xf2) and np.array_equal(xm, xm2))
    return bad == 0, float(bad)


def _c_card_enum(ctx):
    bad = 0
    for n in ctx.sizes:
        for P in set_partitions(n):
            bad += card_S_succsim(P) + int(ctx.fault > 0) != len(enumerate_S_succsim(P))
    return bad == 0, float(bad)


def order_relation_examples() -> dict[str, bool]:
    """Fixed test vectors for the refinement and much-smaller relations."""
    p = parse_cycles
    out = {}
    listed = {p("(1,2,3)"), p("(1,3,2)"), p("(1,2)", 3), p("(1,3)", 3), p("(2,3)", 3), Permutation.identity(3)}
    out["elements above (1,2,3) in S3"] = set(enumerate_S_succsim(p("(1,2,3)"))) == listed
    out["card above (1,2,3) in S3"] = card_S_succsim(p("(1,2,3)")) == 6
    a, b, c = p("(123)(4)"), p("(132)(4)"), p("(124)(3)")
    out["(123)(4) ~ (132)(4)"] = equiv(a, b)
    out["same block-size type"] = same_block_size_type(a, b) and same_block_size_type(a, c)
    out["(123)(4) incomparable to (124)(3)"] = not precsim(a, c) and not precsim(c, a)
    minimal_ok = maximum_ok = True
    for n in (1, 2, 3, 4):
        perms = all_permutations(n)
        for s in perms:
            minimal = not any(precsim(t, s) and not equiv(t, s) for t in perms)
            minimal_ok &= minimal == (len(s.partition()) == 1)
            maximum_ok &= precsim(s, Permutation.identity(n))
    out["minimal elements are n-cycles"] = minimal_ok
    out["identity is the maximum"] = maximum_ok
    base = p("(1)(23)(45)(6)(7)")
    out["(123)(45)(6)(7) much smaller"] = much_smaller(p("(123)(45)(6)(7)"), base) is Order.MUCH_SMALLER
    out["(167)(23)(45) smaller, not much"] = much_smaller(p("(167)(23)(45)"), base) is Order.SMALLER_NOT_MUCH
    s, s1, s2 = p("(1)(2)(3)(45)"), p("(1)(23)(45)"), p("(123)(45)")
    out["not-much steps compose to a much-smaller pair"] = (
        much_smaller(s1, s) is Order.SMALLER_NOT_MUCH
        and much_smaller(s2, s) is Order.SMALLER_NOT_MUCH
        and much_smaller(s2, s1) is Order.MUCH_SMALLER)
    below_much = few_fixed = below_id = trichotomy = transitive = True
    for n in (1, 2, 3, 4, 5):
        parts = list(set_partitions(n))
        disc = Partition.discrete(n)
        rel = {(A, B): much_smaller(A, B) for A in parts for B in parts}
        for B in parts:
            if B != disc:
                below_id &= rel[B, disc] is Order.SMALLER_NOT_MUCH
            fixed = sum(len(blk) == 1 for blk in B.blocks)
            for A in parts:
                if fixed <= 1 and refines(A, B) and A != B:
                    few_fixed &= rel[A, B] is Order.MUCH_SMALLER
                if refines(A, B):
                    states = [A == B, rel[A, B] is Order.SMALLER_NOT_MUCH, rel[A, B] is Order.MUCH_SMALLER]
                    trichotomy &= sum(states) == 1
                for C in parts:
                    if refines(C, A) and rel[A, B] is Order.MUCH_SMALLER:
                        below_much &= rel[C, B] is Order.MUCH_SMALLER
                    if rel[A, B] is Order.SMALLER_NOT_MUCH and rel[B, C] is Order.SMALLER_NOT_MUCH:
                        transitive &= rel[A, C] is Order.SMALLER_NOT_MUCH
    out["below a much-smaller element stays much smaller"] = below_much
    out["at most one fixed point forces much smaller"] = few_fixed
    out["every non-identity is not-much-smaller than id"] = below_id
    out["equivalent, not much smaller, or much smaller"] = trichotomy
    out["not much smaller is transitive"] = transitive
    return out


def _c_order_examples(ctx):
    res = order_relation_examples()
    bad = sum(not v for v in res.values()) + int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_strata(ctx):
    bad = 0
    for n in ctx.sizes:
        rep = verify_stratification_properties(n, seed=ctx.seed)
        bad += sum(len(v) for v in rep.counterexamples.values())
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _random_partition(n, rng) -> Partition:
    labels = rng.integers(0, n, size=n)
    return Partition([np.flatnonzero(labels == k) + 1 for k in np.unique(labels)], n)


def _c_projection(ctx):
    rng = ctx.rng()
    err = 0.0
    for _ in range(ctx.trials * 10):
        n = int(rng.choice(ctx.sizes))
        P = _random_partition(n, rng)
        x = rng.standard_normal(n)
        err = max(err, float(np.max(np.abs(project_perpperp_by_group(P, x) - project_perpperp(P, x) - ctx.fault))))
    return err <= 1e-12, err


def _c_projector(ctx):
    rng = ctx.rng()
    err = 0.0
    bad = 0
    for n in ctx.sizes:
        for _ in range(ctx.trials):
            S = Stratum(_random_partition(n, rng))
            Pm = S.projector() + ctx.fault
            err = max(err, float(np.max(np.abs(Pm @ Pm - Pm))), float(np.max(np.abs(Pm - Pm.T))))
            r = numerical_rank(Pm, rel_tol=1e-9, min_gap=1.0).rank
            rc = numerical_rank(np.eye(n) - Pm, rel_tol=1e-9, min_gap=1.0).rank if len(S.partition) < n else 0
            bad += r != len(S.partition) or rc != n - len(S.partition)
            x = rng.standard_normal(n)
            g = enumerate_S_succsim(S.partition)[int(rng.integers(card_S_succsim(S.partition)))]
            err = max(err, float(np.max(np.abs(project_perpperp(S, g.apply(x)) - project_perpperp(S, x)))))
    return err <= 1e-12 and bad == 0, err


def _c_ball_radius(ctx):
    rng = ctx.rng()
    err = 0.0
    for n in ctx.sizes:
        for _ in range(ctx.trials):
            x = rng.integers(0, 3, size=n).astype(float) + rng.choice([0.0, 0.5], size=n)
            vals = np.unique(x)
            closed = math.inf if vals.size == 1 else math.sqrt(2) * float(np.min(np.diff(vals))) / 3
            got = ball_preservation_radius(x) + ctx.fault
            if math.isinf(closed) or math.isinf(got):
                err = max(err, 0.0 if closed == got else math.inf)
            else:
                err = max(err, abs(got - closed))
    return err <= 1e-12, err


def _c_eigen(ctx):
    rng = ctx.rng()
    err = 0.0
    for n in ctx.sizes:
        for _ in range(ctx.trials):
            X = random_symmetric(n, rng)
            ref = np.sort(np.linalg.eigvalsh(X))[::-1]
            err = max(err, float(np.max(np.abs(eigenvalues(X) + ctx.fault - ref))))
    return err <= 1e-10, err


def _c_orbit(ctx):
    bad = 0
    for n in ctx.sizes:
        for P in set_partitions(n):
            x = Stratum(P).generic_point()
            bad += orbit_dimension(x) + int(ctx.fault > 0) != orbit_dimension_numeric(x)
    return bad == 0, float(bad)


def _c_invariance(ctx):
    rng = ctx.rng()
    err = 0.0
    for n in ctx.sizes:
        for _ in range(ctx.trials):
            X = random_symmetric(n, rng)
            U = random_orthogonal(n, rng)
            lam = eigenvalues(X)
            err = max(err, float(np.max(np.abs(eigenvalues(U.T @ X @ U) - lam))) + ctx.fault,
                      abs(lam.sum() - np.trace(X)), abs((lam**2).sum() - np.sum(X * X)))
    return err <= 1e-10, err


def _c_block_agreement(ctx):
    rng = ctx.rng()
    bad = 0
    for _ in range(ctx.trials):
        sizes = rng.integers(1, 4, size=int(rng.integers(1, 4)))
        blocks = []
        lo = 10.0 * len(sizes)
        for s in sizes:
            lo -= 10.0
            blocks.append(lift_point(rng.uniform(lo + 1, lo + 2, s), random_orthogonal(int(s), rng)))
        B = BlockMatrix.from_blocks(blocks)
        bad += not check_block_spectrum_agreement(B)
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def spectral_test_matrix(name, n, rng, k):
    """Random test matrices; every other one has a repeated eigenvalue for symmetric f."""
    U = random_orthogonal(n, rng)
    if name == "lambda1":
        lam = np.sort(rng.uniform(-1, 1, n))[::-1]
        lam[0] = lam[1] + 0.5 if n > 1 else lam[0]
        return lift_point(lam, U)
    lam = rng.uniform(-1, 1, n)
    if k % 2 and n > 1:
        lam[1:1 + max(2, n // 2)] = lam[1]
    return lift_point(lam, U)


def _c_gradient(ctx):
    rng = ctx.rng()
    err = 0.0
    for name in sorted(BUILTIN_FUNCTIONS):
        f = BUILTIN_FUNCTIONS[name]
        for k in range(ctx.trials):
            n = int(ctx.sizes[k % len(ctx.sizes)])
            X = spectral_test_matrix(name, n, rng, k)
            err = max(err, gradcheck(f, X) + ctx.fault)
    return err < 1e-6, err


def _c_directional(ctx):
    rng = ctx.rng()
    err = 0.0
    for name in sorted(BUILTIN_FUNCTIONS):
        f = BUILTIN_FUNCTIONS[name]
        n = max(ctx.sizes)
        X = spectral_test_matrix(name, n, rng, 0)
        G = grad_F(f, X)
        for _ in range(ctx.trials):
            H = random_symmetric(n, rng)
            err = max(err, abs(float(np.sum(G * H)) - directional_derivative_F(f, X, H)) + ctx.fault)
    return err <= 1e-10, err


def _c_equivariance(ctx):
    rng = ctx.rng()
    err = 0.0
    for name in sorted(BUILTIN_FUNCTIONS):
        f = BUILTIN_FUNCTIONS[name]
        for k in range(max(1, ctx.trials // 5)):
            n = int(ctx.sizes[k % len(ctx.sizes)])
            X = spectral_test_matrix(name, n, rng, k)
            U = random_orthogonal(n, rng)
            lhs = grad_F(f, U.T @ X @ U)
            rhs = U.T @ grad_F(f, X) @ U
            err = max(err, float(np.max(np.abs(lhs - rhs))) + ctx.fault)
    return err <= 1e-9, err


def random_symmetric_polynomial(n: int, degree: int, rng) -> Polynomial:
    """Integer combination of monomial symmetric functions of degree <= ``degree``."""
    q = Polynomial(n)
    for d in range(degree + 1):
        for lam in _partitions_of(d, n):
            c = int(rng.integers(-3, 4))
            if c == 0:
                continue
            expo = tuple(lam) + (0,) * (n - len(lam))
            orbit = {tuple(p) for p in itertools.permutations(expo)}
            q = q + Polynomial(n, {e: c for e in orbit})
    return q


def _partitions_of(d, max_parts, max_part=None):
    max_part = d if max_part is None else max_part
    if d == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for k in range(min(d, max_part), 0, -1):
        for rest in _partitions_of(d - k, max_parts - 1, k):
            yield (k,) + rest


def _c_newton(ctx):
    rng = ctx.rng()
    err = 0.0
    for k in range(ctx.trials):
        n = int(ctx.sizes[k % len(ctx.sizes)])
        q = random_symmetric_polynomial(n, 4, rng)
        X = random_symmetric(n, rng)
        ref = q(eigenvalues(X))
        got = eval_q_of_lambda_via_charpoly(q, X)
        err = max(err, abs(got - ref) / max(1.0, abs(ref)) + ctx.fault)
    return err <= 1e-8, err


def _c_symmetrize(ctx):
    rng = ctx.rng()
    bad = 0
    for n in ctx.sizes:
        terms = {tuple(int(v) for v in rng.integers(0, 3, size=n)): int(rng.integers(1, 4)) for _ in range(3)}
        q = symmetrize(Polynomial(n, terms))
        for s in all_permutations(n):
            bad += q.permute(s) != q
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def builtin_manifolds(sizes=(2, 3, 4, 5)) -> list[mf.ManifoldDescriptor]:
    """Locally symmetric test manifolds used by the dimension checks."""
    out = []
    for n in sizes:
        out.append(mf.affine_perpperp(Partition.discrete(n)))
        out.append(mf.affine_perpperp(Partition.full(n)))
        out.append(mf.sphere_in_perpperp(Partition.discrete(n), 0.0, 2.0))
        for r in sorted({1, n - 1, n}):
            out.append(mf.constant_support(n, r))
        if n >= 3:
            out.append(mf.stratum(Partition([range(1, n), [n]])))
            out.append(mf.sphere_in_perpperp(Partition([[1, 2]] + [[i] for i in range(3, n + 1)]), 0.0, 2.0))
        if n >= 4:
            out.append(mf.stratum(Partition([[1], [2, 3], range(4, n + 1)])))
    return out


def _c_dimension(ctx):
    bad = 0
    rng = ctx.rng()
    for M in builtin_manifolds(tuple(n for n in ctx.sizes if n >= 2)):
        for x in [M.base_point] + mf.sample_base_points(M, 2, rng):
            c = mf.dimension_check(M, x, seed=rng)
            bad += not c.passed or int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_characteristic(ctx):
    bad = 0
    rng = ctx.rng()
    for n in ctx.sizes:
        for P in set_partitions(n):
            if P.has_consecutive_blocks():
                chi = mf.characteristic_permutation(mf.stratum(P), seed=rng)
                bad += chi.partition != P
        for P in (Partition.discrete(n), Partition.full(n)):
            bad += mf.characteristic_permutation(mf.affine_perpperp(P), seed=rng).partition != P
    try:
        mf.check_consecutive_blocks(Partition([[1], [2, 7, 4], [3, 5], [6]]))
        bad += 1
    except mf.NonConsecutiveBlocksError:
        pass
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


def _c_jacobian(ctx):
    bad = 0
    err = 0.0
    for M in builtin_manifolds(tuple(n for n in ctx.sizes if n >= 2)):
        chart = mf.LocalChart.build(M, seed=ctx.seed)
        probe = mf.jacobian_probe(chart, seed=ctx.seed)
        bad += probe.rank != probe.n_red
        err = max(err, probe.formula_error + ctx.fault)
    return bad == 0 and err <= 1e-6, err


def negative_control_manifold() -> mf.ManifoldDescriptor:
    """The horizontal line {(t, 0)} in R^2 through the origin."""
    return mf.custom(2, 1, lambda x: np.array([x[1]]), lambda x: np.array([[0.0, 1.0]]), [0.0, 0.0],
                     name="line{(t,0)}")


def _c_negative(ctx):
    M = negative_control_manifold()
    rep = mf.verify_tangent_normal_symmetry(M)
    at0 = mf.estimate_spectral_dimension(M, [0.0, 0.0], seed=ctx.seed)
    away = mf.estimate_spectral_dimension(M, [0.5, 0.0], seed=ctx.seed)
    flagged = (not at0.ok) or at0.dimension != away.dimension
    ok = (not rep.ok) and flagged and not mf.check_manifold_symmetry(M)
    return ok != (ctx.fault > 0), 0.0


def _c_y_rank(ctx):
    rng = ctx.rng()
    bad = 0
    for n in ctx.sizes:
        for _ in range(ctx.trials):
            y = rng.integers(-50, 51, size=n)
            if np.all(y == y[0]):
                y[0] += 1
            bad += rank_Y(build_Y(y.tolist())) + int(ctx.fault > 0) != n + 1
        bad += rank_Y(build_Y([3] * n)) != 2
    return bad == 0, float(bad)


def _c_corollary(ctx):
    bad = 0
    for n in ctx.sizes:
        for P in set_partitions(n):
            bad += not check_corollary_A2(P, trials=max(1, ctx.trials // 5), seed=ctx.seed)
    bad += int(ctx.fault > 0)
    return bad == 0, float(bad)


CHECKS: list[Check] = [
    Check("perm.group_action", (1, 2, 3, 4), _c_group_action),
    Check("perm.partial_order", (1, 2, 3, 4, 5), _c_partial_order),
    Check("perm.equiv_iff_same_group", (1, 2, 3, 4), _c_equiv_groups),
    Check("perm.not_much_smaller_transitive", (2, 3, 4, 5), _c_not_much_transitive),
    Check("perm.meet_lattice", (1, 2, 3, 4, 5), _c_meet_lattice),
    Check("perm.split_roundtrip", tuple(range(1, 13)), _c_split_roundtrip),
    Check("perm.card_matches_enum", (1, 2, 3, 4, 5, 6), _c_card_enum),
    Check("perm.order_examples", (3, 4, 5, 7), _c_order_examples),
    Check("strata.properties", (1, 2, 3, 4, 5), _c_strata),
    Check("strata.projection_equivalence", (1, 2, 3, 4, 5, 6), _c_projection),
    Check("strata.projector", tuple(range(1, 11)), _c_projector),
    Check("strata.ball_radius", (2, 3, 4, 5, 6), _c_ball_radius),
    Check("spectral.eigenvalues", (1, 2, 3, 5, 8, 10), _c_eigen),
    Check("spectral.orbit_dimension", (1, 2, 3, 4, 5, 6), _c_orbit),
    Check("spectral.invariance", (2, 3, 5, 8, 10), _c_invariance),
    Check("spectral.block_agreement", (1, 2, 3, 4, 5, 6, 7, 8, 9), _c_block_agreement),
    Check("specfn.gradient_fd", (2, 3, 4, 5, 6), _c_gradient),
    Check("specfn.directional", (2, 3, 4, 5, 6), _c_directional),
    Check("specfn.equivariance", (2, 3, 4, 5, 6), _c_equivariance),
    Check("specfn.newton_identities", (2, 3, 4), _c_newton),
    Check("specfn.symmetrize", (2, 3, 4), _c_symmetrize),
    Check("manifold.dimension_theorem", (2, 3, 4, 5), _c_dimension),
    Check("manifold.characteristic", (2, 3, 4, 5), _c_characteristic),
    Check("manifold.jacobian_rank", (2, 3, 4), _c_jacobian),
    Check("manifold.negative_control", (2,), _c_negative),
    Check("ymatrix.rank", (2, 3, 4, 5, 6), _c_y_rank),
    Check("ymatrix.corollary", (1, 2, 3, 4, 5), _c_corollary),
]


def _check_seed(seed: int, check_id: str) -> int:
    return int(np.random.SeedSequence([seed, zlib.crc32(check_id.encode())]).generate_state(1)[0])


def _round(v: float) -> float | str:
    if math.isinf(v) or math.isnan(v):
        return str(v)
    return float(f"{v:.6e}")


def _selected(config: dict) -> list[tuple[Check, tuple[int, ...]]]:
    wanted = config.get("checks")
    sizes = config.get("n")
    if isinstance(sizes, int):
        sizes = [sizes]
    out = []
    for c in CHECKS:
        if wanted and not any(c.check_id == w or c.check_id.startswith(w.rstrip("*").rstrip(".") + ".") or
                              c.check_id.startswith(w.rstrip("*")) for w in wanted):
            continue
        sz = c.sizes if sizes is None else tuple(n for n in c.sizes if n in set(sizes))
        if sz:
            out.append((c, sz))
    return out


def run_suite(config: dict | None = None) -> dict:
    """Run the selected property checks and return a JSON-ready report.

    Config keys: ``seed`` (default 0), ``n`` (list of sizes to keep),
    ``checks`` (ids or prefixes), ``trials`` (default 20), ``inject_fault``
    (check ids to perturb by 1e-3), ``jobs`` (worker threads), ``timings``
    (record wall-clock runtimes; off by default so reports are repeatable).
    """
    config = dict(config or {})
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 20))
    faults = config.get("inject_fault") or []
    if isinstance(faults, str):
        faults = [faults]
    timings = bool(config.get("timings", False))
    plan = _selected(config)

    def run_one(item):
        check, sizes = item
        ctx = CheckContext(_check_seed(seed, check.check_id), sizes,
                           1e-3 if check.check_id in faults else 0.0, trials)
        t0 = time.perf_counter()
        try:
            ok, err = check.run(ctx)
            status = "pass" if ok else "fail"
            detail = None
        except Exception as exc:  # a crashing check is reported, not raised
            status, err, detail = "error", math.nan, f"{type(exc).__name__}: {exc}"
        entry = {"check_id": check.check_id, "status": status, "max_error": _round(err),
                 "sizes": list(sizes),
                 "runtime": round(time.perf_counter() - t0, 3) if timings else None}
        if detail:
            entry["detail"] = detail
        return entry

    jobs = int(config.get("jobs", 1))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run_one, plan))
    else:
        results = [run_one(item) for item in plan]
    summary = {s: sum(r["status"] == s for r in results) for s in ("pass", "fail", "error")}
    report = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "config": {k: config[k] for k in sorted(config) if k != "timings"},
        "checks": results,
        "summary": summary,
        "all_passed": summary["fail"] == 0 and summary["error"] == 0,
    }
    if timings:
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"
