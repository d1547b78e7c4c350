"""Spectral functions ``F = f o lambda`` and polynomial symmetrization."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .perm_core import (
    CapExceededError,
    Permutation,
    S_succsim_index_arrays,
    all_permutations,
    enumeration_cap,
    partition_of_point,
)
from .spectral import SpectralPoint, as_symmetric, eigh_desc, sym_basis

FD_STEP = 1e-5
PROBE_SAMPLES = 32
SYMMETRY_ATOL = 1e-10
PARTITION_TOL = 1e-9
COEFF_PRUNE = 1e-12


class NotLocallySymmetricError(ValueError):
    pass


class NotSymmetricPolynomialError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetricFunction:
    """A function on R^n together with its declared symmetry.

    ``scope`` is ``"global"`` (invariant under every permutation) or
    ``"local"`` (invariant under the block-preserving permutations of the
    points where it is used).  ``grad`` may be omitted, in which case central
    differences are used.
    """

    name: str
    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    scope: str = "global"
    n: int | None = None

    def __call__(self, x):
        return float(self.eval(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_vector_gradient(self.eval, x)


def fd_vector_gradient(f, x, h: float = FD_STEP) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _prod_grad(x):
    n = x.size
    return np.array([np.prod(np.delete(x, i)) for i in range(n)])


def _first_unit(x):
    g = np.zeros_like(x)
    g[0] = 1.0
    return g


BUILTIN_FUNCTIONS: dict[str, SymmetricFunction] = {
    "sum": SymmetricFunction("sum", lambda x: x.sum(), lambda x: np.ones_like(x)),
    "sumsq": SymmetricFunction("sumsq", lambda x: (x * x).sum(), lambda x: 2 * x),
    "prod": SymmetricFunction("prod", lambda x: np.prod(x), _prod_grad),
    "lambda1": SymmetricFunction("lambda1", lambda x: x[0], _first_unit, scope="local"),
    "expsum": SymmetricFunction("expsum", lambda x: np.exp(x).sum(), lambda x: np.exp(x)),
}


def builtin(name: str) -> SymmetricFunction:
    try:
        return BUILTIN_FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; choose from {sorted(BUILTIN_FUNCTIONS)}") from None


def eval_F(f, X) -> float:
    lam, _ = eigh_desc(X)
    return float(f(lam))


def check_local_symmetry(f, xbar, radius: float = 1e-3, samples: int = PROBE_SAMPLES,
                         rng=None, tol: float = PARTITION_TOL, cap: int | None = None) -> bool:
    """Probe ``f(g x) == f(x)`` for ``g`` preserving the blocks of ``P(xbar)``.

    Points are drawn uniformly from the ball of the given radius.  Passing is
    evidence, not proof, of local symmetry.
    """
    xbar = np.asarray(xbar, dtype=float)
    n = xbar.size
    rng = np.random.default_rng(0) if rng is None else rng
    idx = S_succsim_index_arrays(partition_of_point(xbar, tol), cap)
    if idx.shape[0] == 1:
        return True
    for _ in range(samples):
        d = rng.standard_normal(n)
        d *= radius * rng.uniform() ** (1.0 / n) / np.linalg.norm(d)
        x = xbar + d
        fx = float(f(x))
        bound = SYMMETRY_ATOL * max(1.0, abs(fx))
        for row in idx[1:]:
            if abs(float(f(x[row])) - fx) > bound:
                return False
    return True


def grad_F(f, X, check: bool = True, radius: float = 1e-3) -> np.ndarray:
    """Gradient of ``f o lambda`` at ``X``: ``U^T diag(grad f(lambda)) U``.

    With ``check`` the local symmetry of ``f`` at ``lambda(X)`` is probed first
    and the formula is refused if the probe fails.
    """
    sp = SpectralPoint.from_matrix(X)
    if check and not check_local_symmetry(f, sp.eigenvalues, radius=radius):
        raise NotLocallySymmetricError(
            f"{getattr(f, 'name', f)!r} is not locally symmetric at lambda(X) = {sp.eigenvalues}")
    g = f.gradient(sp.eigenvalues) if isinstance(f, SymmetricFunction) else fd_vector_gradient(f, sp.eigenvalues)
    G = (sp.eigenbasis.T * g) @ sp.eigenbasis
    return 0.5 * (G + G.T)


def directional_derivative_F(f, X, H) -> float:
    """``grad f(lambda) . diag(U H U^T)`` for the eigenbasis ``U`` of ``X``."""
    sp = SpectralPoint.from_matrix(X)
    H = as_symmetric(H)
    g = f.gradient(sp.eigenvalues) if isinstance(f, SymmetricFunction) else fd_vector_gradient(f, sp.eigenvalues)
    U = sp.eigenbasis
    return float(g @ np.diag(U @ H @ U.T))


def fd_matrix_gradient(F, X, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a function on symmetric matrices."""
    X = as_symmetric(X)
    G = np.zeros_like(X)
    for E in sym_basis(X.shape[0]):
        G += (F(X + h * E) - F(X - h * E)) / (2 * h) * E
    return G


def gradcheck(f, X, h: float = FD_STEP) -> float:
    """Relative error between :func:`grad_F` and central differences of :func:`eval_F`."""
    G = grad_F(f, X)
    Gfd = fd_matrix_gradient(lambda Y: eval_F(f, Y), X, h)
    return float(np.linalg.norm(G - Gfd) / max(1.0, np.linalg.norm(G)))


# ---------------------------------------------------------------------------
# polynomials


def _coerce(c):
    if isinstance(c, (Fraction, int, np.integer)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    return float(c)


def _is_zero(c) -> bool:
    if isinstance(c, Fraction):
        return c == 0
    return abs(c) <= COEFF_PRUNE


class Polynomial:
    """Multivariate polynomial in ``n`` variables keyed by exponent tuples.

    Coefficients are Fractions when the input is rational, floats otherwise.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[tuple, object] | None = None):
        self.n = n
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(a) for a in e)
            if len(e) != n or min(e, default=0) < 0:
                raise ValueError(f"bad exponent {e} for {n} variables")
            c = _coerce(c)
            if not _is_zero(c):
                clean[e] = clean.get(e, 0) + c
        self.terms = {e: c for e, c in clean.items() if not _is_zero(c)}

    @classmethod
    def constant(cls, c, n: int) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, i: int, n: int) -> "Polynomial":
        """The coordinate ``x_i`` (1-based)."""
        e = [0] * n
        e[i - 1] = 1
        return cls(n, {tuple(e): 1})

    @classmethod
    def elementary(cls, k: int, n: int) -> "Polynomial":
        terms = {}
        for S in itertools.combinations(range(n), k):
            e = [0] * n
            for i in S:
                e[i] = 1
            terms[tuple(e)] = 1
        return cls(n, terms)

    def _lift(self, other):
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError("polynomials in different numbers of variables")
            return other
        return Polynomial.constant(other, self.n)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1, self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other, self.n) if isinstance(other, (int, float, Fraction)) else other
            if not isinstance(other, Polynomial):
                return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            mono = "*".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(e) if a)
            parts.append(f"{self.terms[e]}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.terms.values())

    def __call__(self, x):
        if not self.terms:
            return 0.0
        if any(isinstance(v, Fraction) for v in np.ravel(np.asarray(x, dtype=object))) and self.is_exact:
            total = Fraction(0)
            for e, c in self.terms.items():
                t = c
                for v, a in zip(x, e):
                    t *= Fraction(v) ** a
                total += t
            return total
        x = np.asarray(x, dtype=float)
        exps = np.array(list(self.terms), dtype=float)
        coeffs = np.array([float(c) for c in self.terms.values()])
        return float(coeffs @ np.prod(x ** exps, axis=1))

    def permute(self, sigma: Permutation) -> "Polynomial":
        """The polynomial ``x -> p(sigma x)``."""
        if sigma.n != self.n:
            raise ValueError("permutation size mismatch")
        # (sigma x)_i = x_{sigma^{-1}(i)}, so x_j carries the exponent of slot sigma(j)
        imgs = sigma.images
        return Polynomial(self.n, {tuple(e[imgs[j] - 1] for j in range(self.n)): c
                                   for e, c in self.terms.items()})

    def is_symmetric(self) -> bool:
        """Invariance under adjacent transpositions, which generate the group."""
        for k in range(1, self.n):
            imgs = list(range(1, self.n + 1))
            imgs[k - 1], imgs[k] = imgs[k], imgs[k - 1]
            if self.permute(Permutation(imgs)) != self:
                return False
        return True

    def derivative(self, i: int) -> "Polynomial":
        """Partial derivative in ``x_i`` (1-based)."""
        out = {}
        for e, c in self.terms.items():
            a = e[i - 1]
            if a:
                f = list(e)
                f[i - 1] -= 1
                out[tuple(f)] = c * a
        return Polynomial(self.n, out)

    def gradient(self, x) -> np.ndarray:
        return np.array([float(self.derivative(i)(x)) for i in range(1, self.n + 1)])

    def to_json(self) -> list[dict]:
        out = []
        for e in sorted(self.terms):
            c = self.terms[e]
            if isinstance(c, Fraction):
                c = int(c) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            out.append({"exponents": list(e), "coeff": c})
        return out

    @classmethod
    def from_json(cls, data, n: int | None = None) -> "Polynomial":
        if n is None:
            if not data:
                raise ValueError("cannot infer n from an empty polynomial")
            n = len(data[0]["exponents"])
        return cls(n, {tuple(t["exponents"]): t["coeff"] for t in data})


def symmetrize(p: Polynomial, cap: int | None = None) -> Polynomial:
    """``q(x) = sum over all permutations of p(sigma x)^2``."""
    cap = enumeration_cap() if cap is None else cap
    if math.factorial(p.n) > cap:
        raise CapExceededError(f"{p.n}! terms exceed cap {cap}")
    q = Polynomial(p.n)
    for sigma in all_permutations(p.n, cap):
        r = p.permute(sigma)
        q = q + r * r
    return q


def to_elementary(q: Polynomial) -> Polynomial:
    """Rewrite a symmetric ``q`` as a polynomial in ``e_1..e_n``.

    Repeatedly cancels the lexicographically leading monomial
    ``x^a`` with ``e_1^(a1-a2) ... e_n^an``.
    """
    if not q.is_symmetric():
        raise NotSymmetricPolynomialError("polynomial is not symmetric")
    n = q.n
    e = [Polynomial.elementary(k, n) for k in range(1, n + 1)]
    cache: dict[tuple, Polynomial] = {}

    def product(d):
        if d not in cache:
            r = Polynomial.constant(1, n)
            for k, dk in enumerate(d):
                if dk:
                    r = r * e[k] ** dk
            cache[d] = r
        return cache[d]

    rem = q
    out: dict[tuple, object] = {}
    while rem.terms:
        lead = max(rem.terms)
        c = rem.terms[lead]
        d = tuple(lead[k] - (lead[k + 1] if k + 1 < n else 0) for k in range(n))
        if min(d) < 0:
            raise NotSymmetricPolynomialError("leading exponent not descending")
        out[d] = out.get(d, 0) + c
        rem = rem - product(d) * c
    return Polynomial(n, out)


@functools.lru_cache(maxsize=256)
def _elementary_form(q: Polynomial) -> Polynomial:
    return to_elementary(q)


def elementary_from_power_sums(p) -> np.ndarray:
    """Newton's identities: ``e_0..e_n`` from power sums ``p_1..p_n``."""
    n = len(p)
    e = np.zeros(n + 1)
    e[0] = 1.0
    for k in range(1, n + 1):
        s = 0.0
        for i in range(1, k + 1):
            s += (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e[k] = s / k
    return e


def eval_q_of_lambda_via_charpoly(q: Polynomial, X) -> float:
    """``q(lambda(X))`` from traces of powers of ``X``, without eigenvalues."""
    X = as_symmetric(X)
    n = X.shape[0]
    if q.n != n:
        raise ValueError("polynomial and matrix sizes differ")
    form = _elementary_form(q)
    p, P = [], np.eye(n)
    for _ in range(n):
        P = P @ X
        p.append(float(np.trace(P)))
    e = elementary_from_power_sums(p)
    return float(form(e[1:]))
