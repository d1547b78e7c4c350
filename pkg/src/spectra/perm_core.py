"""Permutations and set partitions of {1..n}.

Permutations are stored as one-line image tuples with 1-based values:
``images[i - 1] == sigma(i)``.  They act on vectors by
``(sigma x)_i = x_{sigma^{-1}(i)}``, i.e. the entry in slot ``i`` is moved to
slot ``sigma(i)``.

Partitions are kept in canonical form (indices sorted inside each block,
blocks sorted by their minimum), so equality of partitions is equality of
tuples.  ``refines(P, Q)`` means every block of ``P`` is a union of blocks of
``Q`` ("Q is finer than P").  A permutation with a finer partition is
*larger*: the identity is the maximum and every n-cycle is minimal.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_CAP = 10**6
CAP_ENV = "SPECTRA_CAP"


class CapExceededError(RuntimeError):
    """Raised when an enumeration would produce more elements than allowed."""


class DimensionMismatchError(ValueError):
    pass


class CycleParseError(ValueError):
    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


def enumeration_cap() -> int:
    """Largest group size that may be listed element by element."""
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{CAP_ENV} must be an integer, got {raw!r}") from None


def _check_same_n(a, b):
    if a.n != b.n:
        raise DimensionMismatchError(f"size mismatch: {a.n} vs {b.n}")


# ---------------------------------------------------------------------------
# Partitions


class Partition:
    """Canonical set partition of {1..n}."""

    __slots__ = ("n", "blocks", "_block_of")

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        blks = [tuple(sorted(int(i) for i in b)) for b in blocks]
        blks = [b for b in blks if b]
        blks.sort(key=lambda b: b[0])
        seen = sorted(i for b in blks for i in b)
        if n is None:
            n = len(seen)
        if seen != list(range(1, n + 1)):
            raise ValueError(f"blocks {blks} do not partition 1..{n}")
        self.n = n
        self.blocks: tuple[tuple[int, ...], ...] = tuple(blks)
        block_of = [0] * n
        for k, b in enumerate(self.blocks):
            for i in b:
                block_of[i - 1] = k
        self._block_of = tuple(block_of)

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        return cls([[i] for i in range(1, n + 1)], n)

    @classmethod
    def full(cls, n: int) -> "Partition":
        return cls([range(1, n + 1)], n)

    def block_of(self, i: int) -> int:
        """Index (0-based) of the block holding element ``i`` (1-based)."""
        return self._block_of[i - 1]

    @property
    def labels(self) -> np.ndarray:
        """0-based block label of each coordinate."""
        return np.array(self._block_of, dtype=int)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def kappa(self) -> int:
        """Number of singleton blocks."""
        return sum(1 for b in self.blocks if len(b) == 1)

    @property
    def m(self) -> int:
        """Number of blocks of size at least two."""
        return sum(1 for b in self.blocks if len(b) > 1)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n == other.n and self.blocks == other.blocks

    def __hash__(self):
        return hash((self.n, self.blocks))

    def __repr__(self):
        inner = ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"Partition({{{inner}}})"

    def to_json(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    @classmethod
    def from_json(cls, data, n: int | None = None) -> "Partition":
        return cls(data, n)

    def has_consecutive_blocks(self) -> bool:
        return all(b[-1] - b[0] + 1 == len(b) for b in self.blocks)

    def representative(self) -> "Permutation":
        """A permutation whose cycles are exactly the blocks (in sorted order)."""
        return Permutation.from_cycles(self.blocks, self.n)


class OrderedPartition(Partition):
    """Partition with an explicit block order.

    The ordering semantics ``min(I_i) < min(I_j)`` for ``i < j`` coincide with
    the canonical order, so this only records that the order is meaningful.
    """

    __slots__ = ()


def partition_of_point(x: Sequence[float], tol: float = 0.0) -> Partition:
    """Group coordinates whose values are chained together within ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty vector")
    order = np.argsort(x, kind="stable")
    blocks = [[int(order[0]) + 1]]
    for a, b in zip(order[:-1], order[1:]):
        if x[b] - x[a] <= tol:
            blocks[-1].append(int(b) + 1)
        else:
            blocks.append([int(b) + 1])
    return Partition(blocks, n)


def refines(P: Partition, Q: Partition) -> bool:
    """True iff every block of ``P`` is a union of blocks of ``Q``."""
    _check_same_n(P, Q)
    # each block of Q must sit inside a single block of P
    for b in Q.blocks:
        k = P.block_of(b[0])
        if any(P.block_of(i) != k for i in b[1:]):
            return False
    return True


def join_partitions(P: Partition, Q: Partition) -> Partition:
    """Finest partition that both ``P`` and ``Q`` refine (union-find merge)."""
    _check_same_n(P, Q)
    parent = list(range(P.n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for part in (P, Q):
        for b in part.blocks:
            r = find(b[0])
            for i in b[1:]:
                s = find(i)
                if s != r:
                    parent[s] = r
    groups: dict[int, list[int]] = {}
    for i in range(1, P.n + 1):
        groups.setdefault(find(i), []).append(i)
    return Partition(groups.values(), P.n)


def set_partitions(n: int) -> Iterator[Partition]:
    """All set partitions of {1..n} via restricted growth strings."""
    if n <= 0:
        return
    a = [0] * n

    def rec(i, mx):
        if i == n:
            blocks: list[list[int]] = [[] for _ in range(mx + 1)]
            for j, lab in enumerate(a):
                blocks[lab].append(j + 1)
            yield Partition(blocks, n)
            return
        for lab in range(mx + 2):
            a[i] = lab
            yield from rec(i + 1, max(mx, lab))

    yield from rec(1, 0)


# ---------------------------------------------------------------------------
# Permutations


class Permutation:
    """Bijection of {1..n} kept as a tuple of images."""

    __slots__ = ("images", "_cycles", "_partition")

    def __init__(self, images: Iterable[int]):
        imgs = tuple(int(i) for i in images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"not a permutation of 1..{len(imgs)}: {imgs}")
        self.images = imgs
        self._cycles = None
        self._partition = None

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int | None = None) -> "Permutation":
        cycles = [tuple(int(i) for i in c) for c in cycles]
        elems = [i for c in cycles for i in c]
        if len(set(elems)) != len(elems):
            raise ValueError(f"cycles are not disjoint: {cycles}")
        if n is None:
            n = max(elems, default=0)
        if elems and (min(elems) < 1 or max(elems) > n):
            raise ValueError(f"cycle entries must lie in 1..{n}")
        imgs = list(range(1, n + 1))
        for c in cycles:
            for a, b in zip(c, c[1:] + c[:1]):
                imgs[a - 1] = b
        return cls(imgs)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Permutation":
        return parse_cycles(text, n)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition ``self o other`` (apply ``other`` first)."""
        _check_same_n(self, other)
        return Permutation(self.images[j - 1] for j in other.images)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(inv)

    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """All cycles, fixed points included, each starting at its minimum."""
        if self._cycles is None:
            seen = [False] * (self.n + 1)
            out = []
            for start in range(1, self.n + 1):
                if seen[start]:
                    continue
                cyc = [start]
                seen[start] = True
                j = self.images[start - 1]
                while j != start:
                    cyc.append(j)
                    seen[j] = True
                    j = self.images[j - 1]
                out.append(tuple(cyc))
            self._cycles = tuple(out)
        return self._cycles

    def support(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if self.images[i - 1] != i)

    def partition(self) -> Partition:
        if self._partition is None:
            self._partition = Partition(self.cycles(), self.n)
        return self._partition

    def is_identity(self) -> bool:
        return all(j == i for i, j in enumerate(self.images, start=1))

    def apply(self, x):
        return apply(self, x)

    def index_array(self) -> np.ndarray:
        """0-based array ``idx`` with ``(sigma x) == x[idx]``."""
        return np.array(self.inverse().images, dtype=int) - 1

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Permutation({format_cycles(self)})"

    def to_json(self) -> list[int]:
        return list(self.images)

    @classmethod
    def from_json(cls, data) -> "Permutation":
        return cls(data)


def format_cycles(sigma: Permutation, fixed_points: bool = True) -> str:
    """Cycle notation with space separated entries, e.g. ``(1 2 3)(4)``."""
    parts = []
    for c in sigma.cycles():
        if len(c) == 1 and not fixed_points:
            continue
        parts.append("(" + " ".join(map(str, c)) + ")")
    return "".join(parts) if parts else "()"


_GROUP = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, n: int | None = None) -> Permutation:
    """Parse cycle notation.

    Entries may be separated by spaces or commas: ``(1 2 3)(4)`` or
    ``(1,2,3)``.  A group without separators such as ``(123)`` is read digit
    by digit, which is only unambiguous for n <= 9.  ``id`` and ``()`` denote
    the identity.  Fixed points may be omitted when ``n`` is given.
    """
    s = text.strip()
    if s in ("id", "()", ""):
        if n is None:
            raise CycleParseError("identity needs an explicit n", text, 0)
        return Permutation.identity(n)
    cycles = []
    pos = 0
    while pos < len(s):
        if s[pos].isspace():
            pos += 1
            continue
        m = _GROUP.match(s, pos)
        if m is None:
            raise CycleParseError("unclosed '('" if s[pos] == "(" else "expected '('", text, pos)
        body = m.group(1).strip()
        if not body:
            pos = m.end()
            continue
        if re.search(r"[\s,]", body):
            tokens = [t for t in re.split(r"[\s,]+", body) if t]
        else:
            tokens = list(body)
        try:
            cyc = [int(t) for t in tokens]
        except ValueError:
            raise CycleParseError("non-integer entry", text, m.start(1)) from None
        cycles.append(cyc)
        pos = m.end()
    elems = [i for c in cycles for i in c]
    if len(set(elems)) != len(elems):
        raise CycleParseError("repeated entry", text, 0)
    try:
        return Permutation.from_cycles(cycles, n)
    except ValueError as exc:
        raise CycleParseError(str(exc), text, 0) from None


def apply(sigma: Permutation, x):
    """``(sigma x)_{sigma(i)} = x_i``."""
    x = np.asarray(x)
    if x.shape[-1] != sigma.n:
        raise DimensionMismatchError(f"vector of length {x.shape[-1]} for permutation on {sigma.n}")
    y = np.empty_like(x)
    y[..., np.array(sigma.images) - 1] = x
    return y


def partition_of_perm(sigma: Permutation) -> Partition:
    return sigma.partition()


def precsim(sigma: Permutation, sigma2: Permutation) -> bool:
    """``sigma`` is smaller than or equivalent to ``sigma2``."""
    return refines(sigma.partition(), sigma2.partition())


def equiv(sigma: Permutation, sigma2: Permutation) -> bool:
    _check_same_n(sigma, sigma2)
    return sigma.partition() == sigma2.partition()


def same_block_size_type(sigma: Permutation, sigma2: Permutation) -> bool:
    _check_same_n(sigma, sigma2)
    return sorted(sigma.partition().sizes) == sorted(sigma2.partition().sizes)


class Order(enum.Enum):
    MUCH_SMALLER = "MUCH_SMALLER"
    SMALLER_NOT_MUCH = "SMALLER_NOT_MUCH"
    NOT_SMALLER_OR_EQUIV = "NOT_SMALLER_OR_EQUIV"

    def __str__(self):
        return self.value


def _as_partition(p) -> Partition:
    return p.partition() if isinstance(p, Permutation) else p


def much_smaller(sigma2, sigma) -> Order:
    """Classify ``sigma2`` against ``sigma`` (permutations or partitions).

    ``sigma2`` is much smaller when it is strictly smaller and one of its
    blocks is built from two or more blocks of ``sigma`` at least one of
    which is not a singleton.
    """
    P2, P = _as_partition(sigma2), _as_partition(sigma)
    _check_same_n(P2, P)
    if P2 == P or not refines(P2, P):
        return Order.NOT_SMALLER_OR_EQUIV
    pieces: dict[int, list[int]] = {}
    for b in P.blocks:
        pieces.setdefault(P2.block_of(b[0]), []).append(len(b))
    for sizes in pieces.values():
        if len(sizes) >= 2 and max(sizes) >= 2:
            return Order.MUCH_SMALLER
    return Order.SMALLER_NOT_MUCH


def meet(sigma, sigma2) -> Partition:
    """Partition of the infimum of two permutations (or partitions)."""
    return join_partitions(_as_partition(sigma), _as_partition(sigma2))


def conjugate(tau: Permutation, sigma: Permutation) -> Permutation:
    """``tau sigma tau^{-1}``; its cycles are the ``tau`` images of those of ``sigma``."""
    _check_same_n(tau, sigma)
    return Permutation.from_cycles([[tau(a) for a in c] for c in sigma.cycles()], sigma.n)


def card_S_succsim(sigma) -> int:
    """Order of the subgroup preserving every block, as an exact integer."""
    return math.prod(math.factorial(s) for s in _as_partition(sigma).sizes)


def iter_S_succsim(sigma) -> Iterator[Permutation]:
    P = _as_partition(sigma)
    n = P.n
    per_block = [list(itertools.permutations(b)) for b in P.blocks]
    for choice in itertools.product(*per_block):
        imgs = [0] * n
        for b, img in zip(P.blocks, choice):
            for i, j in zip(b, img):
                imgs[i - 1] = j
        yield Permutation(imgs)


def enumerate_S_succsim(sigma, cap: int | None = None) -> list[Permutation]:
    """All permutations larger than or equivalent to ``sigma``."""
    cap = enumeration_cap() if cap is None else cap
    card = card_S_succsim(sigma)
    if card > cap:
        raise CapExceededError(f"group of order {card} exceeds enumeration cap {cap}")
    return list(iter_S_succsim(sigma))


def S_succsim_index_arrays(sigma, cap: int | None = None) -> np.ndarray:
    """Stack of gather indices, one row per group element: ``x[idx]`` is ``g x``."""
    return np.array([g.index_array() for g in enumerate_S_succsim(sigma, cap)])


def all_permutations(n: int, cap: int | None = None) -> list[Permutation]:
    cap = enumeration_cap() if cap is None else cap
    if math.factorial(n) > cap:
        raise CapExceededError(f"{n}! exceeds enumeration cap {cap}")
    return [Permutation(p) for p in itertools.permutations(range(1, n + 1))]


# ---------------------------------------------------------------------------
# (F, M) split


@dataclass(frozen=True)
class FMSplit:
    """Fixed-point coordinates of a reference partition versus the rest."""

    n: int
    f_indices: tuple[int, ...]
    m_indices: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.f_indices + self.m_indices) != list(range(1, self.n + 1)):
            raise ValueError("f_indices and m_indices must partition 1..n")
        if list(self.f_indices) != sorted(self.f_indices) or list(self.m_indices) != sorted(self.m_indices):
            raise ValueError("split indices must be sorted")

    @property
    def kappa_star(self) -> int:
        return len(self.f_indices)

    @classmethod
    def from_reference(cls, ref) -> "FMSplit":
        P = _as_partition(ref)
        f = tuple(b[0] for b in P.blocks if len(b) == 1)
        m = tuple(sorted(i for b in P.blocks if len(b) > 1 for i in b))
        return cls(P.n, f, m)


class MixingCycleError(ValueError):
    pass


def _restrict(sigma: Permutation, idx: tuple[int, ...]) -> Permutation:
    pos = {i: k for k, i in enumerate(idx, start=1)}
    return Permutation(pos[sigma(i)] for i in idx)


def fm_decompose_perm(sigma: Permutation, split: FMSplit) -> tuple[Permutation, Permutation]:
    """Restrict ``sigma`` to the F and M coordinates, re-indexed by position."""
    if sigma.n != split.n:
        raise DimensionMismatchError(f"size mismatch: {sigma.n} vs {split.n}")
    fset = set(split.f_indices)
    for c in sigma.cycles():
        inside = [i in fset for i in c]
        if any(inside) and not all(inside):
            raise MixingCycleError(f"cycle {c} mixes F and M coordinates")
    return _restrict(sigma, split.f_indices), _restrict(sigma, split.m_indices)


def fm_compose_perm(sigma_f: Permutation, sigma_m: Permutation, split: FMSplit) -> Permutation:
    """Inverse of :func:`fm_decompose_perm`."""
    if sigma_f.n != len(split.f_indices) or sigma_m.n != len(split.m_indices):
        raise DimensionMismatchError("factor sizes do not match the split")
    imgs = [0] * split.n
    for idx, part in ((split.f_indices, sigma_f), (split.m_indices, sigma_m)):
        for k, i in enumerate(idx, start=1):
            imgs[i - 1] = idx[part(k) - 1]
    return Permutation(imgs)


def canonical_split(x, split: FMSplit) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x)
    if x.shape[-1] != split.n:
        raise DimensionMismatchError(f"vector of length {x.shape[-1]} for split of {split.n}")
    f = np.array(split.f_indices, dtype=int) - 1
    m = np.array(split.m_indices, dtype=int) - 1
    return x[..., f], x[..., m]


def canonical_product(xf, xm, split: FMSplit) -> np.ndarray:
    xf = np.asarray(xf)
    xm = np.asarray(xm)
    if xf.shape[-1] != len(split.f_indices) or xm.shape[-1] != len(split.m_indices):
        raise DimensionMismatchError("factor lengths do not match the split")
    dtype = np.result_type(xf, xm)
    out = np.empty(xf.shape[:-1] + (split.n,), dtype=dtype)
    out[..., np.array(split.f_indices, dtype=int) - 1] = xf
    out[..., np.array(split.m_indices, dtype=int) - 1] = xm
    return out
