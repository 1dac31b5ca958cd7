"""Plane trees stored as preorder child counts, and Galton-Watson samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator

import numba
import numpy as np

from . import exactasym
from .errors import DomainError, HullConstraint, InvalidEncoding, Overflow, ZeroProbability
from .laws import OffspringLaw

CHUNK = 64


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _parents(degrees):
    n = degrees.size
    parent = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    left = np.empty(n, np.int64)
    top = -1
    for v in range(n):
        if top >= 0:
            parent[v] = stack[top]
            left[top] -= 1
            while top >= 0 and left[top] == 0:
                top -= 1
        if degrees[v] > 0:
            top += 1
            stack[top] = v
            left[top] = degrees[v]
    return parent


@numba.njit(cache=True, nogil=True)
def _depths(parent):
    n = parent.size
    depth = np.zeros(n, np.int64)
    for v in range(1, n):
        depth[v] = depth[parent[v]] + 1
    return depth


@numba.njit(cache=True, nogil=True)
def _rotate_at_first_minimum(xi):
    n = xi.size
    walk = 0
    best = 1
    arg = 0
    for i in range(n):
        walk += xi[i] - 1
        if walk < best:
            best = walk
            arg = i
    out = np.empty(n, np.int64)
    for i in range(n):
        out[i] = xi[(arg + 1 + i) % n]
    return out


@numba.njit(cache=True, nogil=True)
def _split_sample(tables, row_of, n, target, uniforms, out):
    # exact sample of n i.i.d. increments conditioned on their sum, by halving
    starts = np.empty(2 * n, np.int64)
    sizes = np.empty(2 * n, np.int64)
    sums = np.empty(2 * n, np.int64)
    top = 0
    starts[0] = 0
    sizes[0] = n
    sums[0] = target
    used = 0
    while top >= 0:
        start = starts[top]
        m = sizes[top]
        s = sums[top]
        top -= 1
        if m == 1:
            out[start] = s
            continue
        ml = m // 2
        mr = m - ml
        rl = row_of[ml]
        rr = row_of[mr]
        total = 0.0
        for j in range(s + 1):
            total += tables[rl, j] * tables[rr, s - j]
        if total <= 0.0:
            return False
        threshold = uniforms[used] * total
        used += 1
        acc = 0.0
        pick = s
        for j in range(s + 1):
            acc += tables[rl, j] * tables[rr, s - j]
            if acc > threshold:
                pick = j
                break
        # guard against the last-bin rounding: never pick a zero-weight cell
        while tables[rl, pick] * tables[rr, s - pick] == 0.0 and pick > 0:
            pick -= 1
        top += 1
        starts[top] = start
        sizes[top] = ml
        sums[top] = pick
        top += 1
        starts[top] = start + ml
        sizes[top] = mr
        sums[top] = s - pick
    return True


@numba.njit(cache=True, nogil=True)
def _split_batch(tables, row_of, n, target, uniforms, out):
    xi = np.empty(n, np.int64)
    for r in range(out.shape[0]):
        if not _split_sample(tables, row_of, n, target, uniforms[r], xi):
            return False
        out[r] = _rotate_at_first_minimum(xi)
    return True


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PlaneTree:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.degrees, dtype=np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def size(self) -> int:
        return int(self.degrees.size)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, PlaneTree) and np.array_equal(self.degrees, other.degrees)

    def __hash__(self) -> int:
        return hash(self.degrees.tobytes())

    def __repr__(self) -> str:
        if self.size <= 12:
            return f"PlaneTree({self.degrees.tolist()})"
        return f"PlaneTree(size={self.size})"

    def key(self) -> tuple[int, ...]:
        return tuple(self.degrees.tolist())

    @cached_property
    def parent(self) -> np.ndarray:
        return _parents(self.degrees)

    @cached_property
    def depth(self) -> np.ndarray:
        return _depths(self.parent)

    @cached_property
    def children_offsets(self) -> np.ndarray:
        """CSR offsets into ``children``."""
        return np.concatenate(([0], np.cumsum(self.degrees)))

    @cached_property
    def children(self) -> np.ndarray:
        # preorder lists every child after its parent and siblings left to right
        order = np.argsort(self.parent[1:], kind="stable") + 1
        return order

    def children_of(self, v: int) -> np.ndarray:
        off = self.children_offsets
        return self.children[off[v]:off[v + 1]]

    @property
    def leaves(self) -> int:
        return int(np.count_nonzero(self.degrees == 0))

    def to_line(self) -> str:
        return " ".join(map(str, [self.size, *self.degrees.tolist()]))


def from_preorder_degrees(seq: Iterable[int]) -> PlaneTree:
    d = np.asarray(list(seq) if not isinstance(seq, np.ndarray) else seq, dtype=np.int64)
    if d.ndim != 1 or d.size == 0:
        raise InvalidEncoding("degree sequence must be a nonempty 1-d sequence")
    if np.any(d < 0):
        raise InvalidEncoding("child counts must be nonnegative")
    walk = np.cumsum(d - 1)
    if walk[-1] != -1:
        raise InvalidEncoding(f"child counts sum to {int(d.sum())}, expected {d.size - 1}")
    if d.size > 1 and np.any(walk[:-1] < 0):
        raise InvalidEncoding("Lukasiewicz walk exits before the last vertex")
    return PlaneTree(d)


def height(t: PlaneTree) -> int:
    return int(t.depth.max())


def parse_line(line: str) -> PlaneTree:
    tokens = line.split()
    if not tokens:
        raise InvalidEncoding("empty tree line")
    size = int(tokens[0])
    t = from_preorder_degrees([int(x) for x in tokens[1:]])
    if t.size != size:
        raise InvalidEncoding(f"header says {size} vertices, sequence has {t.size}")
    return t


def write_trees(trees: Iterable[PlaneTree], fh) -> None:
    for t in trees:
        fh.write(t.to_line() + "\n")


def read_trees(fh) -> Iterator[PlaneTree]:
    for line in fh:
        line = line.strip()
        if line and not line.startswith("#"):
            yield parse_line(line)


# ---------------------------------------------------------------------------
# two-type view
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoTypeTree:
    tree: PlaneTree

    @property
    def size(self) -> int:
        return self.tree.size

    @cached_property
    def is_white(self) -> np.ndarray:
        return self.tree.depth % 2 == 0

    @property
    def n_white(self) -> int:
        return int(np.count_nonzero(self.is_white))

    @property
    def n_black(self) -> int:
        return self.size - self.n_white

    @property
    def perimeter(self) -> int:
        """Sum of black degrees (parent edge included), i.e. the boundary length."""
        black = ~self.is_white
        return int(np.sum(self.tree.degrees[black] + 1))

    def white_weight(self) -> int:
        white = self.is_white
        return int(np.sum(1 + self.tree.degrees[white]))

    def check(self) -> None:
        if self.n_white + self.n_black != self.size:
            raise AssertionError("vertex census broken")
        if self.size >= 2 and self.perimeter != self.size - 1:
            raise AssertionError("black degrees do not add up to |t| - 1")
        if self.white_weight() != self.size:
            raise AssertionError("white weights do not add up to |t|")


def as_two_type(t: PlaneTree, hull: bool = False) -> TwoTypeTree:
    if hull and t.size < 2:
        raise HullConstraint("a hull tree needs at least two vertices")
    out = TwoTypeTree(t)
    out.check()
    return out


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def enumerate_trees(n: int) -> Iterator[PlaneTree]:
    """All plane trees with n vertices in lexicographic order of their degree sequence."""
    if n < 1:
        raise DomainError("n must be >= 1")
    seq = [0] * n

    def rec(i: int, open_slots: int):
        left = n - i
        if left == 0:
            if open_slots == 0:
                yield PlaneTree(np.array(seq))
            return
        if open_slots == 0:
            return
        # remaining vertices must absorb open slots: k <= left - open_slots
        for k in range(0, left - open_slots + 1):
            seq[i] = k
            yield from rec(i + 1, open_slots - 1 + k)

    yield from rec(0, 1)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent counter-based generator for (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


class IncrementSampler:
    """Inverse-CDF sampler on the stored head, with a Pareto draw for the power-law tail."""

    def __init__(self, law: OffspringLaw):
        self.law = law
        head = np.asarray(law.masses, dtype=float)
        self.cdf = np.cumsum(head)
        self.head_mass = float(self.cdf[-1])
        self.cutoff = head.size - 1
        self.tail_mass = law.tail_mass if law.tail_exponent is not None else 0.0
        self.alpha = law.tail_exponent

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size) * (self.head_mass + self.tail_mass)
        out = np.searchsorted(self.cdf, u, side="right").astype(np.int64)
        tail = out > self.cutoff
        if np.any(tail):
            # P(X > x) ~ x^{-alpha} beyond the cutoff
            v = rng.random(int(tail.sum()))
            out[tail] = np.floor((self.cutoff + 0.5) * v ** (-1.0 / self.alpha) + 0.5).astype(np.int64)
            out[tail] = np.maximum(out[tail], self.cutoff + 1)
        return out


@lru_cache(maxsize=32)
def increment_sampler(law: OffspringLaw) -> IncrementSampler:
    return IncrementSampler(law)


def sample_gw(law: OffspringLaw, size_cap: int, rng) -> PlaneTree:
    """Unconditioned GW tree; ``Overflow`` once more than ``size_cap`` vertices are needed."""
    if not isinstance(rng, np.random.Generator):
        rng = stream(rng)
    sampler = increment_sampler(law)
    parts = []
    walk_end = 0
    total = 0
    batch = 64
    while True:
        xi = sampler.draw(rng, batch)
        walk = walk_end + np.cumsum(xi - 1)
        hit = np.flatnonzero(walk < 0)
        if hit.size:
            parts.append(xi[: hit[0] + 1])
            total += hit[0] + 1
            if total > size_cap:
                raise Overflow(f"tree exceeds size cap {size_cap}")
            return PlaneTree(np.concatenate(parts))
        parts.append(xi)
        total += batch
        walk_end = int(walk[-1])
        if total > size_cap:
            raise Overflow(f"tree exceeds size cap {size_cap}")
        batch = min(2 * batch, 1 << 20)


class ConditionedSampler:
    """Exact GW trees with exactly n vertices.

    ``split``: the n increments are drawn conditioned on summing to n - 1 by
    recursive halving, each split drawn from the exact law of the two half
    sums.  ``rejection``: draw n increments and retry until the sum is right.
    Either way the cyclic shift at the first minimum of the walk gives the tree.
    """

    def __init__(self, law: OffspringLaw, n: int):
        if n < 1:
            raise DomainError("n must be >= 1")
        self.law = law
        self.n = n
        self.target = n - 1
        self._tables = None
        self._increments = None

    @property
    def increments(self) -> IncrementSampler:
        if self._increments is None:
            self._increments = increment_sampler(self.law)
        return self._increments

    @property
    def tables(self):
        if self._tables is None:
            self._build_tables()
        return self._tables

    def _build_tables(self):
        n, s = self.n, self.target
        sizes = set()
        frontier = {n}
        while frontier:
            sizes |= frontier
            frontier = {h for m in frontier if m > 1 for h in (m // 2, m - m // 2)} - sizes
        sizes = sorted(sizes)
        row_of = np.full(n + 1, -1, np.int64)
        tables = np.zeros((len(sizes), s + 1))
        pmfs = {}
        head, _ = exactasym.law_head(self.law, s)
        for i, m in enumerate(sizes):
            if m == 1:
                pmf = head.copy()
            else:
                pmf, _ = exactasym.convolve_truncated(pmfs[m // 2], pmfs[m - m // 2], s)
            pmfs[m] = pmf
            tables[i] = pmf
            row_of[m] = i
        if tables[row_of[n], s] <= 0.0:
            raise ZeroProbability(f"no tree of size {n} under this law")
        self._tables = (tables, row_of)

    def sample(self, rng, method: str = "split") -> PlaneTree:
        if not isinstance(rng, np.random.Generator):
            rng = stream(rng)
        if self.n == 1:
            if self.law.pmf(0) <= 0:
                raise ZeroProbability("law puts no mass at 0")
            return PlaneTree(np.zeros(1, np.int64))
        if method == "rejection":
            xi = self._rejection(rng)
        elif method == "split":
            tables, row_of = self.tables
            xi = np.empty(self.n, np.int64)
            if not _split_sample(tables, row_of, self.n, self.target, rng.random(self.n), xi):
                raise ZeroProbability("split landed on a zero-probability cell; tables too coarse")
        else:
            raise DomainError(f"unknown method {method!r}")
        return PlaneTree(_rotate_at_first_minimum(xi))

    def _rejection(self, rng, max_tries: int = 10**7) -> np.ndarray:
        sampler = self.increments
        batch = 256
        for _ in range(max_tries // batch + 1):
            xi = sampler.draw(rng, batch * self.n).reshape(batch, self.n)
            ok = np.flatnonzero(xi.sum(axis=1) == self.target)
            if ok.size:
                return xi[ok[0]]
        raise ZeroProbability(f"no acceptance in {max_tries} tries")

    def sample_batch(self, rng, count: int, method: str = "split") -> np.ndarray:
        """``count`` rotated degree sequences as rows of one array."""
        if not isinstance(rng, np.random.Generator):
            rng = stream(rng)
        if method == "rejection" or self.n == 1:
            return np.array([self.sample(rng, method).degrees for _ in range(count)], dtype=np.int64)
        tables, row_of = self.tables
        out = np.empty((count, self.n), np.int64)
        if not _split_batch(tables, row_of, self.n, self.target, rng.random((count, self.n)), out):
            raise ZeroProbability("split landed on a zero-probability cell; tables too coarse")
        return out

    def sample_many(self, count: int, seed: int, method: str = "split") -> list[PlaneTree]:
        """``count`` trees; tree i uses stream i // CHUNK so output is independent of threading."""
        out = []
        for chunk in range(0, count, CHUNK):
            rng = stream(seed, chunk // CHUNK)
            out.extend(self.sample(rng, method) for _ in range(min(CHUNK, count - chunk)))
        return out


def sample_gw_conditioned(law: OffspringLaw, n: int, rng_seed, method: str = "split") -> PlaneTree:
    return ConditionedSampler(law, n).sample(rng_seed, method)


def shape_probability(t: PlaneTree, law: OffspringLaw) -> float:
    """GW_law(t) = prod over vertices of law(k_u)."""
    return math.prod(law.pmf(int(k)) for k in t.degrees)
