"""Metric observables on loop graphs, plus small combinatorial counts and exponent fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import DegenerateInput, Disconnected, DomainError

EXACT_LIMIT = 10_000


@numba.njit(cache=True, nogil=True)
def _bfs(offsets, targets, source):
    n = offsets.size - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        v = queue[head]
        head += 1
        for i in range(offsets[v], offsets[v + 1]):
            w = targets[i]
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue[tail] = w
                tail += 1
    return dist


@numba.njit(cache=True, nogil=True)
def _all_sources_max(offsets, targets):
    n = offsets.size - 1
    best = 0
    for s in range(n):
        d = _bfs(offsets, targets, s)
        m = d.max()
        if m > best:
            best = m
    return best


@numba.njit(cache=True, nogil=True)
def _ring_best_pair(h, length):
    # max over unordered pairs i != j of h[i] + h[j] + cyclic distance, O(length)
    if length < 2:
        return -1
    half = length // 2
    m = 2 * length
    dq = np.empty(m, np.int64)
    lo, hi = 0, 0
    best = -1
    for q in range(m):
        hq = h[q % length]
        while lo < hi and dq[lo] < q - half:
            lo += 1
        if lo < hi:
            p = dq[lo]
            cand = h[p % length] - p + hq + q
            if cand > best:
                best = cand
        key = hq - q
        while lo < hi and h[dq[hi - 1] % length] - dq[hi - 1] <= key:
            hi -= 1
        dq[hi] = q
        hi += 1
    return best


@numba.njit(cache=True, nogil=True)
def _cactus_diameter(degrees, children, offsets, bar):
    """Exact diameter of Loop or Loop-bar of a plane tree by one bottom-up pass over its cycles."""
    n = degrees.size
    reach = np.zeros(n, np.int64)
    best = 0
    buf = np.empty(n + 1, np.int64)
    for v in range(n - 1, -1, -1):
        k = degrees[v]
        if k == 0:
            continue
        first = offsets[v]
        if bar:
            length = k
            buf[0] = reach[children[first + k - 1]]
            for i in range(1, k):
                buf[i] = reach[children[first + i - 1]]
        else:
            length = k + 1
            buf[0] = 0
            for i in range(1, k + 1):
                buf[i] = reach[children[first + i - 1]]
        far = buf[0]
        for i in range(1, length):
            d = min(i, length - i) + buf[i]
            if d > far:
                far = d
        reach[v] = far
        if far > best:
            best = far
        pair = _ring_best_pair(buf[:length], length)
        if pair > best:
            best = pair
    return best


@dataclass
class LoopGraph:
    vertex_count: int
    edges: np.ndarray
    cycle_lengths: np.ndarray
    cactus: tuple | None = field(default=None, repr=False)
    _csr: tuple | None = field(default=None, repr=False)

    @classmethod
    def build(cls, vertex_count: int, edges, cycles, cactus=None) -> "LoopGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        return cls(int(vertex_count), e, np.asarray(cycles, dtype=np.int64), cactus)

    @property
    def perimeter(self) -> int:
        return int(self.cycle_lengths.sum())

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        if self._csr is None:
            e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
            order = np.argsort(src, kind="stable")
            offsets = np.zeros(self.vertex_count + 1, np.int64)
            np.cumsum(np.bincount(src, minlength=self.vertex_count), out=offsets[1:])
            self._csr = (offsets, dst[order])
        return self._csr

    def degree(self) -> np.ndarray:
        """Graph degree with self-loops counted twice."""
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)

    def distance_matrix(self) -> np.ndarray:
        return np.stack([bfs_distances(self, s) for s in range(self.vertex_count)])

    def edge_multiset(self) -> list[tuple[int, int]]:
        return sorted((min(a, b), max(a, b)) for a, b in self.edges.tolist())


def bfs_distances(g: LoopGraph, source: int) -> np.ndarray:
    offsets, targets = g.csr()
    d = _bfs(offsets, targets, int(source))
    if np.any(d < 0):
        raise Disconnected("graph is not connected")
    return d


def double_sweep(g: LoopGraph, sweeps: int = 4, start: int = 0) -> tuple[int, int]:
    """(lower, upper) bracket on the diameter: repeated farthest-vertex sweeps and 2 x eccentricity."""
    offsets, targets = g.csr()
    d = bfs_distances(g, start)
    lower = int(d.max())
    upper = 2 * lower
    v = int(np.argmax(d))
    for _ in range(sweeps):
        d = _bfs(offsets, targets, v)
        lower = max(lower, int(d.max()))
        # a vertex midway along the sweep tends to have small eccentricity
        far = int(np.argmax(d))
        mid_candidates = np.flatnonzero(d == d[far] // 2)
        if mid_candidates.size:
            upper = min(upper, 2 * int(bfs_distances(g, int(mid_candidates[0])).max()))
        v = far
    return lower, upper


def diameter(g: LoopGraph, exact_limit: int = EXACT_LIMIT) -> int:
    """Exact diameter: all-sources BFS up to ``exact_limit`` vertices, the cactus pass when the
    graph came from a plane tree, otherwise the lower end of the double-sweep bracket."""
    if g.vertex_count <= 1:
        return 0
    if g.vertex_count <= exact_limit:
        bfs_distances(g, 0)
        offsets, targets = g.csr()
        return int(_all_sources_max(offsets, targets))
    if g.cactus is not None:
        tree, bar = g.cactus
        return cactus_diameter(tree, bar)
    return double_sweep(g)[0]


def cactus_diameter(tree, bar: bool) -> int:
    if tree.size == 1:
        return 0
    return int(_cactus_diameter(tree.degrees, tree.children, tree.children_offsets, bar))


def max_cycle_fraction(g: LoopGraph) -> float:
    if g.cycle_lengths.size == 0:
        return 0.0
    return float(g.cycle_lengths.max() / g.cycle_lengths.sum())


def necklace_count(n: int, m: int) -> int:
    if n < 0 or m < 0:
        raise DomainError("counts must be nonnegative")
    if n == 0 and m == 0:
        raise DomainError("n + m must be positive")
    return math.comb(n + m, n)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    slope_stderr: float = float("nan")

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "n_points": self.n_points, "slope_stderr": self.slope_stderr}


def fit_exponent(points: Sequence[tuple[float, float]]) -> FitResult:
    """Least squares of log value on log n."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegenerateInput("need at least three points")
    n, v = pts[:, 0], pts[:, 1]
    if np.any(v <= 0) or np.any(n <= 0):
        raise DegenerateInput("sizes and values must be positive")
    if np.unique(n).size < 2:
        raise DegenerateInput("sizes must not all coincide")
    x, y = np.log(n), np.log(v)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - float(np.sum(resid**2)) / ss_tot))
    dof = pts.shape[0] - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 else float("nan")
    return FitResult(float(slope), float(intercept), r2, int(pts.shape[0]), stderr)
