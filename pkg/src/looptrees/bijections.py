"""Janson-Stefansson bijection, discrete looptrees and boundaries built from trees of components."""
from __future__ import annotations

import numba
import numpy as np

from .errors import HullConstraint
from .metric import LoopGraph
from .planetree import PlaneTree, TwoTypeTree, as_two_type


@numba.njit(cache=True, nogil=True)
def _js_forward(degrees, parent, children, offsets, depth):
    """Preorder degrees of the image and, for each image position, the source vertex."""
    n = degrees.size
    # image children stored as CSR, counts known up front: black k -> k + 1, white -> 0
    gdeg = np.zeros(n, np.int64)
    for v in range(n):
        if depth[v] % 2 == 1:
            gdeg[v] = degrees[v] + 1
    goff = np.zeros(n + 1, np.int64)
    for v in range(n):
        goff[v + 1] = goff[v] + gdeg[v]
    gch = np.empty(goff[n], np.int64)
    for b in range(n):
        if depth[b] % 2 == 0:
            continue
        pos = goff[b]
        for i in range(offsets[b], offsets[b + 1]):
            w = children[i]
            # first child of the white child, or the white leaf itself
            gch[pos] = children[offsets[w]] if degrees[w] > 0 else w
            pos += 1
        w0 = parent[b]
        nxt = w0
        for i in range(offsets[w0], offsets[w0 + 1] - 1):
            if children[i] == b:
                nxt = children[i + 1]
                break
        gch[pos] = nxt
    root = children[offsets[0]]
    out_deg = np.empty(n, np.int64)
    label = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    top = 0
    stack[0] = root
    k = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        out_deg[k] = gdeg[v]
        label[k] = v
        k += 1
        for i in range(goff[v + 1] - 1, goff[v] - 1, -1):
            top += 1
            stack[top] = gch[i]
    return out_deg[:k], label[:k]


def js_forward_labeled(t: TwoTypeTree) -> tuple[PlaneTree, np.ndarray]:
    """Image tree plus ``labels[i]`` = preorder index in ``t`` of the image's i-th vertex."""
    tree = t.tree
    if tree.size == 1:
        return PlaneTree(np.zeros(1, np.int64)), np.zeros(1, np.int64)
    deg, label = _js_forward(tree.degrees, tree.parent, tree.children, tree.children_offsets, tree.depth)
    if deg.size != tree.size:
        raise AssertionError("image is not spanning; encoding inconsistent")
    return PlaneTree(deg), label


def js_forward(t: TwoTypeTree | PlaneTree) -> PlaneTree:
    if isinstance(t, PlaneTree):
        t = as_two_type(t)
    return js_forward_labeled(t)[0]


def js_inverse(s: PlaneTree) -> TwoTypeTree:
    """Two-type preimage: leaves become white vertices, internal vertices black.

    A white vertex's children are the internal vertices on the last-child chain
    that ends at it; a black vertex's white children are the chain ends of its
    image children, all but the last.
    """
    n = s.size
    if n == 1:
        return TwoTypeTree(PlaneTree(np.zeros(1, np.int64)))
    deg = s.degrees
    off = s.children_offsets
    ch = s.children
    last = np.full(n, -1, np.int64)
    internal = deg > 0
    last[internal] = ch[off[1:][internal] - 1]
    # chain end of every vertex, filled bottom-up (children follow parents in preorder)
    end = np.arange(n)
    for v in range(n - 1, -1, -1):
        if internal[v]:
            end[v] = end[last[v]]
    white_children: dict[int, list[int]] = {}
    black_children: dict[int, list[int]] = {}
    for v in range(n):
        if internal[v]:
            black_children[v] = [int(end[c]) for c in ch[off[v]:off[v + 1] - 1]]
    heads = [0] + [int(c) for v in range(n) if internal[v] for c in ch[off[v]:off[v + 1] - 1] if internal[c]]
    for h in heads:
        chain = []
        v = h
        while internal[v]:
            chain.append(v)
            v = last[v]
        white_children[v] = chain
    root = int(end[0])
    out = []
    stack = [(root, True)]
    while stack:
        v, white = stack.pop()
        kids = white_children.get(v, []) if white else black_children[v]
        out.append(len(kids))
        stack.extend((c, not white) for c in reversed(kids))
    return TwoTypeTree(PlaneTree(np.array(out, np.int64)))


# ---------------------------------------------------------------------------
# looptrees
# ---------------------------------------------------------------------------

def loop_of(s: PlaneTree) -> LoopGraph:
    """Vertex set of s; each vertex with k >= 1 children closes a cycle of length k + 1."""
    edges = []
    cycles = []
    off, ch = s.children_offsets, s.children
    for v in np.flatnonzero(s.degrees):
        kids = ch[off[v]:off[v + 1]].tolist()
        ring = [int(v), *kids]
        edges.extend(zip(ring, ring[1:] + ring[:1]))
        cycles.append(len(ring))
    return LoopGraph.build(s.size, edges, cycles, cactus=(s, False))


def last_child_classes(s: PlaneTree) -> np.ndarray:
    """Class id per vertex after merging every vertex with its last child; ids index the leaves."""
    n = s.size
    off, ch = s.children_offsets, s.children
    rep = np.arange(n)
    internal = s.degrees > 0
    last = np.full(n, -1, np.int64)
    last[internal] = ch[off[1:][internal] - 1]
    for v in range(n - 1, -1, -1):
        if internal[v]:
            rep[v] = rep[last[v]]
    leaves = np.flatnonzero(~internal)
    index = np.full(n, -1, np.int64)
    index[leaves] = np.arange(leaves.size)
    return index[rep]


def loop_bar_of(s: PlaneTree) -> LoopGraph:
    """Loop(s) with each (vertex, last child) edge contracted; vertices are the leaves of s."""
    if s.size == 1:
        return LoopGraph.build(1, [], [], cactus=(s, True))
    cls = last_child_classes(s)
    off, ch = s.children_offsets, s.children
    edges = []
    cycles = []
    for v in np.flatnonzero(s.degrees):
        ring = [int(cls[v]), *(int(cls[c]) for c in ch[off[v]:off[v + 1] - 1])]
        edges.extend(zip(ring, ring[1:] + ring[:1]))
        cycles.append(len(ring))
    return LoopGraph.build(int(cls.max()) + 1, edges, cycles, cactus=(s, True))


def loop_bar_labels(s: PlaneTree) -> np.ndarray:
    """Preorder index in s of the leaf that names each loop-bar vertex."""
    return np.flatnonzero(s.degrees == 0)


def boundary_from_components(t: TwoTypeTree) -> LoopGraph:
    """Boundary graph on the white vertices of t, white vertex i named by its rank in preorder."""
    tree = t.tree
    if tree.size < 2:
        raise HullConstraint("need at least two vertices")
    white = t.is_white
    rank = np.cumsum(white) - 1
    off, ch = tree.children_offsets, tree.children
    edges = []
    cycles = []
    for b in np.flatnonzero(~white):
        ring = [int(rank[tree.parent[b]]), *(int(rank[c]) for c in ch[off[b]:off[b + 1]])]
        edges.extend(zip(ring, ring[1:] + ring[:1]))
        cycles.append(len(ring))
    return LoopGraph.build(int(white.sum()), edges, cycles)


def white_labels(t: TwoTypeTree) -> np.ndarray:
    return np.flatnonzero(t.is_white)
