"""Topological skeletons of marked trees.

An m-shape is a binary tree with m labelled external vertices of degree 1
(label 0 plays the role of the root) and m-2 internal vertices of degree 3,
with its 2m-3 edges carrying a fixed canonical labelling.  There are
(2m-5)!! of them.  A subshape contracts a subset of the edges.  The
backbone of a marked tree (T, i_1..i_{m-1}) is the subtree spanning the
root and the marks; matching it against shapes, allowing contracted edges,
is what `compatible` decides.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .errors import CapError
from .plane_tree import PlaneTree

DEFAULT_SHAPE_CAP = 9


def double_factorial_odd(j: int) -> int:
    """(2j+1)!! with the usual convention (-1)!! = 1."""
    out = 1
    k = 2 * j + 1
    while k > 1:
        out *= k
        k -= 2
    return out


def shape_count(m: int) -> int:
    """(2m-5)!!: the number of m-shapes."""
    if m < 2:
        raise ValueError("shapes need m >= 2")
    return double_factorial_odd(m - 3) if m >= 3 else 1


@dataclass(frozen=True)
class Shape:
    """Canonical m-shape: external vertices 0..m-1, internal m..2m-3.

    Edges are (label, parent, child) with the parent endpoint nearer
    external vertex 0; labels run 1..2m-3.
    """

    m: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(l), int(u), int(v)) for l, u, v in self.edges)
        edges = tuple(sorted(edges))
        object.__setattr__(self, "edges", edges)
        m = self.m
        if m < 2:
            raise ValueError("shapes need m >= 2")
        if [e[0] for e in edges] != list(range(1, 2 * m - 2)):
            raise ValueError("edge labels must be exactly 1..2m-3")
        if any(not (0 <= u < 2 * m - 2 and 0 <= v < 2 * m - 2) for _, u, v in edges):
            raise ValueError("vertex ids must lie in 0..2m-3")
        degree = {v: 0 for v in range(2 * m - 2)}
        for _, u, v in edges:
            degree[u] += 1
            degree[v] += 1
        for v in range(m):
            if degree[v] != 1:
                raise ValueError(f"external vertex {v} must have degree 1")
        for v in range(m, 2 * m - 2):
            if degree[v] != 3:
                raise ValueError(f"internal vertex {v} must have degree 3")
        # parent endpoints must orient every edge away from vertex 0
        seen = {0}
        pending = list(edges)
        while pending:
            rest = []
            for l, u, v in pending:
                if u in seen:
                    seen.add(v)
                elif v in seen:
                    raise ValueError(f"edge {l} is oriented toward vertex 0")
                else:
                    rest.append((l, u, v))
            if len(rest) == len(pending):
                raise ValueError("shape is not connected")
            pending = rest

    @property
    def edge_count(self) -> int:
        return 2 * self.m - 3

    def children(self) -> dict:
        """parent vertex -> [(label, child vertex), ...] sorted by label."""
        out: dict = {v: [] for v in range(2 * self.m - 2)}
        for l, u, v in self.edges:
            out[u].append((l, v))
        return out

    def externals_below(self, label: int) -> frozenset:
        """External labels separated from vertex 0 by the given edge."""
        children = self.children()
        (_, _, top) = next(e for e in self.edges if e[0] == label)
        found = set()
        stack = [top]
        while stack:
            v = stack.pop()
            if v < self.m:
                found.add(v)
            for _, c in children[v]:
                stack.append(c)
        return frozenset(found)

    def iso_code(self) -> str:
        """Canonical code: isomorphism class respecting external labels only."""
        children = self.children()

        def code(v: int) -> str:
            if v < self.m:
                return f"x{v}"
            return "i(" + ",".join(sorted(code(c) for _, c in children[v])) + ")"

        root_child = children[0][0][1]
        return "r(" + code(root_child) + ")"

    def to_json(self) -> dict:
        return {"m": self.m, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: dict) -> "Shape":
        return cls(int(obj["m"]), tuple(tuple(e) for e in obj["edges"]))


def _extend(shape: Shape, split_label: int) -> Shape:
    """Attach external vertex m onto the given edge of an m-shape.

    The split edge keeps its label on the half nearer vertex 0, the new
    leaf edge gets the next free label, and the far half gets the one
    after; old internal vertices shift up by one to make room for the new
    external id.
    """
    m_new = shape.m + 1

    def lift(v: int) -> int:
        return v + 1 if v >= shape.m else v

    new_internal = 2 * m_new - 3
    new_external = m_new - 1
    leaf_label = 2 * m_new - 4
    far_label = 2 * m_new - 3
    edges = []
    for l, u, v in shape.edges:
        if l == split_label:
            edges.append((l, lift(u), new_internal))
            edges.append((leaf_label, new_internal, new_external))
            edges.append((far_label, new_internal, lift(v)))
        else:
            edges.append((l, lift(u), lift(v)))
    return Shape(m_new, tuple(edges))


def enumerate_shapes(m: int, cap: int = DEFAULT_SHAPE_CAP) -> list:
    """All (2m-5)!! canonical m-shapes, in a deterministic order.

    Results are memoised per process; if MFLT_CACHE_DIR is set, the edge
    tables are also persisted there as JSON.
    """
    if m < 2:
        raise ValueError("shapes need m >= 2")
    if m > cap:
        raise CapError(f"shape enumeration for m={m} exceeds the cap {cap}")
    return list(_shapes_cached(m))


@lru_cache(maxsize=None)
def _shapes_cached(m: int) -> tuple:
    cache_dir = os.environ.get("MFLT_CACHE_DIR")
    cache_path = os.path.join(cache_dir, f"shapes_m{m}.json") if cache_dir else None
    if cache_path and os.path.exists(cache_path):
        with open(cache_path, "r", encoding="utf-8") as fh:
            return tuple(Shape.from_json(obj) for obj in json.load(fh))
    if m == 2:
        shapes = (Shape(2, ((1, 0, 1),)),)
    else:
        shapes = tuple(
            _extend(s, l)
            for s in _shapes_cached(m - 1)
            for l in range(1, 2 * (m - 1) - 2)
        )
    if cache_path:
        os.makedirs(cache_dir, exist_ok=True)
        with open(cache_path, "w", encoding="utf-8") as fh:
            json.dump([s.to_json() for s in shapes], fh, sort_keys=True)
    return shapes


@dataclass(frozen=True)
class Subshape:
    """A shape with a subset of its edges contracted to points."""

    parent: Shape
    contracted: frozenset

    def __post_init__(self):
        labels = frozenset(int(l) for l in self.contracted)
        object.__setattr__(self, "contracted", labels)
        if not labels <= set(range(1, self.parent.edge_count + 1)):
            raise ValueError("contracted labels must be edge labels of the parent shape")

    @property
    def kept_labels(self) -> tuple:
        """e(lambda): labels of the surviving (uncontracted) edges."""
        return tuple(l for l in range(1, self.parent.edge_count + 1)
                     if l not in self.contracted)

    def vertex_classes(self) -> dict:
        """Map each parent vertex to its contracted class (smallest member)."""
        root = {v: v for v in range(2 * self.parent.m - 2)}

        def find(v):
            while root[v] != v:
                root[v] = root[root[v]]
                v = root[v]
            return v

        for l, u, v in self.parent.edges:
            if l in self.contracted:
                a, b = find(u), find(v)
                if a != b:
                    root[max(a, b)] = min(a, b)
        return {v: find(v) for v in root}


def enumerate_subshapes(shape: Shape) -> Iterator[Subshape]:
    """All 2^(2m-3) subshapes, by increasing contracted-set bitmask."""
    labels = list(range(1, shape.edge_count + 1))
    for mask in range(1 << len(labels)):
        yield Subshape(shape, frozenset(l for i, l in enumerate(labels) if mask >> i & 1))


def _tree_tables(tree: PlaneTree):
    parent = tree.parents()
    depth = tree.depths()
    return parent, depth


def _is_ancestor(parent, depth, a: int, b: int) -> bool:
    """True iff a is an ancestor of b (or equal), walking b upward."""
    k = depth[b] - depth[a]
    if k < 0:
        return False
    v = b
    for _ in range(k):
        v = parent[v]
    return v == a


def _steiner_edge_count(parent, depth, marks) -> int:
    seen = set()
    for v in marks:
        u = v
        while u != -1 and u not in seen:
            seen.add(u)
            u = parent[u]
    return len(seen) - 1


def skeleton_matches(tree: PlaneTree, marks: tuple, shape: Shape) -> list:
    """Ways to realise the shape on the spanning subtree of the marks.

    Each match is (lengths, images): per-edge-label path lengths s_j >= 0
    and per-edge (top vertex, bottom vertex) pairs in the tree.  A match
    requires every shape edge to map to a downward path of the matching
    length and the path lengths to tile the spanning subtree exactly.
    """
    m = shape.m
    if len(marks) != m - 1:
        raise ValueError(f"need m-1 = {m - 1} marked vertices")
    n = tree.size
    if any(not 0 <= v < n for v in marks):
        raise ValueError("marked vertices must be vertices of the tree")
    parent, depth = _tree_tables(tree)
    steiner_edges = _steiner_edge_count(parent, depth, marks)
    fixed = {0: 0}
    for j, v in enumerate(marks, start=1):
        fixed[j] = v
    internals = list(range(m, 2 * m - 2))
    matches = []
    for images in itertools.product(range(n), repeat=len(internals)):
        img = dict(fixed)
        img.update(zip(internals, images))
        lengths = [0] * shape.edge_count
        ok = True
        total = 0
        for l, u, v in shape.edges:
            a, b = img[u], img[v]
            if not _is_ancestor(parent, depth, a, b):
                ok = False
                break
            s = depth[b] - depth[a]
            lengths[l - 1] = s
            total += s
        if ok and total == steiner_edges:
            matches.append((tuple(lengths), tuple((img[u], img[v]) for _, u, v in shape.edges)))
    return matches


def path_displacements(phi, images: tuple) -> tuple:
    """Per-edge lattice displacements phi(bottom) - phi(top) for a match."""
    return tuple(
        tuple(pb - pa for pa, pb in zip(phi.positions[a], phi.positions[b]))
        for a, b in images
    )


@dataclass(frozen=True)
class Backbone:
    """Spanning subtree of the root and the marked vertices, reduced to a skeleton.

    `matches` lists every (shape index, path lengths) identification; a
    full backbone has exactly one, with every path length positive.
    """

    tree: PlaneTree
    marks: tuple
    m: int
    matches: tuple

    @property
    def is_full(self) -> bool:
        return len(self.matches) == 1 and all(s > 0 for s in self.matches[0][1])

    @property
    def path_lengths(self) -> tuple:
        """s-vector of the first match (unique when the backbone is full)."""
        return self.matches[0][1]


def backbone(tree: PlaneTree, marks: tuple, cap: int = DEFAULT_SHAPE_CAP) -> Backbone:
    """Reduce the spanning subtree of (root, marks) against all m-shapes."""
    m = len(marks) + 1
    found = []
    for idx, shape in enumerate(enumerate_shapes(m, cap=cap)):
        for lengths, _ in skeleton_matches(tree, marks, shape):
            found.append((idx, lengths))
    # distinct (shape, lengths) pairs only; image details are recoverable
    seen = []
    for item in found:
        if item not in seen:
            seen.append(item)
    return Backbone(tree, tuple(marks), m, tuple(seen))


def compatible(tree: PlaneTree, phi, marks: tuple, shape: Shape,
               ys: tuple, ss: tuple) -> bool:
    """Does the marked embedded tree realise the shape with the given
    path lengths and path displacements?

    The identification of the backbone with the shape is existential: all
    consistent assignments of shape vertices to tree vertices are tried.
    """
    phi.check_consistent(tree)
    q = shape.edge_count
    if len(ys) != q or len(ss) != q:
        raise ValueError(f"need {q} displacements and {q} path lengths")
    ys = tuple(tuple(int(c) for c in y) for y in ys)
    if any(len(y) != phi.d for y in ys):
        raise ValueError("displacement dimension does not match the embedding")
    ss = tuple(int(s) for s in ss)
    for lengths, images in skeleton_matches(tree, marks, shape):
        if lengths != ss:
            continue
        if path_displacements(phi, images) == ys:
            return True
    return False


def compatible_patterns(tree: PlaneTree, marks: tuple, shape: Shape, phi=None) -> set:
    """All distinct (lengths, displacements) the marked tree is compatible with.

    Without an embedding, returns the set of distinct length vectors.
    """
    out = set()
    for lengths, images in skeleton_matches(tree, marks, shape):
        if phi is None:
            out.add(lengths)
        else:
            out.add((lengths, path_displacements(phi, images)))
    return out
