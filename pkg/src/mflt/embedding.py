"""Embeddings of plane trees into Z^d and exact embedding-summed quantities.

An embedding maps the root to the origin and every tree edge to a
nearest-neighbour step.  All exact sums over embeddings are organised as
convolutions of the uniform step distribution along tree edges, so costs
stay polynomial in the tree size instead of (2d)^(n-1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import CapError
from .plane_tree import (
    DEFAULT_ENUMERATION_CAP,
    ExactWeight,
    PlaneTree,
    conditioned_offspring_counts,
    enumerate_plane_trees,
    tree_probability,
)


def unit_vectors(d: int) -> list:
    """The 2d nearest-neighbour steps; index 2a is +e_a, index 2a+1 is -e_a."""
    out = []
    for axis in range(d):
        plus = tuple(1 if j == axis else 0 for j in range(d))
        minus = tuple(-1 if j == axis else 0 for j in range(d))
        out.append(plus)
        out.append(minus)
    return out


def _add(x: tuple, y: tuple) -> tuple:
    return tuple(a + b for a, b in zip(x, y))


def _sub(x: tuple, y: tuple) -> tuple:
    return tuple(a - b for a, b in zip(x, y))


@lru_cache(maxsize=None)
def walk_distribution(s: int, d: int) -> dict:
    """Exact law of an s-step uniform nearest-neighbour walk started at 0.

    Returns {lattice point: Fraction}; each value is (number of walks)/(2d)^s.
    Cached, so repeated convolutions across trees are shared.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    if s == 0:
        return {tuple([0] * d): Fraction(1)}
    prev = walk_distribution(s - 1, d)
    step_p = Fraction(1, 2 * d)
    out: dict = {}
    for x, w in prev.items():
        for u in unit_vectors(d):
            y = _add(x, u)
            out[y] = out.get(y, Fraction(0)) + w * step_p
    return out


@dataclass(frozen=True)
class Embedding:
    """Positions of a tree's vertices in Z^d, in word order."""

    d: int
    positions: tuple

    def __post_init__(self):
        pos = tuple(tuple(int(c) for c in p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if any(len(p) != self.d for p in pos):
            raise ValueError("every position must have d coordinates")
        if pos[0] != tuple([0] * self.d):
            raise ValueError("the root must sit at the origin")

    def check_consistent(self, tree: PlaneTree):
        if len(self.positions) != tree.size:
            raise ValueError("embedding and tree have different vertex counts")
        for v, p in enumerate(tree.parents()):
            if v == 0:
                continue
            step = _sub(self.positions[v], self.positions[p])
            if sum(abs(c) for c in step) != 1:
                raise ValueError(f"vertices {p} and {v} are not lattice neighbours")


@dataclass
class LatticeDistribution:
    """Finitely supported map from Z^d points to exact weights."""

    d: int
    support: dict = field(default_factory=dict)

    def __post_init__(self):
        self.support = {tuple(x): w for x, w in self.support.items() if not w.is_zero}

    def add(self, x: tuple, w: ExactWeight):
        if w.is_zero:
            return
        cur = self.support.get(x)
        self.support[x] = w if cur is None else cur + w
        if self.support[x].is_zero:
            del self.support[x]

    def weight(self, x) -> ExactWeight | None:
        return self.support.get(tuple(x))

    def total(self, epow: int) -> ExactWeight:
        tot = ExactWeight.zero(epow)
        for w in self.support.values():
            tot = tot + w
        return tot

    def __eq__(self, other):
        return isinstance(other, LatticeDistribution) and self.d == other.d \
            and self.support == other.support

    def to_json(self) -> list:
        return [{"x": list(x), "w": w.to_json()} for x, w in sorted(self.support.items())]

    @classmethod
    def from_json(cls, d: int, rows: list) -> "LatticeDistribution":
        return cls(d, {tuple(r["x"]): ExactWeight.from_json(r["w"]) for r in rows})

    def csv_rows(self) -> Iterator[list]:
        """One row per lattice point: coordinates, then num/den/epow."""
        for x, w in sorted(self.support.items()):
            yield list(x) + [str(w.coeff.numerator), str(w.coeff.denominator), w.epow]


@dataclass
class PointMeasure:
    """Finitely supported probability measure on R^d.

    Atoms live at x * sqrt(d) * n^(-1/4) for lattice points x; they are
    stored by lattice point with exact rational masses summing to 1.
    """

    d: int
    n: int
    atoms: dict

    def __post_init__(self):
        self.atoms = {tuple(x): Fraction(m) for x, m in self.atoms.items() if m != 0}
        if sum(self.atoms.values(), Fraction(0)) != 1:
            raise ValueError("atom masses must sum to exactly 1")

    @property
    def scale(self) -> float:
        return self.d ** 0.5 * self.n ** (-0.25)

    def point_masses(self) -> list:
        """Atoms as (R^d location, mass) pairs, deterministically ordered."""
        s = self.scale
        return [(tuple(c * s for c in x), m) for x, m in sorted(self.atoms.items())]


def configuration_probability(tree: PlaneTree, phi: Embedding) -> ExactWeight:
    """P(T, phi) = (2d)^-(n-1) P(T): tree weight spread uniformly over embeddings."""
    phi.check_consistent(tree)
    n = tree.size
    w = tree_probability(tree)
    return ExactWeight(w.coeff * Fraction(1, (2 * phi.d) ** (n - 1)), w.epow)


def depth_profile_mass(n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    """mass[s] = sum over size-n trees of P(T) * #{vertices at depth s}."""
    mass = [ExactWeight.zero(n) for _ in range(n)]
    for t in enumerate_plane_trees(n, cap=cap):
        w = tree_probability(t)
        for s in t.depths():
            mass[s] = mass[s] + w
    return mass


def two_point_coefficient_exact(n: int, d: int, include_depth: bool = False,
                                cap: int = DEFAULT_ENUMERATION_CAP):
    """Exact x -> t_n(x): mass at x from embedded size-n trees containing x.

    Sums over all plane trees of size n; per tree, the displacement law of
    each vertex is its depth-fold step convolution (the edge-by-edge
    convolution collapses to the cached walk law).  With include_depth the
    result is split by the graph distance s from the root, i.e. graded by
    the backbone length.
    """
    mass = depth_profile_mass(n, cap=cap)
    if include_depth:
        out = {}
        for s in range(n):
            dist = LatticeDistribution(d)
            if not mass[s].is_zero:
                for x, p in walk_distribution(s, d).items():
                    dist.add(x, mass[s] * p)
            out[s] = dist
        return out
    dist = LatticeDistribution(d)
    for s in range(n):
        if mass[s].is_zero:
            continue
        for x, p in walk_distribution(s, d).items():
            dist.add(x, mass[s] * p)
    return dist


def _steiner_structure(tree: PlaneTree, marks: tuple):
    """Reduced spanning subtree of the root and the marked vertices.

    Returns (significant, reduced_children) where reduced_children maps a
    significant vertex to [(child_vertex, path_length), ...]; significant
    vertices are the root, the marks and the branch points of the subtree.
    """
    parent = tree.parents()
    in_steiner = set()
    for v in marks:
        u = v
        while u != -1 and u not in in_steiner:
            in_steiner.add(u)
            u = parent[u]
    child_count = {v: 0 for v in in_steiner}
    for v in in_steiner:
        if v != 0:
            child_count[parent[v]] += 1
    significant = {0} | set(marks) | {v for v, c in child_count.items() if c >= 2}
    reduced_children = {v: [] for v in significant}
    for v in sorted(in_steiner):
        if v == 0 or v not in significant:
            continue
        u = parent[v]
        length = 1
        while u not in significant:
            u = parent[u]
            length += 1
        reduced_children[u].append((v, length))
    return significant, reduced_children


def _joint_position_probability(tree: PlaneTree, marks: tuple, targets: tuple, d: int) -> Fraction:
    """Pr over uniform embeddings that vertex marks[j] lands on targets[j] for all j."""
    constraint = {}
    for v, x in zip(marks, targets):
        x = tuple(x)
        if v in constraint and constraint[v] != x:
            return Fraction(0)
        constraint[v] = x
    origin = tuple([0] * d)
    if 0 in constraint and constraint[0] != origin:
        return Fraction(0)
    _, reduced_children = _steiner_structure(tree, marks)

    def down(v: int, pos: tuple) -> Fraction:
        total = Fraction(1)
        for child, length in reduced_children[v]:
            law = walk_distribution(length, d)
            if child in constraint:
                target = constraint[child]
                p = law.get(_sub(target, pos), Fraction(0))
                if p == 0:
                    return Fraction(0)
                total *= p * down(child, target)
            else:
                acc = Fraction(0)
                for delta, p in law.items():
                    acc += p * down(child, _add(pos, delta))
                total *= acc
            if total == 0:
                return total
        return total

    return down(0, origin)


def moment_sum_exact(n: int, d: int, l: int, xs: tuple,
                     cap: int = DEFAULT_ENUMERATION_CAP) -> ExactWeight:
    """Exact mass of l marked vertices landing on prescribed sites.

    Sums P(T, phi) over all embedded size-n trees and over all l-tuples of
    vertices whose images are xs, by integrating out every edge off the
    spanning subtree of the marks (those steps are unconstrained and sum
    to 1) and convolving the step law along the spanning paths.
    """
    if len(xs) != l:
        raise ValueError("need exactly one target site per marked vertex")
    xs = tuple(tuple(int(c) for c in x) for x in xs)
    if any(len(x) != d for x in xs):
        raise ValueError("target sites must have d coordinates")
    total = ExactWeight.zero(n)
    for t in enumerate_plane_trees(n, cap=cap):
        w = tree_probability(t)
        acc = Fraction(0)
        for marks in itertools.product(range(n), repeat=l):
            acc += _joint_position_probability(t, marks, xs, d)
        if acc != 0:
            total = total + ExactWeight(w.coeff * acc, n)
    return total


def empirical_ise_measure(tree: PlaneTree, phi: Embedding) -> PointMeasure:
    """The rescaled occupation measure: mass 1/n at x sqrt(d) n^(-1/4) per visit."""
    phi.check_consistent(tree)
    n = tree.size
    atoms: dict = {}
    for p in phi.positions:
        atoms[p] = atoms.get(p, 0) + Fraction(1, n)
    return PointMeasure(phi.d, n, atoms)


def iter_embedding_positions(tree: PlaneTree, d: int) -> Iterator[tuple]:
    """All (2d)^(n-1) embeddings of a tree, as position tuples in word order."""
    n = tree.size
    parent = tree.parents()
    units = unit_vectors(d)
    origin = tuple([0] * d)
    if n == 1:
        yield (origin,)
        return
    for steps in itertools.product(units, repeat=n - 1):
        pos = [origin] * n
        for v in range(1, n):
            pos[v] = _add(pos[parent[v]], steps[v - 1])
        yield tuple(pos)


def enumerate_embeddings(tree: PlaneTree, d: int) -> Iterator[Embedding]:
    for pos in iter_embedding_positions(tree, d):
        yield Embedding(d, pos)


def sample_embedded_tree(n: int, d: int, rng) -> tuple:
    """Draw a uniform-step embedded tree of size n; returns (PlaneTree, Embedding).

    The rng is consumed in a fixed order (offspring counts first, then one
    step index per edge), so results are a deterministic function of seed.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    counts = conditioned_offspring_counts(n, rng)
    tree = PlaneTree(tuple(counts))
    units = unit_vectors(d)
    origin = tuple([0] * d)
    pos = [origin] * n
    if n > 1:
        parent = tree.parents()
        picks = rng.integers(0, 2 * d, size=n - 1)
        for v in range(1, n):
            pos[v] = _add(pos[parent[v]], units[picks[v - 1]])
    return tree, Embedding(d, tuple(pos))
