"""Weakly self-avoiding lattice trees.

A configuration is an embedded plane tree; it picks up a factor e^(-beta)
per self-intersection pair.  beta = 0 is the unconstrained model, and as
beta -> infinity only injective configurations survive, each lattice tree
(a connected cycle-free bond set containing the origin) receiving equal
mass 1/ell_n.  All partition data is computed exactly as a polynomial in
e^(-beta) with exact-weight coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import CapError
from .plane_tree import ExactWeight, OffspringModel, PlaneTree, enumerate_plane_trees, tree_probability
from .embedding import Embedding, iter_embedding_positions, unit_vectors

#: caps for full lattice-tree enumeration, per dimension
ENUMERATION_CAPS = {1: 20, 2: 8, 3: 5}
#: caps for exhaustive configuration censuses (plane trees x embeddings)
CENSUS_CAPS = {1: 9, 2: 6, 3: 4}


def _bond(x: tuple, y: tuple) -> tuple:
    return (x, y) if x <= y else (y, x)


@dataclass(frozen=True)
class LatticeTree:
    """Connected, cycle-free set of nearest-neighbour bonds containing the origin.

    The one-site tree is the empty bond set, read as the origin alone
    (ell_1 = 1 by convention).
    """

    d: int
    bonds: frozenset

    def __post_init__(self):
        bonds = frozenset(_bond(tuple(int(c) for c in x), tuple(int(c) for c in y))
                          for x, y in self.bonds)
        object.__setattr__(self, "bonds", bonds)
        origin = tuple([0] * self.d)
        sites = set()
        for x, y in bonds:
            if len(x) != self.d or len(y) != self.d:
                raise ValueError("bond endpoints must have d coordinates")
            if sum(abs(a - b) for a, b in zip(x, y)) != 1:
                raise ValueError(f"{x}-{y} is not a nearest-neighbour bond")
            sites.add(x)
            sites.add(y)
        if bonds:
            if origin not in sites:
                raise ValueError("lattice tree must contain the origin")
            if len(sites) != len(bonds) + 1:
                raise ValueError("bond set contains a cycle or repeated bond")
            # connectivity from the origin
            adj = {s: [] for s in sites}
            for x, y in bonds:
                adj[x].append(y)
                adj[y].append(x)
            seen = {origin}
            stack = [origin]
            while stack:
                for nb in adj[stack.pop()]:
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            if len(seen) != len(sites):
                raise ValueError("bond set is not connected")

    @property
    def sites(self) -> frozenset:
        if not self.bonds:
            return frozenset({tuple([0] * self.d)})
        out = set()
        for x, y in self.bonds:
            out.add(x)
            out.add(y)
        return frozenset(out)

    @property
    def n(self) -> int:
        return len(self.sites)

    def degrees(self) -> dict:
        deg = {s: 0 for s in self.sites}
        for x, y in self.bonds:
            deg[x] += 1
            deg[y] += 1
        return deg

    def branching_numbers(self) -> dict:
        """b_x: the origin's degree, every other site's degree minus 1."""
        origin = tuple([0] * self.d)
        return {s: (deg if s == origin else deg - 1) for s, deg in self.degrees().items()}

    def to_json(self) -> list:
        return [[list(x), list(y)] for x, y in sorted(self.bonds)]

    @classmethod
    def from_json(cls, d: int, rows: list) -> "LatticeTree":
        return cls(d, frozenset((tuple(x), tuple(y)) for x, y in rows))


@dataclass(frozen=True)
class IntersectionCount:
    """Number of unordered self-intersection pairs of a configuration."""

    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("intersection count cannot be negative")

    @property
    def is_injective(self) -> bool:
        return self.value == 0


def intersection_count(tree: PlaneTree, phi: Embedding) -> IntersectionCount:
    """Sum over sites of C(multiplicity, 2)."""
    phi.check_consistent(tree)
    mult: dict = {}
    for p in phi.positions:
        mult[p] = mult.get(p, 0) + 1
    return IntersectionCount(sum(c * (c - 1) // 2 for c in mult.values()))


def enumerate_lattice_trees(n: int, d: int) -> list:
    """All n-site lattice trees containing the origin, deduplicated by bond set."""
    if n < 1:
        raise ValueError("site count must be positive")
    cap = ENUMERATION_CAPS.get(d)
    if cap is None or n > cap:
        raise CapError(f"lattice-tree enumeration capped at n={cap} for d={d}")
    return [LatticeTree(d, bonds) for bonds in sorted(_lattice_tree_bond_sets(n, d))]


@lru_cache(maxsize=None)
def _lattice_tree_bond_sets(n: int, d: int) -> frozenset:
    origin = tuple([0] * d)
    units = unit_vectors(d)
    if n == 1:
        return frozenset({frozenset()})
    out = set()
    for bonds in _lattice_tree_bond_sets(n - 1, d):
        sites = {origin}
        for x, y in bonds:
            sites.add(x)
            sites.add(y)
        for x in sites:
            for u in units:
                y = tuple(a + b for a, b in zip(x, u))
                if y not in sites:
                    out.add(bonds | {_bond(x, y)})
    return frozenset(out)


def lattice_tree_count(n: int, d: int) -> int:
    """ell_n: how many n-site lattice trees contain the origin."""
    return len(enumerate_lattice_trees(n, d))


@lru_cache(maxsize=None)
def _configuration_census(n: int, d: int):
    """Exhaustive sweep of all embedded size-n plane trees.

    Returns (polynomial, image_counts, image_weights) where polynomial maps
    an intersection count c to the exact total weight of configurations
    with c intersection pairs, image_counts maps each lattice tree's bond
    set to its number #{(T, phi): phi(T) = L} of preimage configurations,
    and image_weights maps it to the exact total P(T, phi) mass.
    """
    cap = CENSUS_CAPS.get(d)
    if cap is None or n > cap:
        raise CapError(f"configuration census capped at n={cap} for d={d}")
    poly: dict = {}
    image_counts: dict = {}
    image_weights: dict = {}
    spread = Fraction(1, (2 * d) ** (n - 1))
    for tree in enumerate_plane_trees(n):
        coeff = tree_probability(tree).coeff * spread
        parent = tree.parents()
        for pos in iter_embedding_positions(tree, d):
            mult: dict = {}
            for p in pos:
                mult[p] = mult.get(p, 0) + 1
            c = sum(k * (k - 1) // 2 for k in mult.values())
            poly[c] = poly.get(c, Fraction(0)) + coeff
            if c == 0:
                bonds = frozenset(_bond(pos[v], pos[parent[v]]) for v in range(1, n))
                image_counts[bonds] = image_counts.get(bonds, 0) + 1
                image_weights[bonds] = image_weights.get(bonds, Fraction(0)) + coeff
    return poly, image_counts, image_weights


def partition_polynomial(n: int, d: int) -> dict:
    """Z_n^beta as a polynomial in e^(-beta): {intersection count: ExactWeight}."""
    poly, _, _ = _configuration_census(n, d)
    return {c: ExactWeight(w, n) for c, w in sorted(poly.items())}


def partition_function(n: int, d: int, beta):
    """Z_n^beta: exact (ExactWeight) at beta in {0, inf}, float otherwise."""
    if beta != math.inf and beta < 0:
        raise ValueError("beta must be nonnegative")
    poly, _, _ = _configuration_census(n, d)
    if beta == math.inf:
        return ExactWeight(poly.get(0, Fraction(0)), n)
    if beta == 0:
        return ExactWeight(sum(poly.values(), Fraction(0)), n)
    return math.fsum(
        ExactWeight(w, n).to_float() * math.exp(-beta * c) for c, w in sorted(poly.items())
    )


def q_mass_of_lattice_tree(tree: LatticeTree, beta):
    """Total normalized mass of all configurations whose image is the tree.

    Configurations mapping onto a lattice tree are injective, so the
    numerator does not depend on beta; only the normalization does.  Exact
    Fraction at beta in {0, inf}, float otherwise.
    """
    n = tree.n
    _, _, image_weights = _configuration_census(n, tree.d)
    numerator = image_weights.get(tree.bonds, Fraction(0))
    z = partition_function(n, tree.d, beta)
    if isinstance(z, ExactWeight):
        return numerator / z.coeff
    return ExactWeight(numerator, n).to_float() / z


def nu(tree: LatticeTree) -> int:
    """#{(T, phi): phi(T) = L}, counted by explicit configuration search."""
    _, image_counts, _ = _configuration_census(tree.n, tree.d)
    return image_counts.get(tree.bonds, 0)


def nu_formula(tree: LatticeTree) -> int:
    """prod_x b_x!: the closed form the search count is checked against."""
    out = 1
    for b in tree.branching_numbers().values():
        out *= math.factorial(b)
    return out


def origin_branches(tree: LatticeTree) -> list:
    """Subtrees hanging off the origin, each translated to put its root at 0."""
    origin = tuple([0] * tree.d)
    out = []
    for x, y in sorted(tree.bonds):
        if origin not in (x, y):
            continue
        nb = y if x == origin else x
        branch_sites = set()
        stack = [nb]
        adj: dict = {}
        for a, b in tree.bonds:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        seen = {origin, nb}
        branch_bonds = set()
        while stack:
            v = stack.pop()
            branch_sites.add(v)
            for w in adj[v]:
                if w == origin:
                    continue
                bond = _bond(v, w)
                if bond in tree.bonds and bond not in branch_bonds:
                    branch_bonds.add(bond)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        shifted = frozenset(
            (tuple(a - c for a, c in zip(x2, nb)), tuple(b - c for b, c in zip(y2, nb)))
            for x2, y2 in branch_bonds
        )
        out.append(LatticeTree(tree.d, shifted))
    return out


def general_offspring_limit_weight(tree: LatticeTree, model: OffspringModel) -> Fraction:
    """Limiting mass of a lattice tree under a general critical offspring law:
    prod_x p_{b_x} b_x! normalized over all same-size lattice trees."""
    if model.kind != "general":
        raise ValueError("the general-offspring limit needs a general model")

    def weight(lt: LatticeTree) -> Fraction:
        w = Fraction(1)
        for b in lt.branching_numbers().values():
            w *= model.probability(b) * math.factorial(b)
        return w

    numerator = weight(tree)
    denom = sum((weight(lt) for lt in enumerate_lattice_trees(tree.n, tree.d)), Fraction(0))
    if denom == 0:
        raise ValueError("every lattice tree of this size has weight zero under the model")
    return numerator / denom
