"""Plane trees under the critical Poisson offspring law.

A plane tree is stored as its depth-first child-count sequence (the
Łukasiewicz word): one nonnegative integer per vertex, in the order the
vertices are first visited, recording how many children each vertex has.
Two plane trees are equal iff their sequences are equal, which matches the
word coding 0, 01, 02, ... of ordered rooted trees.

Probabilities are carried exactly: every tree weight under the critical
Poisson law is a rational multiple of e^(-n), so :class:`ExactWeight`
stores the rational coefficient and the integer power of e separately and
never touches floating point until a caller asks for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CapError

#: Default cap for exhaustive enumeration (C_13 = 742900 trees at n = 14).
DEFAULT_ENUMERATION_CAP = 14


@dataclass(frozen=True)
class ExactWeight:
    """An exact rational coefficient times e^(-epow).

    Addition is only defined between weights with the same ``epow``;
    multiplication adds the exponents.  The coefficient is a
    :class:`fractions.Fraction`, hence always in lowest terms.
    """

    coeff: Fraction
    epow: int

    def __post_init__(self):
        if not isinstance(self.coeff, Fraction):
            object.__setattr__(self, "coeff", Fraction(self.coeff))
        if self.epow < 0:
            raise ValueError("epow must be a nonnegative integer")

    @classmethod
    def zero(cls, epow: int) -> "ExactWeight":
        return cls(Fraction(0), epow)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def __add__(self, other: "ExactWeight") -> "ExactWeight":
        if not isinstance(other, ExactWeight):
            return NotImplemented
        if self.epow != other.epow:
            raise ValueError(
                f"cannot add weights with different e-powers ({self.epow} != {other.epow})"
            )
        return ExactWeight(self.coeff + other.coeff, self.epow)

    def __sub__(self, other: "ExactWeight") -> "ExactWeight":
        if not isinstance(other, ExactWeight):
            return NotImplemented
        if self.epow != other.epow:
            raise ValueError(
                f"cannot subtract weights with different e-powers ({self.epow} != {other.epow})"
            )
        return ExactWeight(self.coeff - other.coeff, self.epow)

    def __mul__(self, other):
        if isinstance(other, ExactWeight):
            return ExactWeight(self.coeff * other.coeff, self.epow + other.epow)
        if isinstance(other, (int, Fraction)):
            return ExactWeight(self.coeff * other, self.epow)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self) -> "ExactWeight":
        return ExactWeight(-self.coeff, self.epow)

    def __abs__(self) -> "ExactWeight":
        return ExactWeight(abs(self.coeff), self.epow)

    def to_float(self) -> float:
        """Value as a float, computed in log space to survive huge coefficients."""
        if self.coeff == 0:
            return 0.0
        num, den = self.coeff.numerator, self.coeff.denominator
        sign = 1.0 if num > 0 else -1.0
        return sign * math.exp(math.log(abs(num)) - math.log(den) - self.epow)

    def to_json(self) -> dict:
        return {
            "num": str(self.coeff.numerator),
            "den": str(self.coeff.denominator),
            "epow": self.epow,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExactWeight":
        return cls(Fraction(int(obj["num"]), int(obj["den"])), int(obj["epow"]))

    def __repr__(self):
        return f"ExactWeight({self.coeff}, e^-{self.epow})"


def sum_weights(weights, epow: int) -> ExactWeight:
    """Sum an iterable of equal-epow weights; empty sums give zero at ``epow``."""
    total = ExactWeight.zero(epow)
    for w in weights:
        total = total + w
    return total


@dataclass(frozen=True)
class PlaneTree:
    """Ordered rooted tree, stored as a depth-first child-count sequence."""

    child_counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.child_counts)
        object.__setattr__(self, "child_counts", counts)
        n = len(counts)
        if n == 0:
            raise ValueError("a plane tree has at least one vertex")
        walk = 1
        for i, c in enumerate(counts):
            if c < 0:
                raise ValueError("child counts must be nonnegative")
            walk += c - 1
            if walk <= 0 and i < n - 1:
                raise ValueError("invalid child-count sequence (path hits zero early)")
        if walk != 0:
            raise ValueError("invalid child-count sequence (does not close)")

    @property
    def size(self) -> int:
        return len(self.child_counts)

    def parents(self) -> list:
        """Parent index of every vertex in word order; the root gets -1."""
        counts = self.child_counts
        parent = [-1] * len(counts)
        stack = [0]
        remaining = [counts[0]]
        for v in range(1, len(counts)):
            while remaining[-1] == 0:
                stack.pop()
                remaining.pop()
            parent[v] = stack[-1]
            remaining[-1] -= 1
            stack.append(v)
            remaining.append(counts[v])
        return parent

    def depths(self) -> list:
        parent = self.parents()
        depth = [0] * self.size
        for v in range(1, self.size):
            depth[v] = depth[parent[v]] + 1
        return depth

    def children(self) -> list:
        """Lists of child indices per vertex, in word order."""
        out = [[] for _ in range(self.size)]
        for v, p in enumerate(self.parents()):
            if p >= 0:
                out[p].append(v)
        return out

    def to_words(self) -> frozenset:
        """The word coding: every vertex as its tuple of child positions from the root."""
        words = [()] * self.size
        child_rank = [0] * self.size
        for v, p in enumerate(self.parents()):
            if p >= 0:
                child_rank[p] += 1
                words[v] = words[p] + (child_rank[p],)
        return frozenset(words)

    @classmethod
    def from_words(cls, words) -> "PlaneTree":
        ordered = sorted(words)  # lexicographic order on words = depth-first order
        child_counts = []
        for w in ordered:
            child_counts.append(sum(1 for u in words if len(u) == len(w) + 1 and u[: len(w)] == w))
        return cls(tuple(child_counts))


@dataclass(frozen=True)
class OffspringModel:
    """Offspring law: either the critical Poisson(1) or an explicit critical p_m table."""

    kind: str
    p: tuple = ()

    def __post_init__(self):
        if self.kind == "poisson":
            return
        if self.kind != "general":
            raise ValueError(f"unknown offspring model kind {self.kind!r}")
        probs = tuple(Fraction(x) for x in self.p)
        object.__setattr__(self, "p", probs)
        if any(q < 0 for q in probs):
            raise ValueError("offspring probabilities must be nonnegative")
        if sum(probs, Fraction(0)) != 1:
            raise ValueError("offspring probabilities must sum to 1")
        mean = sum((m * q for m, q in enumerate(probs)), Fraction(0))
        if mean != 1:
            raise ValueError(f"offspring distribution must be critical (mean 1, got {mean})")

    @classmethod
    def poisson(cls) -> "OffspringModel":
        return cls("poisson")

    @classmethod
    def general(cls, p: Sequence) -> "OffspringModel":
        return cls("general", tuple(p))

    def probability(self, m: int) -> Fraction:
        """p_m for the general model; raises for degrees beyond the truncation."""
        if self.kind != "general":
            raise ValueError("probability() is only defined for general models")
        if m >= len(self.p):
            raise ValueError(f"offspring degree {m} is beyond the model truncation")
        return self.p[m]


def enumerate_plane_trees(n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[PlaneTree]:
    """Yield every plane tree with ``n`` vertices, in lexicographic order
    of child-count sequences.  There are Catalan(n-1) of them.
    """
    if n < 1:
        raise ValueError("tree size must be at least 1")
    if n > cap:
        raise CapError(f"enumeration of size-{n} trees exceeds the cap {cap}")

    prefix = [0] * n

    # After placing counts for the first `pos` vertices with total `placed_sum`,
    # the number of unfilled child slots is placed_sum - pos + 1; it must stay
    # >= 1 while vertices remain and reach 0 exactly at the end.
    def rec(pos: int, placed_sum: int):
        if pos == n:
            yield PlaneTree(tuple(prefix))
            return
        if pos == n - 1:
            c = n - 1 - placed_sum
            prefix[pos] = c
            yield from rec(pos + 1, placed_sum + c)
            return
        lo = max(0, pos + 1 - placed_sum)
        hi = n - 1 - placed_sum
        for c in range(lo, hi + 1):
            prefix[pos] = c
            yield from rec(pos + 1, placed_sum + c)

    return rec(0, 0)


def tree_probability(tree: PlaneTree, model: OffspringModel = OffspringModel.poisson()) -> ExactWeight:
    """Exact probability of a plane tree under the offspring law.

    Critical Poisson gives prod_i 1/xi_i! times e^(-n); a general critical
    law gives prod_i p_{xi_i} with no e factor.
    """
    if model.kind == "poisson":
        denom = 1
        for c in tree.child_counts:
            denom *= math.factorial(c)
        return ExactWeight(Fraction(1, denom), tree.size)
    coeff = Fraction(1)
    for c in tree.child_counts:
        coeff *= model.probability(c)
    return ExactWeight(coeff, 0)


def size_probability_exact(n: int, method: str = "closed",
                           cap: int = DEFAULT_ENUMERATION_CAP) -> ExactWeight:
    """P(|T| = n) for the critical Poisson tree, exactly.

    ``closed`` evaluates n^(n-1) e^(-n) / n!; ``enumerate`` sums
    tree_probability over every tree of size n (subject to the cap).
    The two agree exactly, which the test suite verifies.
    """
    if n < 1:
        raise ValueError("tree size must be at least 1")
    if method == "closed":
        return ExactWeight(Fraction(n ** (n - 1), math.factorial(n)), n)
    if method == "enumerate":
        return sum_weights((tree_probability(t) for t in enumerate_plane_trees(n, cap=cap)), n)
    raise ValueError(f"unknown method {method!r}")


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def conditioned_offspring_counts(n: int, rng) -> np.ndarray:
    """Child counts of the Poisson(1) tree conditioned on n vertices, in word order.

    n i.i.d. Poisson(1) counts conditioned on total n-1 form a multinomial
    (n-1 balls into n equiprobable boxes); the cycle lemma then says exactly
    one rotation of the count sequence is a valid depth-first code, namely
    the one starting just past the first minimum of the partial sums of
    (count - 1).  This is exact and rejection-free.
    """
    if n < 1:
        raise ValueError("tree size must be at least 1")
    gen = _as_generator(rng)
    if n == 1:
        gen.multinomial(0, np.ones(1))  # keep the stream aligned across sizes
        return np.zeros(1, dtype=np.int64)
    counts = gen.multinomial(n - 1, np.full(n, 1.0 / n)).astype(np.int64)
    walk = np.cumsum(counts - 1)
    start = (int(np.argmin(walk)) + 1) % n
    if start == 0:
        return counts
    return np.concatenate([counts[start:], counts[:start]])


def sample_conditioned_tree(n: int, rng) -> PlaneTree:
    """Draw a critical Poisson plane tree conditioned on having n vertices."""
    return PlaneTree(tuple(conditioned_offspring_counts(n, rng)))
