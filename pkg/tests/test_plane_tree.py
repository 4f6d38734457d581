"""Unit tests for plane trees, exact weights and the conditioned sampler.

Core claims:
    - enumeration is complete, duplicate-free, lexicographic, Catalan-counted
    - tree weights are exact rationals times e^(-n) and sum to the size law
    - the size-law partial sums stay below 1 and increase
    - the cycle-lemma sampler reproduces the exact conditional law
    - the word coding round-trips
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mflt.errors import CapError
from mflt.plane_tree import (
    ExactWeight,
    OffspringModel,
    PlaneTree,
    conditioned_offspring_counts,
    enumerate_plane_trees,
    sample_conditioned_tree,
    size_probability_exact,
    sum_weights,
    tree_probability,
)

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862]


# -- ExactWeight --------------------------------------------------------------

def test_weight_addition_needs_matching_epow():
    with pytest.raises(ValueError):
        ExactWeight(Fraction(1), 1) + ExactWeight(Fraction(1), 2)


def test_weight_multiplication_adds_epow():
    w = ExactWeight(Fraction(1, 2), 3) * ExactWeight(Fraction(2, 5), 4)
    assert w == ExactWeight(Fraction(1, 5), 7)


def test_weight_json_round_trip():
    w = ExactWeight(Fraction(-7, 12), 5)
    assert ExactWeight.from_json(w.to_json()) == w
    assert w.to_json() == {"num": "-7", "den": "12", "epow": 5}


def test_weight_to_float_handles_huge_coefficients():
    n = 2000
    w = size_probability_exact(n)
    direct = math.exp((n - 1) * math.log(n) - math.lgamma(n + 1) - n)
    assert w.to_float() == pytest.approx(direct, rel=1e-12)


@given(st.fractions(), st.fractions(), st.integers(min_value=0, max_value=50))
def test_weight_addition_commutes(a, b, epow):
    x, y = ExactWeight(a, epow), ExactWeight(b, epow)
    assert x + y == y + x


# -- enumeration --------------------------------------------------------------

def test_single_vertex_tree():
    assert [t.child_counts for t in enumerate_plane_trees(1)] == [(0,)]


def test_size_three_trees_in_lex_order():
    assert [t.child_counts for t in enumerate_plane_trees(3)] == [(1, 1, 0), (2, 0, 0)]


@pytest.mark.parametrize("n", range(1, 11))
def test_catalan_counts_and_uniqueness(n):
    trees = list(enumerate_plane_trees(n))
    assert len(trees) == CATALAN[n - 1]
    assert len(set(trees)) == len(trees)
    seqs = [t.child_counts for t in trees]
    assert seqs == sorted(seqs)


def test_enumeration_argument_errors():
    with pytest.raises(ValueError):
        list(enumerate_plane_trees(0))
    with pytest.raises(CapError):
        list(enumerate_plane_trees(15))
    with pytest.raises(CapError):
        list(enumerate_plane_trees(6, cap=5))
    assert len(list(enumerate_plane_trees(6, cap=6))) == 42


def test_invalid_sequences_rejected():
    for bad in [(), (1,), (0, 0), (2, 0), (1, 1), (3, 0, 0)]:
        with pytest.raises(ValueError):
            PlaneTree(bad)


# -- weights ------------------------------------------------------------------

def test_tree_probability_examples():
    assert tree_probability(PlaneTree((0,))) == ExactWeight(Fraction(1), 1)
    assert tree_probability(PlaneTree((2, 0, 0))) == ExactWeight(Fraction(1, 2), 3)
    assert tree_probability(PlaneTree((1, 1, 0))) == ExactWeight(Fraction(1), 3)


def test_general_offspring_model():
    model = OffspringModel.general([Fraction(1, 2), 0, Fraction(1, 2)])
    assert tree_probability(PlaneTree((2, 0, 0)), model) == ExactWeight(Fraction(1, 8), 0)
    # chain needs p_1 which is zero, fine; degree above truncation is not
    assert tree_probability(PlaneTree((1, 0)), model).is_zero
    with pytest.raises(ValueError):
        tree_probability(PlaneTree((3, 0, 0, 0)), model)


def test_general_model_criticality_enforced():
    with pytest.raises(ValueError):
        OffspringModel.general([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    with pytest.raises(ValueError):
        OffspringModel.general([Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)])


@pytest.mark.parametrize("n,coeff", [(1, Fraction(1)), (2, Fraction(1)), (3, Fraction(3, 2))])
def test_size_law_small_values(n, coeff):
    assert size_probability_exact(n) == ExactWeight(coeff, n)


@pytest.mark.parametrize("n", range(1, 10))
def test_size_law_enumeration_matches_closed_form(n):
    assert size_probability_exact(n, "enumerate") == size_probability_exact(n, "closed")


def test_size_law_partial_sums_below_one_and_increasing():
    total = 0.0
    checkpoints = {10: None, 100: None, 1000: None, 10000: None}
    for n in range(1, 10001):
        total += math.exp((n - 1) * math.log(n) - math.lgamma(n + 1) - n)
        if n in checkpoints:
            checkpoints[n] = total
    values = [checkpoints[n] for n in sorted(checkpoints)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] < 1.0


# -- word coding --------------------------------------------------------------

@pytest.mark.parametrize("n", range(1, 8))
def test_word_round_trip(n):
    for t in enumerate_plane_trees(n):
        assert PlaneTree.from_words(t.to_words()) == t


def test_words_match_child_positions():
    t = PlaneTree((2, 1, 0, 0))
    assert sorted(t.to_words()) == [(), (1,), (1, 1), (2,)]


# -- conditioned sampling -----------------------------------------------------

def test_sampler_trivial_sizes():
    rng = np.random.default_rng(0)
    assert sample_conditioned_tree(1, rng).child_counts == (0,)
    assert sample_conditioned_tree(2, rng).child_counts == (1, 0)


def test_sampler_matches_conditional_law_size3():
    # conditional weights e^-3 : e^-3/2, so (1,1,0) appears w.p. 2/3
    rng = np.random.default_rng(20240817)
    draws = 100_000
    hits = sum(sample_conditioned_tree(3, rng).child_counts == (1, 1, 0)
               for _ in range(draws))
    expected = draws * 2 / 3
    chi2 = (hits - expected) ** 2 / expected \
        + ((draws - hits) - draws / 3) ** 2 / (draws / 3)
    assert chi2 < 6.63  # 1% point of chi-square with one degree of freedom


def test_sampler_matches_conditional_law_size4():
    rng = np.random.default_rng(7)
    draws = 60_000
    weights = {t: tree_probability(t).coeff for t in enumerate_plane_trees(4)}
    z = sum(weights.values())
    counts = {t: 0 for t in weights}
    for _ in range(draws):
        counts[sample_conditioned_tree(4, rng)] += 1
    chi2 = sum(
        (counts[t] - draws * w / z) ** 2 / (draws * w / z) for t, w in weights.items()
    )
    assert chi2 < 15.09  # 1% point, 4 degrees of freedom


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=2**32 - 1))
def test_sampled_counts_always_valid(n, seed):
    counts = conditioned_offspring_counts(n, np.random.default_rng(seed))
    tree = PlaneTree(tuple(counts))  # constructor re-checks the path property
    assert tree.size == n
    assert sum(counts) == n - 1


def test_sampler_deterministic_in_seed():
    a = sample_conditioned_tree(50, np.random.default_rng(123))
    b = sample_conditioned_tree(50, np.random.default_rng(123))
    assert a == b


def test_sum_weights_empty_is_zero():
    assert sum_weights([], 4) == ExactWeight.zero(4)
