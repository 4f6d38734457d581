"""Scaling-limit experiment harness.

Four families of checks, each comparing an exactly- or stably-computed
finite-n quantity against its predicted asymptotic form:

  * the n^(-3/2) Stirling form of the size law,
  * coefficient asymptotics of the multi-point generating functions
    against the ISE characteristic functions (full and fixed backbone),
  * seeded Monte Carlo estimates of the empirical moment characteristic
    functions against their ISE targets,
  * the exact full/degenerate backbone decomposition with its
    shape-multiplicity error bound.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import tree_positions
from .embedding import iter_embedding_positions, unit_vectors
from .genfun import size_probability_float, t_hat_coefficient, t_hat_coefficient_fixed_s
from .ise import A_hat, moment_char
from .plane_tree import (
    ExactWeight,
    conditioned_offspring_counts,
    enumerate_plane_trees,
    size_probability_exact,
    tree_probability,
)
from .shapes import enumerate_shapes, shape_count, skeleton_matches

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class RatioReport:
    """Observed/predicted pairs along an n-grid."""

    label: str
    rows: tuple  # (n, observed, predicted, ratio)

    def __post_init__(self):
        if any(r[2] <= 0 for r in self.rows):
            raise ValueError("predicted values must be strictly positive")

    @property
    def max_deviation(self) -> float:
        return max(abs(r[3] - 1.0) for r in self.rows)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "rows": [
                {"n": n, "observed": obs, "predicted": pred, "ratio": ratio}
                for n, obs, pred, ratio in self.rows
            ],
            "max_deviation": self.max_deviation,
        }


def stirling_check(ns) -> RatioReport:
    """P(|T| = n) against (2 pi)^(-1/2) n^(-3/2); the ratio is 1 + O(1/n)."""
    rows = []
    for n in ns:
        if n < 1:
            raise ValueError("n must be positive")
        obs = size_probability_float(n)
        pred = _INV_SQRT_2PI * n ** -1.5
        rows.append((n, obs, pred, obs / pred))
    return RatioReport("stirling", tuple(rows))


def _as_vec(k, d):
    if isinstance(k, (int, float)):
        if d != 1:
            raise ValueError("scalar momentum only valid in d = 1")
        return (float(k),)
    k = tuple(float(c) for c in k)
    if len(k) != d:
        raise ValueError(f"momentum must have {d} coordinates")
    return k


def lemma41_check(k, ns, d: int, m: int = 2, shape_index: int = 0) -> RatioReport:
    """Full coefficient asymptotics: the size-n multi-point coefficient at
    momenta k sqrt(d) n^(-1/4) (the same k on every edge) against
    (2 pi)^(-1/2) n^(m - 5/2) A(k).
    """
    k = _as_vec(k, d)
    shape = enumerate_shapes(m)[shape_index]
    q = shape.edge_count
    target = A_hat(shape, (k,) * q)
    rows = []
    for n in ns:
        scale = d ** 0.5 * n ** -0.25
        ks = (tuple(c * scale for c in k),) * q
        obs = t_hat_coefficient(shape, n, ks, d)
        pred = _INV_SQRT_2PI * n ** (m - 2.5) * target
        rows.append((n, obs, pred, obs / pred))
    return RatioReport(f"lemma41_m{m}", tuple(rows))


def lemma42_check(k, u: float, ns, d: int) -> RatioReport:
    """Fixed-backbone-length asymptotics: the coefficient at path length
    floor(u sqrt(n)) against (2 pi)^(-1/2) n^-1 u e^(-u^2/2) e^(-k^2 u / 2).

    u = 0 is excluded: the limiting prefactor vanishes there and the ratio
    is not defined.
    """
    if u <= 0:
        raise ValueError("the fixed-length ratio check needs u > 0")
    k = _as_vec(k, d)
    k2 = sum(c * c for c in k)
    rows = []
    for n in ns:
        s = int(u * math.sqrt(n))
        scale = d ** 0.5 * n ** -0.25
        ks = (tuple(c * scale for c in k),)
        obs = t_hat_coefficient_fixed_s(n, ks, (s,), d)
        pred = _INV_SQRT_2PI / n * u * math.exp(-0.5 * u * u) * math.exp(-0.5 * k2 * u)
        rows.append((n, obs, pred, obs / pred))
    return RatioReport("lemma42", tuple(rows))


@dataclass(frozen=True)
class McMomentReport:
    """Seeded Monte Carlo estimate of an empirical moment characteristic
    function, with its ISE target and batch-means error bars."""

    n: int
    d: int
    l: int
    ks: tuple
    samples: int
    seed: int
    batches: int
    estimate: float
    imag_estimate: float
    std_error: float
    imag_std_error: float
    target: float

    def to_json(self) -> dict:
        return {
            "n": self.n, "d": self.d, "l": self.l,
            "ks": [list(k) for k in self.ks],
            "samples": self.samples, "seed": self.seed, "batches": self.batches,
            "estimate": self.estimate, "imag_estimate": self.imag_estimate,
            "std_error": self.std_error, "imag_std_error": self.imag_std_error,
            "target": self.target,
        }


def _mc_batch(n: int, d: int, kmat: np.ndarray, batch_samples: int, seed_seq) -> complex:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    units = np.array(unit_vectors(d), dtype=np.int64)
    l = kmat.shape[0]
    total = 0.0 + 0.0j
    norm = float(n) ** l
    for _ in range(batch_samples):
        counts = conditioned_offspring_counts(n, rng)
        if n == 1:
            pos = np.zeros((1, d), np.int64)
        else:
            picks = rng.integers(0, 2 * d, size=n - 1)
            pos = tree_positions(counts, units[picks])
        phases = pos @ kmat.T  # (n, l)
        sums = np.exp(1j * phases).sum(axis=0)  # (l,)
        total += np.prod(sums) / norm
    return total


def moment_convergence_mc(n: int, l: int, ks, samples: int, seed: int,
                          d: int = 1, batches: int = 100,
                          threads: int = 1) -> McMomentReport:
    """Estimate the empirical l-th moment characteristic function at the
    rescaled momenta k sqrt(d) n^(-1/4) from seeded conditioned samples.

    Deterministic in (seed, parameters): batches draw from independent
    spawned seed sequences and are reduced in a fixed order, so the thread
    count changes nothing but wall time.
    """
    if l < 1:
        raise ValueError("moment order must be at least 1")
    ks = tuple(_as_vec(k, d) for k in ks)
    if len(ks) != l:
        raise ValueError(f"need {l} external momenta")
    batches = max(1, min(batches, samples))
    sizes = [samples // batches + (1 if i < samples % batches else 0) for i in range(batches)]
    scale = d ** 0.5 * n ** -0.25
    kmat = np.array(ks, dtype=np.float64) * scale
    children = np.random.SeedSequence(seed).spawn(batches)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sums = list(pool.map(lambda i: _mc_batch(n, d, kmat, sizes[i], children[i]),
                                 range(batches)))
    else:
        sums = [_mc_batch(n, d, kmat, sizes[i], children[i]) for i in range(batches)]
    grand = sum(sums) / samples
    means = np.array([s / b for s, b in zip(sums, sizes)])
    if batches > 1:
        se_re = float(np.std(means.real, ddof=1) / math.sqrt(batches))
        se_im = float(np.std(means.imag, ddof=1) / math.sqrt(batches))
    else:
        se_re = se_im = math.inf
    target = moment_char(l, ks)
    return McMomentReport(
        n=n, d=d, l=l, ks=ks, samples=samples, seed=seed, batches=batches,
        estimate=float(grand.real), imag_estimate=float(grand.imag),
        std_error=se_re, imag_std_error=se_im, target=target,
    )


@dataclass(frozen=True)
class DecompositionReport:
    """Exact split of the zero-momentum moment sum into full-skeleton and
    degenerate-backbone parts, with the shape-multiplicity bound."""

    n: int
    d: int
    l: int
    s_hat: ExactWeight
    u_hat: ExactWeight
    e_hat: ExactWeight
    sum_t_hat: ExactWeight

    @property
    def bound_rhs(self) -> ExactWeight:
        return self.e_hat * (shape_count(self.l + 1) - 1)

    @property
    def discrepancy(self) -> ExactWeight:
        return abs(self.sum_t_hat - self.s_hat)

    @property
    def bound_holds(self) -> bool:
        return self.discrepancy.coeff <= self.bound_rhs.coeff

    def to_json(self) -> dict:
        return {
            "n": self.n, "d": self.d, "l": self.l,
            "s_hat": self.s_hat.to_json(), "u_hat": self.u_hat.to_json(),
            "e_hat": self.e_hat.to_json(), "sum_t_hat": self.sum_t_hat.to_json(),
            "bound_rhs": self.bound_rhs.to_json(), "bound_holds": self.bound_holds,
        }


def degenerate_decomposition(n: int, d: int = 1, l: int = 3) -> DecompositionReport:
    """Classify every marked configuration of size n by backbone type.

    u collects mark tuples whose spanning subtree reduces to a full
    (l+1)-skeleton (these match exactly one shape, with one length/
    displacement pattern); e collects the rest.  sum_t_hat re-counts every
    configuration once per compatible (shape, lengths, displacements)
    triple, which is what the summed multi-point coefficients at zero
    momenta see; the discrepancy against s_hat is bounded by
    (number of shapes - 1) times the degenerate mass.
    """
    if l < 3:
        raise ValueError("the decomposition is defined for l >= 3")
    m = l + 1
    shapes_m = enumerate_shapes(m)
    spread = (2 * d) ** (n - 1)
    u_hat = ExactWeight.zero(n)
    e_hat = ExactWeight.zero(n)
    sum_t = ExactWeight.zero(n)
    for tree in enumerate_plane_trees(n):
        w = tree_probability(tree)
        positions = None
        for marks in itertools.product(range(n), repeat=l):
            per_shape = [skeleton_matches(tree, marks, s) for s in shapes_m]
            full_matches = [
                (si, mt) for si, ms in enumerate(per_shape) for mt in ms
                if all(s > 0 for s in mt[0])
            ]
            if full_matches:
                # a full skeleton determines its shape and pattern uniquely
                total_matches = sum(len(ms) for ms in per_shape)
                if total_matches != 1:
                    raise AssertionError(
                        f"full backbone with {total_matches} matches at n={n}"
                    )
                u_hat = u_hat + w
            else:
                e_hat = e_hat + w
            for ms in per_shape:
                if not ms:
                    continue
                lengths_seen = [mt[0] for mt in ms]
                if len(ms) == 1 or len(set(lengths_seen)) == len(lengths_seen):
                    # distinct length vectors stay distinct for every embedding
                    sum_t = sum_t + w * len(ms)
                    continue
                if positions is None:
                    positions = list(iter_embedding_positions(tree, d))
                count = 0
                for pos in positions:
                    pairs = set()
                    for lengths, images in ms:
                        ys = tuple(
                            tuple(pb - pa for pa, pb in zip(pos[a], pos[b]))
                            for a, b in images
                        )
                        pairs.add((lengths, ys))
                    count += len(pairs)
                sum_t = sum_t + ExactWeight(w.coeff * Fraction(count, spread), n)
    s_hat = size_probability_exact(n) * (n ** l)
    if u_hat + e_hat != s_hat:
        raise AssertionError("full/degenerate split does not add up to the moment sum")
    return DecompositionReport(n=n, d=d, l=l, s_hat=s_hat, u_hat=u_hat,
                               e_hat=e_hat, sum_t_hat=sum_t)
