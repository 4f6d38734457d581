"""Closed forms and exact coefficients of the tree generating functions.

The size generating function t(z) solves t e^(-t) = z e^(-1) on [0, 1]
(the principal Lambert branch).  Coefficients of its powers come from
Lagrange inversion and are exact rationals times e^(-n):

    [z^n] t(z)^p = (p/n) n^(n-p) / (n-p)! e^(-n),   1 <= p <= n.

Everything downstream (two-point and multi-point generating functions and
their coefficient extractions) is built from these, never from contour
integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapError, DivergenceError
from .plane_tree import ExactWeight
from .shapes import Shape
from .embedding import walk_distribution

#: number of overlapping summation terms kept feasible for m = 3 extractions
DEFAULT_COEFFICIENT_CAP = {2: 2_000_000, 3: 2000}


@dataclass(frozen=True)
class StepTransform:
    """Fourier transform of the uniform nearest-neighbour step in Z^d."""

    d: int

    def __call__(self, k) -> float:
        k = _as_vector(k, self.d)
        return sum(math.cos(c) for c in k) / self.d


def _as_vector(k, d: int) -> tuple:
    if isinstance(k, (int, float)):
        k = (float(k),)
    k = tuple(float(c) for c in k)
    if len(k) != d:
        raise ValueError(f"momentum must have {d} coordinates, got {len(k)}")
    return k


@dataclass(frozen=True)
class SeriesCoefficient:
    """[z^n] t(z)^p together with the indices it belongs to."""

    n: int
    p: int
    value: ExactWeight

    @classmethod
    def compute(cls, n: int, p: int) -> "SeriesCoefficient":
        return cls(n, p, coeff_tree_power(n, p))


def one_point(z: float) -> float:
    """Smallest nonnegative solution of t e^(-t) = z e^(-1), for z in [0, 1].

    Solved by bisection-guarded Newton to relative accuracy 1e-14; equals
    -W(-z/e) on the principal Lambert branch, with value 1 at z = 1.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"one_point is defined on [0, 1], got {z}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return 1.0
    target = z * math.exp(-1.0)
    # f(t) = t e^-t is increasing on [0, 1); start from the small-z and
    # near-critical expansions, whichever is closer.
    t = min(z, 1.0 - math.sqrt(max(2.0 * (1.0 - z), 0.0)))
    t = min(max(t, 0.0), 1.0 - 1e-16)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        f = t * math.exp(-t) - target
        if f > 0:
            hi = t
        else:
            lo = t
        df = (1.0 - t) * math.exp(-t)
        if df > 0:
            step = f / df
            t_new = t - step
        else:
            t_new = 0.5 * (lo + hi)
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-16 * max(t, 1e-300):
            t = t_new
            break
        t = t_new
    return t


def coeff_tree_power(n: int, p: int) -> ExactWeight:
    """Exact [z^n] t(z)^p; zero outside 1 <= p <= n."""
    if n < 1 or p < 1 or p > n:
        return ExactWeight.zero(max(n, 0))
    return ExactWeight(Fraction(p * n ** (n - p), n * math.factorial(n - p)), n)


def tree_power_coefficients_float(n: int) -> list:
    """[z^n] t(z)^p for p = 1..n as floats, via a stable ratio recurrence.

    c(n, 1) comes from log-gamma; then c(n, p+1)/c(n, p) = (p+1)(n-p)/(p n).
    Usable far beyond the exact big-integer route (n ~ 1e6).
    """
    if n < 1:
        raise ValueError("n must be positive")
    c = [0.0] * (n + 1)
    c[1] = math.exp((n - 1) * math.log(n) - math.lgamma(n + 1) - n)
    for p in range(1, n):
        c[p + 1] = c[p] * (p + 1) * (n - p) / (p * n)
    return c


def size_probability_float(n: int) -> float:
    """P(|T| = n) = n^(n-1) e^(-n) / n! in log space (any n)."""
    return math.exp((n - 1) * math.log(n) - math.lgamma(n + 1) - n)


def two_point_hat(z: float, zeta: float, k, d: int) -> float:
    """t(z) / (1 - t(z) zeta D(k)): embedded trees through a marked site,
    graded by size (z) and root distance (zeta), in Fourier variables."""
    if not -1.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [-1, 1], got {zeta}")
    t = one_point(z)
    damp = t * zeta * StepTransform(d)(k)
    if damp >= 1.0:
        raise DivergenceError(
            f"two-point generating function diverges at z={z}, zeta={zeta}, k={k}"
        )
    return t / (1.0 - damp)


def m_point_hat(shape: Shape, z: float, zetas: tuple, ks: tuple, d: int) -> float:
    """Product form of the multi-point generating function.

    Equals t(z)^(-2(m-2)) prod_j two_point_hat(z, zeta_j, k_j): one factor
    per shape edge; only m enters, not the shape's internal structure.
    """
    q = shape.edge_count
    if len(zetas) != q or len(ks) != q:
        raise ValueError(f"need {q} zeta and k entries for m={shape.m}")
    if any(not -1.0 <= zeta <= 1.0 for zeta in zetas):
        raise ValueError("every zeta must lie in [-1, 1]")
    t = one_point(z)
    out = t
    D = StepTransform(d)
    for zeta, k in zip(zetas, ks):
        damp = t * zeta * D(k)
        if damp >= 1.0:
            raise DivergenceError(
                f"m-point generating function diverges at z={z}, zeta={zeta}, k={k}"
            )
        out /= 1.0 - damp
    return out


def t_hat_coefficient_fixed_s(n: int, ks: tuple, ss: tuple, d: int) -> float:
    """Size-n coefficient at fixed backbone path lengths, Fourier variables.

    Value: c(n, 1 + sum s_j) * prod_j D(k_j)^{s_j}, with c the tree-power
    coefficient.  Shape-independent.
    """
    if len(ks) != len(ss):
        raise ValueError("need one momentum per path length")
    total = sum(ss)
    if total > n - 1:
        return 0.0
    D = StepTransform(d)
    # exact route for moderate n, log route for large n
    if n <= 400:
        c = coeff_tree_power(n, 1 + total).to_float()
    else:
        logc = _log_coeff_tree_power(n, 1 + total)
        c = math.exp(logc)
    for k, s in zip(ks, ss):
        c *= D(k) ** s
    return c


def _log_coeff_tree_power(n: int, p: int) -> float:
    return (math.log(p) - math.log(n) + (n - p) * math.log(n)
            - math.lgamma(n - p + 1) - n)


def t_hat_coefficient(shape: Shape, n: int, ks: tuple, d: int,
                      cap: dict | None = None) -> float:
    """Size-n coefficient of the multi-point generating function at
    zeta = 1, summed over all backbone length vectors.

    Expands the product of geometric factors and groups terms by the total
    backbone length S, using the complete homogeneous symmetric sums of
    the per-edge step transforms; cost O((2m-3) n^2) instead of O(n^(2m-3)).
    """
    q = shape.edge_count
    if len(ks) != q:
        raise ValueError(f"need {q} momenta for m={shape.m}")
    caps = dict(DEFAULT_COEFFICIENT_CAP)
    if cap:
        caps.update(cap)
    m = shape.m
    limit = caps.get(m, caps.get(3, 2000) if m > 3 else None)
    if limit is not None and n > limit:
        raise CapError(f"coefficient extraction for m={m} capped at n={limit}")
    D = StepTransform(d)
    dvals = [D(k) for k in ks]
    smax = n - 1
    # h[S] = sum over s-vectors of total S of prod dvals[j]^{s_j}; folding in
    # one geometric factor at a time satisfies h'(S) = h(S) + dv h'(S-1),
    # so the whole table costs O((2m-3) n).
    h = np.zeros(smax + 1)
    h[0] = 1.0
    first = True
    for dv in dvals:
        if first:
            h = np.empty(smax + 1)
            h[0] = 1.0
            if smax >= 1:
                h[1:] = np.cumprod(np.full(smax, dv))
            first = False
            continue
        nxt = np.empty(smax + 1)
        acc = h[0]
        nxt[0] = acc
        for S in range(1, smax + 1):
            acc = h[S] + dv * acc
            nxt[S] = acc
        h = nxt
    coeffs = tree_power_coefficients_float(n)
    return math.fsum(coeffs[1 + S] * h[S] for S in range(smax + 1))


def t_hat_zero_exact(m: int, n: int) -> ExactWeight:
    """Exact value of the size-n multi-point coefficient at zero momenta.

    At k = 0 each geometric factor counts compositions, so the homogeneous
    sum is a binomial: sum_S c(n, 1+S) C(S + 2m-4, 2m-4).
    """
    q = 2 * m - 3
    total = ExactWeight.zero(n)
    for S in range(n):
        total = total + coeff_tree_power(n, 1 + S) * Fraction(math.comb(S + q - 1, q - 1))
    return total


def m_point_coefficient_exact(n: int, ys: tuple, ss: tuple, d: int) -> ExactWeight:
    """Exact size-n coefficient at fixed path lengths and lattice
    displacements: c(n, 1 + sum s_j) * prod_j (s_j-step walk law at y_j).

    This is the x-space counterpart of t_hat_coefficient_fixed_s and the
    closed-route side of the oracle equivalence tests.
    """
    if len(ys) != len(ss):
        raise ValueError("need one displacement per path length")
    total = sum(ss)
    if total > n - 1:
        return ExactWeight.zero(n)
    base = coeff_tree_power(n, 1 + total)
    factor = Fraction(1)
    for y, s in zip(ys, ss):
        p = walk_distribution(s, d).get(tuple(int(c) for c in y), Fraction(0))
        if p == 0:
            return ExactWeight.zero(n)
        factor *= p
    return ExactWeight(base.coeff * factor, n)


def two_point_inversion_exact(n: int, d: int) -> "LatticeDistribution":
    """x-space size-n two-point coefficients by Lagrange inversion:
    sum_s c(n, s+1) * (s-step walk law)."""
    from .embedding import LatticeDistribution

    dist = LatticeDistribution(d)
    for s in range(n):
        c = coeff_tree_power(n, s + 1)
        for x, p in walk_distribution(s, d).items():
            dist.add(x, ExactWeight(c.coeff * p, n))
    return dist
