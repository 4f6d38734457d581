"""Moment-measure densities and characteristic functions of the ISE limit.

The m-th moment data lives on a shape with q = 2m-3 edges.  Each edge j
carries a time t_j >= 0 and either a spatial displacement y_j or a
momentum k_j; the density couples the edges only through the total time:

    a(y, t) = (sum t) exp(-(sum t)^2/2) prod_j (2 pi t_j)^(-d/2) exp(-y_j^2/(2 t_j))
    a^(k, t) = (sum t) exp(-(sum t)^2/2) prod_j exp(-k_j^2 t_j / 2)

Integrating the second over t in [0, inf)^q gives the characteristic
function A^(k); summed over shapes at k = 0 it is exactly 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import BudgetError
from .shapes import Shape, enumerate_shapes, shape_count


class DegenerateEdgeWarning(UserWarning):
    """A zero-time edge was evaluated pointwise (contracted-edge limit)."""


def _sq(v) -> float:
    if isinstance(v, (int, float)):
        return float(v) ** 2
    return float(sum(float(c) ** 2 for c in v))


def _check_arity(shape: Shape, ks, ts):
    q = shape.edge_count
    if len(ks) != q or len(ts) != q:
        raise ValueError(f"shape with m={shape.m} needs {q} edge entries")


def a_hat(shape: Shape, ks: tuple, ts: tuple) -> float:
    """Fourier-side integrand: total-time factor times per-edge heat kernels."""
    _check_arity(shape, ks, ts)
    ts = [float(t) for t in ts]
    if any(t < 0 for t in ts):
        raise ValueError("edge times must be nonnegative")
    total = sum(ts)
    out = total * math.exp(-0.5 * total * total)
    for k, t in zip(ks, ts):
        out *= math.exp(-0.5 * _sq(k) * t)
    return out


def a_density(shape: Shape, ys: tuple, ts: tuple) -> float:
    """Spatial density at fixed edge times.

    Edges with t_j = 0 are contracted: with y_j = 0 they contribute the
    factor 1 of the y-integrated convention, with y_j != 0 the value is 0
    by the vanishing-kernel limit; both are flagged with a warning because
    the pointwise kernel is singular there.
    """
    _check_arity(shape, ys, ts)
    ts = [float(t) for t in ts]
    if any(t < 0 for t in ts):
        raise ValueError("edge times must be nonnegative")
    total = sum(ts)
    out = total * math.exp(-0.5 * total * total)
    for y, t in zip(ys, ts):
        y2 = _sq(y)
        d = 1 if isinstance(y, (int, float)) else len(y)
        if t == 0.0:
            warnings.warn(
                "zero-time edge in a pointwise density evaluation",
                DegenerateEdgeWarning,
                stacklevel=2,
            )
            if y2 != 0.0:
                return 0.0
            continue
        out *= (2.0 * math.pi * t) ** (-0.5 * d) * math.exp(-0.5 * y2 / t)
    return out


#: Gauss-Legendre refinement schedule per tensor dimension.
_NODE_SCHEDULE = (10, 14, 20, 28, 40, 56)


def _tensor_value(a_vals: list, r: int) -> float:
    """Tensor Gauss-Legendre sum of (sum t) e^(-(sum t)^2/2) prod e^(-a_j t_j)
    over [0, inf)^q, with each t mapped from (0,1) via t = u/(1-u)."""
    x, w = np.polynomial.legendre.leggauss(r)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    t = u / (1.0 - u)
    jac = wu / (1.0 - u) ** 2
    per = [jac * np.exp(-a * t) for a in a_vals]
    q = len(a_vals)
    if q == 1:
        s = t
        return float(np.sum(per[0] * s * np.exp(-0.5 * s * s)))
    w_rest = reduce(lambda acc, v: np.multiply.outer(acc, v), per[1:]).ravel()
    s_rest = reduce(lambda acc, v: np.add.outer(acc, v), [t] * (q - 1)).ravel()
    total = 0.0
    for g0, t0 in zip(per[0], t):
        s = t0 + s_rest
        total += g0 * float(np.sum(w_rest * s * np.exp(-0.5 * s * s)))
    return total


def A_hat(shape: Shape, ks: tuple, abs_tol: float = 1e-8) -> float:
    """Characteristic function of one shape's moment contribution.

    Tensorized Gauss-Legendre over the mapped cube, refined until two
    successive levels agree within abs_tol.  The exact zero-momentum value
    1/(2m-5)!! (see A_hat_zero_exact) serves as the built-in self-check in
    the test suite, not as a computational path.
    """
    q = shape.edge_count
    if len(ks) != q:
        raise ValueError(f"shape with m={shape.m} needs {q} momenta")
    a_vals = [0.5 * _sq(k) for k in ks]
    prev = None
    achieved = math.inf
    for r in _NODE_SCHEDULE:
        cur = _tensor_value(a_vals, r)
        if prev is not None:
            achieved = abs(cur - prev)
            if achieved <= abs_tol:
                return cur
        prev = cur
    raise BudgetError(
        f"quadrature did not reach abs_tol={abs_tol:g} (achieved ~{achieved:.2e})",
        achieved=achieved,
    )


def A_hat_zero_exact(m: int) -> Fraction:
    """Exact A at zero momenta: the simplex reduction gives
    int_0^inf T e^(-T^2/2) T^(2m-4)/(2m-4)! dT = 2^(m-2) (m-2)!/(2m-4)!,
    which equals 1/(2m-5)!!."""
    value = Fraction(2 ** (m - 2) * math.factorial(m - 2), math.factorial(2 * m - 4))
    assert value == Fraction(1, shape_count(m))
    return value


@dataclass(frozen=True)
class ShapeKAssignment:
    """Per-edge momenta induced by external momenta on a shape.

    Edge j carries the sum of the external momenta k_i over the labels
    i >= 1 separated from vertex 0 by j.  (The l = 2 case reduces to the
    classical (k_1 + k_2, k_1, k_2) assignment up to edge order, under
    which the integral is symmetric.)
    """

    shape: Shape
    external_ks: tuple

    def __post_init__(self):
        ks = tuple(tuple(float(c) for c in k) for k in self.external_ks)
        object.__setattr__(self, "external_ks", ks)
        if len(ks) != self.shape.m - 1:
            raise ValueError(f"need m-1 = {self.shape.m - 1} external momenta")
        if len({len(k) for k in ks}) > 1:
            raise ValueError("external momenta must share a dimension")

    def edge_ks(self) -> tuple:
        dims = len(self.external_ks[0]) if self.external_ks else 1
        out = []
        for label in range(1, self.shape.edge_count + 1):
            below = self.shape.externals_below(label)
            vec = [0.0] * dims
            for i in sorted(below):
                if i == 0:
                    continue
                for c, comp in enumerate(self.external_ks[i - 1]):
                    vec[c] += comp
            out.append(tuple(vec))
        return tuple(out)


def moment_char(l: int, external_ks: tuple, abs_tol: float = 1e-8) -> float:
    """Characteristic function of the l-th ISE moment measure.

    Sums A over all (l+1)-shapes with edge momenta given by the
    subtree-sum assignment; for l = 1 this is A of the single two-leaf
    shape at the external momentum itself.
    """
    if l < 1:
        raise ValueError("moment order must be at least 1")
    external_ks = tuple(
        (float(k),) if isinstance(k, (int, float)) else tuple(float(c) for c in k)
        for k in external_ks
    )
    if len(external_ks) != l:
        raise ValueError(f"need {l} external momenta")
    total = 0.0
    for shape in enumerate_shapes(l + 1):
        ks = ShapeKAssignment(shape, external_ks).edge_ks()
        total += A_hat(shape, ks, abs_tol=abs_tol)
    return total
