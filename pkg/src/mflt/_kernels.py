"""Hot loops for the Monte Carlo samplers.

Compiled with numba when available; the pure-Python fallbacks are
identical in semantics (and bit-identical in output), just slower.
"""

from __future__ import annotations

import numpy as np


def _tree_positions_py(counts, steps):
    """Vertex positions from child counts (word order) and per-edge steps.

    counts: int64[n]; steps: int64[n-1, d].  The parent of each vertex is
    the deepest vertex on the depth-first stack that still expects
    children.
    """
    n = counts.shape[0]
    d = steps.shape[1]
    pos = np.zeros((n, d), np.int64)
    stack = np.empty(n, np.int64)
    rem = np.empty(n, np.int64)
    top = 0
    stack[0] = 0
    rem[0] = counts[0]
    for v in range(1, n):
        while rem[stack[top]] == 0:
            top -= 1
        p = stack[top]
        rem[p] -= 1
        for c in range(d):
            pos[v, c] = pos[p, c] + steps[v - 1, c]
        top += 1
        stack[top] = v
        rem[v] = counts[v]
    return pos


try:  # pragma: no cover - exercised implicitly when numba is installed
    from numba import njit

    tree_positions = njit(cache=True, nogil=True)(_tree_positions_py)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    tree_positions = _tree_positions_py
    HAVE_NUMBA = False
