"""Small quadrature helpers on uniform grids."""
from __future__ import annotations

import numpy as np


def trapezoid_weights(count: int) -> np.ndarray:
    """Composite trapezoid weights (unit spacing) for `count` equispaced nodes."""
    if count < 1:
        return np.zeros(0)
    w = np.ones(count)
    if count == 1:
        w[0] = 0.0
    else:
        w[0] = w[-1] = 0.5
    return w


def cumulative_simpson(g: np.ndarray, h: float) -> np.ndarray:
    """Running integral J[k] = int_{t_0}^{t_k} g on a uniform grid.

    Even k use composite Simpson from the start. Odd k add one interval
    integrated with the parabola through the last three nodes, so the rule
    stays third order everywhere. With only two nodes the trapezoid rule is
    used for the single interval.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * h * (g[0] + g[1])
        return out
    out[1] = h / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2])
    for k in range(2, n):
        if k % 2 == 0:
            out[k] = out[k - 2] + h / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k])
        else:
            out[k] = out[k - 1] + h / 12.0 * (-g[k - 2] + 8.0 * g[k - 1] + 5.0 * g[k])
    return out
