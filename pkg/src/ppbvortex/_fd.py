"""Central finite-difference Laplacians used by the residual oracles."""

from __future__ import annotations

import numpy as np

# integer weights and denominator of the 1-D second-derivative stencil, by order
_WEIGHTS = {
    2: ((1, -2, 1), 1),
    4: ((-1, 16, -30, 16, -1), 12),
    6: ((2, -27, 270, -490, 270, -27, 2), 180),
}


def laplacian(f, x, y, h, order: int = 2):
    """Finite-difference Laplacian of ``f(x, y)`` with spacing ``h``.

    ``order=2`` is the classic five-point stencil. Weights are applied as exact
    integers and the result is computed in the precision of ``x``, so long
    double inputs give long double accuracy.
    """
    weights, denom = _WEIGHTS[order]
    half = len(weights) // 2
    x = np.asarray(x)
    y = np.asarray(y)
    rt = np.result_type(x, y, float)
    h = rt.type(h)
    total = 0
    for k, w in enumerate(weights):
        off = (k - half) * h
        if k == half:
            total = total + 2 * w * f(x, y)
        else:
            total = total + w * (f(x + off, y) + f(x, y + off))
    return total / (rt.type(denom) * h * h)
