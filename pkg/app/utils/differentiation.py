"""
Richardson-extrapolated central differences for expensive functions.

Function values are memoised per call so the second derivative reuses the
points of the first.
"""

import logging

# Setup logging
logger = logging.getLogger(__name__)


def _stencil(f, x, h, order):
    if order == 1:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def richardson_derivative(func, x, h, order=1, levels=2):
    """First or second derivative by central differences with step halving.

    Builds a Neville tableau over the steps h, h/2, ..., h/2**(levels-1); the
    central stencils have even error expansions so column j removes the h**(2j)
    term with the factor 4**j.

    Args:
        func: Scalar function of one variable
        x: Evaluation point
        h: Initial step (must be nonzero)
        order: 1 or 2
        levels: Number of step sizes in the tableau (>= 2)

    Returns:
        tuple: (derivative, error) where error is the difference between the
        two highest-order entries of the tableau

    Raises:
        ValueError: If h is zero, order is not 1 or 2, or levels < 2
    """
    if h == 0.0:
        raise ValueError("h must be nonzero")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")

    cache = {}

    def f(point):
        if point not in cache:
            cache[point] = func(point)
        return cache[point]

    table = []
    step = h
    for i in range(levels):
        row = [_stencil(f, x, step, order)]
        factor = 4.0
        for j in range(1, i + 1):
            row.append((factor * row[j - 1] - table[i - 1][j - 1]) / (factor - 1.0))
            factor *= 4.0
        table.append(row)
        step = step / 2.0

    best = table[-1][-1]
    error = abs(best - table[-1][-2])
    logger.debug(f"Richardson order={order} at x={x!r}: {best!r} +/- {error!r} ({len(cache)} evaluations)")
    return best, error
