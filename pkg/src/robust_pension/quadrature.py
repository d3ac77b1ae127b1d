"""Composite Simpson quadrature on fixed steps, plus a refinement harness."""

import math

import numpy as np


def simpson_intervals(length, step):
    """Smallest even interval count whose step does not exceed ``step``."""
    if length <= 0.0:
        return 0
    n = int(math.ceil(length / step - 1e-9))
    return n + (n % 2)


def simpson_weights(n):
    """Composite Simpson weights (without the h/3 factor) for ``n`` intervals."""
    if n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w


def simpson(values, lo, hi, axis=-1):
    """Integrate equally spaced samples of a function over ``[lo, hi]``.

    ``values`` holds ``n + 1`` samples along ``axis`` with ``n`` even.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis] - 1
    if n == 0:
        return np.zeros(np.delete(values.shape, axis % values.ndim)) if values.ndim > 1 else 0.0
    h = (hi - lo) / n
    w = simpson_weights(n)
    return np.tensordot(values, w, axes=([axis], [0])) * (h / 3.0)


def integrate(func, lo, hi, step):
    """Integrate a vectorised callable over ``[lo, hi]`` with step at most ``step``."""
    n = simpson_intervals(hi - lo, step)
    if n == 0:
        return 0.0
    x = np.linspace(lo, hi, n + 1)
    return float(simpson(func(x), lo, hi))


def observed_order(v_h, v_h2, v_h4):
    """Richardson estimate of the convergence order from three halved steps.

    Returns ``inf`` when the two differences vanish (exact integration).
    """
    d1 = abs(v_h - v_h2)
    d2 = abs(v_h2 - v_h4)
    if d2 == 0.0:
        return math.inf
    if d1 == 0.0:
        return 0.0
    return math.log2(d1 / d2)
