"""Shared independent oracles used across the test suite.

These deliberately avoid the package's own code paths: the Bessel oracle is a
direct factorial power series, densities are normalized by brute-force grid
sums, and derivatives come from central finite differences.
"""

import math

import numpy as np


def bessel_series_oracle(order, z, tol=1e-18):
    """I_order(z) by the explicit power series sum_k (z/2)^(2k+m) / (k! (k+m)!)."""
    term = (z / 2.0) ** order / math.factorial(order)
    total = term
    k = 1
    while True:
        term *= (z / 2.0) ** 2 / (k * (k + order))
        total += term
        if term < tol * total or k > 1000:
            break
        k += 1
    return total


def grid_normalize(values, spacing):
    """Normalize nonnegative grid values to integrate to 1 (periodic grid)."""
    values = np.asarray(values, dtype=float)
    return values / (values.sum() * spacing)


def finite_difference_jacobian(fn, x, step=1e-6):
    """Central finite differences of a vector-valued fn at x; columns index x."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fn(x))
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2.0 * step)
    return jac
