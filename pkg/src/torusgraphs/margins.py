"""Closed-form phase-difference marginals for 2- and 3-node models.

For a pair of coupled angles, the wrapped difference W = X_1 - X_2 (mod 2pi)
has an unnormalized density that factors into a marginal-concentration term
f (a Bessel function of the two concentrations) and a direct-coupling term g
(a von Mises shape in the rotational coupling pair). For three nodes with
uniform margins the same construction yields a direct term g and an indirect
term h carrying the influence of the paths through the third node. These
factorizations are what make pairwise coupling summaries (such as the phase
locking value) confounded: f and h concentrate W even with zero direct
coupling.

Densities are evaluated on uniform periodic grids; normalization uses the
periodic trapezoid rule, which for these smooth integrands converges far
faster than any tolerance used here.
"""

from dataclasses import dataclass

import numpy as np

from .circular import bessel_i, log_bessel_i0, wrap_angle
from .exceptions import DomainError

_NORM_TOL = 1e-8


@dataclass(frozen=True)
class DensityGrid:
    """Density values on a uniform periodic grid over [0, 2pi)."""

    support: np.ndarray
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        support = np.array(self.support, dtype=float)
        values = np.array(self.values, dtype=float)
        if support.ndim != 1 or support.shape != values.shape or support.size < 2:
            raise DomainError("support and values must be equal-length 1-D arrays")
        if np.any(values < 0):
            raise DomainError("density values must be nonnegative")
        if self.normalized:
            total = values.sum() * (support[1] - support[0])
            if abs(total - 1.0) > _NORM_TOL:
                raise DomainError(f"normalized grid integrates to {total}, not 1")
        for name, arr in (("support", support), ("values", values)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def spacing(self):
        return float(self.support[1] - self.support[0])


def _grid(grid_size):
    if grid_size < 16:
        raise DomainError("grid_size must be >= 16")
    return np.arange(grid_size) * (2.0 * np.pi / grid_size)


def _normalize(support, values):
    total = values.sum() * (support[1] - support[0])
    return DensityGrid(support, values / total, normalized=True)


def _coupling_shape(w, alpha, beta):
    """g(w) = exp(|coupling| cos(w - atan2(beta, alpha))), unnormalized."""
    amp = np.hypot(alpha, beta)
    return np.exp(amp * np.cos(w - np.arctan2(beta, alpha)))


def bivar_phase_diff_density(kappa, mu, coupling, grid_size=1024):
    """Unnormalized factors and normalized density of W = X1 - X2 (mod 2pi)
    for the two-node rotational-coupling model.

    Parameters
    ----------
    kappa : (kappa1, kappa2)
        Marginal concentrations, >= 0.
    mu : (mu1, mu2)
        Marginal mean directions.
    coupling : (alpha, beta)
        Rotational coupling pair for the edge.
    grid_size : int
        Grid resolution G >= 16.

    Returns
    -------
    (p, f, g) : DensityGrid triple
        p is normalized; f (marginal-concentration factor) and g (direct
        coupling factor) are returned unnormalized.
    """
    k1, k2 = float(kappa[0]), float(kappa[1])
    if k1 < 0 or k2 < 0:
        raise DomainError("concentrations must be >= 0")
    m1, m2 = float(mu[0]), float(mu[1])
    alpha, beta = float(coupling[0]), float(coupling[1])
    w = _grid(grid_size)
    arg = np.sqrt(k1 * k1 + k2 * k2 + 2 * k1 * k2 * np.cos(w - (m1 - m2)))
    amp = np.hypot(alpha, beta)
    # normalize in the log domain so extreme concentrations cannot overflow p
    log_p = log_bessel_i0(arg) + amp * np.cos(w - np.arctan2(beta, alpha))
    p = _normalize(w, np.exp(log_p - log_p.max()))
    f_vals = bessel_i(0, arg)
    g_vals = _coupling_shape(w, alpha, beta)
    return p, DensityGrid(w, f_vals), DensityGrid(w, g_vals)


def trivar_phase_diff_density(coupling_12, coupling_13, coupling_23, grid_size=1024):
    """Normalized density of W = X1 - X2 (mod 2pi) in the three-node
    rotational-coupling model with uniform margins (zero concentrations).

    Returns
    -------
    (p, g, h) : DensityGrid triple
        p is normalized; g is the direct term from the (1,2) coupling and h
        the indirect term from the paths through node 3, both unnormalized.
    """
    a12, b12 = (float(v) for v in coupling_12)
    a13, b13 = (float(v) for v in coupling_13)
    a23, b23 = (float(v) for v in coupling_23)
    w = _grid(grid_size)
    r13 = a13 * a13 + b13 * b13
    r23 = a23 * a23 + b23 * b23
    s = r13 + r23
    t = np.sqrt(r13 * r23)
    u = np.arctan2(b13, a13) - np.arctan2(b23, a23)
    arg = np.sqrt(np.maximum(s + 2 * t * np.cos(w - u), 0.0))
    amp12 = np.hypot(a12, b12)
    log_p = log_bessel_i0(arg) + amp12 * np.cos(w - np.arctan2(b12, a12))
    p = _normalize(w, np.exp(log_p - log_p.max()))
    g_vals = _coupling_shape(w, a12, b12)
    h_vals = bessel_i(0, arg)
    return p, DensityGrid(w, g_vals), DensityGrid(w, h_vals)


def population_plv_from_grid(p):
    """|integral of e^{iw} p(w) dw| by the periodic trapezoid rule."""
    if not p.normalized:
        raise DomainError("population PLV requires a normalized grid")
    z = np.sum(np.exp(1j * p.support) * p.values) * p.spacing
    return float(min(abs(z), 1.0))


def von_mises_grid(mu, kappa, grid_size=1024):
    """Normalized von Mises density on the standard grid (plot/test helper)."""
    if kappa < 0:
        raise DomainError("concentration must be >= 0")
    w = _grid(grid_size)
    return _normalize(w, np.exp(kappa * (np.cos(w - wrap_angle(mu)) - 1.0)))
