"""Model parameterization for graphical models of circular data.

The natural coefficient vector ``phi`` has length 2d^2, laid out as d marginal
blocks of 2 (cosine, sine coefficients per node) followed by one block of 4
per node pair in lexicographic (j < k) order. Each coupling block multiplies
the pairwise statistics (cos(x_j - x_k), sin(x_j - x_k), cos(x_j + x_k),
sin(x_j + x_k)): the first two encode rotational dependence, the last two
reflectional dependence. The block ordering is a package-wide canonical
convention; serialization and moment-matrix indexing rely on it.

When every ``phi`` entry is zero the distribution is uniform on the torus;
with one coordinate the model is von Mises. The normalization constant is
intractable for d > 2 and is never computed here: ``log_unnorm_density``
is explicitly unnormalized (grid normalizers for low-dimensional checks live
in :mod:`torusgraphs.margins`).
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .circular import wrap_angle
from .exceptions import DomainError, UnidentifiedMeanError


class Family(str, enum.Enum):
    """Affine submodel selector.

    FULL keeps every coefficient. UNIFORM_MARGINAL zeroes all marginal blocks
    (uniform marginal distributions). PHASE_DIFF zeroes the reflectional pair
    of every coupling block. UNIFORM_PHASE_DIFF is the intersection of both.
    """

    FULL = "full"
    UNIFORM_MARGINAL = "uniform"
    PHASE_DIFF = "phasediff"
    UNIFORM_PHASE_DIFF = "uniform-phasediff"


def param_dim(d):
    """Total coefficient count 2*d + 4*d*(d-1)/2 = 2*d^2."""
    return 2 * d * d


def edge_list(d):
    """Node pairs (j, k), j < k, in canonical lexicographic order."""
    return [(j, k) for j in range(d) for k in range(j + 1, d)]


def marginal_slice(j):
    """Index slice of node j's marginal block."""
    return slice(2 * j, 2 * j + 2)


def edge_rank(d, j, k):
    """Position of edge (j, k) in the lexicographic enumeration."""
    if not (0 <= j < k < d):
        raise DomainError(f"invalid edge ({j}, {k}) for dimension {d}")
    return j * d - j * (j + 1) // 2 + (k - j - 1)


def coupling_slice(d, j, k):
    """Index slice of the 4-entry coupling block for edge (j, k)."""
    start = 2 * d + 4 * edge_rank(d, j, k)
    return slice(start, start + 4)


def family_mask(d, family):
    """Boolean vector over the coefficient layout: True = active under family."""
    family = Family(family)
    active = np.ones(param_dim(d), dtype=bool)
    if family in (Family.UNIFORM_MARGINAL, Family.UNIFORM_PHASE_DIFF):
        active[: 2 * d] = False
    if family in (Family.PHASE_DIFF, Family.UNIFORM_PHASE_DIFF):
        for j, k in edge_list(d):
            sl = coupling_slice(d, j, k)
            active[sl.start + 2 : sl.start + 4] = False
    return active


@dataclass(frozen=True)
class TorusGraphParams:
    """Natural coefficient vector with its dimension and family.

    Invariants: ``phi`` has length 2*d^2, is finite, and is exactly zero on
    coordinates masked by ``family``. The array is stored read-only.
    """

    d: int
    phi: np.ndarray
    family: Family = Family.FULL

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        if phi.shape != (param_dim(self.d),):
            raise DomainError(
                f"phi must have length {param_dim(self.d)} for d={self.d}, got {phi.shape}"
            )
        if not np.all(np.isfinite(phi)):
            raise DomainError("phi entries must be finite")
        if np.any(phi[~family_mask(self.d, self.family)] != 0.0):
            raise DomainError(f"phi has nonzero entries masked by family {self.family.value}")
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "family", Family(self.family))

    def marginal_block(self, j):
        return self.phi[marginal_slice(j)]

    def coupling_block(self, j, k):
        return self.phi[coupling_slice(self.d, j, k)]

    @property
    def active(self):
        return family_mask(self.d, self.family)


@dataclass(frozen=True)
class MeanCenteredParams:
    """Mean-centered parameterization: per-node (mu, kappa) and per-edge
    interaction quadruples (cc, cs, sc, ss) in canonical edge order."""

    mu: np.ndarray
    kappa: np.ndarray
    lambdas: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        kappa = np.array(self.kappa, dtype=float)
        d = mu.size
        lambdas = self.lambdas
        if lambdas is None:
            lambdas = np.zeros((d * (d - 1) // 2, 4))
        lambdas = np.array(lambdas, dtype=float)
        if kappa.shape != (d,):
            raise DomainError("mu and kappa must have equal length")
        if lambdas.shape != (d * (d - 1) // 2, 4):
            raise DomainError(f"lambdas must have shape ({d * (d - 1) // 2}, 4)")
        if np.any(kappa < 0) or not np.all(np.isfinite(kappa)):
            raise DomainError("kappa must be finite and >= 0")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(lambdas))):
            raise DomainError("parameters must be finite")
        for name, arr in (("mu", mu), ("kappa", kappa), ("lambdas", lambdas)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def d(self):
        return self.mu.size


@dataclass(frozen=True)
class SufficientStats:
    """Per-node first-moment statistics ``s1`` (length 2d) and per-pair
    second-moment statistics ``s2`` (length 4*d*(d-1)/2), canonical order."""

    s1: np.ndarray
    s2: np.ndarray

    @property
    def full(self):
        return np.concatenate([self.s1, self.s2])


def suff_stats(x):
    """Evaluate the sufficient statistics of one angle vector.

    s1 stacks (cos x_j, sin x_j) per node; s2 stacks
    (cos(x_j - x_k), sin(x_j - x_k), cos(x_j + x_k), sin(x_j + x_k))
    per pair j < k.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DomainError("x must be a 1-D angle vector")
    d = x.size
    s1 = np.empty(2 * d)
    s1[0::2] = np.cos(x)
    s1[1::2] = np.sin(x)
    if d == 1:
        return SufficientStats(s1, np.zeros(0))
    jj, kk = _edge_index_arrays(d)
    diff = x[jj] - x[kk]
    summ = x[jj] + x[kk]
    s2 = np.empty(4 * jj.size)
    s2[0::4] = np.cos(diff)
    s2[1::4] = np.sin(diff)
    s2[2::4] = np.cos(summ)
    s2[3::4] = np.sin(summ)
    return SufficientStats(s1, s2)


def _edge_index_arrays(d):
    pairs = edge_list(d)
    jj = np.fromiter((j for j, _ in pairs), dtype=int, count=len(pairs))
    kk = np.fromiter((k for _, k in pairs), dtype=int, count=len(pairs))
    return jj, kk


def suff_stats_batch(X):
    """Sufficient statistics for each row of an (n, d) angle matrix -> (n, 2d^2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    out = np.empty((n, param_dim(d)))
    out[:, 0 : 2 * d : 2] = np.cos(X)
    out[:, 1 : 2 * d : 2] = np.sin(X)
    if d > 1:
        jj, kk = _edge_index_arrays(d)
        diff = X[:, jj] - X[:, kk]
        summ = X[:, jj] + X[:, kk]
        out[:, 2 * d + 0 :: 4] = np.cos(diff)
        out[:, 2 * d + 1 :: 4] = np.sin(diff)
        out[:, 2 * d + 2 :: 4] = np.cos(summ)
        out[:, 2 * d + 3 :: 4] = np.sin(summ)
    return out


def log_unnorm_density(params, x):
    """Exponent phi . S(x); 2pi-periodic in every coordinate.

    ``x`` may be a single angle vector or an (n, d) matrix of them.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.d:
        raise DomainError(f"x has dimension {x.shape[-1]}, model has {params.d}")
    if x.ndim == 1:
        return float(suff_stats(x).full @ params.phi)
    return suff_stats_batch(x) @ params.phi


def to_natural(mc):
    """Map mean-centered parameters to the natural coefficient vector.

    Marginal blocks are (kappa cos mu, kappa sin mu); each coupling block is
    the half-sum/half-difference combination of the interaction quadruple
    rotated by the mean differences and sums.
    """
    d = mc.d
    phi = np.zeros(param_dim(d))
    phi[0 : 2 * d : 2] = mc.kappa * np.cos(mc.mu)
    phi[1 : 2 * d : 2] = mc.kappa * np.sin(mc.mu)
    for t, (j, k) in enumerate(edge_list(d)):
        lcc, lcs, lsc, lss = mc.lambdas[t]
        dm = mc.mu[j] - mc.mu[k]
        sm = mc.mu[j] + mc.mu[k]
        sl = coupling_slice(d, j, k)
        phi[sl] = 0.5 * np.array(
            [
                (lcc + lss) * np.cos(dm) + (lcs - lsc) * np.sin(dm),
                (lsc - lcs) * np.cos(dm) + (lcc + lss) * np.sin(dm),
                (lcc - lss) * np.cos(sm) + (-lcs - lsc) * np.sin(sm),
                (lcs + lsc) * np.cos(sm) + (lcc - lss) * np.sin(sm),
            ]
        )
    return TorusGraphParams(d=d, phi=phi, family=Family.FULL)


def to_mean_centered(params):
    """Invert :func:`to_natural`; requires every marginal block nonzero.

    Raises
    ------
    UnidentifiedMeanError
        If some node has a zero marginal block (mean direction undefined).
    """
    d = params.d
    cosb = params.phi[0 : 2 * d : 2]
    sinb = params.phi[1 : 2 * d : 2]
    kappa = np.hypot(cosb, sinb)
    if np.any(kappa == 0.0):
        j = int(np.nonzero(kappa == 0.0)[0][0])
        raise UnidentifiedMeanError(f"node {j} has zero concentration; mean direction unidentified")
    mu = wrap_angle(np.arctan2(sinb, cosb))
    mu = np.atleast_1d(mu)
    lambdas = np.empty((d * (d - 1) // 2, 4))
    for t, (j, k) in enumerate(edge_list(d)):
        p1, p2, p3, p4 = params.coupling_block(j, k)
        dm = mu[j] - mu[k]
        sm = mu[j] + mu[k]
        cdm, sdm, csm, ssm = np.cos(dm), np.sin(dm), np.cos(sm), np.sin(sm)
        lambdas[t] = [
            p1 * cdm + p2 * sdm + p3 * csm + p4 * ssm,
            -p2 * cdm + p1 * sdm + p4 * csm - p3 * ssm,
            p2 * cdm - p1 * sdm + p4 * csm - p3 * ssm,
            p1 * cdm + p2 * sdm - p3 * csm - p4 * ssm,
        ]
    return MeanCenteredParams(mu=mu, kappa=kappa, lambdas=lambdas)


def sine_model_embed(mu, kappa, lambda_ss):
    """Natural coefficients of the curved submodel with ss-interactions only.

    Every resulting coupling block satisfies phi1^2 + phi2^2 = phi3^2 + phi4^2,
    the structural constraint that makes this submodel non-affine.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    d = mu.size
    lam = np.zeros((d * (d - 1) // 2, 4))
    lam[:, 3] = np.asarray(lambda_ss, dtype=float)
    return to_natural(MeanCenteredParams(mu=mu, kappa=kappa, lambdas=lam))


def apply_family(params, family):
    """Zero the coefficients masked by ``family`` and record it."""
    family = Family(family)
    phi = np.array(params.phi, dtype=float)
    phi[~family_mask(params.d, family)] = 0.0
    return TorusGraphParams(d=params.d, phi=phi, family=family)
