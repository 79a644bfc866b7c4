"""Asymptotic inference: edge tests, graph construction, fit diagnostics.

The estimator solves an unbiased linear estimating equation, so sqrt(N) times
the estimation error is asymptotically normal with the sandwich covariance
Gamma^-1 V Gamma^-1, where V is the second moment of the per-sample residual
Gamma(x) phi - H(x). Quadratic forms of coefficient blocks against that
covariance give chi-squared statistics with one degree of freedom per tested
coordinate: 4 for a full coupling block, 2 for its rotational or reflectional
half, and 2|E| or 4|E| for groups of edges.
"""

from dataclasses import dataclass

import numpy as np

from .circular import bessel_ratio, chi2_sf, fisher_combine, ks_two_sample, wrap_angle
from .estimation import (
    FitResult,
    _h_batch,
    _jacobian_batch,
    _pairwise_reduce,
    accumulate_moments,
    fit_group_lasso,
    select_lambda_cv,
)
from .exceptions import (
    DegenerateTestError,
    DomainError,
    FamilyScopeError,
    SingularMomentsError,
)
from .model import Family, coupling_slice, edge_list, param_dim
from .sampling import GibbsConfig, gibbs_sample

MODE_FULL = "full"
MODE_ROTATIONAL = "rot"
MODE_REFLECTIONAL = "refl"

CORRECTION_NONE = "none"
CORRECTION_BONFERRONI = "bonferroni"

_CHUNK = 256


def asymptotic_cov(data, params, moments=None):
    """Sandwich covariance of sqrt(N)(phi_hat - phi) on the family's active set.

    Residuals r_n = Gamma(x_n) phi - H(x_n) are averaged into
    V_hat = mean(r r'); the covariance is Gamma_hat^-1 V_hat Gamma_hat^-1 on
    active coordinates, returned embedded in the full 2d^2 layout (inactive
    rows/columns zero). ``params`` may be the fitted or a null coefficient
    vector.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = X.shape
    if d != params.d:
        raise DomainError(f"data dimension {d} does not match model dimension {params.d}")
    if moments is None:
        moments = accumulate_moments(X)
    m = param_dim(d)
    phi = params.phi
    v_parts = []
    for start in range(0, n, _CHUNK):
        chunk = X[start : start + _CHUNK]
        D = _jacobian_batch(chunk)
        proj = np.einsum("nmd,m->nd", D, phi)
        r = np.einsum("nmd,nd->nm", D, proj) - _h_batch(chunk)
        v_parts.append(r.T @ r)
    V = _pairwise_reduce(v_parts) / n
    idx = np.nonzero(params.active)[0]
    G = moments.gamma_hat[np.ix_(idx, idx)]
    V_a = V[np.ix_(idx, idx)]
    try:
        inner = np.linalg.solve(G, V_a)
        sigma_a = np.linalg.solve(G, inner.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularMomentsError(
            f"singular moment matrix in the sandwich covariance: N={moments.n} "
            f"samples for {m} coefficients"
        ) from exc
    sigma_a = 0.5 * (sigma_a + sigma_a.T)
    sigma = np.zeros((m, m))
    sigma[np.ix_(idx, idx)] = sigma_a
    return sigma


@dataclass(frozen=True)
class EdgeTest:
    """Block test for one edge (or edge group): statistic, df, p-value."""

    edge: tuple
    x2: float
    df: int
    p: float
    mode: str = MODE_FULL


def _mode_offsets(mode):
    if mode == MODE_FULL:
        return [0, 1, 2, 3]
    if mode == MODE_ROTATIONAL:
        return [0, 1]
    if mode == MODE_REFLECTIONAL:
        return [2, 3]
    raise DomainError(f"unknown test mode {mode!r}")


def _block_coords(fit, j, k, mode):
    d = fit.params.d
    if not (0 <= j < d and 0 <= k < d and j != k):
        raise DomainError(f"invalid edge ({j}, {k}) for d={d}")
    j, k = min(j, k), max(j, k)
    sl = coupling_slice(d, j, k)
    coords = [sl.start + o for o in _mode_offsets(mode)]
    active = fit.params.active
    if not all(active[c] for c in coords):
        raise FamilyScopeError(
            f"mode {mode!r} tests coordinates masked by family {fit.params.family.value!r}"
        )
    return (j, k), coords


def _quadratic_test(fit, cov, coords):
    phi_e = fit.params.phi[coords]
    sigma_e = cov[np.ix_(coords, coords)]
    try:
        sol = np.linalg.solve(sigma_e, phi_e)
    except np.linalg.LinAlgError as exc:
        raise DegenerateTestError("singular covariance block in edge test") from exc
    x2 = float(fit.n * phi_e @ sol)
    if not np.isfinite(x2):
        raise DegenerateTestError("non-finite edge test statistic")
    return max(x2, 0.0)


def edge_test(fit, cov, j, k, mode=MODE_FULL):
    """Chi-squared test of one coupling block (or its rotational /
    reflectional half) against zero; df equals the tested block size."""
    edge, coords = _block_coords(fit, j, k, mode)
    x2 = _quadratic_test(fit, cov, coords)
    df = len(coords)
    return EdgeTest(edge=edge, x2=x2, df=df, p=chi2_sf(x2, df), mode=mode)


def group_edge_test(fit, cov, edges, mode=MODE_FULL):
    """Joint chi-squared test that every edge in the group is absent.

    df is (block size) x (number of edges), e.g. 40 rotational edges -> 80.
    """
    if not edges:
        raise DomainError("need at least one edge")
    coords = []
    seen = set()
    norm_edges = []
    for j, k in edges:
        edge, block = _block_coords(fit, j, k, mode)
        if edge in seen:
            raise DomainError(f"duplicate edge {edge}")
        seen.add(edge)
        norm_edges.append(edge)
        coords.extend(block)
    x2 = _quadratic_test(fit, cov, coords)
    df = len(coords)
    return EdgeTest(edge=tuple(norm_edges), x2=x2, df=df, p=chi2_sf(x2, df), mode=mode)


@dataclass(frozen=True)
class GraphStructure:
    """Decision-rule output: symmetric adjacency plus corrected p-values.

    ``pvals`` holds the corrected p-value per pair (1.0 on the diagonal and
    for untested pairs); adjacency(j, k) is corrected p <= alpha, with the
    boundary p == alpha counting as an edge.
    """

    d: int
    adjacency: np.ndarray
    pvals: np.ndarray
    alpha: float
    correction: str
    tests: tuple = ()

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=bool)
        pvals = np.array(self.pvals, dtype=float)
        if adjacency.shape != (self.d, self.d) or pvals.shape != (self.d, self.d):
            raise DomainError("adjacency and pvals must be d x d")
        if not np.array_equal(adjacency, adjacency.T) or np.any(np.diag(adjacency)):
            raise DomainError("adjacency must be symmetric with an empty diagonal")
        adjacency.flags.writeable = False
        pvals.flags.writeable = False
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "pvals", pvals)

    @property
    def edges(self):
        return [(j, k) for j in range(self.d) for k in range(j + 1, self.d) if self.adjacency[j, k]]


def build_graph(tests, alpha, correction=CORRECTION_NONE, d=None):
    """Threshold edgewise tests into a graph.

    Bonferroni multiplies each p-value by the number of tests (clamped to 1).
    Duplicate edges are rejected; ``d`` is inferred from the largest node
    index when not given.
    """
    if correction not in (CORRECTION_NONE, CORRECTION_BONFERRONI):
        raise DomainError(f"unknown correction {correction!r}")
    if not 0 < alpha <= 1:
        raise DomainError("alpha must be in (0, 1]")
    tests = list(tests)
    seen = set()
    for t in tests:
        if t.edge in seen:
            raise DomainError(f"duplicate edge {t.edge}")
        seen.add(t.edge)
    if d is None:
        d = 1 + max((max(t.edge) for t in tests), default=0)
    adjacency = np.zeros((d, d), dtype=bool)
    pvals = np.ones((d, d))
    factor = len(tests) if correction == CORRECTION_BONFERRONI else 1
    for t in tests:
        j, k = t.edge
        p_corr = min(1.0, t.p * factor)
        pvals[j, k] = pvals[k, j] = p_corr
        if p_corr <= alpha:
            adjacency[j, k] = adjacency[k, j] = True
    return GraphStructure(
        d=d, adjacency=adjacency, pvals=pvals, alpha=float(alpha),
        correction=correction, tests=tuple(tests),
    )


def partial_plv(fit, j, k):
    """Conditional coupling strength mapped into [0, 1).

    Defined for rotational-coupling fits with uniform margins (and accepted
    for the plain rotational family): the Bessel ratio of the rotational
    block norm, a drop-in analogue of the pairwise phase locking value that
    measures the edge conditionally on all other nodes.
    """
    if fit.params.family not in (Family.PHASE_DIFF, Family.UNIFORM_PHASE_DIFF):
        raise FamilyScopeError(
            "partial PLV is defined for the rotational-coupling families; "
            f"got {fit.params.family.value!r}"
        )
    d = fit.params.d
    j, k = min(j, k), max(j, k)
    sl = coupling_slice(d, j, k)
    return float(bessel_ratio(np.hypot(fit.params.phi[sl.start], fit.params.phi[sl.start + 1])))


def goodness_of_fit(data, fit, n_synth=2000, seed=0):
    """KS battery between the data and a synthetic sample from the fit.

    Per channel, a two-sample KS on the angles; per pair, KS on the wrapped
    differences and wrapped sums (all mapped to [0, 2pi) with origin 0); the
    three groups are each combined with Fisher's method.

    Returns
    -------
    dict with keys p_marginal, p_diff, p_sum.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = X.shape
    if d != fit.params.d:
        raise DomainError("data dimension does not match the fit")
    if n_synth < 100:
        raise DomainError("need at least 100 synthetic draws")
    synth = gibbs_sample(fit.params, GibbsConfig(n_samples=n_synth, burn_in=500, seed=seed))
    p_marginal = fisher_combine(
        [ks_two_sample(wrap_angle(X[:, j]), synth[:, j]) for j in range(d)]
    )
    if d < 2:
        return {"p_marginal": p_marginal, "p_diff": 1.0, "p_sum": 1.0}
    p_diff = fisher_combine(
        [
            ks_two_sample(wrap_angle(X[:, j] - X[:, k]), wrap_angle(synth[:, j] - synth[:, k]))
            for j, k in edge_list(d)
        ]
    )
    p_sum = fisher_combine(
        [
            ks_two_sample(wrap_angle(X[:, j] + X[:, k]), wrap_angle(synth[:, j] + synth[:, k]))
            for j, k in edge_list(d)
        ]
    )
    return {"p_marginal": p_marginal, "p_diff": p_diff, "p_sum": p_sum}


STAT_NONZERO_EDGE_COUNT = "nonzero-edge-count"
STAT_MAX_BLOCK_NORM = "max-block-norm"


def _bootstrap_statistic(params, edges, statistic):
    norms = [np.linalg.norm(params.phi[coupling_slice(params.d, j, k)]) for j, k in edges]
    if statistic == STAT_NONZERO_EDGE_COUNT:
        return float(sum(1 for v in norms if v > 0))
    if statistic == STAT_MAX_BLOCK_NORM:
        return float(max(norms))
    raise DomainError(f"unknown bootstrap statistic {statistic!r}")


def bootstrap_null_test(
    data,
    null_edges,
    B=199,
    statistic=STAT_NONZERO_EDGE_COUNT,
    seed=0,
    family=Family.FULL,
    folds=5,
    grid=None,
    tol=1e-8,
    gibbs_burn_in=500,
):
    """Parametric bootstrap test that the given edges are absent.

    A null model is fitted with the tested blocks forced to zero (penalty
    weight by cross-validation); B data sets of the original size are drawn
    from it by Gibbs sampling; for each, the penalty weight is re-selected by
    cross-validation and an unrestricted model refitted. The statistic
    (computed over the tested edge set) yields the rank p-value
    (1 + #{bootstrap >= observed}) / (B + 1).
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    null_edges = [(min(j, k), max(j, k)) for j, k in null_edges]
    if not null_edges:
        raise DomainError("need at least one null edge")
    if B < 19:
        raise DomainError("need B >= 19 bootstrap replicates")
    if grid is None:
        grid = np.geomspace(1e-3, 1.0, 7)

    def cv_fit(sample, cv_seed, zero_edges=None):
        lam, _ = select_lambda_cv(
            sample, family=family, folds=folds, grid=grid, seed=cv_seed,
            zero_edges=zero_edges, tol=tol,
        )
        return fit_group_lasso(sample, family=family, lam=lam, zero_edges=zero_edges, tol=tol)

    seeds = np.random.SeedSequence(seed).spawn(B + 2)
    obs_fit = cv_fit(X, int(seeds[0].generate_state(1)[0]))
    observed = _bootstrap_statistic(obs_fit.params, null_edges, statistic)
    null_fit = cv_fit(X, int(seeds[1].generate_state(1)[0]), zero_edges=null_edges)
    exceed = 0
    for b in range(B):
        rep_seed = int(seeds[b + 2].generate_state(1)[0])
        try:
            Xb = gibbs_sample(
                null_fit.params,
                GibbsConfig(n_samples=n, burn_in=gibbs_burn_in, seed=rep_seed),
            )
            boot_fit = cv_fit(Xb, rep_seed)
        except Exception as exc:
            raise type(exc)(f"bootstrap replicate {b}: {exc}") from exc
        if _bootstrap_statistic(boot_fit.params, null_edges, statistic) >= observed:
            exceed += 1
    return (1 + exceed) / (B + 1)
