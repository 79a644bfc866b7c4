"""Synthetic data generators and the structure-recovery benchmark harness.

The generators build rotationally coupled angle data trial by trial (each
node's angles derived from a graph neighbor plus a fixed offset and von Mises
noise, with a few trials contaminated by much noisier draws), or draw from a
random sparse coupling model via Gibbs sampling. The harness fits models to
replicated data sets, scores every candidate edge, and reports ROC/AUC plus
false positive/negative rates at a chosen decision rule.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circular import rayleigh_statistic, rayleigh_test, von_mises_sample, wrap_angle
from .estimation import fit_closed_form
from .exceptions import DomainError
from .inference import asymptotic_cov, edge_test
from .model import Family, TorusGraphParams, coupling_slice, edge_list, param_dim
from .sampling import GibbsConfig, gibbs_sample

FPR_GRID_SIZE = 512


@dataclass(frozen=True)
class TruthGraph:
    """Ground-truth edge set; pairs are normalized to j < k."""

    d: int
    edges: frozenset

    def __post_init__(self):
        norm = set()
        for j, k in self.edges:
            if j == k:
                raise DomainError("self-loops are not allowed")
            if not (0 <= j < self.d and 0 <= k < self.d):
                raise DomainError(f"edge ({j}, {k}) out of range for d={self.d}")
            norm.add((min(j, k), max(j, k)))
        object.__setattr__(self, "edges", frozenset(norm))

    def has_edge(self, j, k):
        return (min(j, k), max(j, k)) in self.edges


@dataclass(frozen=True)
class RecoverySummary:
    """Averaged ROC curve with its AUC and error rates at the decision rule.

    ``fpr_reps``/``fnr_reps`` hold the per-replicate rates behind the means,
    for Monte-Carlo standard errors (decisions within a replicate are
    correlated, so binomial formulas understate the uncertainty).
    """

    auc: float
    roc: np.ndarray  # (FPR_GRID_SIZE, 2) columns (fpr, tpr)
    fpr_at_alpha: float
    fnr_at_alpha: float
    n_reps: int
    seeds: tuple
    param_mse: Optional[float] = None
    fpr_reps: tuple = ()
    fnr_reps: tuple = ()

    def fpr_mcse(self):
        vals = np.array([v for v in self.fpr_reps if np.isfinite(v)])
        if vals.size < 2:
            return float("nan")
        return float(vals.std(ddof=1) / np.sqrt(vals.size))


def _noise(rng, kappa, n, contam_count, contam_kappa):
    """Coupling noise with `contam_count` trials (without replacement)
    re-drawn at the contamination concentration."""
    eps = von_mises_sample(0.0, kappa, n, rng)
    if contam_count:
        picks = rng.choice(n, size=contam_count, replace=False)
        eps[picks] = von_mises_sample(0.0, contam_kappa, contam_count, rng)
    return eps


def gen_chain(N, d, xi, kappa1, kappa_eps, contam=(0, 1.0), seed=0):
    """Linear-chain data: x_{j+1} = x_j + xi + eps per trial.

    The first node is von Mises(0, kappa1); each link adds the fixed offset
    ``xi`` plus von Mises(0, kappa_eps) noise, with ``contam[0]`` trials per
    link (chosen without replacement, independently per link) re-drawn at
    concentration ``contam[1]``. Truth graph is the chain.
    """
    contam_count, contam_kappa = int(contam[0]), float(contam[1])
    if d < 2:
        raise DomainError("chain needs d >= 2")
    if contam_count > N:
        raise DomainError("contaminated trial count exceeds N")
    rng = np.random.default_rng(seed)
    X = np.empty((N, d))
    X[:, 0] = von_mises_sample(0.0, kappa1, N, rng)
    for j in range(d - 1):
        eps = _noise(rng, kappa_eps, N, contam_count, contam_kappa)
        X[:, j + 1] = X[:, j] + xi + eps
    truth = TruthGraph(d=d, edges=frozenset((j, j + 1) for j in range(d - 1)))
    return wrap_angle(X), truth


def gen_indirect_triple(N, seed=0):
    """Three nodes with a hub: node 1 drives nodes 0 and 2, no direct (0, 2).

    The hub is nearly uniform (concentration 0.01); node 0 sits pi/6 ahead
    and node 2 pi/100 ahead, each through von Mises(0, 2) coupling noise with
    75 trials contaminated at concentration 0.1. Truth edges {(0,1), (1,2)}.
    """
    if N < 100:
        raise DomainError("need N >= 100")
    rng = np.random.default_rng(seed)
    hub = von_mises_sample(0.0, 0.01, N, rng)
    x0 = hub + np.pi / 6 + _noise(rng, 2.0, N, 75, 0.1)
    x2 = hub + np.pi / 100 + _noise(rng, 2.0, N, 75, 0.1)
    X = np.column_stack([x0, hub, x2])
    truth = TruthGraph(d=3, edges=frozenset({(0, 1), (1, 2)}))
    return wrap_angle(X), truth


def gen_uniform_null(N, d, seed=0):
    """Independent uniform channels; the truth graph is empty."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 2.0 * np.pi, size=(N, d))
    return X, TruthGraph(d=d, edges=frozenset())


def gen_random_torus_graph(d, edge_density, coupling_scale=1.0, seed=0, marginal_kappa=0.0):
    """Random sparse coupling model: ceil(density * d(d-1)/2) edges chosen
    uniformly, each with a rotational pair of norm ``coupling_scale`` in a
    uniform random direction; no reflectional terms. Marginal blocks are zero
    (uniform margins) unless ``marginal_kappa`` is set.
    """
    if not 0 < edge_density <= 1:
        raise DomainError("edge density must be in (0, 1]")
    rng = np.random.default_rng(seed)
    pairs = edge_list(d)
    n_edges = int(np.ceil(edge_density * len(pairs)))
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    phi = np.zeros(param_dim(d))
    if marginal_kappa > 0:
        mus = rng.uniform(0, 2 * np.pi, d)
        phi[0 : 2 * d : 2] = marginal_kappa * np.cos(mus)
        phi[1 : 2 * d : 2] = marginal_kappa * np.sin(mus)
    for t in chosen:
        j, k = pairs[t]
        angle = rng.uniform(0, 2 * np.pi)
        sl = coupling_slice(d, j, k)
        phi[sl.start] = coupling_scale * np.cos(angle)
        phi[sl.start + 1] = coupling_scale * np.sin(angle)
    family = Family.PHASE_DIFF if marginal_kappa > 0 else Family.UNIFORM_PHASE_DIFF
    params = TorusGraphParams(d=d, phi=phi, family=family)
    truth = TruthGraph(d=d, edges=frozenset(pairs[t] for t in chosen))
    return params, truth


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative generator description used by the benchmark harness.

    kind: one of "chain", "indirect-triple", "uniform-null", "random".
    options: keyword arguments of the matching gen_* function (minus N, seed).
    """

    kind: str
    options: dict = field(default_factory=dict)

    _KINDS = ("chain", "indirect-triple", "uniform-null", "random")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise DomainError(f"unknown generator kind {self.kind!r}; expected one of {self._KINDS}")

    def generate(self, N, seed):
        """Produce (angles, truth, true_params-or-None) for one replicate."""
        opts = dict(self.options)
        if self.kind == "chain":
            X, truth = gen_chain(N=N, seed=seed, **opts)
            return X, truth, None
        if self.kind == "indirect-triple":
            X, truth = gen_indirect_triple(N=N, seed=seed, **opts)
            return X, truth, None
        if self.kind == "uniform-null":
            X, truth = gen_uniform_null(N=N, seed=seed, **opts)
            return X, truth, None
        gibbs = opts.pop("gibbs", {})
        params, truth = gen_random_torus_graph(seed=seed, **opts)
        cfg = GibbsConfig(
            n_samples=N,
            burn_in=int(gibbs.get("burn_in", 500)),
            thin=int(gibbs.get("thin", 2)),
            seed=seed,
        )
        return gibbs_sample(params, cfg), truth, params


def _roc_points(scores, truth, pairs):
    """Threshold sweep of edge scores against the truth graph."""
    labels = np.array([truth.has_edge(j, k) for j, k in pairs])
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    order = np.argsort(-np.asarray(scores))
    tp = np.concatenate([[0], np.cumsum(labels[order])])
    fp = np.concatenate([[0], np.cumsum(~labels[order])])
    tpr = tp / n_pos if n_pos else np.ones_like(tp, dtype=float)
    fpr = fp / n_neg if n_neg else np.ones_like(fp, dtype=float)
    return fpr, tpr


def _interp_roc(fpr, tpr, grid):
    # the ROC is the right-continuous staircase through the sweep corners
    # (max tpr at each achieved fpr); evaluate it on the grid with
    # previous-value semantics, which preserves the Mann-Whitney area
    best = {}
    for f, t in zip(fpr, tpr):
        best[f] = max(best.get(f, 0.0), t)
    xs = np.array(sorted(best))
    ys = np.array([best[x] for x in xs])
    pos = np.searchsorted(xs, grid, side="right") - 1
    return ys[np.clip(pos, 0, xs.size - 1)]


def _decision_rates(pvals, truth, pairs, alpha, correction):
    m = len(pairs)
    factor = m if correction == "bonferroni" else 1
    reject = np.array([min(1.0, p * factor) <= alpha for p in pvals])
    labels = np.array([truth.has_edge(j, k) for j, k in pairs])
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    fpr = float(np.sum(reject & ~labels) / n_neg) if n_neg else np.nan
    fnr = float(np.sum(~reject & labels) / n_pos) if n_pos else np.nan
    return fpr, fnr


def _summarize(per_rep, seeds, n_reps):
    grid = np.linspace(0.0, 1.0, FPR_GRID_SIZE)
    tprs = np.array([_interp_roc(f, t, grid) for f, t, _, _, _ in per_rep])
    mean_tpr = tprs.mean(axis=0)
    auc = float(np.trapezoid(mean_tpr, grid))
    fprs = np.array([r[2] for r in per_rep], dtype=float)
    fnrs = np.array([r[3] for r in per_rep], dtype=float)
    mses = [r[4] for r in per_rep if r[4] is not None]
    roc = np.column_stack([grid, mean_tpr])
    with np.errstate(invalid="ignore"):
        fpr_mean = float(np.nanmean(fprs)) if np.any(np.isfinite(fprs)) else float("nan")
        fnr_mean = float(np.nanmean(fnrs)) if np.any(np.isfinite(fnrs)) else float("nan")
    return RecoverySummary(
        auc=auc,
        roc=roc,
        fpr_at_alpha=fpr_mean,
        fnr_at_alpha=fnr_mean,
        n_reps=n_reps,
        seeds=tuple(seeds),
        param_mse=float(np.mean(mses)) if mses else None,
        fpr_reps=tuple(float(v) for v in fprs),
        fnr_reps=tuple(float(v) for v in fnrs),
    )


def recovery_experiment(gen, n_reps, N, alpha=0.001, correction="bonferroni", seed=0,
                        family=Family.FULL, mode="full"):
    """Model-based structure recovery: fit, score edges by the block test
    statistic, sweep thresholds for the ROC, and apply the (alpha,
    correction) rule for FPR/FNR. Replicate seeds are spawned from ``seed``.
    """
    if n_reps < 1:
        raise DomainError("need at least one replicate")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_reps)]
    per_rep = []
    for rep, rep_seed in enumerate(seeds):
        try:
            X, truth, true_params = gen.generate(N, rep_seed)
            fit = fit_closed_form(X, family=family)
            cov = asymptotic_cov(X, fit.params, moments=fit.moments)
            pairs = edge_list(truth.d)
            tests = [edge_test(fit, cov, j, k, mode=mode) for j, k in pairs]
        except Exception as exc:
            raise type(exc)(f"replicate {rep} (seed {rep_seed}): {exc}") from exc
        scores = [t.x2 for t in tests]
        pvals = [t.p for t in tests]
        fpr_pts, tpr_pts = _roc_points(scores, truth, pairs)
        fpr, fnr = _decision_rates(pvals, truth, pairs, alpha, correction)
        mse = None
        if true_params is not None:
            diff = fit.params.phi - true_params.phi
            mse = float(np.mean(diff**2))
        per_rep.append((fpr_pts, tpr_pts, fpr, fnr, mse))
    return _summarize(per_rep, seeds, n_reps)


def plv_recovery_experiment(gen, n_reps, N, alpha=0.001, correction="bonferroni", seed=0):
    """Pairwise baseline: score each pair by the Rayleigh statistic of the
    wrapped phase differences and decide edges by the Rayleigh test."""
    if n_reps < 1:
        raise DomainError("need at least one replicate")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_reps)]
    per_rep = []
    for rep, rep_seed in enumerate(seeds):
        try:
            X, truth, _ = gen.generate(N, rep_seed)
            pairs = edge_list(truth.d)
            diffs = [wrap_angle(X[:, j] - X[:, k]) for j, k in pairs]
            scores = [rayleigh_statistic(w) for w in diffs]
            pvals = [rayleigh_test(w) for w in diffs]
        except Exception as exc:
            raise type(exc)(f"replicate {rep} (seed {rep_seed}): {exc}") from exc
        fpr_pts, tpr_pts = _roc_points(scores, truth, pairs)
        fpr, fnr = _decision_rates(pvals, truth, pairs, alpha, correction)
        per_rep.append((fpr_pts, tpr_pts, fpr, fnr, None))
    return _summarize(per_rep, seeds, n_reps)
