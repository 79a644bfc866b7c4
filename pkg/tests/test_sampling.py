"""Tests for the von Mises full conditionals and the Gibbs sampler."""

import numpy as np
import pytest

from torusgraphs.circular import (
    bessel_i,
    chi2_sf,
    circular_mean_resultant,
    plv,
    rayleigh_test,
)
from torusgraphs.exceptions import DomainError
from torusgraphs.model import TorusGraphParams, coupling_slice, param_dim, suff_stats_batch
from torusgraphs.sampling import GibbsConfig, conditional_von_mises, gibbs_sample

from conftest import bessel_series_oracle


def random_params(d, rng, scale=1.0):
    phi = rng.uniform(-scale, scale, size=param_dim(d))
    return TorusGraphParams(d=d, phi=phi)


def conditional_slice_oracle(params, k, x_rest, grid):
    """Grid-normalized slice of the joint exponent along coordinate k."""
    d = params.d
    X = np.empty((grid.size, d))
    others = [j for j in range(d) if j != k]
    X[:, others] = np.asarray(x_rest)[None, :]
    X[:, k] = grid
    log_q = suff_stats_batch(X) @ params.phi
    q = np.exp(log_q - log_q.max())
    return q / (q.sum() * (grid[1] - grid[0]))


class TestConditionalVonMises:
    def test_all_zero_params_uniform(self):
        params = TorusGraphParams(d=3, phi=np.zeros(18))
        amp, _ = conditional_von_mises(params, 1, np.array([0.3, 2.0]))
        assert amp == 0.0

    def test_pure_difference_coupling(self):
        # density prop to exp(cos(x1 - x2)): conditioning on x2 = c gives (1, c)
        phi = np.zeros(8)
        phi[4] = 1.0
        params = TorusGraphParams(d=2, phi=phi)
        for c in (0.0, 1.0, 5.5):
            amp, delta = conditional_von_mises(params, 0, np.array([c]))
            assert amp == pytest.approx(1.0, rel=1e-12)
            assert delta == pytest.approx(c % (2 * np.pi), abs=1e-12)

    def test_matches_grid_normalized_slice(self):
        rng = np.random.default_rng(42)
        grid = np.arange(1024) * (2 * np.pi / 1024)
        for trial in range(20):
            d = int(rng.integers(2, 5))
            params = random_params(d, rng)
            k = int(rng.integers(0, d))
            x_rest = rng.uniform(0, 2 * np.pi, d - 1)
            amp, delta = conditional_von_mises(params, k, x_rest)
            vm = np.exp(amp * np.cos(grid - delta)) / (2 * np.pi * bessel_i(0, amp))
            oracle = conditional_slice_oracle(params, k, x_rest, grid)
            assert np.max(np.abs(vm - oracle)) < 1e-8

    def test_dimension_mismatch(self):
        params = TorusGraphParams(d=3, phi=np.zeros(18))
        with pytest.raises(DomainError):
            conditional_von_mises(params, 0, np.zeros(3))
        with pytest.raises(DomainError):
            conditional_von_mises(params, 5, np.zeros(2))


class TestGibbsSampler:
    def test_uniform_when_all_zero(self):
        params = TorusGraphParams(d=3, phi=np.zeros(18))
        passes = 0
        runs = 20
        for seed in range(runs):
            draws = gibbs_sample(params, GibbsConfig(n_samples=2000, burn_in=20, seed=seed))
            if all(rayleigh_test(draws[:, j]) > 0.001 for j in range(3)):
                passes += 1
        assert passes >= int(np.ceil(0.99 * runs))

    def test_univariate_von_mises(self):
        phi = 2.0 * np.array([np.cos(1.0), np.sin(1.0)])
        params = TorusGraphParams(d=1, phi=phi)
        draws = gibbs_sample(params, GibbsConfig(n_samples=10**5, burn_in=100, seed=3))
        r = circular_mean_resultant(draws[:, 0])
        target = bessel_series_oracle(1, 2) / bessel_series_oracle(0, 2)
        assert abs(r.mean_resultant_length - target) < 0.01
        assert abs(r.mean_direction - 1.0) < 0.02

    def test_pairwise_plv_matches_population(self):
        # pure difference coupling with uniform margins: differences are
        # von Mises(2), so population PLV is the Bessel ratio at 2
        phi = np.zeros(8)
        phi[coupling_slice(2, 0, 1)] = [2.0, 0.0, 0.0, 0.0]
        params = TorusGraphParams(d=2, phi=phi)
        draws = gibbs_sample(params, GibbsConfig(n_samples=10**5, burn_in=500, seed=11))
        target = bessel_series_oracle(1, 2) / bessel_series_oracle(0, 2)
        assert plv(draws[:, 0], draws[:, 1]) == pytest.approx(target, rel=0.02)

    def test_seed_determinism(self):
        rng = np.random.default_rng(9)
        params = random_params(3, rng)
        cfg = GibbsConfig(n_samples=200, burn_in=50, thin=2, seed=123)
        a = gibbs_sample(params, cfg)
        b = gibbs_sample(params, cfg)
        np.testing.assert_array_equal(a, b)

    def test_explicit_init_and_range(self):
        rng = np.random.default_rng(10)
        params = random_params(2, rng)
        cfg = GibbsConfig(n_samples=100, burn_in=0, seed=1, init=np.array([0.1, 6.0]))
        draws = gibbs_sample(params, cfg)
        assert draws.shape == (100, 2)
        assert np.all((draws >= 0) & (draws < 2 * np.pi))

    def test_detailed_balance_smoke(self):
        # bivariate model, 64x64 discretization: empirical histogram of Gibbs
        # draws vs grid-normalized density, Pearson chi-squared GOF
        phi = np.zeros(8)
        phi[0:2] = [0.4, 0.2]
        phi[coupling_slice(2, 0, 1)] = [1.0, 0.5, 0.2, -0.3]
        params = TorusGraphParams(d=2, phi=phi)
        n = 5 * 10**5
        draws = gibbs_sample(params, GibbsConfig(n_samples=n, burn_in=200, thin=2, seed=21))
        G = 64
        edges = np.linspace(0, 2 * np.pi, G + 1)
        observed, _, _ = np.histogram2d(draws[:, 0], draws[:, 1], bins=[edges, edges])
        centers = (edges[:-1] + edges[1:]) / 2
        XX, YY = np.meshgrid(centers, centers, indexing="ij")
        pts = np.column_stack([XX.ravel(), YY.ravel()])
        log_q = suff_stats_batch(pts) @ params.phi
        q = np.exp(log_q - log_q.max())
        expected = (q / q.sum() * n).reshape(G, G)
        x2 = float(np.sum((observed - expected) ** 2 / expected))
        p = chi2_sf(x2, G * G - 1)
        assert p > 0.001

    def test_config_validation(self):
        with pytest.raises(DomainError):
            GibbsConfig(n_samples=0)
        with pytest.raises(DomainError):
            GibbsConfig(n_samples=10, thin=0)
