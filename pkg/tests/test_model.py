"""Tests for the model parameterization module."""

import numpy as np
import pytest

from torusgraphs.exceptions import DomainError, UnidentifiedMeanError
from torusgraphs.model import (
    Family,
    MeanCenteredParams,
    TorusGraphParams,
    apply_family,
    coupling_slice,
    edge_list,
    family_mask,
    log_unnorm_density,
    param_dim,
    sine_model_embed,
    suff_stats,
    suff_stats_batch,
    to_mean_centered,
    to_natural,
)


def random_params(d, rng, family=Family.FULL, scale=1.0):
    phi = rng.uniform(-scale, scale, size=param_dim(d))
    phi[~family_mask(d, family)] = 0.0
    return TorusGraphParams(d=d, phi=phi, family=family)


class TestLayout:
    def test_param_count(self):
        # 2d + 4 d(d-1)/2 = 2 d^2
        for d in range(1, 11):
            assert param_dim(d) == 2 * d + 4 * (d * (d - 1) // 2) == 2 * d * d

    def test_edge_order_lexicographic(self):
        assert edge_list(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    def test_coupling_slices_partition(self):
        d = 5
        seen = set(range(2 * d))
        for j, k in edge_list(d):
            sl = coupling_slice(d, j, k)
            block = set(range(sl.start, sl.stop))
            assert not (block & seen)
            seen |= block
        assert seen == set(range(param_dim(d)))


class TestSuffStats:
    def test_single_node(self):
        s = suff_stats(np.array([np.pi / 2]))
        np.testing.assert_allclose(s.s1, [0.0, 1.0], atol=1e-15)
        assert s.s2.size == 0

    def test_zero_angles(self):
        s = suff_stats(np.zeros(2))
        np.testing.assert_allclose(s.s1, [1, 0, 1, 0], atol=0)
        np.testing.assert_allclose(s.s2, [1, 0, 1, 0], atol=0)

    def test_direct_trig_oracle(self):
        s = suff_stats(np.array([np.pi / 3, np.pi / 6]))
        np.testing.assert_allclose(s.s2[:2], [np.cos(np.pi / 6), 0.5], rtol=1e-14)

    def test_entries_bounded_and_pythagorean(self):
        rng = np.random.default_rng(0)
        for d in (2, 3, 5):
            s = suff_stats(rng.uniform(0, 2 * np.pi, d))
            full = s.full
            assert np.all(np.abs(full) <= 1.0 + 1e-15)
            s2 = s.s2.reshape(-1, 4)
            np.testing.assert_allclose(s2[:, 0] ** 2 + s2[:, 1] ** 2, 1.0, atol=1e-12)
            np.testing.assert_allclose(s2[:, 2] ** 2 + s2[:, 3] ** 2, 1.0, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 2 * np.pi, size=(7, 4))
        batch = suff_stats_batch(X)
        for i in range(7):
            np.testing.assert_array_equal(batch[i], suff_stats(X[i]).full)


class TestLogUnnormDensity:
    def test_zero_coefficients(self):
        p = TorusGraphParams(d=3, phi=np.zeros(18))
        rng = np.random.default_rng(2)
        assert log_unnorm_density(p, rng.uniform(0, 2 * np.pi, 3)) == 0.0

    def test_pure_difference_coupling(self):
        phi = np.zeros(8)
        phi[4] = 1.0  # cos(x1 - x2) coefficient
        p = TorusGraphParams(d=2, phi=phi)
        for theta in (0.0, 1.1, 4.0):
            assert log_unnorm_density(p, np.array([theta, theta])) == pytest.approx(1.0)
        assert log_unnorm_density(p, np.array([0.0, np.pi])) == pytest.approx(-1.0)

    def test_periodicity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d = int(rng.integers(1, 6))
            params = random_params(d, rng)
            x = rng.uniform(0, 2 * np.pi, d)
            base = log_unnorm_density(params, x)
            j = int(rng.integers(0, d))
            shifted = x.copy()
            shifted[j] += 2 * np.pi
            assert log_unnorm_density(params, shifted) == pytest.approx(base, abs=1e-12)

    def test_dimension_mismatch(self):
        p = TorusGraphParams(d=2, phi=np.zeros(8))
        with pytest.raises(DomainError):
            log_unnorm_density(p, np.zeros(3))

    def test_zero_coupling_block_separates(self):
        # with an edge's block zeroed, the exponent difference from moving x_k
        # does not depend on x_j
        rng = np.random.default_rng(4)
        d = 4
        params = random_params(d, rng)
        phi = np.array(params.phi)
        phi[coupling_slice(d, 1, 3)] = 0.0
        params = TorusGraphParams(d=d, phi=phi)
        x = rng.uniform(0, 2 * np.pi, d)
        x_alt = x.copy()
        x_alt[3] = rng.uniform(0, 2 * np.pi)
        deltas = []
        for xj in np.linspace(0, 2 * np.pi, 25):
            a = x.copy()
            b = x_alt.copy()
            a[1] = xj
            b[1] = xj
            deltas.append(log_unnorm_density(params, a) - log_unnorm_density(params, b))
        assert np.ptp(deltas) < 1e-12


class TestFamilies:
    def test_full_is_identity(self):
        rng = np.random.default_rng(5)
        params = random_params(3, rng)
        np.testing.assert_array_equal(apply_family(params, Family.FULL).phi, params.phi)

    def test_phase_diff_zeroes_reflectional(self):
        phi = np.zeros(8)
        phi[4:8] = [1.0, 2.0, 3.0, 4.0]
        masked = apply_family(TorusGraphParams(d=2, phi=phi), Family.PHASE_DIFF)
        np.testing.assert_array_equal(masked.phi[4:8], [1.0, 2.0, 0.0, 0.0])

    def test_uniform_phase_diff_mask_count(self):
        for d in range(2, 8):
            inactive = ~family_mask(d, Family.UNIFORM_PHASE_DIFF)
            assert inactive.sum() == 2 * d + 2 * (d * (d - 1) // 2)

    def test_params_validate_mask(self):
        phi = np.ones(8)
        with pytest.raises(DomainError):
            TorusGraphParams(d=2, phi=phi, family=Family.UNIFORM_MARGINAL)


class TestReparameterization:
    def test_marginal_axis_case(self):
        mc = to_mean_centered(TorusGraphParams(d=1, phi=np.array([0.0, 3.0])))
        assert mc.kappa[0] == pytest.approx(3.0)
        assert mc.mu[0] == pytest.approx(np.pi / 2)

    def test_zero_marginal_unidentified(self):
        with pytest.raises(UnidentifiedMeanError):
            to_mean_centered(TorusGraphParams(d=2, phi=np.zeros(8)))

    def test_simple_forward(self):
        mc = MeanCenteredParams(mu=np.zeros(1), kappa=np.ones(1))
        np.testing.assert_allclose(to_natural(mc).phi, [1.0, 0.0], atol=1e-15)

    def test_ss_only_block(self):
        # single edge with ss-interaction 2 and zero means: block (1, 0, -1, 0)
        lam = np.zeros((1, 4))
        lam[0, 3] = 2.0
        mc = MeanCenteredParams(mu=np.zeros(2), kappa=np.ones(2), lambdas=lam)
        block = to_natural(mc).coupling_block(0, 1)
        np.testing.assert_allclose(block, [1.0, 0.0, -1.0, 0.0], atol=1e-15)

    def test_roundtrip_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            d = int(rng.integers(1, 6))
            mc = MeanCenteredParams(
                mu=rng.uniform(0, 2 * np.pi, d),
                kappa=rng.uniform(0.1, 3.0, d),
                lambdas=rng.uniform(-2, 2, size=(d * (d - 1) // 2, 4)),
            )
            back = to_mean_centered(to_natural(mc))
            np.testing.assert_allclose(back.mu, mc.mu, atol=1e-10)
            np.testing.assert_allclose(back.kappa, mc.kappa, atol=1e-10)
            np.testing.assert_allclose(back.lambdas, mc.lambdas, atol=1e-10)

    def test_density_identity(self):
        # the exponent of the natural form must equal the mean-centered
        # exponent pointwise (the reparameterization is an exact trig
        # expansion, not merely invertible)
        rng = np.random.default_rng(9)
        for _ in range(25):
            d = int(rng.integers(1, 5))
            mc = MeanCenteredParams(
                mu=rng.uniform(0, 2 * np.pi, d),
                kappa=rng.uniform(0.0, 3.0, d),
                lambdas=rng.uniform(-2, 2, size=(d * (d - 1) // 2, 4)),
            )
            params = to_natural(mc)
            X = rng.uniform(0, 2 * np.pi, size=(50, d))
            natural = log_unnorm_density(params, X)
            centered = np.zeros(50)
            for j in range(d):
                centered += mc.kappa[j] * np.cos(X[:, j] - mc.mu[j])
            for t, (j, k) in enumerate(edge_list(d)):
                cj = np.cos(X[:, j] - mc.mu[j])
                sj = np.sin(X[:, j] - mc.mu[j])
                ck = np.cos(X[:, k] - mc.mu[k])
                sk = np.sin(X[:, k] - mc.mu[k])
                lcc, lcs, lsc, lss = mc.lambdas[t]
                centered += lcc * cj * ck + lcs * cj * sk + lsc * sj * ck + lss * sj * sk
            np.testing.assert_allclose(natural, centered, atol=1e-12)

    def test_roundtrip_other_direction(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            d = int(rng.integers(1, 5))
            phi = rng.uniform(-2, 2, size=param_dim(d))
            # keep marginal blocks clearly nonzero so mu is identified
            phi[: 2 * d][np.abs(phi[: 2 * d]) < 0.1] = 0.5
            params = TorusGraphParams(d=d, phi=phi)
            back = to_natural(to_mean_centered(params))
            np.testing.assert_allclose(back.phi, params.phi, atol=1e-10)


class TestSineModelEmbed:
    def test_zero_interaction_is_independence(self):
        p = sine_model_embed(np.array([0.3, 1.2, 4.0]), np.array([1.0, 2.0, 0.5]), np.zeros(3))
        assert np.count_nonzero(p.phi[6:]) == 0

    def test_restriction_display(self):
        p = sine_model_embed(np.zeros(2), np.ones(2), np.array([2.0]))
        np.testing.assert_allclose(p.coupling_block(0, 1), [1.0, 0.0, -1.0, 0.0], atol=1e-15)

    def test_structural_constraint(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            d = int(rng.integers(2, 6))
            p = sine_model_embed(
                rng.uniform(0, 2 * np.pi, d),
                rng.uniform(0, 3, d),
                rng.uniform(-3, 3, d * (d - 1) // 2),
            )
            for j, k in edge_list(d):
                b = p.coupling_block(j, k)
                assert abs(b[0] ** 2 + b[1] ** 2 - (b[2] ** 2 + b[3] ** 2)) < 1e-12
