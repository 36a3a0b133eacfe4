import math

import numpy as np
import pytest
from scipy.stats import binomtest, kstest

from conftest import all_families, quad_mean_suff_stat
from mixedstate import (
    Atom,
    CensoredMixedExponential,
    Continuous,
    DomainError,
    MixedExponential,
    MixedGamma,
    OriginalParams,
    ParameterError,
    PositiveMixedGaussian,
    TruncatedMixedExponential,
)


def theta_points(family, rng, n=4):
    """Admissible natural parameters spread over a reasonable range."""
    out = []
    for _ in range(n):
        if family.kind == "mixed_gamma":
            xi = (rng.uniform(0.5, 3.0), rng.uniform(-0.4, 2.0))
        else:
            xi = (rng.uniform(0.4, 3.0),)
        gamma = rng.uniform(0.1, 0.9)
        if family.M == 1:
            q = (1.0,)
        else:
            q1 = rng.uniform(0.2, 0.8)
            q = (q1, 1.0 - q1)
        out.append(family.natural_from_original(OriginalParams(gamma, q, xi)))
    return out


class TestDimensions:
    def test_family_dimensions(self):
        assert MixedExponential().dim == 2
        assert MixedGamma().dim == 3
        assert PositiveMixedGaussian().dim == 2
        assert TruncatedMixedExponential(K=1.0).dim == 2
        assert CensoredMixedExponential(K=1.0).dim == 3

    def test_positive_level_required(self):
        with pytest.raises(ParameterError):
            TruncatedMixedExponential(K=0.0)
        with pytest.raises(ParameterError):
            CensoredMixedExponential(K=-1.0)


class TestSufficientStatistic:
    def test_mixed_exponential(self):
        fam = MixedExponential()
        assert np.array_equal(fam.suff_stat(Atom(1)), [0.0, 0.0])
        assert np.array_equal(fam.suff_stat(Continuous(2.5)), [1.0, -2.5])

    def test_positive_gaussian_squares(self):
        fam = PositiveMixedGaussian()
        assert np.array_equal(fam.suff_stat(Continuous(3.0)), [1.0, -9.0])

    def test_censored_reference_is_censoring_atom(self):
        fam = CensoredMixedExponential(K=2.0)
        assert np.array_equal(fam.suff_stat(Atom(2)), [0.0, 0.0, 0.0])
        assert np.array_equal(fam.suff_stat(Atom(1)), [1.0, 0.0, 0.0])
        assert np.array_equal(fam.suff_stat(Continuous(0.5)), [0.0, 1.0, -0.5])

    def test_reference_state_vanishes_for_all(self):
        for fam in all_families():
            ref = fam.space.reference()
            assert np.array_equal(fam.suff_stat(ref), np.zeros(fam.dim))

    def test_domain_mismatch(self):
        with pytest.raises(DomainError):
            TruncatedMixedExponential(K=1.0).suff_stat(Continuous(1.5))

    def test_grid_matches_scalar(self, rng):
        for fam in all_families():
            space = fam.space
            values = [space.reference(), Continuous(0.3), Atom(1)]
            idx = np.array([[v.atom_index or 0 for v in values]], dtype=np.int8)
            vals = np.array([[space.coordinate(v) for v in values]])
            grid = fam.suff_stat_grid(idx, vals)
            for k, v in enumerate(values):
                assert np.array_equal(grid[0, k], fam.suff_stat(v))


class TestParameterMaps:
    def test_mixed_exponential_forward(self):
        fam = MixedExponential()
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (2.0,)))
        assert np.allclose(theta, [math.log(2.0), 2.0], rtol=0, atol=1e-15)

    def test_mixed_exponential_inverse(self):
        fam = MixedExponential()
        orig = fam.original_from_natural(np.array([0.0, 1.0]))
        assert orig.xi == (1.0,)
        assert math.isclose(orig.gamma, 0.5, rel_tol=1e-15)

    def test_censored_spec_point(self):
        fam = CensoredMixedExponential(K=1.0)
        theta = fam.natural_from_censoring(0.5, 1.0)
        assert np.allclose(theta, [1.0, 1.0, 1.0], rtol=0, atol=1e-15)
        alpha, lam = fam.censoring_from_natural(theta)
        assert math.isclose(alpha, 0.5, rel_tol=1e-12)
        assert lam == 1.0

    def test_round_trip_to_1e12(self, rng):
        for fam in all_families():
            for theta in theta_points(fam, rng, n=6):
                orig = fam.original_from_natural(theta)
                back = fam.natural_from_original(orig)
                assert np.allclose(back, theta, rtol=1e-12, atol=1e-12), fam.kind

    def test_gamma_boundary_is_an_error(self):
        fam = MixedExponential()
        for gamma in (0.0, 1.0):
            with pytest.raises(ParameterError):
                fam.natural_from_original(OriginalParams(gamma, (1.0,), (1.0,)))

    def test_degenerate_sampling_allowed(self, rng):
        fam = MixedExponential()
        always_atom = OriginalParams(1.0, (1.0,), (1.0,))
        draws = [fam.sample_original(always_atom, rng) for _ in range(50)]
        assert all(v == Atom(1) for v in draws)
        never_atom = OriginalParams(0.0, (1.0,), (1.0,))
        draws = [fam.sample_original(never_atom, rng) for _ in range(50)]
        assert all(v.is_continuous for v in draws)


class TestLogDensity:
    def test_atom_mass_is_gamma(self):
        fam = MixedExponential()
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (1.0,)))
        assert math.isclose(fam.log_density(Atom(1), theta), math.log(0.5), rel_tol=1e-12)

    def test_continuous_value(self):
        fam = MixedExponential()
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (1.0,)))
        expected = math.log(0.5 * math.exp(-1.0))
        assert math.isclose(fam.log_density(Continuous(1.0), theta), expected, rel_tol=1e-12)

    def test_truncated_support(self):
        fam = TruncatedMixedExponential(K=1.0)
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (1.0,)))
        with pytest.raises(DomainError):
            fam.log_density(Continuous(1.5), theta)

    def test_theta_outside_domain(self):
        fam = MixedExponential()
        with pytest.raises(ParameterError):
            fam.log_density(Atom(1), np.array([0.0, -1.0]))

    def test_censored_atom_masses(self):
        # masses {alpha, (1-alpha) e^{-lam K}} on the atoms {0, K}
        fam = CensoredMixedExponential(K=1.5)
        alpha, lam = 0.35, 1.2
        theta = fam.natural_from_censoring(alpha, lam)
        masses = fam.atom_masses(theta)
        assert math.isclose(masses[0], alpha, rel_tol=1e-12)
        assert math.isclose(masses[1], (1 - alpha) * math.exp(-lam * 1.5), rel_tol=1e-12)


class TestLogNormalizer:
    def test_spec_value(self):
        fam = MixedExponential()
        assert math.isclose(fam.log_normalizer([0.0, 1.0]), math.log(2.0), rel_tol=1e-14)

    def test_positive_gaussian_gamma_from_half_density_at_zero(self):
        fam = PositiveMixedGaussian()
        theta = np.array([0.4, 1.7])
        sigma = 1.0 / math.sqrt(2.0 * theta[1])
        g0 = 2.0 / (sigma * math.sqrt(2.0 * math.pi))
        gamma = g0 / (g0 + math.exp(theta[0]))
        assert math.isclose(fam.original_from_natural(theta).gamma, gamma, rel_tol=1e-12)
        assert math.isclose(fam.log_normalizer(theta), -math.log(gamma), rel_tol=1e-12)

    def test_normalization_against_quadrature(self, rng):
        for fam in all_families():
            for theta in theta_points(fam, rng, n=3):
                _, mass = quad_mean_suff_stat(fam, theta)
                assert abs(mass - 1.0) < 1e-8, fam.kind

    def test_gradient_identity_spec_point(self):
        fam = MixedExponential()
        theta = np.array([0.3, 1.7])
        mean, _ = quad_mean_suff_stat(fam, theta)
        assert np.linalg.norm(fam.grad_log_normalizer(theta) - mean) < 1e-6

    def test_gradient_identity_all_families(self, rng):
        for fam in all_families():
            for theta in theta_points(fam, rng, n=3):
                mean, _ = quad_mean_suff_stat(fam, theta)
                grad = fam.grad_log_normalizer(theta)
                assert np.linalg.norm(grad - mean) < 1e-6, (fam.kind, theta)


class TestRestrictedMean:
    def test_mixed_exponential(self):
        fam = MixedExponential()
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (2.0,)))
        assert math.isclose(fam.continuous_restricted_mean(theta), 0.25, rel_tol=1e-12)

    def test_truncated_small_rate_limit(self):
        fam = TruncatedMixedExponential(K=2.0)
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (1e-8,)))
        # E[Z] -> K/2 as the rate vanishes
        assert math.isclose(fam.continuous_restricted_mean(theta), 0.5 * 1.0, rel_tol=1e-6)

    def test_censored_includes_the_censoring_mass(self):
        # E[X 1_{(0,K]}] = (1 - alpha)(1 - e^{-lam K}) / lam counts the atom at K
        fam = CensoredMixedExponential(K=1.0)
        alpha, lam = 0.3, 1.0
        theta = fam.natural_from_censoring(alpha, lam)
        expected = (1 - alpha) * (1 - math.exp(-1.0))
        assert math.isclose(fam.continuous_restricted_mean(theta), expected, rel_tol=1e-12)

    def test_monte_carlo_cross_check(self, rng):
        fam = MixedExponential()
        theta = fam.natural_from_original(OriginalParams(0.5, (1.0,), (2.0,)))
        idx, vals = fam.sample_grid(np.broadcast_to(theta, (200_000, 2)), rng)
        mc = np.where(idx == 0, vals, 0.0).mean()
        assert abs(mc - 0.25) < 0.01


class TestSampling:
    def test_exponential_mean_large_sample(self, rng):
        fam = MixedExponential()
        # gamma ~ 0: essentially pure Exp(1)
        theta = fam.natural_from_original(OriginalParams(1e-12, (1.0,), (1.0,)))
        idx, vals = fam.sample_grid(np.broadcast_to(theta, (1_000_000, 2)), rng)
        assert np.mean(idx > 0) < 1e-4
        assert abs(vals[idx == 0].mean() - 1.0) < 0.01

    def test_atom_frequency_binomial(self, rng):
        for fam in all_families():
            theta = theta_points(fam, rng, n=1)[0]
            gamma = float(fam.atom_masses(theta).sum())
            n = 200_000
            shape = (n, fam.dim)
            idx, _ = fam.sample_grid(np.broadcast_to(theta, shape), rng)
            k = int(np.sum(idx > 0))
            assert binomtest(k, n, gamma).pvalue > 1e-3, fam.kind

    def test_continuous_part_ks(self, rng):
        for fam in all_families():
            theta = theta_points(fam, rng, n=1)[0]
            idx, vals = fam.sample_grid(np.broadcast_to(theta, (200_000, fam.dim)), rng)
            xs = vals[idx == 0]
            xi = theta[fam.M :]
            res = kstest(xs, lambda x: fam.continuous_cdf(x, xi))
            assert res.pvalue > 1e-3, fam.kind

    def test_censored_mass_at_censoring_atom(self, rng):
        fam = CensoredMixedExponential(K=1.0)
        alpha, lam = 0.4, 1.3
        theta = fam.natural_from_censoring(alpha, lam)
        idx, _ = fam.sample_grid(np.broadcast_to(theta, (400_000, 3)), rng)
        k = int(np.sum(idx == 2))
        expected = (1 - alpha) * math.exp(-lam)
        assert binomtest(k, idx.size, expected).pvalue > 1e-3

    def test_sample_requires_admissible_theta(self, rng):
        with pytest.raises(ParameterError):
            MixedExponential().sample(np.array([0.0, 0.0]), rng)

    def test_scalar_sample_matches_space(self, rng):
        for fam in all_families():
            theta = theta_points(fam, rng, n=1)[0]
            for _ in range(20):
                fam.space.validate(fam.sample(theta, rng))


class TestMixedGamma:
    def test_density_matches_gamma_formula(self):
        fam = MixedGamma()
        a, b, gamma = 2.5, 1.5, 0.3
        theta = fam.natural_from_original(OriginalParams(gamma, (1.0,), (b, a - 1.0)))
        x = 1.7
        expected = math.log(
            (1 - gamma) * b**a / math.gamma(a) * x ** (a - 1) * math.exp(-b * x)
        )
        assert math.isclose(fam.log_density(Continuous(x), theta), expected, rel_tol=1e-12)

    def test_restricted_mean(self):
        fam = MixedGamma()
        theta = fam.natural_from_original(OriginalParams(0.25, (1.0,), (2.0, 0.5)))
        assert math.isclose(fam.continuous_restricted_mean(theta), 0.75 * 1.5 / 2.0, rel_tol=1e-12)
