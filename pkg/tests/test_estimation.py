import math

import numpy as np
import pytest

from conftest import random_admissible_model, random_field, sym2
from mixedstate import (
    Atom,
    AutoModel,
    CensoredMixedExponential,
    Continuous,
    Field,
    FitOptions,
    GibbsConfig,
    InadmissibleParameterError,
    Lattice,
    MixedExponential,
    MixedGamma,
    NonIdentifiableError,
    OriginalParams,
    Parameterization,
    ParameterError,
    PositiveMixedGaussian,
    TruncatedMixedExponential,
    bootstrap_se,
    fit,
    grad_log_pseudo_likelihood,
    log_pseudo_likelihood,
    mixed_init_field,
    simulate,
)

PG = PositiveMixedGaussian()
EXP = MixedExponential()


def iid_field(family, theta, shape, rng):
    idx, vals = family.sample_grid(np.broadcast_to(theta, shape + (family.dim,)), rng)
    return Field(family.space, idx, vals)


class TestParameterization:
    def test_names(self):
        assert Parameterization(PG).names == ("a", "b", "c1", "c2")
        assert Parameterization(PG, isotropic=True).names == ("a", "b", "c")
        assert Parameterization(EXP).names == ("a", "b", "c1", "d1", "e1", "c2", "d2", "e2")
        cen = CensoredMixedExponential(K=1.0)
        assert Parameterization(cen).names == (
            "r", "a", "b",
            "s1", "u1", "t1", "c1", "d1", "e1",
            "s2", "u2", "t2", "c2", "d2", "e2",
        )

    def test_pack_unpack_round_trip(self, rng):
        for fam in (PG, EXP, TruncatedMixedExponential(2.0), CensoredMixedExponential(1.0)):
            for iso in (False, True):
                param = Parameterization(fam, isotropic=iso)
                phi = rng.normal(size=param.n_params)
                alpha, bh, bv = param.unpack(phi)
                assert np.allclose(param.pack(alpha, bh, bv), phi)

    def test_gamma_not_estimable(self):
        with pytest.raises(ParameterError):
            Parameterization(MixedGamma())


class TestPseudoLikelihood:
    def test_iid_case_equals_loglikelihood(self, rng):
        theta = PG.natural_from_original(OriginalParams(0.4, (1.0,), (0.8,)))
        f = iid_field(PG, theta, (12, 12), rng)
        phi = np.array([theta[0], theta[1], 0.0, 0.0])
        pl = log_pseudo_likelihood(PG, phi, f)
        ll = sum(PG.log_density(f.get(i, j), theta) for i in range(12) for j in range(12))
        assert math.isclose(pl, ll, rel_tol=1e-12)

    def test_single_reference_site(self):
        theta = PG.natural_from_original(OriginalParams(0.35, (1.0,), (1.0,)))
        f = Field.full_reference(PG.space, 1, 1)
        phi = np.array([theta[0], theta[1], 0.0, 0.0])
        assert math.isclose(log_pseudo_likelihood(PG, phi, f), math.log(0.35), rel_tol=1e-12)

    def test_against_independent_reimplementation(self):
        # hand-coded conditional density for the 4-parameter model, written
        # purely from the half-Gaussian mixture formulas
        phi = np.array([0.0, 1.0, 0.0, 0.0])
        f = Field.from_values(PG.space, [[0.0, 1.2], [0.7, 0.0]])
        a, b, c1, c2 = phi

        def theta1_at(i, j):
            total = a
            for (ni, nj), coef in (((i, j - 1), c1), ((i, j + 1), c1), ((i - 1, j), c2), ((i + 1, j), c2)):
                if 0 <= ni < 2 and 0 <= nj < 2 and f.atom_idx[ni, nj] == 0:
                    total += coef
            return total

        def log_cond(i, j):
            t1 = theta1_at(i, j)
            h = 2.0 * math.sqrt(b / math.pi)
            gamma = h / (h + math.exp(t1))
            if f.atom_idx[i, j] > 0:
                return math.log(gamma)
            x = f.values[i, j]
            return math.log((1 - gamma) * h * math.exp(-b * x * x))

        by_hand = sum(log_cond(i, j) for i in range(2) for j in range(2))
        assert math.isclose(log_pseudo_likelihood(PG, phi, f), by_hand, rel_tol=1e-12)

    def test_inadmissible_theta_names_site(self):
        # e > 0 drags theta_2 below zero next to a large continuous neighbour
        phi = np.array([0.0, 0.5, 0.4, -0.1, 2.0, 0.4, 0.0, 0.0])
        f = Field.from_values(EXP.space, [[1.0, 2.0]])
        with pytest.raises(InadmissibleParameterError) as err:
            log_pseudo_likelihood(EXP, phi, f)
        assert err.value.site is not None

    def test_rotation_invariance(self, rng):
        model = random_admissible_model(EXP, Lattice(5, 6), rng)
        f = random_field(EXP, Lattice(5, 6), rng)
        param = Parameterization(EXP)
        phi = param.pack(model.alpha, model.beta_h, model.beta_v)
        rot = Field(EXP.space, f.atom_idx[::-1, ::-1].copy(), f.values[::-1, ::-1].copy())
        pl1 = log_pseudo_likelihood(EXP, phi, f)
        pl2 = log_pseudo_likelihood(EXP, phi, rot)
        assert math.isclose(pl1, pl2, rel_tol=1e-9)

    def test_interior_only_restricts_terms(self, rng):
        f = random_field(PG, Lattice(4, 4), rng)
        phi = np.array([-0.5, 1.0, 0.2, 0.1])
        full = log_pseudo_likelihood(PG, phi, f)
        interior = log_pseudo_likelihood(PG, phi, f, interior_only=True)
        assert interior != full


class TestGradient:
    def test_matches_finite_differences(self, rng):
        families = [PG, EXP, TruncatedMixedExponential(2.0), CensoredMixedExponential(1.5)]
        for fam in families:
            lat = Lattice(8, 8)
            model = random_admissible_model(fam, lat, rng)
            param = Parameterization(fam)
            phi = param.pack(model.alpha, model.beta_h, model.beta_v)
            f = random_field(fam, lat, rng)
            g = grad_log_pseudo_likelihood(fam, phi, f)
            fd = np.zeros_like(g)
            for k in range(g.size):
                e = np.zeros_like(g)
                e[k] = 1e-6 * max(1.0, abs(phi[k]))
                fd[k] = (
                    log_pseudo_likelihood(fam, phi + e, f) - log_pseudo_likelihood(fam, phi - e, f)
                ) / (2 * e[k])
            assert np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)) < 1e-5, fam.kind

    def test_alpha_gradient_vanishes_at_iid_mle(self, rng):
        theta = PG.natural_from_original(OriginalParams(0.4, (1.0,), (0.9,)))
        f = iid_field(PG, theta, (20, 20), rng)
        b_mean = PG.suff_stat_field(f).mean(axis=(0, 1))
        p_g = b_mean[0]
        xi = p_g / (-2.0 * b_mean[1])
        alpha_hat = PG.natural_from_original(OriginalParams(1.0 - p_g, (1.0,), (xi,)))
        g = grad_log_pseudo_likelihood(PG, np.array([alpha_hat[0], alpha_hat[1], 0.0, 0.0]), f)
        assert np.all(np.abs(g[:2]) < 1e-8)

    def test_c1_component_is_horizontal_edge_sum(self, rng):
        f = random_field(PG, Lattice(6, 6), rng)
        phi = np.array([-0.4, 1.1, 0.3, 0.2])
        g = grad_log_pseudo_likelihood(PG, phi, f)
        param = Parameterization(PG)
        lat = Lattice(6, 6)
        model = param.model(lat, phi)
        theta = model.natural_params_grid(f)
        resid = PG.suff_stat_field(f) - PG.grad_log_normalizer_grid(theta)
        total = 0.0
        for (i, j), (k, l), d in lat.edges():
            if d != "h":
                continue
            total += resid[i, j, 0] * float(f.atom_idx[k, l] == 0)
            total += resid[k, l, 0] * float(f.atom_idx[i, j] == 0)
        assert math.isclose(g[2], total, rel_tol=1e-10)


class TestFit:
    def test_all_atom_field_not_identifiable(self):
        f = Field.full_reference(PG.space, 4, 4)
        with pytest.raises(NonIdentifiableError):
            fit(PG, f)

    def test_constant_continuous_field_not_identifiable(self):
        f = Field.full_continuous(PG.space, 4, 4, 1.0)
        with pytest.raises(NonIdentifiableError):
            fit(PG, f)

    def test_monotone_ascent(self, rng):
        model = AutoModel(PG, Lattice(24, 24), [-1.5, 1.0], sym2(0.6, 0, 0), sym2(0.4, 0, 0))
        sim = simulate(model, GibbsConfig(sweeps=120, burn_in=100, scan="checkerboard", seed=3,
                                          init=mixed_init_field(model, rng)))
        rep = fit(PG, sim.field)
        path = np.array(rep.pl_path)
        assert np.all(np.diff(path) >= 0.0)
        assert rep.converged and rep.grad_norm < 1e-6
        assert rep.admissible.well_defined

    def test_null_interactions_estimated_near_zero(self, rng):
        theta = PG.natural_from_original(OriginalParams(0.45, (1.0,), (0.8,)))
        f = iid_field(PG, theta, (48, 48), rng)
        rep = fit(PG, f)
        assert abs(rep.phi[2]) < 0.15 and abs(rep.phi[3]) < 0.15

    def test_transpose_swaps_directions(self, rng):
        model = AutoModel(PG, Lattice(32, 32), [-1.5, 1.0], sym2(0.7, 0, 0), sym2(0.3, 0, 0))
        sim = simulate(model, GibbsConfig(sweeps=220, burn_in=200, scan="checkerboard", seed=5,
                                          init=mixed_init_field(model, rng)))
        rep = fit(PG, sim.field)
        rep_t = fit(PG, sim.field.transpose())
        assert abs(rep.phi[2] - rep_t.phi[3]) < 1e-6
        assert abs(rep.phi[3] - rep_t.phi[2]) < 1e-6
        assert abs(rep.phi[0] - rep_t.phi[0]) < 1e-6

    def test_isotropic_layout(self, rng):
        model = AutoModel.isotropic(PG, Lattice(24, 24), [-1.0, 1.0], sym2(0.5, 0, 0))
        sim = simulate(model, GibbsConfig(sweeps=120, burn_in=100, scan="checkerboard", seed=6,
                                          init=mixed_init_field(model, rng)))
        rep = fit(PG, sim.field, FitOptions(isotropic=True))
        assert rep.names == ("a", "b", "c")
        assert rep.converged

    def test_mixed_exponential_recovery(self, rng):
        truth = {"a": 0.3, "b": 1.2, "c": 0.35, "d": 0.15, "e": -0.15}
        model = AutoModel.isotropic(
            EXP, Lattice(48, 48, "toroidal"), [truth["a"], truth["b"]],
            sym2(truth["c"], truth["d"], truth["e"]),
        )
        sim = simulate(model, GibbsConfig(sweeps=330, burn_in=300, scan="checkerboard", seed=7,
                                          init=mixed_init_field(model, rng)))
        rep = fit(EXP, sim.field, FitOptions(isotropic=True, boundary="toroidal"))
        est = rep.phi_dict()
        for name, value in truth.items():
            assert abs(est[name] - value) < 0.25, (name, est)

    def test_truncated_recovery(self, rng):
        # cooperative and admissible: b + 4 min(0, d, d - eK) = 2.4 - 2.0 > 0
        fam = TruncatedMixedExponential(K=2.0)
        model = AutoModel.isotropic(
            fam, Lattice(64, 64, "toroidal"), [0.2, 2.4], sym2(0.3, -0.1, 0.2)
        )
        sim = simulate(model, GibbsConfig(sweeps=330, burn_in=300, scan="checkerboard", seed=8,
                                          init=mixed_init_field(model, rng)))
        rep = fit(fam, sim.field, FitOptions(isotropic=True, boundary="toroidal"))
        est = rep.phi_dict()
        for name, value in zip(("a", "b", "c", "d", "e"), (0.2, 2.4, 0.3, -0.1, 0.2)):
            assert abs(est[name] - value) < 0.4, (name, est)

    def test_censored_recovery(self, rng):
        fam = CensoredMixedExponential(K=1.5)
        model = AutoModel.isotropic(
            fam, Lattice(48, 48, "toroidal"), [0.2, 0.1, 1.4],
            np.array([[0.2, 0.1, 0.15], [0.1, 0.1, -0.1], [0.15, -0.1, 0.1]]),
        )
        sim = simulate(model, GibbsConfig(sweeps=330, burn_in=300, scan="checkerboard", seed=9,
                                          init=mixed_init_field(model, rng)))
        rep = fit(fam, sim.field, FitOptions(isotropic=True, boundary="toroidal"))
        truth = dict(zip(("r", "a", "b", "s", "u", "t", "c", "d", "e"),
                         (0.2, 0.1, 1.4, 0.2, 0.1, 0.15, 0.1, -0.1, 0.1)))
        est = rep.phi_dict()
        for name, value in truth.items():
            assert abs(est[name] - value) < 0.45, (name, est)

    def test_behaviour_constrained_fit(self, rng):
        fam = TruncatedMixedExponential(K=2.0)
        model = AutoModel.isotropic(fam, Lattice(32, 32, "toroidal"), [0.2, 2.4], sym2(0.3, -0.1, 0.2))
        sim = simulate(model, GibbsConfig(sweeps=160, burn_in=150, scan="checkerboard", seed=10,
                                          init=mixed_init_field(model, rng)))
        rep = fit(fam, sim.field, FitOptions(isotropic=True, boundary="toroidal", behaviour="cooperative"))
        assert rep.admissible.behaviour == "cooperative"
        est = rep.phi_dict()
        assert est["d"] <= 0.0 and est["e"] >= 0.0


class TestBootstrap:
    def test_zero_reps_empty(self):
        res = bootstrap_se(PG, np.array([-1.0, 1.0, 0.3, 0.3]), Lattice(8, 8), 0)
        assert res.se.size == 0 and res.estimates.shape == (0, 4)

    def test_inadmissible_phi_rejected(self):
        with pytest.raises(ParameterError):
            bootstrap_se(PG, np.array([-1.0, 0.0, 0.3, 0.3]), Lattice(8, 8), 3)

    def test_small_run(self):
        res = bootstrap_se(
            PG, np.array([-1.2, 1.0, 0.4, 0.4]), Lattice(16, 16), 3,
            seed=1, sweeps=60, burn_in=40,
        )
        assert res.estimates.shape == (3, 4)
        assert res.se.shape == (4,)
        assert res.n_failed == 0
