"""Particle filter primitives: weighting, resampling, evidence estimates."""

import math

import numpy as np
import pytest

from conftest import stub_model

from bmapf._rng import stream
from bmapf.kalman import kalman_log_evidence
from bmapf.models import exp1_model, linear_gaussian_model, simulate
from bmapf.smc import ParticleCloud, propagate, resample, run_pf, weight_and_evidence


class TestPropagate:
    def test_zero_theta_gives_standard_normal(self):
        cloud = ParticleCloud.uniform(np.full((20000, 1), 7.5))
        out = propagate(cloud, exp1_model(), np.array([0.0]), 1, stream(0, 50))
        x = out.particles[:, 0]
        assert abs(x.mean()) < 3.0 / math.sqrt(len(x))
        assert abs(x.std() - 1.0) < 0.03

    def test_determinism(self):
        cloud = ParticleCloud.uniform(np.linspace(-1, 1, 100)[:, None])
        a = propagate(cloud, exp1_model(), np.array([0.5]), 3, stream(9, 50))
        b = propagate(cloud, exp1_model(), np.array([0.5]), 3, stream(9, 50))
        assert np.array_equal(a.particles, b.particles)

    def test_monte_carlo_mean(self):
        # theta*|x| + N(0,1) from x = 1: mean 0.657 within 3 sigma of the MC error
        n = 10_000
        cloud = ParticleCloud.uniform(np.ones((n, 1)))
        out = propagate(cloud, exp1_model(), np.array([0.657]), 1, stream(4, 50))
        assert abs(out.particles.mean() - 0.657) < 3.0 / math.sqrt(n)

    def test_weights_unchanged(self):
        cloud = ParticleCloud(np.ones((4, 1)), np.log([0.1, 0.2, 0.3, 0.4]),
                              np.array([0.1, 0.2, 0.3, 0.4]))
        out = propagate(cloud, exp1_model(), np.array([0.5]), 1, stream(1, 50))
        assert np.array_equal(out.weights, cloud.weights)


class TestWeightAndEvidence:
    def test_degenerate_cloud_evidence_is_exact(self):
        # all particles at the same state: evidence equals the single density
        model = stub_model(lambda x: -0.5 * (1.25 - x) ** 2)
        cloud = ParticleCloud.uniform(np.full((8, 1), 0.75))
        out, log_evidence = weight_and_evidence(cloud, model, np.array([0.5]),
                                                np.array([0.0]), 1)
        assert log_evidence == -0.5 * 0.5 ** 2
        assert np.all(out.weights == 0.125)

    def test_two_particle_arithmetic(self):
        # likelihoods (2, 6) under uniform weights: evidence 4, weights (1/4, 3/4)
        model = stub_model(lambda x: np.log(x))
        cloud = ParticleCloud.uniform(np.array([[2.0], [6.0]]))
        out, log_evidence = weight_and_evidence(cloud, model, np.array([0.5]),
                                                np.array([0.0]), 1)
        assert math.exp(log_evidence) == pytest.approx(4.0, rel=1e-14)
        assert out.weights[0] == pytest.approx(0.25, abs=1e-15)
        assert out.weights[1] == pytest.approx(0.75, abs=1e-15)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(0)
        model = stub_model(lambda x: -0.5 * x * x)
        for _ in range(20):
            cloud = ParticleCloud.uniform(rng.normal(size=(257, 1)))
            out, _ = weight_and_evidence(cloud, model, np.array([0.5]),
                                         np.array([0.0]), 1)
            assert abs(out.weights.sum() - 1.0) < 1e-12

    def test_all_zero_likelihood_falls_back_to_uniform(self):
        model = stub_model(lambda x: np.full(len(x), -np.inf))
        cloud = ParticleCloud.uniform(np.arange(6, dtype=float)[:, None])
        out, log_evidence = weight_and_evidence(cloud, model, np.array([0.5]),
                                                np.array([0.0]), 1)
        assert log_evidence == -math.inf
        assert np.all(out.weights == 1.0 / 6.0)
        assert np.array_equal(out.particles, cloud.particles)

    def test_uniform_loglik_shift(self):
        # adding a constant to every log-likelihood leaves the weights
        # bit-identical and shifts the evidence by exactly that constant
        rng = np.random.default_rng(5)
        base = rng.integers(-2 ** 24, 1, 64).astype(float) / 2 ** 10
        base[rng.integers(0, 64)] = 0.0  # pin the maximum at zero
        shift = 256.0
        model_a = stub_model(lambda x: base)
        model_b = stub_model(lambda x: base + shift)
        cloud = ParticleCloud.uniform(np.zeros((64, 1)))
        out_a, le_a = weight_and_evidence(cloud, model_a, np.array([0.5]), np.array([0.0]), 1)
        out_b, le_b = weight_and_evidence(cloud, model_b, np.array([0.5]), np.array([0.0]), 1)
        assert np.array_equal(out_a.weights, out_b.weights)
        assert le_b == le_a + shift

    def test_one_step_evidence_matches_kalman(self):
        model = linear_gaussian_model(0.9, 1.0, 1.0)
        traj = simulate(model, 0.9, 1, 13)
        exact = kalman_log_evidence(0.9, 1.0, 1.0, 0.0, 1.0, traj.observations)
        pf = run_pf(model, 0.9, traj.observations, 100_000, 29)
        assert abs(pf.log_evidence - exact) < 0.05


class TestResample:
    def test_point_mass(self):
        for scheme in ("systematic", "multinomial"):
            out = resample(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 0.0, 0.0]),
                           7, scheme, stream(0, 51))
            assert np.all(out.particles == 1.0)
            assert np.all(out.weights == 1.0 / 7.0)

    def test_systematic_exact_proportions(self):
        out = resample(np.array([[1.0], [2.0]]), np.array([0.5, 0.5]), 4,
                       "systematic", stream(1, 51))
        assert sorted(out.particles[:, 0].tolist()) == [1.0, 1.0, 2.0, 2.0]

    def test_systematic_counts_within_one(self):
        rng = np.random.default_rng(2)
        w = rng.dirichlet(np.ones(30))
        n_out = 1000
        out = resample(np.arange(30, dtype=float)[:, None], w, n_out,
                       "systematic", stream(2, 51))
        counts = np.bincount(out.particles[:, 0].astype(int), minlength=30)
        assert np.all(np.abs(counts - n_out * w) <= 1.0)

    def test_multinomial_counts_within_three_sigma(self):
        w = np.array([0.2, 0.3, 0.5])
        n = 100_000
        out = resample(np.array([[0.0], [1.0], [2.0]]), w, n, "multinomial",
                       stream(3, 51))
        counts = np.bincount(out.particles[:, 0].astype(int), minlength=3)
        for i in range(3):
            sigma = math.sqrt(n * w[i] * (1 - w[i]))
            assert abs(counts[i] - n * w[i]) <= 3 * sigma

    def test_preserves_weighted_mean(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(50, 1))
        w = rng.dirichlet(np.ones(50))
        target = float(w @ x[:, 0])
        var_w = float(w @ (x[:, 0] - target) ** 2)
        n_out = 100_000
        for scheme in ("systematic", "multinomial"):
            out = resample(x, w, n_out, scheme, stream(5, 51))
            se = math.sqrt(var_w / n_out)
            assert abs(out.particles.mean() - target) <= 3 * se

    def test_zero_weights_error(self):
        with pytest.raises(ValueError):
            resample(np.ones((3, 1)), np.zeros(3), 3, "systematic", stream(6, 51))

    def test_negative_weights_error(self):
        with pytest.raises(ValueError):
            resample(np.ones((3, 1)), np.array([0.5, 0.6, -0.1]), 3,
                     "systematic", stream(6, 51))

    def test_cloud_needs_a_particle(self):
        with pytest.raises(ValueError):
            ParticleCloud(np.empty((0, 1)), np.empty(0), np.empty(0))

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            resample(np.ones((3, 1)), np.ones(3), 3, "stratified", stream(6, 51))


class TestRunPf:
    def test_degenerate_noise_limit(self):
        # q -> 0 with a fixed start: every particle sits at a*x0 and the
        # one-step evidence collapses to a single measurement density
        model = linear_gaussian_model(1.0, 1e-30, 1.0, x0_mean=1.5, x0_var=0.0)
        traj = simulate(model, 1.0, 1, 3)
        pf = run_pf(model, 1.0, traj.observations, 64, 4)
        expected = model.obs_log_density(np.array([1.0]), traj.observations[0],
                                         np.array([[1.5]]), 1)[0]
        assert pf.log_evidence == pytest.approx(expected, abs=1e-9)

    def test_evidence_close_to_kalman(self):
        model = linear_gaussian_model(0.9, 1.0, 1.0)
        traj = simulate(model, 0.9, 50, 21)
        exact = kalman_log_evidence(0.9, 1.0, 1.0, 0.0, 1.0, traj.observations)
        pf = run_pf(model, 0.9, traj.observations, 100_000, 22)
        assert abs(pf.log_evidence - exact) < 0.5

    def test_bit_identical_reruns(self):
        model = exp1_model()
        traj = simulate(model, 0.657, 30, 5)
        a = run_pf(model, 0.657, traj.observations, 300, 6)
        b = run_pf(model, 0.657, traj.observations, 300, 6)
        assert a.log_evidence == b.log_evidence
        assert np.array_equal(a.filtered_means, b.filtered_means)
        assert np.array_equal(a.step_log_evidence, b.step_log_evidence)

    def test_evidence_roughly_unbiased(self):
        # light version of the unbiasedness gate: linear-scale ratio near 1
        model = linear_gaussian_model(0.9, 1.0, 1.0)
        traj = simulate(model, 0.9, 20, 11)
        exact = kalman_log_evidence(0.9, 1.0, 1.0, 0.0, 1.0, traj.observations)
        ratios = [math.exp(run_pf(model, 0.9, traj.observations, 500, 1000 + i).log_evidence
                           - exact)
                  for i in range(60)]
        assert 0.7 < np.mean(ratios) < 1.3

    def test_validates_inputs(self):
        model = exp1_model()
        traj = simulate(model, 0.5, 5, 0)
        with pytest.raises(ValueError):
            run_pf(model, 0.5, traj.observations, 0, 1)
        with pytest.raises(ValueError):
            run_pf(model, 0.5, np.empty((0, 1)), 10, 1)
