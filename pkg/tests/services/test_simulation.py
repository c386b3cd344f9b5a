"""Tests for samplers and the Monte Carlo replication harness."""

import math

import numpy as np
import pytest
from scipy import stats

from entrofunc.errors import InsufficientSampleError, InvalidArgumentError
from entrofunc.models import SampleMode
from entrofunc.schemas import (
    BernoulliProduct,
    ExperimentConfig,
    Exponential,
    Gaussian1D,
    GaussianIso,
    StudentR,
    UniformDiscrete,
)
from entrofunc.services.inference import select_epsilon
from entrofunc.services.simulation import (
    ReplicationRecord,
    derive_rng,
    empirical_mse,
    ks_test,
    resolve_epsilon,
    run_mse_curve,
    run_replications,
    sample,
    summarize,
    truth_for,
)
from entrofunc.utils.config_file import load_experiment_config


def small(preset: str, **overrides) -> ExperimentConfig:
    return load_experiment_config(preset, {"n_sim": 8, **overrides})


class TestSamplers:
    """Test draws from the catalog distributions."""

    def test_same_seed_same_sample(self):
        spec = GaussianIso(dim=2)
        first = sample(spec, 50, derive_rng(7, 3))
        second = sample(spec, 50, derive_rng(7, 3))
        np.testing.assert_array_equal(first.points, second.points)

    def test_streams_differ_by_index(self):
        first = sample(Gaussian1D(), 20, derive_rng(7, 0))
        second = sample(Gaussian1D(), 20, derive_rng(7, 1))
        assert not np.array_equal(first.points, second.points)

    def test_gaussian_moments(self):
        x = sample(Gaussian1D(mean=2.0, variance=0.5), 100_000, derive_rng(1, 0)).points
        assert x.mean() == pytest.approx(2.0, abs=0.02)
        assert x.var() == pytest.approx(0.5, abs=0.02)

    def test_exponential_mean(self):
        x = sample(Exponential(rate=3.0), 100_000, derive_rng(2, 0))
        assert x.mode is SampleMode.CONTINUOUS
        assert np.all(x.points >= 0)
        assert x.points.mean() == pytest.approx(1 / 3, abs=0.01)

    def test_bernoulli_frequencies(self):
        x = sample(BernoulliProduct(dim=3, p=0.8), 50_000, derive_rng(3, 0))
        assert x.mode is SampleMode.DISCRETE
        assert x.d == 3
        np.testing.assert_allclose(x.points.mean(axis=0), 0.8, atol=0.01)

    def test_uniform_atoms(self):
        x = sample(UniformDiscrete(m=6), 60_000, derive_rng(4, 0)).points
        assert set(np.unique(x)) == {1, 2, 3, 4, 5, 6}
        np.testing.assert_allclose(np.bincount(x[:, 0])[1:] / x.shape[0], 1 / 6, atol=0.01)

    def test_student_r_support_and_covariance(self):
        spec = StudentR(mean=[1.0, -1.0], cov=[[2.0, 0.5], [0.5, 1.0]], s=3)
        x = sample(spec, 100_000, derive_rng(5, 0)).points
        centered = x - np.array([1.0, -1.0])
        u = np.einsum("ij,jk,ik->i", centered, np.linalg.inv(spec.shape_matrix), centered)
        assert np.all(u <= 1.0 + 1e-12)
        np.testing.assert_allclose(np.cov(x.T), spec.cov, atol=0.03)

    def test_empty_sample(self):
        assert sample(Gaussian1D(), 0, derive_rng(0, 0)).n == 0


class TestKsTest:
    """Test the normality test used on residuals."""

    def test_single_zero(self):
        d, p = ks_test([0.0])
        assert d == 0.5
        assert p == pytest.approx(0.9639, abs=1e-4)

    def test_near_perfect_fit(self):
        n = 100
        values = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        d, p = ks_test(values)
        assert d == pytest.approx(0.005, abs=1e-12)
        assert p > 0.999

    def test_gross_misfit(self):
        values = np.random.default_rng(0).normal(5.0, 1.0, size=100)
        _, p = ks_test(values)
        assert p < 1e-6

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            ks_test([])

    def test_p_value_falls_as_statistic_grows(self):
        base = stats.norm.ppf((np.arange(1, 201) - 0.5) / 200)
        results = [ks_test(base + shift) for shift in (0.0, 0.05, 0.1, 0.2, 0.4, 0.8)]
        ds = [d for d, _ in results]
        ps = [p for _, p in results]
        assert ds == sorted(ds)
        assert len(set(ds)) == len(ds)
        assert ps == sorted(ps, reverse=True)


class TestEmpiricalMse:
    """Test the empirical mean squared error."""

    def test_exact(self):
        assert empirical_mse([0.5, 0.5, 0.5], 0.5) == 0.0

    def test_two_values(self):
        assert empirical_mse([0.0, 1.0], 0.5) == 0.25

    def test_bias_variance_split(self):
        est = np.random.default_rng(1).normal(1.2, 0.3, size=1000)
        assert empirical_mse(est, 1.0) == pytest.approx(est.var() + (est.mean() - 1.0) ** 2)


class TestResolveEpsilon:
    """Test the bandwidth rules of experiment configs."""

    def test_fixed(self):
        assert resolve_epsilon(small("example2"), 100, 200) == 0.1

    def test_discrete_has_none(self):
        assert resolve_epsilon(small("example1"), 300, 0) is None

    def test_scaled(self):
        config = small("example4")
        assert resolve_epsilon(config, 200, 200) == pytest.approx(2 / 200)
        assert resolve_epsilon(config, 200, 200, a=10) == pytest.approx(10 / 200)

    def test_rate_optimal(self):
        config = small("example3", epsilon={"rule": "rate-optimal", "alpha": 1.0, "c": 2.0})
        assert resolve_epsilon(config, 300, 0) == pytest.approx(select_epsilon(300, 2, 3, 1.0, 2.0))


class TestRunReplications:
    """Test the replication harness at small scale."""

    def test_truths(self):
        assert truth_for(small("example1")) == pytest.approx(-math.log(0.140608) / 2)
        assert truth_for(small("example2")) == pytest.approx(2.26551, abs=1e-5)
        assert truth_for(small("example3")) == pytest.approx(2.38723, abs=1e-5)
        assert truth_for(small("example4")) == pytest.approx(0.5)

    def test_records_in_index_order(self):
        result = run_replications(small("example2"), workers=1)
        assert [r.index for r in result.records] == list(range(8))
        assert result.n1 == 100 and result.n2 == 200
        assert np.all(np.isfinite(result.residuals()))
        assert result.summary.n_sim == 8

    def test_qq_points(self):
        result = run_replications(small("example2"), workers=1)
        quantiles, ordered = result.qq_points()
        np.testing.assert_array_equal(ordered, np.sort(result.residuals()))
        expected = stats.norm.ppf((np.arange(1, 9) - 0.5) / 8)
        assert quantiles.tolist() == pytest.approx(expected.tolist())
        assert quantiles[0] == pytest.approx(-quantiles[-1])

    def test_deterministic(self):
        config = small("example3")
        first = run_replications(config, workers=1)
        second = run_replications(config, workers=1)
        assert first.records == second.records

    def test_independent_of_worker_count(self):
        config = small("example1", n_sim=6)
        serial = run_replications(config, workers=1)
        parallel = run_replications(config, workers=2)
        assert serial.records == parallel.records

    def test_single_replication(self):
        result = run_replications(small("example1", n_sim=1), workers=1)
        record = result.records[0]
        assert result.summary.mean == record.estimate
        assert result.summary.sd == 0.0
        assert result.summary.mse == pytest.approx((record.estimate - result.summary.truth) ** 2)

    def test_q_target_uses_pivot(self):
        result = run_replications(small("example1", target="q"), workers=1)
        assert result.summary.truth == pytest.approx(0.140608)
        assert all(0.0 <= r.estimate <= 1.0 for r in result.records)
        assert all(r.covered is not None for r in result.records)

    def test_bregman_target_has_no_residuals(self):
        config = small("example4", target="bregman", epsilon={"rule": "fixed", "value": 0.02})
        result = run_replications(config, workers=1)
        assert np.all(np.isnan(result.residuals()))
        assert math.isnan(result.summary.ks_p)
        assert math.isnan(result.summary.coverage)
        quantiles, ordered = result.qq_points()
        assert quantiles.size == ordered.size == 0

    def test_insufficient_sample_names_replication(self):
        config = small("example1", n1=2)
        with pytest.raises(InsufficientSampleError) as excinfo:
            run_replications(config, workers=1)
        assert excinfo.value.detail.context["replication"] == 0

    def test_curve_target_rejected(self):
        with pytest.raises(InvalidArgumentError):
            run_replications(small("example4"))


class TestSummarize:
    """Test summary statistics."""

    def test_recomputable_from_records(self):
        records = [
            ReplicationRecord(0, 1.0, 0.1, -0.5, True),
            ReplicationRecord(1, 2.0, 0.1, 0.5, False),
            ReplicationRecord(2, 3.0, 0.1, 0.0, True),
        ]
        summary = summarize(records, 2.0)
        assert summary.mean == 2.0
        assert summary.sd == 1.0
        assert summary.mse == pytest.approx(2 / 3)
        assert summary.coverage == pytest.approx(2 / 3)
        assert summary.ks_d == ks_test([-0.5, 0.5, 0.0])[0]
        assert set(summary.as_dict()) == {
            "n_sim", "truth", "mean", "sd", "mse", "ks_D", "ks_p", "coverage"
        }


class TestMseCurve:
    """Test MSE curves over sample sizes and scaled bandwidths."""

    def test_grid_of_points(self):
        config = small("example4", n_sim=4, n_list="50,100")
        points = run_mse_curve(config, workers=1)
        assert [(p.a, p.n) for p in points] == [
            (2.0, 50), (2.0, 100), (5.0, 50), (5.0, 100), (10.0, 50), (10.0, 100)
        ]
        for point in points:
            assert point.epsilon == pytest.approx(point.a / point.n)
            assert point.result.n1 == point.result.n2 == point.n
            assert math.isfinite(point.mse)

    def test_needs_curve_target(self):
        with pytest.raises(InvalidArgumentError):
            run_mse_curve(small("example2"))


@pytest.mark.slow
class TestAcceptance:
    """Full-size preset runs."""

    def test_bernoulli_coincidences(self):
        result = run_replications(load_experiment_config("example1"), workers=None)
        residuals = result.residuals()
        assert result.summary.ks_p > 0.01
        assert abs(residuals.mean()) < 0.2
        assert 0.8 < residuals.std(ddof=1) < 1.2
        assert result.summary.coverage >= 0.92

    def test_gaussian_variability(self):
        result = run_replications(load_experiment_config("example2"), workers=None)
        residuals = result.residuals()
        assert result.summary.ks_p > 0.01
        assert abs(result.summary.mean - 2.26551) < 0.05
        assert abs(residuals.mean()) < 0.2
        assert 0.8 < residuals.std(ddof=1) < 1.2

    def test_bernoulli_coincidence_mean(self):
        result = run_replications(
            load_experiment_config("example1", {"target": "q"}), workers=None
        )
        se = result.summary.sd / math.sqrt(result.summary.n_sim)
        assert abs(result.summary.mean - 0.140608) < 4 * se

    def test_bivariate_normal_entropy(self):
        """k_n sits on its 1/n floor here, so residuals are too narrow to look normal."""
        result = run_replications(load_experiment_config("example3"), workers=None)
        residuals = result.residuals()
        assert abs(result.summary.mean - 2.38723) < 0.1
        assert all(r.k_n == pytest.approx(1 / 300) for r in result.records)
        assert residuals.std(ddof=1) < 0.5
        assert result.summary.coverage > 0.99
        assert result.summary.ks_p < 0.01

    def test_bregman_mse_decay(self):
        points = run_mse_curve(load_experiment_config("example4"), workers=None)
        by_a: dict[float, list[float]] = {}
        for point in points:
            by_a.setdefault(point.a, []).append(point.mse)
        for curve in by_a.values():
            assert curve == sorted(curve, reverse=True)
            assert len(set(curve)) == len(curve)
        assert any(curve[-1] < 0.5 * curve[0] for curve in by_a.values())
