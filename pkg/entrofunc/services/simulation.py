"""
Monte Carlo replication harness.

Replication i draws its samples from ``default_rng(SeedSequence([seed, i]))``,
so every replication is reproducible on its own and the results do not depend
on how replications are spread over worker processes.

Samplers: Gaussian via numpy's normal generator, exponential via the inverse
CDF -log(1 - U) / rate, Bernoulli by thresholding uniforms at p, uniform
discrete via bounded integers, Student-r as mean + L z with z = R * direction,
R^2 ~ Beta(d/2, 1/(s-1) + 1) and L the Cholesky factor of the shape matrix.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from entrofunc.config import get_settings
from entrofunc.errors import InsufficientSampleError, InvalidArgumentError
from entrofunc.logger import logger
from entrofunc.models import FunctionalOrder, Sample
from entrofunc.schemas import (
    BernoulliProduct,
    Exponential,
    ExperimentConfig,
    FixedEpsilon,
    Gaussian1D,
    GaussianIso,
    RateOptimalEpsilon,
    ScaledEpsilon,
    StudentR,
    UniformDiscrete,
)
from entrofunc.services import oracle
from entrofunc.services.inference import (
    bregman_estimate,
    entropy_residual,
    estimate_report,
    q_pivot,
    select_epsilon,
)

_PIVOT_TARGETS = {"q", "h", "v", "ks-residuals"}


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream of replication ``index`` under a run seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def sample(spec: Any, n: int, rng: np.random.Generator) -> Sample:
    """n i.i.d. draws from a catalog distribution."""
    if n < 0:
        raise InvalidArgumentError("sample size must be non-negative", n=n)
    if isinstance(spec, Gaussian1D | GaussianIso):
        points = rng.normal(spec.mean, math.sqrt(spec.variance), size=(n, spec.dim))
        return Sample.continuous(points)
    if isinstance(spec, Exponential):
        return Sample.continuous(-np.log1p(-rng.random(n)) / spec.rate)
    if isinstance(spec, StudentR):
        d = spec.dim
        direction = rng.normal(size=(n, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = np.sqrt(rng.beta(d / 2, spec.gamma_exponent + 1.0, size=n))
        chol = np.linalg.cholesky(spec.shape_matrix)
        z = direction * radius[:, None]
        return Sample.continuous(np.asarray(spec.mean) + z @ chol.T)
    if isinstance(spec, BernoulliProduct):
        return Sample.discrete((rng.random((n, spec.dim)) < spec.p).astype(np.int64))
    if isinstance(spec, UniformDiscrete):
        return Sample.discrete(rng.integers(1, spec.m + 1, size=n))
    raise InvalidArgumentError(f"no sampler for {type(spec).__name__}")


@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    estimate: float
    k_n: float
    residual: float
    covered: bool | None


@dataclass(frozen=True)
class ReplicationSummary:
    n_sim: int
    truth: float
    mean: float
    sd: float
    mse: float
    ks_d: float
    ks_p: float
    coverage: float

    def as_dict(self) -> dict[str, float]:
        return {
            "n_sim": self.n_sim,
            "truth": self.truth,
            "mean": self.mean,
            "sd": self.sd,
            "mse": self.mse,
            "ks_D": self.ks_d,
            "ks_p": self.ks_p,
            "coverage": self.coverage,
        }


@dataclass(frozen=True)
class ReplicationResult:
    """Per-replication records, in index order, plus their summary."""

    config: ExperimentConfig
    n1: int
    n2: int
    epsilon: float | None
    records: list[ReplicationRecord]
    summary: ReplicationSummary
    seconds: float = 0.0

    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.records], dtype=np.float64)

    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records], dtype=np.float64)

    def sorted_residuals(self) -> np.ndarray:
        """Sorted finite residuals, ready for a normal QQ plot."""
        res = self.residuals()
        return np.sort(res[np.isfinite(res)])

    def qq_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Normal quantiles at plotting positions (i - 0.5) / m against sorted residuals."""
        ordered = self.sorted_residuals()
        positions = (np.arange(1, ordered.size + 1) - 0.5) / max(ordered.size, 1)
        return stats.norm.ppf(positions), ordered


@dataclass(frozen=True)
class CurvePoint:
    n: int
    a: float | None
    epsilon: float | None
    result: ReplicationResult = field(repr=False)

    @property
    def mse(self) -> float:
        return self.result.summary.mse


def ks_test(values: ArrayLike) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against N(0, 1), asymptotic p-value."""
    x = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    n = x.size
    if n == 0:
        raise InvalidArgumentError("ks_test needs at least one value")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("ks_test needs finite values")
    cdf = stats.norm.cdf(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    d = float(max(upper.max(), lower.max()))
    p = float(stats.kstwobign.sf(math.sqrt(n) * d))
    return d, min(1.0, max(0.0, p))


def empirical_mse(estimates: ArrayLike, truth: float) -> float:
    """Mean of (estimate - truth)^2."""
    est = np.asarray(estimates, dtype=np.float64).reshape(-1)
    if est.size == 0:
        raise InvalidArgumentError("empirical_mse needs at least one estimate")
    return float(np.mean((est - truth) ** 2))


def _statistic(config: ExperimentConfig) -> str:
    return config.curve_target if config.target == "mse-curve" else config.target


def truth_for(config: ExperimentConfig) -> float:
    """Population value of the configured statistic."""
    statistic = _statistic(config)
    if statistic == "q":
        return oracle.true_q(config.dist_x, config.dist_y, config.order)
    if statistic == "bregman":
        return oracle.true_bregman(config.dist_x, config.dist_y, config.s)
    return oracle.true_h(config.dist_x, config.dist_y, config.order)


def resolve_epsilon(
    config: ExperimentConfig, n1: int, n2: int, a: float | None = None
) -> float | None:
    """Bandwidth for given sample sizes: fixed, rate-optimal, or a / n1."""
    rule = config.epsilon
    if rule is None:
        return None
    if isinstance(rule, FixedEpsilon):
        return rule.value
    if isinstance(rule, RateOptimalEpsilon):
        order = FunctionalOrder(config.s, 0) if _statistic(config) == "bregman" else config.order
        return select_epsilon(n1 + n2, config.dist_x.dim, order.r, rule.alpha, rule.c)
    if isinstance(rule, ScaledEpsilon):
        return (rule.a[0] if a is None else a) / n1
    raise InvalidArgumentError(f"unknown epsilon rule {rule!r}")


def _replicate(
    config: ExperimentConfig,
    index: int,
    n1: int,
    n2: int,
    epsilon: float | None,
    truth: float,
) -> ReplicationRecord:
    rng = derive_rng(config.seed, index)
    x = sample(config.dist_x, n1, rng)
    y = sample(config.dist_y, n2, rng) if config.dist_y is not None else None
    statistic = _statistic(config)
    try:
        if statistic == "bregman":
            value = bregman_estimate(x, y, config.s, epsilon)  # type: ignore[arg-type]
            return ReplicationRecord(index, value, math.nan, math.nan, None)

        report = estimate_report(x, y, config.order, epsilon, level=config.ci_level)
    except InsufficientSampleError as exc:
        logger.error("replication_failed", replication=index, error=str(exc))
        raise InsufficientSampleError(
            f"replication {index}: {exc}", replication=index, **exc.detail.context
        ) from exc

    k_n = report.variance.kappa_hat  # type: ignore[union-attr]
    n = report.q.n
    if statistic == "q":
        estimate = report.q.value
        residual = q_pivot(estimate, truth, k_n, n)
        half = float(oracle.normal_quantile((1 + config.ci_level) / 2)) * math.sqrt(k_n / n)
        covered: bool | None = abs(estimate - truth) <= half
    else:
        estimate = report.entropy.h_hat  # type: ignore[union-attr]
        residual = entropy_residual(report.entropy, report.variance, truth)  # type: ignore[arg-type]
        covered = report.interval.covers(truth) if report.interval is not None else False
    return ReplicationRecord(index, estimate, k_n, residual, covered)


def _replicate_star(args: tuple[Any, ...]) -> ReplicationRecord:
    return _replicate(*args)


def summarize(records: list[ReplicationRecord], truth: float) -> ReplicationSummary:
    """Summary statistics recomputable from the per-replication records."""
    est = np.array([r.estimate for r in records], dtype=np.float64)
    residuals = np.array([r.residual for r in records], dtype=np.float64)
    finite = residuals[np.isfinite(residuals)]
    ks_d, ks_p = ks_test(finite) if finite.size else (math.nan, math.nan)
    flags = [r.covered for r in records if r.covered is not None]
    return ReplicationSummary(
        n_sim=len(records),
        truth=truth,
        mean=float(est.mean()),
        sd=float(est.std(ddof=1)) if est.size > 1 else 0.0,
        mse=empirical_mse(est, truth),
        ks_d=ks_d,
        ks_p=ks_p,
        coverage=float(np.mean(flags)) if flags else math.nan,
    )


def _worker_count(workers: int | None, n_sim: int) -> int:
    if workers is None:
        workers = get_settings().THREADS or os.cpu_count() or 1
    if workers < 1:
        raise InvalidArgumentError("worker count must be positive", workers=workers)
    return max(1, min(workers, n_sim))


def _run(
    config: ExperimentConfig,
    n1: int,
    n2: int,
    epsilon: float | None,
    workers: int | None,
) -> ReplicationResult:
    started = time.perf_counter()
    truth = truth_for(config)
    jobs = [(config, i, n1, n2, epsilon, truth) for i in range(config.n_sim)]
    n_workers = _worker_count(workers, config.n_sim)
    if n_workers == 1:
        records = [_replicate_star(job) for job in jobs]
    else:
        chunksize = max(1, config.n_sim // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=n_workers) as executor:
            records = list(executor.map(_replicate_star, jobs, chunksize=chunksize))

    summary = summarize(records, truth)
    seconds = time.perf_counter() - started
    logger.info(
        "replications_completed",
        name=config.name,
        target=config.target,
        n1=n1,
        n2=n2,
        epsilon=epsilon,
        n_sim=config.n_sim,
        workers=n_workers,
        mse=summary.mse,
        ks_p=summary.ks_p,
        seconds=round(seconds, 3),
    )
    return ReplicationResult(
        config=config,
        n1=n1,
        n2=n2,
        epsilon=epsilon,
        records=records,
        summary=summary,
        seconds=seconds,
    )


def run_replications(config: ExperimentConfig, workers: int | None = None) -> ReplicationResult:
    """Run ``config.n_sim`` independent replications of the configured target."""
    if config.target == "mse-curve":
        raise InvalidArgumentError("use run_mse_curve for target mse-curve")
    n1, n2 = config.n1, config.second_size
    return _run(config, n1, n2, resolve_epsilon(config, n1, n2), workers)


def run_mse_curve(config: ExperimentConfig, workers: int | None = None) -> list[CurvePoint]:
    """Empirical MSE of the curve target over n_list, per scaled a value.

    Every point uses equal sample sizes n1 = n2 = n (n2 = 0 without dist_y).
    """
    if config.target != "mse-curve" or not config.n_list:
        raise InvalidArgumentError("run_mse_curve needs target mse-curve with n_list")
    a_values: list[float | None] = (
        list(config.epsilon.a) if isinstance(config.epsilon, ScaledEpsilon) else [None]
    )
    points = []
    for a in a_values:
        for n in config.n_list:
            n2 = n if config.dist_y is not None else 0
            epsilon = resolve_epsilon(config, n, n2, a)
            result = _run(config, n, n2, epsilon, workers)
            points.append(CurvePoint(n=n, a=a, epsilon=epsilon, result=result))
    return points
