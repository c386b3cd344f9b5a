"""
Inference on top of the Q estimators.

Plug-in variance k_n, the entropy estimator H_n, asymptotic confidence
intervals and pivots, bandwidth selection, and the composite functionals
(variability, Renyi s-entropy, Bregman distances, epsilon-join size,
maximum-entropy Student-r density).
"""

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln, ndtri

from entrofunc.errors import (
    InsufficientSampleError,
    InvalidArgumentError,
    InvalidOrderError,
    UndefinedIntervalError,
)
from entrofunc.logger import logger
from entrofunc.models import (
    ConfidenceInterval,
    EntropyEstimate,
    EstimateReport,
    FunctionalOrder,
    NeighborCounts,
    PivotKind,
    QEstimate,
    Sample,
    SampleMode,
    VarianceEstimate,
)
from entrofunc.services.functional import (
    counts_for,
    estimate_functional,
    oriented,
    q_for_order,
    unit_ball_volume,
)
from entrofunc.services.neighbors import count_summary


def _check_inflated_sizes(order: FunctionalOrder, n1: int, n2: int) -> None:
    for inflated in order.inflated():
        if inflated is not None and (n1 < inflated.r1 or n2 < inflated.r2):
            raise InsufficientSampleError(
                f"variance estimate for order {order} needs plug-in order {inflated}",
                n1=n1,
                n2=n2,
                plug_in=str(inflated),
            )


def variance_from_counts(
    counts: NeighborCounts,
    order: FunctionalOrder,
    q: QEstimate,
    mode: SampleMode,
    d: int,
) -> VarianceEstimate:
    """k_n = max(K_n, 1/n) from counts already oriented on the X role."""
    n1, n2 = counts.n1, counts.n2
    _check_inflated_sizes(order, n1, n2)
    n = n1 + n2
    p_hat = n1 / n
    first, second = order.inflated()
    q_first = q_for_order(counts, first, mode, d) if first is not None else None
    q_second = q_for_order(counts, second, mode, d) if second is not None else None

    q2 = q.value * q.value
    raw_k = 0.0
    if q_first is not None:
        raw_k += order.r1**2 * (q_first.value - q2) / p_hat
    if q_second is not None:
        raw_k += order.r2**2 * (q_second.value - q2) / (1.0 - p_hat)

    return VarianceEstimate(
        kappa_hat=max(raw_k, 1.0 / n),
        raw_k=raw_k,
        components=(q_first, q_second),
        p_hat=p_hat,
        n=n,
    )


def variance_estimate(
    x: Sample,
    y: Sample | None,
    order: FunctionalOrder,
    epsilon: float | None = None,
    mode: SampleMode | None = None,
) -> VarianceEstimate:
    """Plug-in estimate of the asymptotic variance kappa of Q_n.

    The inflated-order plug-ins reuse the same epsilon and one counting pass.
    """
    if mode is not None and SampleMode(mode) is not x.mode:
        raise InvalidArgumentError("requested mode does not match the samples")
    cx, cy, working = oriented(x, y, order)
    _check_inflated_sizes(working, cx.n, 0 if cy is None else cy.n)
    counts = counts_for(cx, cy, epsilon)
    q = q_for_order(counts, working, cx.mode, cx.d)
    return variance_from_counts(counts, working, q, cx.mode, cx.d)


def entropy_estimate(q: QEstimate, n: int | None = None) -> EntropyEstimate:
    """H_n = log(max(Q, 1/n)) / (1 - r)."""
    q.order.require_entropy_order()
    n = q.n if n is None else int(n)
    if n < 1:
        raise InvalidArgumentError("n must be positive", n=n)
    floor = 1.0 / n
    truncated = q.value < floor
    h_hat = math.log(max(q.value, floor)) / (1 - q.order.r)
    return EntropyEstimate(h_hat=h_hat, q=q, order=q.order, truncated=truncated, n=n)


def confidence_interval(
    h: EntropyEstimate,
    k: VarianceEstimate,
    n: int | None = None,
    level: float = 0.95,
) -> ConfidenceInterval:
    """H_n +- z * sqrt(k_n) / (sqrt(n) |1 - r| Q)."""
    if not 0.0 < level < 1.0:
        raise InvalidArgumentError("level must lie in (0, 1)", level=level)
    q_value = h.q.value
    if q_value <= 0.0:
        raise UndefinedIntervalError(
            "interval undefined for a zero estimate", order=str(h.order)
        )
    n = h.n if n is None else int(n)
    z = float(ndtri((1.0 + level) / 2.0))
    half = z * math.sqrt(k.kappa_hat) / (math.sqrt(n) * abs(1 - h.order.r) * q_value)
    return ConfidenceInterval(
        center=h.h_hat,
        lower=h.h_hat - half,
        upper=h.h_hat + half,
        level=level,
        pivot=PivotKind.EPSILON_BALL if h.q.normalized else PivotKind.EXACT_MATCH,
    )


def normalized_residual(
    h: float, h_true: float, k: float, q_tilde: float, n: int, r: int
) -> float:
    """sqrt(n) |1 - r| Q (H_n - h) / sqrt(k_n), asymptotically standard normal."""
    return math.sqrt(n) * abs(1 - r) * q_tilde * (h - h_true) / math.sqrt(k)


def entropy_residual(
    entropy: EntropyEstimate, variance: VarianceEstimate, h_true: float
) -> float:
    return normalized_residual(
        entropy.h_hat,
        h_true,
        variance.kappa_hat,
        entropy.q.value,
        entropy.n,
        entropy.order.r,
    )


def q_pivot(q: float, q_true: float, k: float, n: int) -> float:
    """sqrt(n) (Q - q) / sqrt(k_n)."""
    return math.sqrt(n) * (q - q_true) / math.sqrt(k)


def select_epsilon(n: int, d: int, r: int, alpha: float, c: float = 1.0) -> float:
    """Rate-optimal bandwidth for densities of Holder smoothness alpha.

    alpha <= d/2: c * n^(-alpha / (2 alpha + d (1 - 1/r))).
    alpha > d/2: c * (log n / n)^(1/d), so that n eps^d = c^d log n grows.
    """
    if alpha <= 0 or c <= 0:
        raise InvalidArgumentError("alpha and c must be positive", alpha=alpha, c=c)
    if r < 2:
        raise InvalidOrderError("bandwidth selection needs r >= 2", r=r)
    if n < 2 or d < 1:
        raise InvalidArgumentError("need n >= 2 and d >= 1", n=n, d=d)
    if alpha <= d / 2:
        return c * n ** (-alpha / (2 * alpha + d * (1 - 1 / r)))
    return c * (math.log(n) / n) ** (1 / d)


def variability_estimate(
    x: Sample, y: Sample, epsilon: float | None = None
) -> EntropyEstimate:
    """v = -log q_(1,1), the variability governing epsilon-join sizes."""
    q = estimate_functional(x, y, FunctionalOrder(1, 1), epsilon)
    return entropy_estimate(q)


def renyi_entropy_estimate(
    x: Sample, s: int, epsilon: float | None = None
) -> EntropyEstimate:
    """Renyi s-entropy from the one-sample functional q_(s,0)."""
    if isinstance(s, bool) or int(s) != s or s < 2:
        raise InvalidOrderError("Renyi order s must be an integer >= 2", s=s)
    q = estimate_functional(x, None, FunctionalOrder(int(s), 0), epsilon)
    return entropy_estimate(q)


def bregman_from_q(q_s0: float, q_0s: float, q_1s: float, s: int) -> float:
    """B_s(p, q) = q_(0,s) + q_(s,0)/(s-1) - s q_(1,s-1)/(s-1)."""
    return q_0s + q_s0 / (s - 1) - s * q_1s / (s - 1)


def symmetrized_bregman_from_q(
    q_s0: float, q_0s: float, q_1s: float, q_s1: float, s: int
) -> float:
    """K_s(p, q) = (B_s(p, q) + B_s(q, p)) / s."""
    forward = bregman_from_q(q_s0, q_0s, q_1s, s)
    backward = bregman_from_q(q_0s, q_s0, q_s1, s)
    return (forward + backward) / s


def bregman_components(
    x: Sample,
    y: Sample,
    s: int,
    epsilon: float | None = None,
    symmetrized: bool = False,
) -> dict[FunctionalOrder, QEstimate]:
    """The Q estimates entering B_s (and K_s), keyed by their (X, Y) order."""
    if isinstance(s, bool) or int(s) != s or s < 2:
        raise InvalidOrderError("Bregman order s must be an integer >= 2", s=s)
    s = int(s)
    if y.mode is not x.mode:
        raise InvalidArgumentError("samples must share a mode")
    if y.d != x.d:
        raise InvalidArgumentError("sample dimensions differ", d_x=x.d, d_y=y.d)

    wanted = [FunctionalOrder(s, 0), FunctionalOrder(1, s - 1)]
    if symmetrized:
        wanted.append(FunctionalOrder(s - 1, 1))
    for order in wanted:
        if x.n < order.r1 or y.n < order.r2:
            raise InsufficientSampleError(
                f"Bregman estimate needs order {order}", n1=x.n, n2=y.n
            )
    if y.n < s:
        raise InsufficientSampleError(
            f"Bregman estimate needs order (0,{s})", n1=x.n, n2=y.n
        )

    counts_x = counts_for(x, y, epsilon)
    counts_y = counts_for(y, None, epsilon)
    components = {order: q_for_order(counts_x, order, x.mode, x.d) for order in wanted}
    from_y = q_for_order(counts_y, FunctionalOrder(s, 0), y.mode, y.d)
    components[FunctionalOrder(0, s)] = QEstimate(
        value=from_y.value,
        order=FunctionalOrder(0, s),
        epsilon=from_y.epsilon,
        normalized=from_y.normalized,
        raw=from_y.raw,
        n1=x.n,
        n2=y.n,
        d=from_y.d,
    )
    return components


def bregman_estimate(
    x: Sample,
    y: Sample,
    s: int,
    epsilon: float | None = None,
    symmetrized: bool = False,
) -> float:
    """Bregman distance B_s(p_X, p_Y), or K_s when symmetrized. Not clipped at 0."""
    parts = bregman_components(x, y, s, epsilon, symmetrized)
    s = int(s)
    q_s0 = parts[FunctionalOrder(s, 0)].value
    q_0s = parts[FunctionalOrder(0, s)].value
    q_1s = parts[FunctionalOrder(1, s - 1)].value
    if symmetrized:
        q_s1 = parts[FunctionalOrder(s - 1, 1)].value
        return symmetrized_bregman_from_q(q_s0, q_0s, q_1s, q_s1, s)
    return bregman_from_q(q_s0, q_0s, q_1s, s)


def join_size_estimate(
    m1: int, m2: int, epsilon: float, d: int, v_hat: float
) -> float:
    """Expected epsilon-join size m1 m2 eps^d b_1(d) e^(-v).

    With epsilon = 0 (exact-match join of discrete tables) this is m1 m2 e^(-v).
    """
    if m1 < 1 or m2 < 1:
        raise InvalidArgumentError("table sizes must be positive", m1=m1, m2=m2)
    if epsilon < 0:
        raise InvalidArgumentError("epsilon must be non-negative", epsilon=epsilon)
    match_rate = math.exp(-v_hat)
    if epsilon == 0:
        return m1 * m2 * match_rate
    return m1 * m2 * epsilon**d * unit_ball_volume(d) * match_rate


def student_r_density(
    x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, s: int
) -> float | NDArray[np.float64]:
    """Compactly supported density maximizing the Renyi s-entropy.

    A single point returns a float; an (m, d) array returns m values.
    """
    if isinstance(s, bool) or int(s) != s or s < 2:
        raise InvalidOrderError("Student-r order s must be an integer >= 2", s=s)
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    d = mu_arr.shape[0]
    cov = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if cov.shape != (d, d) or not np.allclose(cov, cov.T):
        raise InvalidArgumentError("Sigma must be a symmetric d x d matrix")

    m = d + 2.0 / (s - 1)
    c_s = (m + 2.0) * cov
    try:
        chol = np.linalg.cholesky(c_s)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError("Sigma must be positive definite") from exc

    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    log_a = (
        gammaln(m / 2 + 1)
        - gammaln((m - d) / 2 + 1)
        - 0.5 * (d * math.log(math.pi) + log_det)
    )

    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim <= 1
    pts = pts.reshape(1, d) if single else pts.reshape(-1, d)
    z = np.linalg.solve(chol, (pts - mu_arr).T)
    u = np.sum(z * z, axis=0)
    values = np.where(
        u <= 1.0, np.exp(log_a) * np.clip(1.0 - u, 0.0, None) ** (1.0 / (s - 1)), 0.0
    )
    return float(values[0]) if single else values


def estimate_report(
    x: Sample,
    y: Sample | None,
    order: FunctionalOrder,
    epsilon: float | None = None,
    level: float | None = 0.95,
) -> EstimateReport:
    """Point estimate, plug-in variance, entropy and interval from one counting pass."""
    cx, cy, working = oriented(x, y, order)
    counts = counts_for(cx, cy, epsilon)
    q = q_for_order(counts, working, cx.mode, cx.d)
    diagnostics = {
        "mode": cx.mode.value,
        "d": cx.d,
        "n1": counts.n1,
        "n2": counts.n2,
        "n": counts.n1 + counts.n2,
        "working_order": str(working),
        "swapped": working != order,
        **count_summary(counts),
    }

    variance = entropy = interval = None
    if working.r >= 2:
        variance = variance_from_counts(counts, working, q, cx.mode, cx.d)
        entropy = entropy_estimate(q)
        diagnostics["k_truncated"] = variance.raw_k < 1.0 / variance.n
        diagnostics["h_truncated"] = entropy.truncated
        if level is not None and q.value > 0:
            interval = confidence_interval(entropy, variance, level=level)

    logger.info(
        "estimate_completed",
        order=str(order),
        q=q.value,
        h=None if entropy is None else entropy.h_hat,
        k=None if variance is None else variance.kappa_hat,
    )
    return EstimateReport(
        q=q, variance=variance, entropy=entropy, interval=interval, diagnostics=diagnostics
    )
