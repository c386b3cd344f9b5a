"""
Generalized U-statistic estimators of Renyi entropy functionals.

The literal estimator averages a symmetrized epsilon-closeness kernel over all
C(n1, r1) * C(n2, r2) subset pairs. The kernel centered at X_i only asks
whether the other members of the subsets fall in the ball around X_i, so the
subset sum collapses to

    Q_n = [C(n1, r1) C(n2, r2) r1]^-1 * sum_i C(a_i, r1 - 1) C(b_i, r2)

with a_i, b_i the neighbor counts of X_i.
"""

import math

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from entrofunc.errors import InsufficientSampleError, InvalidArgumentError
from entrofunc.logger import logger
from entrofunc.models import (
    FunctionalOrder,
    NeighborCounts,
    QEstimate,
    Sample,
    SampleMode,
)
from entrofunc.services.neighbors import exact_match_counts, neighbor_counts


def unit_ball_volume(d: int) -> float:
    """b_1(d) = 2 pi^(d/2) / (d Gamma(d/2))."""
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidArgumentError("dimension must be a positive integer", d=d)
    d = int(d)
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - math.log(d) - gammaln(d / 2))


def ball_volume(d: int, epsilon: float) -> float:
    """Lebesgue volume of a d-dimensional Euclidean ball of radius epsilon."""
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive", epsilon=epsilon)
    return float(epsilon) ** int(d) * unit_ball_volume(d)


def binomial_ratio(top: NDArray[np.int64], bottom: int, k: int) -> NDArray[np.float64]:
    """C(top, k) / C(bottom, k) elementwise, as a product of falling-factorial ratios."""
    result = np.ones(top.shape, dtype=np.float64)
    for j in range(k):
        result *= np.clip(top - j, 0, None) / float(bottom - j)
    return result


def _check_sizes(order: FunctionalOrder, n1: int, n2: int) -> None:
    if n1 < order.r1 or n2 < order.r2:
        raise InsufficientSampleError(
            f"order {order} needs n1 >= {order.r1} and n2 >= {order.r2}",
            n1=n1,
            n2=n2,
            r1=order.r1,
            r2=order.r2,
        )


def q_from_counts(counts: NeighborCounts, order: FunctionalOrder) -> QEstimate:
    """Raw Q_n from neighbor counts via the combinatorial closed form.

    Counts must be centered on the sample that plays the X role, i.e. the
    caller swaps samples beforehand when r1 = 0.
    """
    if order.r1 < 1:
        raise InvalidArgumentError(
            "counts are centered on X; swap the samples for r1 = 0", order=str(order)
        )
    n1, n2 = counts.n1, counts.n2
    _check_sizes(order, n1, n2)

    if order.r == 1:
        value = 1.0
    else:
        # C(a_i, r1-1)/C(n1, r1) * r1^-1 = (1/n1) * C(a_i, r1-1)/C(n1-1, r1-1)
        terms = binomial_ratio(counts.a, n1 - 1, order.r1 - 1) * binomial_ratio(
            counts.b, n2, order.r2
        )
        value = min(1.0, math.fsum(terms) / n1)

    return QEstimate(
        value=value,
        order=order,
        epsilon=counts.epsilon,
        normalized=False,
        raw=value,
        n1=n1,
        n2=n2,
        d=0,
    )


def normalize_q(raw: QEstimate, d: int) -> QEstimate:
    """Q~_n = Q_n / b_eps(d)^(r-1)."""
    scale = ball_volume(d, raw.epsilon) ** (raw.order.r - 1)
    return QEstimate(
        value=raw.raw / scale,
        order=raw.order,
        epsilon=raw.epsilon,
        normalized=True,
        raw=raw.raw,
        n1=raw.n1,
        n2=raw.n2,
        d=d,
    )


def _with_dimension(q: QEstimate, d: int) -> QEstimate:
    return QEstimate(
        value=q.value,
        order=q.order,
        epsilon=q.epsilon,
        normalized=q.normalized,
        raw=q.raw,
        n1=q.n1,
        n2=q.n2,
        d=d,
    )


def oriented(
    x: Sample, y: Sample | None, order: FunctionalOrder
) -> tuple[Sample, Sample | None, FunctionalOrder]:
    """Put the sample carrying the centers first.

    q_(0,r2) of (X, Y) equals q_(r2,0) of (Y, X). With r2 = 0 the second
    sample never enters the estimate and is dropped.
    """
    if order.r1 == 0:
        if y is None:
            raise InsufficientSampleError(
                f"order {order} needs a second sample", r1=order.r1, r2=order.r2
            )
        x, y, order = y, x, order.swapped()
    if order.r2 == 0:
        y = None
    if y is not None and y.n and y.d != x.d:
        raise InvalidArgumentError("sample dimensions differ", d_x=x.d, d_y=y.d)
    if y is not None and y.mode is not x.mode:
        raise InvalidArgumentError("samples must share a mode")
    return x, y, order


def estimate_q(
    x: Sample, y: Sample | None, order: FunctionalOrder, epsilon: float
) -> QEstimate:
    """Normalized estimate Q~_n of q_r for continuous samples."""
    if x.mode is not SampleMode.CONTINUOUS or (
        y is not None and y.mode is not SampleMode.CONTINUOUS
    ):
        raise InvalidArgumentError("estimate_q needs continuous samples")
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive", epsilon=epsilon)
    cx, cy, working = oriented(x, y, order)
    _check_sizes(working, cx.n, 0 if cy is None else cy.n)
    counts = neighbor_counts(cx, cy, epsilon)
    result = normalize_q(q_from_counts(counts, working), cx.d)
    logger.debug(
        "q_estimated",
        order=str(order),
        epsilon=epsilon,
        raw=result.raw,
        value=result.value,
    )
    return result


def estimate_q_discrete(
    x: Sample, y: Sample | None, order: FunctionalOrder
) -> QEstimate:
    """Unbiased estimate Q_n of q_r from exact coincidences (epsilon = 0)."""
    if x.mode is not SampleMode.DISCRETE or (
        y is not None and y.mode is not SampleMode.DISCRETE
    ):
        raise InvalidArgumentError("estimate_q_discrete needs discrete samples")
    cx, cy, working = oriented(x, y, order)
    _check_sizes(working, cx.n, 0 if cy is None else cy.n)
    counts = exact_match_counts(cx, cy)
    return _with_dimension(q_from_counts(counts, working), cx.d)


def estimate_functional(
    x: Sample,
    y: Sample | None,
    order: FunctionalOrder,
    epsilon: float | None = None,
) -> QEstimate:
    """Dispatch on sample mode: exact matching for discrete, epsilon-balls otherwise."""
    if x.mode is SampleMode.DISCRETE:
        return estimate_q_discrete(x, y, order)
    if epsilon is None:
        raise InvalidArgumentError("continuous estimation needs epsilon")
    return estimate_q(x, y, order, epsilon)


def counts_for(x: Sample, y: Sample | None, epsilon: float | None) -> NeighborCounts:
    """One counting pass shared by every order centered on x."""
    if x.mode is SampleMode.DISCRETE:
        return exact_match_counts(x, y)
    if epsilon is None:
        raise InvalidArgumentError("continuous estimation needs epsilon")
    return neighbor_counts(x, y, epsilon)


def q_for_order(
    counts: NeighborCounts, order: FunctionalOrder, mode: SampleMode, d: int
) -> QEstimate:
    """Q estimate of an order from precomputed counts, normalized in continuous mode."""
    raw = q_from_counts(counts, order)
    if mode is SampleMode.CONTINUOUS:
        return normalize_q(raw, d)
    return _with_dimension(raw, d)
