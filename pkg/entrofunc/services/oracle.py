"""
Ground truth for the estimators.

  * brute_force_q: the generalized U-statistic evaluated literally, subset
    by subset, as an exact rational number.
  * true_q: closed forms of q_(r1,r2) = int p_X^r1 p_Y^r2 for the catalog
    families, falling back to numeric_q.
  * numeric_q: composite Simpson quadrature (d <= 2) or exact summation over
    a finite support.
  * coincidence_q: the epsilon-coincidence probability q_(r,eps) that the raw
    U-statistic estimates without bias, by quadrature in one dimension.
  * normal_quantile / normal_cdf: standard normal reference values.

Closed forms used by true_q (per coordinate where the family is a product):

  Gaussian, precisions t_i = k_i / s_i^2, T = sum t_i:
      prod (2 pi s_i^2)^(-k_i/2) * sqrt(2 pi / T)
          * exp(-(sum t_i m_i^2 - (sum t_i m_i)^2 / T) / 2)
  Exponential rates b_i:  prod b_i^k_i / sum k_i b_i
  Bernoulli(p_i):         prod p_i^k_i + prod (1 - p_i)^k_i
  Uniform on {1..m_i}:    min(m_i) * prod m_i^-k_i
  Student-r, one sample:  A^r |C|^(1/2) pi^(d/2) G(g + 1) / G(g + 1 + d/2),
                          g = r / (s - 1)
"""

import itertools
import math
from fractions import Fraction
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, stats
from scipy.special import gammaln, ndtr, ndtri

from entrofunc.config import get_settings
from entrofunc.errors import (
    CombinatorialExplosionError,
    InsufficientSampleError,
    InvalidArgumentError,
    UnsupportedPairError,
)
from entrofunc.logger import logger
from entrofunc.models import FunctionalOrder, Sample, SampleMode
from entrofunc.schemas import (
    BernoulliProduct,
    Exponential,
    Gaussian1D,
    GaussianIso,
    StudentR,
    UniformDiscrete,
)
from entrofunc.services.inference import student_r_density
from entrofunc.services.neighbors import squared_distances

Spec = Any


def normal_quantile(p: float) -> float:
    """Standard normal quantile; p must lie strictly inside (0, 1)."""
    if not (np.isfinite(p) and 0.0 < p < 1.0):
        raise InvalidArgumentError("p must lie in (0, 1)", p=p)
    return float(ndtri(p))


def normal_cdf(x: float) -> float:
    return float(ndtr(x))


def _closeness(centers: NDArray[Any], points: NDArray[Any], epsilon: float, mode: SampleMode) -> list[frozenset[int]]:
    """For every center, the set of point indices within epsilon (or equal)."""
    n_c, n_p = centers.shape[0], points.shape[0]
    if n_c == 0 or n_p == 0:
        return [frozenset() for _ in range(n_c)]
    ci = np.repeat(np.arange(n_c), n_p)
    pi = np.tile(np.arange(n_p), n_c)
    if mode is SampleMode.DISCRETE:
        close = np.all(centers[ci] == points[pi], axis=1)
    else:
        d2 = squared_distances(centers[ci].astype(np.float64), points[pi].astype(np.float64))
        close = d2 <= float(epsilon) ** 2
    close = close.reshape(n_c, n_p)
    return [frozenset(np.flatnonzero(row).tolist()) for row in close]


def brute_force_q(
    x: Sample, y: Sample | None, order: FunctionalOrder, epsilon: float | None = None
) -> Fraction:
    """Literal subset-enumeration U-statistic (raw, not volume-normalized).

    Averages the symmetrized kernel (1/r1) sum_{i in S} 1{S, T within epsilon
    of X_i} over all r1-subsets S of X and r2-subsets T of Y.
    """
    if order.r1 == 0:
        if y is None:
            raise InsufficientSampleError(f"order {order} needs a second sample")
        x, y, order = y, x, order.swapped()
    if order.r2 == 0:
        y = None
    n1 = x.n
    n2 = 0 if y is None else y.n
    if n1 < order.r1 or n2 < order.r2:
        raise InsufficientSampleError(f"order {order} needs more observations", n1=n1, n2=n2)
    if x.mode is SampleMode.CONTINUOUS and (epsilon is None or epsilon <= 0):
        raise InvalidArgumentError("continuous samples need a positive epsilon", epsilon=epsilon)

    subsets_x = math.comb(n1, order.r1)
    subsets_y = math.comb(n2, order.r2)
    limit = get_settings().BRUTE_FORCE_LIMIT
    if subsets_x * subsets_y > limit:
        raise CombinatorialExplosionError(
            f"{subsets_x * subsets_y} subset pairs exceed the limit {limit}",
            n1=n1,
            n2=n2,
            order=str(order),
        )

    eps = 0.0 if epsilon is None else float(epsilon)
    near_x = _closeness(x.points, x.points, eps, x.mode)
    near_y = (
        _closeness(x.points, y.points, eps, x.mode)
        if y is not None
        else [frozenset() for _ in range(n1)]
    )
    hits = 0
    y_subsets = list(itertools.combinations(range(n2), order.r2))
    for s in itertools.combinations(range(n1), order.r1):
        members = set(s)
        for i in s:
            if members <= near_x[i]:
                hits += sum(1 for t in y_subsets if near_y[i].issuperset(t))
    return Fraction(hits, subsets_x * subsets_y * order.r1)


# -- catalog densities ------------------------------------------------------


def density(spec: Spec, points: ArrayLike) -> NDArray[np.float64]:
    """Density (continuous families) or mass function (discrete) at (m, d) points."""
    pts = np.asarray(points, dtype=np.float64)
    pts = pts.reshape(-1, spec.dim)
    if isinstance(spec, Gaussian1D | GaussianIso):
        return np.prod(stats.norm.pdf(pts, spec.mean, math.sqrt(spec.variance)), axis=1)
    if isinstance(spec, Exponential):
        return stats.expon.pdf(pts[:, 0], scale=1.0 / spec.rate)
    if isinstance(spec, StudentR):
        return np.asarray(
            student_r_density(pts, spec.mean, spec.cov, spec.s), dtype=np.float64
        ).reshape(-1)
    if isinstance(spec, BernoulliProduct):
        inside = np.all((pts == 0) | (pts == 1), axis=1)
        ones = pts.sum(axis=1)
        mass = spec.p**ones * (1.0 - spec.p) ** (spec.dim - ones)
        return np.where(inside, mass, 0.0)
    if isinstance(spec, UniformDiscrete):
        inside = (pts[:, 0] >= 1) & (pts[:, 0] <= spec.m) & (pts[:, 0] == np.round(pts[:, 0]))
        return np.where(inside, 1.0 / spec.m, 0.0)
    raise UnsupportedPairError(f"no density for {type(spec).__name__}")


def support(spec: Spec) -> NDArray[np.int64]:
    """Finite support of a discrete family as an (m, d) integer array."""
    if isinstance(spec, BernoulliProduct):
        return np.array(list(itertools.product((0, 1), repeat=spec.dim)), dtype=np.int64)
    if isinstance(spec, UniformDiscrete):
        return np.arange(1, spec.m + 1, dtype=np.int64).reshape(-1, 1)
    raise InvalidArgumentError(f"{spec.family} has no finite support")


def quadrature_domain(spec: Spec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Truncation box: Gaussian mean +- 12 sd, exponential [0, 40/rate], Student-r support."""
    if isinstance(spec, Gaussian1D | GaussianIso):
        half = 12.0 * math.sqrt(spec.variance)
        lo = np.full(spec.dim, spec.mean - half)
        return lo, lo + 2 * half
    if isinstance(spec, Exponential):
        return np.zeros(1), np.full(1, 40.0 / spec.rate)
    if isinstance(spec, StudentR):
        mean = np.asarray(spec.mean, dtype=np.float64)
        half = np.sqrt(np.diag(spec.shape_matrix))
        return mean - half, mean + half
    raise InvalidArgumentError(f"{spec.family} has no quadrature domain")


# -- closed forms -----------------------------------------------------------


def _orient_specs(
    dist_x: Spec, dist_y: Spec | None, order: FunctionalOrder
) -> tuple[Spec, Spec | None, FunctionalOrder]:
    if order.r1 == 0:
        if dist_y is None:
            raise InvalidArgumentError(f"order {order} needs dist_y")
        dist_x, dist_y, order = dist_y, dist_x, order.swapped()
    if order.r2 == 0:
        dist_y = None
    if dist_y is not None:
        if dist_y.mode is not dist_x.mode:
            raise UnsupportedPairError("cannot mix discrete and continuous specs")
        if dist_y.dim != dist_x.dim:
            raise UnsupportedPairError("spec dimensions differ")
    return dist_x, dist_y, order


def _weighted(dist_x: Spec, dist_y: Spec | None, order: FunctionalOrder) -> list[tuple[Spec, int]]:
    if dist_y is None or dist_y == dist_x:
        return [(dist_x, order.r)]
    return [(dist_x, order.r1), (dist_y, order.r2)]


def q_student_r(spec: StudentR, r: int) -> float:
    """int p^r for the Student-r law of order s."""
    d = spec.dim
    m = d + 2.0 / (spec.s - 1)
    gamma = r / (spec.s - 1)
    _, log_det = np.linalg.slogdet(spec.shape_matrix)
    log_a = gammaln(m / 2 + 1) - gammaln((m - d) / 2 + 1) - 0.5 * (d * math.log(math.pi) + log_det)
    log_q = (
        r * log_a
        + 0.5 * log_det
        + 0.5 * d * math.log(math.pi)
        + gammaln(gamma + 1)
        - gammaln(gamma + 1 + d / 2)
    )
    return math.exp(log_q)


def _gaussian_log_q(parts: list[tuple[Spec, int]]) -> float:
    means = np.array([spec.mean for spec, _ in parts], dtype=np.float64)
    variances = np.array([spec.variance for spec, _ in parts], dtype=np.float64)
    powers = np.array([k for _, k in parts], dtype=np.float64)
    tau = powers / variances
    total = tau.sum()
    spread = float(np.sum(tau * means**2) - np.sum(tau * means) ** 2 / total)
    per_coordinate = (
        float(np.sum(-0.5 * powers * np.log(2 * math.pi * variances)))
        + 0.5 * math.log(2 * math.pi / total)
        - 0.5 * spread
    )
    return parts[0][0].dim * per_coordinate


def _closed_form(parts: list[tuple[Spec, int]]) -> float:
    families = {type(spec) for spec, _ in parts}
    if families <= {Gaussian1D, GaussianIso}:
        return math.exp(_gaussian_log_q(parts))
    if len(families) != 1:
        raise UnsupportedPairError(
            "no closed form for mixed families",
            families=sorted(spec.family for spec, _ in parts),
        )
    family = families.pop()
    if family is Exponential:
        rates = [(spec.rate, k) for spec, k in parts]
        return math.prod(b**k for b, k in rates) / sum(k * b for b, k in rates)
    if family is BernoulliProduct:
        ones = math.prod(spec.p**k for spec, k in parts)
        zeros = math.prod((1.0 - spec.p) ** k for spec, k in parts)
        return (ones + zeros) ** parts[0][0].dim
    if family is UniformDiscrete:
        return min(spec.m for spec, _ in parts) * math.prod(
            float(spec.m) ** -k for spec, k in parts
        )
    if family is StudentR and len(parts) == 1:
        spec, r = parts[0]
        return q_student_r(spec, r)
    raise UnsupportedPairError(
        f"no closed form for {family.__name__} pairs", family=family.__name__
    )


def true_q(
    dist_x: Spec,
    dist_y: Spec | None,
    order: FunctionalOrder,
    allow_numeric: bool = True,
) -> float:
    """q_(r1,r2) of a catalog pair, by closed form or quadrature."""
    x_spec, y_spec, working = _orient_specs(dist_x, dist_y, order)
    try:
        return _closed_form(_weighted(x_spec, y_spec, working))
    except UnsupportedPairError as exc:
        if not allow_numeric:
            raise
        logger.info("oracle_numeric_fallback", order=str(order), reason=str(exc))
        return numeric_q(x_spec, y_spec, working)


def _simpson_grid(lo: float, hi: float, points: int) -> NDArray[np.float64]:
    return np.linspace(lo, hi, points if points % 2 else points + 1)


def numeric_q(
    dist_x: Spec,
    dist_y: Spec | None,
    order: FunctionalOrder,
    domain: tuple[ArrayLike, ArrayLike] | None = None,
    grid_size: int | None = None,
) -> float:
    """int p_X^r1 p_Y^r2 by composite Simpson (d <= 2) or exact summation."""
    x_spec, y_spec, working = _orient_specs(dist_x, dist_y, order)
    parts = _weighted(x_spec, y_spec, working)

    if x_spec.mode is SampleMode.DISCRETE:
        atoms = np.unique(np.vstack([support(spec) for spec, _ in parts]), axis=0)
        terms = np.ones(atoms.shape[0], dtype=np.float64)
        for spec, k in parts:
            terms *= density(spec, atoms) ** k
        return math.fsum(terms)

    d = x_spec.dim
    if d > 2:
        raise UnsupportedPairError("numeric quadrature supports d <= 2", d=d)
    if domain is None:
        boxes = [quadrature_domain(spec) for spec, _ in parts]
        lo = np.min([box[0] for box in boxes], axis=0)
        hi = np.max([box[1] for box in boxes], axis=0)
    else:
        lo = np.atleast_1d(np.asarray(domain[0], dtype=np.float64))
        hi = np.atleast_1d(np.asarray(domain[1], dtype=np.float64))
        if lo.shape != (d,) or hi.shape != (d,) or np.any(hi <= lo):
            raise InvalidArgumentError("domain must be a non-empty box in the sample dimension")

    settings = get_settings()
    if grid_size is None:
        grid_size = settings.QUADRATURE_POINTS if d == 1 else settings.QUADRATURE_POINTS_2D
    if grid_size < 3:
        raise InvalidArgumentError("grid_size must be at least 3", grid_size=grid_size)

    axes = [_simpson_grid(lo[k], hi[k], grid_size) for k in range(d)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    values = np.ones(mesh.shape[0], dtype=np.float64)
    for spec, k in parts:
        values *= density(spec, mesh) ** k
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("density values must be finite on the quadrature domain")

    if d == 1:
        return float(integrate.simpson(values, x=axes[0]))
    grid = values.reshape(axes[0].size, axes[1].size)
    return float(integrate.simpson(integrate.simpson(grid, x=axes[1], axis=1), x=axes[0]))


def ball_probability(spec: Spec, points: ArrayLike, epsilon: float) -> NDArray[np.float64]:
    """P(|Z - x| <= epsilon) for Z ~ spec at one-dimensional points x."""
    x = np.asarray(points, dtype=np.float64).reshape(-1)
    if spec.dim != 1 or spec.mode is not SampleMode.CONTINUOUS:
        raise UnsupportedPairError("ball probabilities need a one-dimensional continuous spec")
    if isinstance(spec, Gaussian1D | GaussianIso):
        law = stats.norm(spec.mean, math.sqrt(spec.variance))
    elif isinstance(spec, Exponential):
        law = stats.expon(scale=1.0 / spec.rate)
    else:
        raise UnsupportedPairError(f"no distribution function for {spec.family}")
    return np.asarray(law.cdf(x + epsilon) - law.cdf(x - epsilon), dtype=np.float64)


def coincidence_q(
    dist_x: Spec,
    dist_y: Spec | None,
    order: FunctionalOrder,
    epsilon: float,
    grid_size: int | None = None,
) -> float:
    """q_(r,eps) = E p_(X,eps)(X)^(r1-1) p_(Y,eps)(X)^r2, the mean of the raw U-statistic.

    Simpson quadrature over the domain of X; one-dimensional families only.
    """
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive", epsilon=epsilon)
    x_spec, y_spec, working = _orient_specs(dist_x, dist_y, order)
    lo, hi = quadrature_domain(x_spec)
    points = grid_size if grid_size is not None else get_settings().QUADRATURE_POINTS
    if points < 3:
        raise InvalidArgumentError("grid_size must be at least 3", grid_size=points)
    grid = _simpson_grid(float(lo[0]), float(hi[0]), points)

    values = density(x_spec, grid) * ball_probability(x_spec, grid, epsilon) ** (working.r1 - 1)
    if working.r2:
        other = x_spec if y_spec is None else y_spec
        values *= ball_probability(other, grid, epsilon) ** working.r2
    return float(integrate.simpson(values, x=grid))


# -- derived truths ---------------------------------------------------------


def true_h(dist_x: Spec, dist_y: Spec | None, order: FunctionalOrder) -> float:
    """h = log(q) / (1 - r)."""
    order.require_entropy_order()
    return math.log(true_q(dist_x, dist_y, order)) / (1 - order.r)


def true_variability(dist_x: Spec, dist_y: Spec) -> float:
    """v = -log q_(1,1)."""
    return -math.log(true_q(dist_x, dist_y, FunctionalOrder(1, 1)))


def true_bregman(dist_x: Spec, dist_y: Spec, s: int, symmetrized: bool = False) -> float:
    """B_s(p_X, p_Y), or K_s = (B_s(p, q) + B_s(q, p)) / s."""
    if s < 2:
        raise InvalidArgumentError("Bregman order s must be at least 2", s=s)
    q_s0 = true_q(dist_x, dist_y, FunctionalOrder(s, 0))
    q_0s = true_q(dist_x, dist_y, FunctionalOrder(0, s))
    q_1s = true_q(dist_x, dist_y, FunctionalOrder(1, s - 1))
    forward = q_0s + q_s0 / (s - 1) - s * q_1s / (s - 1)
    if not symmetrized:
        return forward
    q_s1 = true_q(dist_x, dist_y, FunctionalOrder(s - 1, 1))
    backward = q_s0 + q_0s / (s - 1) - s * q_s1 / (s - 1)
    return (forward + backward) / s


def true_kappa(
    dist_x: Spec, dist_y: Spec | None, order: FunctionalOrder, p: float = 1.0
) -> float:
    """Asymptotic variance of Q_n with sampling fraction p = n1 / n."""
    x_spec, y_spec, working = _orient_specs(dist_x, dist_y, order)
    if working.r2 == 0:
        p = 1.0
    elif order.r1 == 0:
        p = 1.0 - p
    if not 0.0 < p <= 1.0 or (working.r2 > 0 and p >= 1.0):
        raise InvalidArgumentError("sampling fraction must lie in (0, 1)", p=p)
    q = true_q(x_spec, y_spec, working)
    first, second = working.inflated()
    kappa = 0.0
    if first is not None:
        kappa += working.r1**2 * (true_q(x_spec, y_spec, first) - q * q) / p
    if second is not None:
        kappa += working.r2**2 * (true_q(x_spec, y_spec, second) - q * q) / (1.0 - p)
    return kappa
