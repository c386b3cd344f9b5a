"""Immutable domain values shared by the estimation services."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entrofunc.errors import InvalidArgumentError, InvalidOrderError

# Discrete coordinates are stored as int64
_INT64_BOUND = 2.0**63


class SampleMode(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class FunctionalOrder:
    """Exponents (r1, r2) of the functional q = E p_X(X)^(r1-1) p_Y(X)^r2."""

    r1: int
    r2: int

    def __post_init__(self) -> None:
        for name, value in (("r1", self.r1), ("r2", self.r2)):
            if isinstance(value, bool) or not isinstance(value, int | np.integer):
                raise InvalidOrderError(f"{name} must be an integer", **{name: value})
            if value < 0:
                raise InvalidOrderError(f"{name} must be non-negative", **{name: value})
            object.__setattr__(self, name, int(value))
        if self.r1 + self.r2 < 1:
            raise InvalidOrderError("r1 + r2 must be at least 1", r1=self.r1, r2=self.r2)

    @property
    def r(self) -> int:
        return self.r1 + self.r2

    def swapped(self) -> "FunctionalOrder":
        return FunctionalOrder(self.r2, self.r1)

    def require_entropy_order(self) -> None:
        """Entropy-type quantities divide by 1 - r."""
        if self.r < 2:
            raise InvalidOrderError(
                "entropy estimation requires r1 + r2 >= 2", r1=self.r1, r2=self.r2
            )

    def inflated(self) -> tuple["FunctionalOrder | None", "FunctionalOrder | None"]:
        """Plug-in orders (2r1-1, 2r2) and (2r1, 2r2-1) of the variance estimator.

        A term is None exactly when its multiplier r1 or r2 is zero.
        """
        first = FunctionalOrder(2 * self.r1 - 1, 2 * self.r2) if self.r1 > 0 else None
        second = FunctionalOrder(2 * self.r1, 2 * self.r2 - 1) if self.r2 > 0 else None
        return first, second

    def __str__(self) -> str:
        return f"({self.r1},{self.r2})"


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered set of d-dimensional observations.

    One-dimensional input is read as n observations of dimension 1.
    """

    points: NDArray[Any]
    mode: SampleMode = SampleMode.CONTINUOUS

    def __post_init__(self) -> None:
        mode = SampleMode(self.mode)
        arr = np.asarray(self.points)
        if arr.ndim == 0:
            raise InvalidArgumentError("sample must be a sequence of observations")
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise InvalidArgumentError(
                "sample points must form an (n, d) array", shape=arr.shape
            )
        if arr.shape[1] < 1:
            raise InvalidArgumentError("sample dimension must be positive")

        if mode is SampleMode.DISCRETE:
            if arr.size and not np.issubdtype(arr.dtype, np.integer):
                as_float = arr.astype(np.float64)
                if not np.all(np.isfinite(as_float)) or np.any(
                    as_float != np.round(as_float)
                ):
                    raise InvalidArgumentError(
                        "discrete samples need integer coordinates"
                    )
                if np.any(np.abs(as_float) >= _INT64_BOUND):
                    raise InvalidArgumentError(
                        "discrete coordinates must lie inside the int64 range"
                    )
            elif arr.size and np.issubdtype(arr.dtype, np.unsignedinteger):
                if np.any(arr >= np.uint64(_INT64_BOUND)):
                    raise InvalidArgumentError(
                        "discrete coordinates must lie inside the int64 range"
                    )
            arr = arr.astype(np.int64)
        else:
            arr = arr.astype(np.float64)
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError("continuous samples must be finite")

        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)
        object.__setattr__(self, "mode", mode)

    @classmethod
    def continuous(cls, points: ArrayLike) -> "Sample":
        return cls(np.asarray(points, dtype=np.float64), SampleMode.CONTINUOUS)

    @classmethod
    def discrete(cls, points: ArrayLike) -> "Sample":
        return cls(np.asarray(points), SampleMode.DISCRETE)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class NeighborCounts:
    """Per-point counts around each X_i.

    a[i] counts other X points within epsilon of X_i, b[i] counts Y points.
    """

    a: NDArray[np.int64]
    b: NDArray[np.int64]
    epsilon: float
    n1: int
    n2: int

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=np.int64)
        b = np.asarray(self.b, dtype=np.int64)
        if a.shape != (self.n1,) or b.shape != (self.n1,):
            raise InvalidArgumentError(
                "neighbor counts must have one entry per X point",
                n1=self.n1,
                a_shape=a.shape,
                b_shape=b.shape,
            )
        if a.size and (a.min() < 0 or a.max() > self.n1 - 1):
            raise InvalidArgumentError("a_i must lie in [0, n1 - 1]")
        if b.size and (b.min() < 0 or b.max() > self.n2):
            raise InvalidArgumentError("b_i must lie in [0, n2]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class QEstimate:
    """Raw U-statistic Q_n, or its ball-volume normalized version."""

    value: float
    order: FunctionalOrder
    epsilon: float
    normalized: bool
    raw: float
    n1: int
    n2: int
    d: int

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True)
class VarianceEstimate:
    """Truncated plug-in estimate k_n of the asymptotic variance."""

    kappa_hat: float
    raw_k: float
    components: tuple[QEstimate | None, QEstimate | None]
    p_hat: float
    n: int


@dataclass(frozen=True)
class EntropyEstimate:
    """H_n = log(max(Q, 1/n)) / (1 - r)."""

    h_hat: float
    q: QEstimate
    order: FunctionalOrder
    truncated: bool
    n: int


class PivotKind(str, Enum):
    EXACT_MATCH = "exact-match"
    EPSILON_BALL = "epsilon-ball"


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    lower: float
    upper: float
    level: float
    pivot: PivotKind

    @property
    def half_width(self) -> float:
        return self.upper - self.center

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class EstimateReport:
    """Everything `estimate` reports for one pair of samples."""

    q: QEstimate
    variance: VarianceEstimate | None
    entropy: EntropyEstimate | None
    interval: ConfidenceInterval | None
    diagnostics: dict[str, Any] = field(default_factory=dict)
