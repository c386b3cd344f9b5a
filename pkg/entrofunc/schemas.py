"""
Data contracts and validation schemas.

Everything that arrives from outside the library (distribution specs typed on
the command line, experiment config files, run manifests) is validated here
with Pydantic before it reaches the services.
"""

from __future__ import annotations

import re
from datetime import datetime
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

from entrofunc.errors import InvalidArgumentError
from entrofunc.models import FunctionalOrder, SampleMode


def _split_numbers(value: Any) -> Any:
    """Accept "1, 2, 3" strings where lists of numbers are expected."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def dim(self) -> int:
        return 1

    @property
    def mode(self) -> SampleMode:
        return SampleMode.CONTINUOUS


class Gaussian1D(_Spec):
    family: Literal["gaussian1d"] = "gaussian1d"
    mean: float = 0.0
    variance: PositiveFloat = 1.0


class GaussianIso(_Spec):
    """Gaussian with i.i.d. N(mean, variance) coordinates."""

    family: Literal["gaussianIso"] = "gaussianIso"
    dim_: PositiveInt = Field(alias="dim")
    mean: float = 0.0
    variance: PositiveFloat = 1.0

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @property
    def dim(self) -> int:
        return self.dim_


class Exponential(_Spec):
    family: Literal["exponential"] = "exponential"
    rate: PositiveFloat = 1.0


class BernoulliProduct(_Spec):
    """Vectors of i.i.d. Bernoulli(p) components."""

    family: Literal["bernoulliProduct"] = "bernoulliProduct"
    dim_: PositiveInt = Field(alias="dim")
    p: float = Field(gt=0.0, lt=1.0)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @property
    def dim(self) -> int:
        return self.dim_

    @property
    def mode(self) -> SampleMode:
        return SampleMode.DISCRETE


class UniformDiscrete(_Spec):
    """Uniform law on {1, ..., m}."""

    family: Literal["uniformDiscrete"] = "uniformDiscrete"
    m: PositiveInt

    @property
    def mode(self) -> SampleMode:
        return SampleMode.DISCRETE


class StudentR(_Spec):
    """Maximum Renyi s-entropy law with given mean and covariance."""

    family: Literal["studentR"] = "studentR"
    mean: list[float] = Field(min_length=1)
    cov: list[list[float]]
    s: int = Field(ge=2)

    @field_validator("mean", mode="before")
    @classmethod
    def parse_mean(cls, v: Any) -> Any:
        if isinstance(v, int | float):
            return [v]
        return _split_numbers(v)

    @field_validator("cov", mode="before")
    @classmethod
    def parse_cov(cls, v: Any) -> Any:
        if isinstance(v, int | float):
            return [[v]]
        if isinstance(v, str):
            return [_split_numbers(row) for row in v.split(";") if row.strip()]
        return v

    @model_validator(mode="after")
    def check_cov(self) -> StudentR:
        d = len(self.mean)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (d, d):
            raise ValueError(f"cov must be {d}x{d}")
        if not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) <= 0):
            raise ValueError("cov must be symmetric positive definite")
        return self

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def gamma_exponent(self) -> float:
        return 1.0 / (self.s - 1)

    @property
    def shape_matrix(self) -> np.ndarray:
        """C_s = (m + 2) Sigma with m = d + 2/(s - 1)."""
        m = self.dim + 2.0 / (self.s - 1)
        return (m + 2.0) * np.asarray(self.cov, dtype=np.float64)


DistributionSpec = Annotated[
    Gaussian1D | GaussianIso | Exponential | BernoulliProduct | UniformDiscrete | StudentR,
    Field(discriminator="family"),
]

_FAMILY_ALIASES = {
    "gaussian1d": "gaussian1d",
    "normal": "gaussian1d",
    "gaussianiso": "gaussianIso",
    "exp": "exponential",
    "exponential": "exponential",
    "bernoulliproduct": "bernoulliProduct",
    "bernoulli": "bernoulliProduct",
    "uniformdiscrete": "uniformDiscrete",
    "uniform": "uniformDiscrete",
    "studentr": "studentR",
}

_POSITIONAL = {
    "gaussian1d": ("mean", "variance"),
    "gaussianIso": ("dim", "mean", "variance"),
    "exponential": ("rate",),
    "bernoulliProduct": ("dim", "p"),
    "uniformDiscrete": ("m",),
    "studentR": ("mean", "cov", "s"),
}

_KEY_ALIASES = {"d": "dim", "beta": "rate", "sigma2": "variance", "mu": "mean"}

_SPEC_TYPES: dict[str, type[_Spec]] = {
    "gaussian1d": Gaussian1D,
    "gaussianIso": GaussianIso,
    "exponential": Exponential,
    "bernoulliProduct": BernoulliProduct,
    "uniformDiscrete": UniformDiscrete,
    "studentR": StudentR,
}

_SPEC_PATTERN = re.compile(r"^\s*([A-Za-z0-9_]+)\s*(?:\((.*)\))?\s*$")


def canonical_spec_mapping(values: dict[str, Any]) -> dict[str, Any]:
    """Resolve family and parameter aliases (``exp``, ``d=``, ``beta=``...)."""
    raw_family = str(values.get("family", ""))
    family = _FAMILY_ALIASES.get(raw_family.lower())
    if family is None:
        raise InvalidArgumentError(f"unknown distribution family {raw_family!r}")
    params = {_KEY_ALIASES.get(k, k): v for k, v in values.items() if k != "family"}
    return {"family": family, **params}


def spec_from_mapping(values: dict[str, Any]) -> _Spec:
    """Build a spec from a mapping with a ``family`` key (aliases allowed)."""
    params = canonical_spec_mapping(values)
    return _SPEC_TYPES[params["family"]].model_validate(params)


def parse_distribution(text: str) -> _Spec:
    """Parse ``name(arg, key=value, ...)`` into a distribution spec.

    Examples: ``gaussian1d(0,1.5)``, ``exp(3)``, ``bernoulliProduct(d=3,p=0.8)``,
    ``uniformDiscrete(6)``, ``studentR(0,1,2)``. Whitespace-separated
    arguments are accepted too, and keep commas inside values:
    ``bernoulliProduct d=3 p=0.8``, ``studentR mean=0,0 cov=1,0;0,1 s=2``.
    """
    text = text.strip()
    if "(" not in text and " " in text:
        name, _, rest = text.partition(" ")
        tokens = rest.split()
    else:
        match = _SPEC_PATTERN.match(text)
        if match is None:
            raise InvalidArgumentError(f"cannot parse distribution {text!r}")
        name = match.group(1)
        tokens = [t.strip() for t in (match.group(2) or "").split(",") if t.strip()]
    family = _FAMILY_ALIASES.get(name.lower())
    if family is None:
        raise InvalidArgumentError(f"unknown distribution family {name!r}")

    values: dict[str, Any] = {"family": family}
    positional = _POSITIONAL[family]
    for position, token in enumerate(tokens):
        if "=" in token:
            key, _, value = token.partition("=")
            values[key.strip()] = value.strip()
        elif position < len(positional):
            values[positional[position]] = token
        else:
            raise InvalidArgumentError(f"too many arguments for {family}", text=text)
    try:
        return spec_from_mapping(values)
    except ValueError as exc:
        raise InvalidArgumentError(f"invalid distribution {text!r}: {exc}") from exc


class FixedEpsilon(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    rule: Literal["fixed"] = "fixed"
    value: PositiveFloat


class RateOptimalEpsilon(BaseModel):
    """Rate-optimal bandwidth for Holder smoothness alpha and constant c."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rule: Literal["rate-optimal"] = "rate-optimal"
    alpha: PositiveFloat
    c: PositiveFloat = 1.0


class ScaledEpsilon(BaseModel):
    """epsilon = a / n1, swept over the listed a values."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rule: Literal["scaled"] = "scaled"
    a: list[PositiveFloat] = Field(min_length=1)

    _split = field_validator("a", mode="before")(_split_numbers)


EpsilonRule = Annotated[
    FixedEpsilon | RateOptimalEpsilon | ScaledEpsilon, Field(discriminator="rule")
]

Target = Literal["q", "h", "v", "bregman", "ks-residuals", "mse-curve"]


class ExperimentConfig(BaseModel):
    """Declarative description of a Monte Carlo replication study."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "experiment"
    target: Target = "h"
    mode: SampleMode = SampleMode.CONTINUOUS
    dist_x: DistributionSpec
    dist_y: DistributionSpec | None = None
    n1: PositiveInt
    n2: int | None = Field(default=None, ge=0)
    r1: int = Field(default=2, ge=0)
    r2: int = Field(default=0, ge=0)
    s: int = Field(default=2, ge=2)
    epsilon: EpsilonRule | None = None
    n_sim: PositiveInt = 500
    seed: int = Field(default=20_100_601, ge=0, lt=2**64)
    ci_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    n_list: list[PositiveInt] | None = None
    curve_target: Literal["q", "h", "bregman"] = "bregman"

    _split = field_validator("n_list", mode="before")(_split_numbers)

    @model_validator(mode="after")
    def check_consistency(self) -> ExperimentConfig:
        specs = [self.dist_x] + ([self.dist_y] if self.dist_y is not None else [])
        for spec in specs:
            if spec.mode is not self.mode:
                raise ValueError(f"{spec.family} is not a {self.mode.value} distribution")
        if self.dist_y is not None and self.dist_y.dim != self.dist_x.dim:
            raise ValueError("dist_x and dist_y dimensions differ")

        statistic = self.curve_target if self.target == "mse-curve" else self.target
        if statistic == "v" and (self.r1, self.r2) != (1, 1):
            raise ValueError("target v needs r1 = r2 = 1")
        if statistic == "bregman" or self.r2 > 0 or self.r1 == 0:
            if self.dist_y is None:
                raise ValueError("this target needs dist_y")
        if statistic != "bregman":
            FunctionalOrder(self.r1, self.r2).require_entropy_order()

        if self.mode is SampleMode.CONTINUOUS and self.epsilon is None:
            raise ValueError("continuous experiments need an [epsilon] rule")
        if self.target == "mse-curve":
            if not self.n_list:
                raise ValueError("target mse-curve needs n_list")
        elif isinstance(self.epsilon, ScaledEpsilon) and len(self.epsilon.a) != 1:
            raise ValueError("only mse-curve sweeps several scaled a values")
        return self

    @property
    def order(self) -> FunctionalOrder:
        return FunctionalOrder(self.r1, self.r2)

    @property
    def second_size(self) -> int:
        """n2, defaulting to n1 when a second distribution is configured."""
        if self.dist_y is None:
            return 0
        return self.n1 if self.n2 is None else self.n2


class RunManifest(BaseModel):
    """Provenance record written next to every run's outputs."""

    command: str
    config: dict[str, Any]
    seed: int | None = None
    tool_version: str
    started_at: datetime
    duration_seconds: float
    outputs: list[str] = Field(default_factory=list)
