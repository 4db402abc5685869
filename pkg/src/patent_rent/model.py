"""Core renewal mathematics: depreciation, discounting, decision thresholds,
and the covariate index of log initial returns."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DomainError
from .fees import FeeSchedule

TECH_FIELDS = ("chemical", "mechanical", "electrical", "instruments", "others")
OWNERSHIP_KINDS = ("domestic", "foreign_subsidiary")

#: Coefficient order used wherever a coefficient vector appears.  "others" is
#: the reference technology category and has no dummy of its own.
BETA_NAMES = (
    "intercept",
    "chemical",
    "mechanical",
    "electrical",
    "instruments",
    "family_size",
    "inventor_size",
    "grant_lag",
    "tech_scope",
)

#: Full parameter order for estimation: noise scale, decay rate, coefficients.
PARAM_NAMES = ("sigma", "depreciation") + BETA_NAMES

#: How the "never renewed" outcome is anchored when the schedule charges no
#: fee at the earliest model age:
#:   first_fee_age — the earliest cutoff equals the one at the first
#:                   fee-bearing age (ages in between carry zero mass);
#:   shadow_fee    — ages before the first fee-bearing age are priced at the
#:                   first positive fee level, giving them their own cutoffs.
NEVER_RENEWED_POLICIES = ("first_fee_age", "shadow_fee")

_NUMERIC_COVARIATES = ("family_size", "inventor_size", "grant_lag", "tech_scope")


@dataclass(frozen=True)
class ModelConfig:
    """Fixed model constants and policy switches."""

    discount_rate: float = 0.10
    max_term: int = 20
    min_age: int = 2
    never_renewed_policy: str = "first_fee_age"
    #: Discount only the fee leg of the NPV sum instead of the net flow.
    discount_costs_only: bool = False
    #: Optional per-covariate affine map ``name -> (scale, offset)`` for
    #: sensitivity runs; covariates enter untransformed by default.
    covariate_transform: Mapping[str, tuple[float, float]] | None = None

    def __post_init__(self):
        if not 0.0 < self.discount_rate < 1.0:
            raise DomainError(f"discount_rate must lie in (0, 1), got {self.discount_rate}")
        if not 1 <= self.min_age < self.max_term:
            raise DomainError(
                f"need 1 <= min_age < max_term, got min_age={self.min_age}, max_term={self.max_term}"
            )
        if self.never_renewed_policy not in NEVER_RENEWED_POLICIES:
            raise DomainError(
                f"unknown never_renewed_policy {self.never_renewed_policy!r}; "
                f"expected one of {NEVER_RENEWED_POLICIES}"
            )
        if self.covariate_transform:
            bad = set(self.covariate_transform) - set(_NUMERIC_COVARIATES)
            if bad:
                raise DomainError(f"covariate_transform names unknown covariates: {sorted(bad)}")


@dataclass(frozen=True)
class CovariateVector:
    """Observable characteristics of one patent.

    Ownership is reporting metadata only; it never enters the regression.
    """

    family_size: int
    inventor_size: int
    grant_lag: float
    tech_scope: int
    tech_field: str
    ownership: str = "domestic"

    def __post_init__(self):
        problems = []
        if self.family_size < 0:
            problems.append(f"family_size must be >= 0, got {self.family_size}")
        if self.inventor_size < 1:
            problems.append(f"inventor_size must be >= 1, got {self.inventor_size}")
        if not (math.isfinite(self.grant_lag) and self.grant_lag >= 0):
            problems.append(f"grant_lag must be finite and >= 0, got {self.grant_lag}")
        if self.tech_scope < 1:
            problems.append(f"tech_scope must be >= 1, got {self.tech_scope}")
        if self.tech_field not in TECH_FIELDS:
            problems.append(f"tech_field {self.tech_field!r} not one of {TECH_FIELDS}")
        if self.ownership not in OWNERSHIP_KINDS:
            problems.append(f"ownership {self.ownership!r} not one of {OWNERSHIP_KINDS}")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass(frozen=True)
class ModelParams:
    """The estimand: noise scale, depreciation rate and named coefficients."""

    sigma: float
    depreciation: float
    beta: Mapping[str, float]

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be finite and > 0, got {self.sigma}")
        if not (math.isfinite(self.depreciation) and self.depreciation > 0):
            raise DomainError(f"depreciation must be finite and > 0, got {self.depreciation}")
        beta = dict(self.beta)
        if set(beta) != set(BETA_NAMES):
            missing = sorted(set(BETA_NAMES) - set(beta))
            extra = sorted(set(beta) - set(BETA_NAMES))
            raise DomainError(
                f"beta must have exactly the named entries {BETA_NAMES}; "
                f"missing={missing}, unexpected={extra}"
            )
        for name, value in beta.items():
            if not math.isfinite(value):
                raise DomainError(f"beta[{name!r}] is not finite: {value}")
        object.__setattr__(self, "beta", beta)

    def as_vector(self) -> np.ndarray:
        """Parameter values in PARAM_NAMES order."""
        return np.array(
            [self.sigma, self.depreciation] + [self.beta[n] for n in BETA_NAMES], dtype=float
        )

    @classmethod
    def from_vector(cls, vec) -> "ModelParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(PARAM_NAMES),):
            raise DomainError(f"parameter vector must have length {len(PARAM_NAMES)}")
        beta = {name: float(v) for name, v in zip(BETA_NAMES, vec[2:])}
        return cls(sigma=float(vec[0]), depreciation=float(vec[1]), beta=beta)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "depreciation": self.depreciation,
            "beta": dict(self.beta),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelParams":
        try:
            return cls(
                sigma=float(d["sigma"]),
                depreciation=float(d["depreciation"]),
                beta={k: float(v) for k, v in dict(d["beta"]).items()},
            )
        except KeyError as exc:
            raise DomainError(f"parameter document is missing key {exc}") from None


def present_value_factor(depreciation: float, discount: float, age: float) -> float:
    """Present value, per unit of initial return, of the profit flow earned
    between `age` and `age + 1`.

    Strictly positive, strictly decreasing in age, and separable: the value at
    age t equals exp(-depreciation * t) times the value at age 0.
    """
    if not (math.isfinite(depreciation) and depreciation > 0):
        raise DomainError(f"depreciation must be > 0, got {depreciation}")
    if not (math.isfinite(discount) and discount > 0):
        raise DomainError(f"discount must be > 0, got {discount}")
    if age < 0:
        raise DomainError(f"age must be >= 0, got {age}")
    rate = depreciation + discount
    # -expm1 keeps (1 - e^-x)/x accurate as the combined rate approaches zero
    return math.exp(-depreciation * age) * (-math.expm1(-rate)) / rate


def renewal_threshold(
    schedule: FeeSchedule, depreciation: float, config: ModelConfig, age: int
) -> float:
    """Minimum log initial return that rationalizes paying the fee at `age`.

    Defined only at fee-bearing decision ages inside the model window.
    """
    if not config.min_age <= age < config.max_term:
        raise DomainError(
            f"decision age {age} outside [{config.min_age}, {config.max_term - 1}]"
        )
    cost = schedule.cost_at(age)
    if cost <= 0:
        raise ConfigurationError(
            f"schedule {schedule.name!r} charges no fee at age {age}; the renewal "
            "cutoff is undefined there"
        )
    return math.log(cost / present_value_factor(depreciation, config.discount_rate, age))


def transformed_covariate(
    name: str, value: float, transform: Mapping[str, tuple[float, float]] | None
) -> float:
    if transform and name in transform:
        scale, offset = transform[name]
        return scale * value + offset
    return float(value)


def linear_index(
    beta: Mapping[str, float],
    x: CovariateVector,
    transform: Mapping[str, tuple[float, float]] | None = None,
) -> float:
    """Value of the log initial-return regression at covariates `x`.

    The reference technology category contributes nothing beyond the intercept.
    """
    total = beta["intercept"]
    if x.tech_field != "others":
        total += beta[x.tech_field]
    for name in _NUMERIC_COVARIATES:
        total += beta[name] * transformed_covariate(name, getattr(x, name), transform)
    return total


def design_row(
    x: CovariateVector, transform: Mapping[str, tuple[float, float]] | None = None
) -> np.ndarray:
    """Regression row for `x`, aligned with BETA_NAMES."""
    row = np.zeros(len(BETA_NAMES))
    row[0] = 1.0
    if x.tech_field != "others":
        row[BETA_NAMES.index(x.tech_field)] = 1.0
    for name in _NUMERIC_COVARIATES:
        row[BETA_NAMES.index(name)] = transformed_covariate(name, getattr(x, name), transform)
    return row


def return_at_age(r0: float, depreciation: float, age: float) -> float:
    """Profit flow at `age` under constant exponential decay of the initial return."""
    if r0 < 0:
        raise DomainError(f"initial return must be >= 0, got {r0}")
    if age < 0:
        raise DomainError(f"age must be >= 0, got {age}")
    return r0 * math.exp(-depreciation * age)
