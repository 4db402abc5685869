"""Expiry-age distribution implied by the renewal rule, and the sample
log-likelihood used by the estimator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import (
    ConfigurationError,
    DomainError,
    ModelValidityWarning,
)
from .fees import FeeSchedule
from .model import (
    BETA_NAMES,
    CovariateVector,
    ModelConfig,
    ModelParams,
    design_row,
    linear_index,
    present_value_factor,
)

#: Per-record probabilities are clamped to this floor before the log so a bad
#: parameter region scores very poorly instead of -inf.
PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class ThresholdLadder:
    """Effective renewal cutoffs for every model age, for one (schedule, decay).

    ``values[i]`` is the log fee-to-value cutoff a patent must clear to stay
    alive past ``ages[i]``.  Ages that charge no fee inherit a neighbouring
    cutoff so that no probability mass can sit on them; ``decision_ages``
    records where a real fee decision exists.
    """

    ages: tuple[int, ...]
    values: np.ndarray
    decision_ages: tuple[int, ...]
    monotone: bool

    @property
    def min_age(self) -> int:
        return self.ages[0]


@lru_cache(maxsize=16384)
def _ladder_cached(
    schedule: FeeSchedule,
    depreciation: float,
    discount: float,
    min_age: int,
    max_term: int,
    policy: str,
) -> ThresholdLadder:
    ages = tuple(range(min_age, max_term))
    decision_ages = tuple(t for t in ages if schedule.cost_at(t) > 0)
    if not decision_ages:
        raise ConfigurationError(
            f"schedule {schedule.name!r} charges no fee at any age in "
            f"[{min_age}, {max_term - 1}]; the renewal model is vacuous"
        )
    first = decision_ages[0]
    first_cost = schedule.cost_at(first)

    values = np.empty(len(ages))
    for i, t in enumerate(ages):
        cost = schedule.cost_at(t)
        if cost > 0:
            values[i] = math.log(cost / present_value_factor(depreciation, discount, t))
        elif t < first:
            if policy == "shadow_fee":
                values[i] = math.log(
                    first_cost / present_value_factor(depreciation, discount, t)
                )
            else:
                values[i] = math.log(
                    first_cost / present_value_factor(depreciation, discount, first)
                )
        else:
            # no fee due here: nobody can lapse, carry the previous cutoff
            values[i] = values[i - 1]
    values.setflags(write=False)

    monotone = bool(np.all(np.diff(values) >= 0))
    if not monotone:
        warnings.warn(
            f"renewal cutoffs for schedule {schedule.name!r} decrease somewhere; "
            "the expiry distribution may have negative entries",
            ModelValidityWarning,
            stacklevel=3,
        )
    return ThresholdLadder(ages=ages, values=values, decision_ages=decision_ages, monotone=monotone)


def threshold_ladder(
    schedule: FeeSchedule, depreciation: float, config: ModelConfig
) -> ThresholdLadder:
    """Cutoff ladder for `schedule` at a given decay rate.

    Cached keyed on the decay rate rounded to 12 significant digits.
    """
    if not depreciation > 0:
        raise DomainError(f"depreciation must be > 0, got {depreciation}")
    key = float(f"{depreciation:.12g}")
    return _ladder_cached(
        schedule,
        key,
        config.discount_rate,
        config.min_age,
        config.max_term,
        config.never_renewed_policy,
    )


@dataclass(frozen=True)
class ExpiryDistribution:
    """Probability of each expiry age in {min_age, ..., max_term}."""

    ages: tuple[int, ...]
    probs: np.ndarray
    thresholds_monotone: bool

    def prob_of(self, expiry_age: int) -> float:
        return float(self.probs[self.ages.index(expiry_age)])


def expiry_pmf(
    params: ModelParams,
    x: CovariateVector,
    schedule: FeeSchedule,
    config: ModelConfig,
) -> ExpiryDistribution:
    """Distribution of the expiry age for a patent with covariates `x`.

    Interval probabilities of a normal log initial return between successive
    cutoffs; the vector telescopes to 1.  If the ladder is not monotone the
    raw (possibly negative) entries are returned and flagged rather than
    clipped.
    """
    ladder = threshold_ladder(schedule, params.depreciation, config)
    index = linear_index(params.beta, x, config.covariate_transform)
    cdf = ndtr((ladder.values - index) / params.sigma)

    probs = np.empty(len(ladder.values) + 1)
    probs[0] = cdf[0]
    probs[1:-1] = np.diff(cdf)
    probs[-1] = 1.0 - cdf[-1]
    ages = tuple(range(config.min_age, config.max_term + 1))
    return ExpiryDistribution(ages=ages, probs=probs, thresholds_monotone=ladder.monotone)


def classify_expiry_ages(log_returns, ladder: ThresholdLadder) -> np.ndarray:
    """Expiry age implied by each log initial return under the renewal rule.

    A patent lapses at the first age whose cutoff exceeds its log return;
    below the first cutoff it is never renewed, above the last it runs full
    term.
    """
    log_returns = np.asarray(log_returns, dtype=float)
    return ladder.min_age + np.searchsorted(ladder.values, log_returns, side="right")


class LikelihoodEvaluator:
    """Precomputed design for evaluating many candidate parameter vectors.

    Builds the regression matrix and expiry-age indices once; each call is
    then two normal-CDF passes over the sample.  Per-record terms are summed
    with numpy's pairwise reduction, so results do not depend on how the work
    is scheduled.
    """

    def __init__(self, records: Sequence, schedule: FeeSchedule, config: ModelConfig):
        if not records:
            raise DomainError("record list is empty")
        self.schedule = schedule
        self.config = config
        self.n_records = len(records)

        X = np.empty((len(records), len(BETA_NAMES)))
        expiry = np.empty(len(records), dtype=np.int64)
        for i, rec in enumerate(records):
            X[i] = design_row(rec.covariates, config.covariate_transform)
            expiry[i] = rec.expiry_age
        bad = (expiry < config.min_age) | (expiry > config.max_term)
        if np.any(bad):
            raise DomainError(
                f"{int(bad.sum())} record(s) have expiry ages outside "
                f"[{config.min_age}, {config.max_term}]"
            )
        self._X = X
        self._slot = expiry - config.min_age  # index into the extended ladders

    def _extended_ladders(self, depreciation: float) -> tuple[np.ndarray, np.ndarray]:
        ladder = threshold_ladder(self.schedule, depreciation, self.config)
        lower = np.concatenate(([-np.inf], ladder.values))
        upper = np.concatenate((ladder.values, [np.inf]))
        return lower, upper

    def log_likelihood_vector(self, vec) -> float:
        """Sample log-likelihood of a raw parameter vector (PARAM_NAMES order)."""
        vec = np.asarray(vec, dtype=float)
        sigma, depreciation = vec[0], vec[1]
        if not sigma > 0:
            raise DomainError(f"sigma must be > 0, got {sigma}")
        lower, upper = self._extended_ladders(depreciation)
        index = self._X @ vec[2:]
        p = ndtr((upper[self._slot] - index) / sigma) - ndtr((lower[self._slot] - index) / sigma)
        return float(np.sum(np.log(np.maximum(p, PROB_FLOOR))))

    def log_likelihood(self, params: ModelParams) -> float:
        return self.log_likelihood_vector(params.as_vector())


def log_likelihood(
    params: ModelParams,
    records: Sequence,
    schedule: FeeSchedule,
    config: ModelConfig,
) -> float:
    """Sample log-likelihood of the observed expiry ages; larger is better."""
    return LikelihoodEvaluator(records, schedule, config).log_likelihood(params)
