"""Monte Carlo valuation: shock sampling conditional on the observed renewal
decision, depreciated return paths, net present value, and elite-ensemble
uncertainty."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError, EnsembleError, ModelValidityError, SamplingError
from .fees import FeeSchedule
from .likelihood import threshold_ladder
from .model import CovariateVector, ModelConfig, ModelParams, linear_index

#: Reported quantile grid for simulated initial returns; capped at 99% because
#: the open upper tail of full-term patents is too heavy for stable extremes.
R0_QUANTILES = (0.05, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99)


@dataclass(frozen=True)
class ShockInterval:
    """Admissible interval for the log-return shock given an observed expiry age."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise DomainError("interval endpoints must not be NaN")
        if self.lower > self.upper:
            raise ModelValidityError(
                f"shock interval is empty: [{self.lower}, {self.upper}] "
                "(decreasing renewal cutoffs?)"
            )
        if math.isinf(self.lower) and math.isinf(self.upper):
            raise DomainError("at least one interval endpoint must be finite")


@dataclass(frozen=True)
class ValueEstimate:
    """Simulated value summary for one patent."""

    patent_id: str
    tech_field: str
    ownership: str
    expiry_age: int
    r0_mean: float
    r0_mean_se: float | None
    r0_median: float
    r0_quantiles: dict[float, float]
    mean_log_r0: float
    npv_mean: float
    npv_median: float
    draws_used: int
    degenerate: bool = False
    ensemble_log_r0: float | None = None
    ensemble_log_r0_median: float | None = None
    ensemble_band: tuple[float, float] | None = None
    ensemble_used: int | None = None
    ensemble_skipped: int | None = None


@dataclass(frozen=True)
class EnsembleSummary:
    """Cross-member spread of one patent's predicted log initial return."""

    log_r0_mean: float
    log_r0_median: float
    band: tuple[float, float]
    member_log_r0: np.ndarray
    used: int
    skipped: int


def shock_bounds(
    params: ModelParams,
    x: CovariateVector,
    expiry_age: int,
    schedule: FeeSchedule,
    config: ModelConfig,
) -> ShockInterval:
    """Interval the shock must have fallen in for the patent to expire at
    `expiry_age`: expiring early caps it, surviving long floors it."""
    if not config.min_age <= expiry_age <= config.max_term:
        raise DomainError(
            f"expiry age {expiry_age} outside [{config.min_age}, {config.max_term}]"
        )
    ladder = threshold_ladder(schedule, params.depreciation, config)
    index = linear_index(params.beta, x, config.covariate_transform)
    slot = expiry_age - config.min_age
    lower = -math.inf if expiry_age == config.min_age else ladder.values[slot - 1] - index
    upper = math.inf if expiry_age == config.max_term else ladder.values[slot] - index
    return ShockInterval(lower=lower, upper=upper)


def _as_bounds(interval) -> tuple[float, float]:
    if isinstance(interval, ShockInterval):
        return interval.lower, interval.upper
    lower, upper = interval
    if math.isnan(lower) or math.isnan(upper) or lower > upper:
        raise DomainError(f"invalid interval [{lower}, {upper}]")
    return float(lower), float(upper)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        raise DomainError("pass an integer or SeedSequence where child seeds are derived")
    return np.random.SeedSequence(seed)


def sample_truncated_normal(sigma: float, interval, n: int, seed) -> np.ndarray:
    """Draws from a centered normal with scale `sigma` conditioned on `interval`.

    Inverse-CDF sampling on the mapped uniform range.  Intervals lying
    entirely in the upper tail are mirrored into the lower tail first, where
    the CDF is well resolved, so far-tail conditioning stays accurate.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if n < 1:
        raise DomainError(f"need at least one draw, got n={n}")
    lower, upper = _as_bounds(interval)

    a, b = lower / sigma, upper / sigma
    flip = a > 0
    if flip:
        a, b = -b, -a
    cdf_lo, cdf_hi = float(ndtr(a)), float(ndtr(b))
    if not cdf_hi > cdf_lo:
        raise SamplingError(
            f"interval [{lower}, {upper}] has no representable probability mass "
            f"at sigma={sigma}"
        )
    u = _rng(seed).uniform(cdf_lo, cdf_hi, size=n)
    # u exactly 0 would map to -inf when the interval is unbounded below
    np.fmax(u, np.finfo(float).tiny, out=u)
    z = ndtri(u)
    if flip:
        z = -z
    return sigma * z


def _clamped_mode(lower: float, upper: float) -> float:
    """Where the conditional law collapses in the zero-variance limit."""
    return min(max(0.0, lower), upper)


def net_present_value(
    r0: float,
    depreciation: float,
    schedule: FeeSchedule,
    config: ModelConfig,
    expiry_age: int,
) -> float:
    """Discounted net cash flow of holding the patent through `expiry_age`.

    By default the net flow (return minus fee) is discounted each year; with
    ``config.discount_costs_only`` only the fee leg is discounted.
    """
    if r0 < 0:
        raise DomainError(f"initial return must be >= 0, got {r0}")
    if depreciation < 0:
        raise DomainError(f"depreciation must be >= 0, got {depreciation}")
    if not 1 <= expiry_age <= config.max_term:
        raise DomainError(f"expiry age {expiry_age} outside [1, {config.max_term}]")
    rate = 1.0 + config.discount_rate
    total = 0.0
    for t in range(1, expiry_age + 1):
        flow = r0 * math.exp(-depreciation * t)
        cost = schedule.cost_at(t)
        if config.discount_costs_only:
            total += flow - cost * rate**-t
        else:
            total += (flow - cost) * rate**-t
    return total


def _npv_affine(
    depreciation: float, schedule: FeeSchedule, config: ModelConfig, expiry_age: int
) -> tuple[float, float]:
    """NPV as slope * r0 + intercept; the sum is exactly affine in r0."""
    intercept = net_present_value(0.0, depreciation, schedule, config, expiry_age)
    slope = net_present_value(1.0, depreciation, schedule, config, expiry_age) - intercept
    return slope, intercept


def simulate_initial_return(
    params: ModelParams,
    record,
    schedule: FeeSchedule,
    config: ModelConfig,
    n_draws: int = 10_000,
    seed=0,
) -> ValueEstimate:
    """Simulate the initial return of one patent conditional on its expiry age.

    Draws shocks from the truncated law, exponentiates onto the money scale
    and summarizes both the initial return and its net present value (which
    is an exact affine map of the return, so its summaries are too).  When
    the interval's mass underflows at working precision the draw collapses to
    the zero-variance limit and the estimate is flagged degenerate.
    """
    x = record.covariates
    interval = shock_bounds(params, x, record.expiry_age, schedule, config)
    index = linear_index(params.beta, x, config.covariate_transform)

    degenerate = False
    try:
        eps = sample_truncated_normal(params.sigma, interval, n_draws, seed)
    except SamplingError:
        eps = np.full(n_draws, _clamped_mode(interval.lower, interval.upper))
        degenerate = True

    log_r0 = index + eps
    r0 = np.exp(log_r0)

    r0_mean = float(r0.mean())
    r0_se = float(r0.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else None
    quantiles = np.quantile(r0, R0_QUANTILES)
    slope, intercept = _npv_affine(params.depreciation, schedule, config, record.expiry_age)

    return ValueEstimate(
        patent_id=record.patent_id,
        tech_field=x.tech_field,
        ownership=x.ownership,
        expiry_age=record.expiry_age,
        r0_mean=r0_mean,
        r0_mean_se=r0_se,
        r0_median=float(np.quantile(r0, 0.5)),
        r0_quantiles={q: float(v) for q, v in zip(R0_QUANTILES, quantiles)},
        mean_log_r0=float(log_r0.mean()),
        npv_mean=slope * r0_mean + intercept,
        npv_median=slope * float(np.quantile(r0, 0.5)) + intercept,
        draws_used=n_draws,
        degenerate=degenerate,
    )


def ensemble_value(
    elite: Sequence[ModelParams],
    record,
    schedule: FeeSchedule,
    config: ModelConfig,
    n_draws: int = 500,
    seed=0,
) -> EnsembleSummary:
    """Predict one patent's log initial return under every elite parameter set.

    Each member contributes the mean simulated log return under its own
    parameters (member-derived seeds keep the result independent of
    evaluation order); the band is the central 90% across members.  Members
    whose truncation interval is empty are skipped, up to a 10% budget.
    """
    if not elite:
        raise DomainError("elite parameter list is empty")
    children = _seed_sequence(seed).spawn(len(elite))
    x = record.covariates

    values = []
    skipped = 0
    for member, child in zip(elite, children):
        try:
            interval = shock_bounds(member, x, record.expiry_age, schedule, config)
        except ModelValidityError:
            skipped += 1
            continue
        index = linear_index(member.beta, x, config.covariate_transform)
        try:
            eps_mean = float(
                sample_truncated_normal(member.sigma, interval, n_draws, child).mean()
            )
        except SamplingError:
            eps_mean = _clamped_mode(interval.lower, interval.upper)
        values.append(index + eps_mean)

    if skipped > 0.10 * len(elite):
        raise EnsembleError(
            f"{skipped} of {len(elite)} ensemble members had empty truncation "
            f"intervals for patent {record.patent_id!r}"
        )
    member_log_r0 = np.array(values)
    band = (float(np.quantile(member_log_r0, 0.05)), float(np.quantile(member_log_r0, 0.95)))
    return EnsembleSummary(
        log_r0_mean=float(member_log_r0.mean()),
        log_r0_median=float(np.median(member_log_r0)),
        band=band,
        member_log_r0=member_log_r0,
        used=len(values),
        skipped=skipped,
    )


def apply_ensemble(estimate: ValueEstimate, summary: EnsembleSummary) -> ValueEstimate:
    """Attach ensemble fields to a point-estimate ValueEstimate."""
    return replace(
        estimate,
        ensemble_log_r0=summary.log_r0_mean,
        ensemble_log_r0_median=summary.log_r0_median,
        ensemble_band=summary.band,
        ensemble_used=summary.used,
        ensemble_skipped=summary.skipped,
    )
