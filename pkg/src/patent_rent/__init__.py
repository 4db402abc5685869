"""Renewal-based private valuation of patents.

Fits a censored-lognormal initial-return model to patent renewal records with
a bounded genetic search, then simulates per-patent returns, net present
values, and ensemble uncertainty bands.
"""

__version__ = "0.1.0"

from .data import (
    CovariateSpec,
    DescriptiveStats,
    IngestReport,
    PatentRecord,
    descriptive_stats,
    generate_synthetic,
    parse_records,
    serialize_records,
)
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    DomainError,
    EnsembleError,
    Error,
    ModelValidityError,
    ModelValidityWarning,
    ReportingError,
    SamplingError,
    ValidationError,
)
from .estimator import (
    EstimationResult,
    GaConfig,
    ParamBounds,
    estimate,
    profile_refine,
    result_from_dict,
    result_to_dict,
)
from .fees import FeeSchedule, builtin_schedule, load_schedule, serialize_schedule
from .likelihood import (
    ExpiryDistribution,
    LikelihoodEvaluator,
    ThresholdLadder,
    classify_expiry_ages,
    expiry_pmf,
    log_likelihood,
    threshold_ladder,
)
from .model import (
    BETA_NAMES,
    OWNERSHIP_KINDS,
    PARAM_NAMES,
    TECH_FIELDS,
    CovariateVector,
    ModelConfig,
    ModelParams,
    design_row,
    linear_index,
    present_value_factor,
    renewal_threshold,
    return_at_age,
)
from .reports import (
    ExpiryShareTable,
    GroupedValueTable,
    QuantileTable,
    age_value_trend,
    expiry_share_table,
    quantile_table,
    value_by_group,
)
from .simulate import (
    EnsembleSummary,
    ShockInterval,
    ValueEstimate,
    apply_ensemble,
    ensemble_value,
    net_present_value,
    sample_truncated_normal,
    shock_bounds,
    simulate_initial_return,
)

__all__ = [name for name in dir() if not name.startswith("_")]
