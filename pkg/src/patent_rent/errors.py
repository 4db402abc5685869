"""Exception and warning types shared across the package."""


class Error(Exception):
    """Base class for all package errors."""


class DomainError(Error, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(Error, ValueError):
    """Input data or a configuration document failed validation.

    ``problems`` lists every violation found, not just the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ConfigurationError(Error):
    """A structurally valid configuration the model cannot work with."""


class DegenerateDataError(Error):
    """The sample carries no information about one or more parameters."""


class ModelValidityError(Error):
    """A parameter/schedule combination violates a model assumption."""


class SamplingError(Error):
    """A truncation interval has no representable probability mass."""


class EnsembleError(Error):
    """Too many ensemble members were unusable."""


class ReportingError(Error):
    """A report was requested over inconsistent inputs."""


class ModelValidityWarning(UserWarning):
    """Non-fatal model-assumption violation (e.g. decreasing renewal thresholds)."""
