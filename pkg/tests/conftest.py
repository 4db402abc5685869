from __future__ import annotations

import numpy as np
import pytest

import patent_rent as pr

#: Generating parameters for the recovery fixtures (test values, nothing more).
OMEGA_STAR = dict(
    sigma=1.5,
    depreciation=0.30,
    beta={
        "intercept": 6.0,
        "chemical": -0.5,
        "mechanical": 0.4,
        "electrical": 0.6,
        "instruments": -0.1,
        "family_size": 0.10,
        "inventor_size": 0.08,
        "grant_lag": -0.20,
        "tech_scope": 0.30,
    },
)

#: Published point estimates wired in as a stress fixture: heavy noise scale,
#: fast depreciation, zero intercept.
PUBLISHED_PARAMS = dict(
    sigma=6.07,
    depreciation=0.49,
    beta={
        "intercept": 0.0,
        "chemical": -2.04,
        "mechanical": 1.81,
        "electrical": 2.45,
        "instruments": -0.40,
        "family_size": 0.37,
        "inventor_size": 0.21,
        "grant_lag": -1.47,
        "tech_scope": 0.78,
    },
)


@pytest.fixture(scope="session")
def india():
    return pr.builtin_schedule("india")


@pytest.fixture(scope="session")
def config():
    return pr.ModelConfig()


@pytest.fixture(scope="session")
def omega_star():
    return pr.ModelParams(**OMEGA_STAR)


@pytest.fixture(scope="session")
def published_params():
    return pr.ModelParams(**PUBLISHED_PARAMS)


@pytest.fixture(scope="session")
def mean_covariates():
    return pr.CovariateVector(
        family_size=3, inventor_size=2, grant_lag=7.25, tech_scope=1, tech_field="chemical"
    )


@pytest.fixture(scope="session")
def recovery_records(omega_star, india, config):
    return pr.generate_synthetic(omega_star, 5000, india, config, seed=42)


@pytest.fixture(scope="session")
def recovery_estimate(recovery_records, india, config):
    """One full acceptance-scale fit, shared by the slow tests."""
    ga = pr.GaConfig(seed=101, population_size=2000, generations=20, starts=3)
    return pr.estimate(recovery_records, india, config, ga)


def random_params(rng: np.random.Generator) -> pr.ModelParams:
    beta = {
        "intercept": rng.uniform(-5, 8),
        "chemical": rng.uniform(-3, 3),
        "mechanical": rng.uniform(-3, 3),
        "electrical": rng.uniform(-3, 3),
        "instruments": rng.uniform(-3, 3),
        "family_size": rng.uniform(0.01, 1.0),
        "inventor_size": rng.uniform(0.01, 1.0),
        "grant_lag": rng.uniform(-1.5, -0.01),
        "tech_scope": rng.uniform(0.01, 1.5),
    }
    return pr.ModelParams(
        sigma=rng.uniform(0.3, 8.0), depreciation=rng.uniform(0.12, 0.6), beta=beta
    )


def random_covariates(rng: np.random.Generator) -> pr.CovariateVector:
    return pr.CovariateVector(
        family_size=int(rng.integers(0, 12)),
        inventor_size=int(rng.integers(1, 9)),
        grant_lag=float(rng.uniform(0, 15)),
        tech_scope=int(rng.integers(1, 5)),
        tech_field=str(rng.choice(pr.TECH_FIELDS)),
        ownership=str(rng.choice(pr.OWNERSHIP_KINDS)),
    )
