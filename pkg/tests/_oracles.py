"""Independent oracles used by the tests.

These deliberately avoid the package's own code paths: the normal CDF comes
from math.erfc, the flow-value factor from adaptive quadrature, truncated
moments from the textbook recursion, and NPV from an incremental loop.
"""

from __future__ import annotations

import math

from scipy import integrate


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def flow_value_by_quadrature(depreciation: float, discount: float, age: float) -> float:
    """Present value of one year of decaying, discounted unit flow from `age`."""

    def integrand(tau: float) -> float:
        return math.exp(-depreciation * tau - discount * (tau - age))

    value, _ = integrate.quad(integrand, age, age + 1.0, epsabs=1e-13, epsrel=1e-13)
    return value


def _phi(z: float) -> float:
    if math.isinf(z):
        return 0.0
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def truncated_std_normal_moments(a: float, b: float, order: int = 4) -> list[float]:
    """Raw moments E[Z^k | a <= Z <= b] for a standard normal, k = 0..order.

    Uses the recursion E[Z^k] = (k-1) E[Z^{k-2}] + (a^{k-1} phi(a) - b^{k-1} phi(b)) / P.
    """
    mass = normal_cdf(b) - normal_cdf(a)
    moments = [1.0, (_phi(a) - _phi(b)) / mass]
    for k in range(2, order + 1):
        term_a = 0.0 if math.isinf(a) else a ** (k - 1) * _phi(a)
        term_b = 0.0 if math.isinf(b) else b ** (k - 1) * _phi(b)
        moments.append((k - 1) * moments[k - 2] + (term_a - term_b) / mass)
    return moments


def truncated_normal_mean_var(sigma: float, lower: float, upper: float) -> tuple[float, float]:
    """Mean and variance of N(0, sigma^2) conditioned on [lower, upper]."""
    m = truncated_std_normal_moments(lower / sigma, upper / sigma, order=2)
    mean = sigma * m[1]
    var = sigma**2 * (m[2] - m[1] ** 2)
    return mean, var


def truncated_lognormal_mean(index: float, sigma: float, lower: float, upper: float) -> float:
    """E[exp(index + eps)] for eps ~ N(0, sigma^2) restricted to [lower, upper]."""
    a, b = lower / sigma, upper / sigma
    mass = normal_cdf(b) - normal_cdf(a)
    shifted = normal_cdf(b - sigma) - normal_cdf(a - sigma)
    return math.exp(index + 0.5 * sigma**2) * shifted / mass


def npv_incremental(r0, depreciation, schedule, config, expiry_age) -> float:
    """NPV accumulated year by year (checks the closed summation)."""
    total = 0.0
    rate = 1.0 + config.discount_rate
    for t in range(1, expiry_age + 1):
        flow = r0 * math.exp(-depreciation * t)
        cost = schedule.cost_at(t)
        if config.discount_costs_only:
            total += flow - cost * rate**-t
        else:
            total += (flow - cost) * rate**-t
    return total
