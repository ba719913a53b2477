"""Closed-form one-gauge fidelity certificates and finite-shot arithmetic.

Given the n generator expectations of a single gauge, the optimal worst-case
fidelity interval has closed-form endpoints: the lower endpoint is
max{0, 1 - (1/2) sum(1 - mu_i)} and the upper endpoint is
1/2 + (1/2) min(mu_i).  With finite sampling, a Hoeffding radius with a union
bound over the n generators turns the empirical upper endpoint into a
confidence certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from stabcert.gf2 import Gauge, Label, invert_columns, apply_transpose
from stabcert.syndrome import SyndromeDistribution

__all__ = [
    "GaugeExpectations",
    "OneGaugeCertificate",
    "mu_to_success",
    "success_to_mu",
    "kkl_lower",
    "kkl_upper",
    "empirical_upper",
    "epsilon_from_shots",
    "shots_per_generator",
    "clipped_upper_certificate",
    "one_gauge_certificate",
    "confidence_interval",
    "nested_syndrome_witness",
]

_MU_ATOL = 1e-9


def _check_mu(mu: Sequence[float]) -> list[float]:
    vals = [float(x) for x in mu]
    if not vals:
        raise ValueError("need at least one expectation value")
    for x in vals:
        if abs(x) > 1.0 + _MU_ATOL:
            raise ValueError(f"expectation {x!r} outside [-1, 1]")
    return [min(1.0, max(-1.0, x)) for x in vals]


def mu_to_success(mu: float) -> float:
    """Success probability a = (1 + mu) / 2 of a +-1 observable."""
    return (1.0 + mu) / 2.0


def success_to_mu(a: float) -> float:
    """Expectation mu = 2a - 1 from a success probability."""
    return 2.0 * a - 1.0


def kkl_lower(mu: Sequence[float]) -> float:
    """Optimal one-gauge lower certificate max{0, 1 - (1/2) sum(1 - mu_i)}."""
    vals = _check_mu(mu)
    return max(0.0, 1.0 - 0.5 * sum(1.0 - x for x in vals))


def kkl_upper(mu: Sequence[float]) -> float:
    """Companion one-gauge upper certificate 1/2 + (1/2) min(mu_i)."""
    vals = _check_mu(mu)
    return 0.5 + 0.5 * min(vals)


def empirical_upper(a_hat: Sequence[float]) -> float:
    """Empirical upper endpoint: the smallest per-generator success rate."""
    vals = [float(x) for x in a_hat]
    if not vals:
        raise ValueError("need at least one success rate")
    for x in vals:
        if not -_MU_ATOL <= x <= 1.0 + _MU_ATOL:
            raise ValueError(f"success rate {x!r} outside [0, 1]")
    return min(1.0, max(0.0, min(vals)))


def epsilon_from_shots(m: float, n: int, delta: float) -> float:
    """Hoeffding slack sqrt(ln(2n/delta) / (2m)) for m shots per generator."""
    if not m > 0:
        raise ValueError(f"m must be positive, got {m!r}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0,1), got {delta!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    return math.sqrt(math.log(2.0 * n / delta) / (2.0 * m))


def shots_per_generator(epsilon: float, n: int, delta: float) -> int:
    """Smallest integer m with epsilon_from_shots(m, n, delta) <= epsilon."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0,1), got {delta!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    return math.ceil(math.log(2.0 * n / delta) / (2.0 * epsilon**2))


def clipped_upper_certificate(u_hat: float, epsilon: float) -> float:
    """Confidence upper endpoint min{1, u_hat + epsilon}."""
    if not -_MU_ATOL <= u_hat <= 1.0 + _MU_ATOL:
        raise ValueError(f"u_hat {u_hat!r} outside [0, 1]")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    return min(1.0, u_hat + epsilon)


@dataclass(frozen=True)
class GaugeExpectations:
    """Generator expectations mu_i measured in one gauge."""

    gauge: Gauge
    mu: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = _check_mu(self.mu)
        if len(vals) != self.gauge.n:
            raise ValueError(
                f"need {self.gauge.n} expectations, got {len(vals)}"
            )
        object.__setattr__(self, "mu", tuple(vals))


@dataclass(frozen=True)
class OneGaugeCertificate:
    """A certified fidelity interval from a single gauge."""

    lower: float
    upper: float
    empirical: bool = False
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper + 1e-12 <= 1.0 + 1e-12):
            raise ValueError(
                f"invalid certificate [{self.lower!r}, {self.upper!r}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


def one_gauge_certificate(mu: Sequence[float]) -> OneGaugeCertificate:
    """Exact-expectation certificate: closed-form lower and upper endpoints."""
    return OneGaugeCertificate(kkl_lower(mu), kkl_upper(mu))


def confidence_interval(
    mu_hat: Sequence[float], m: float, delta: float
) -> OneGaugeCertificate:
    """Finite-shot certificate from empirical expectations.

    With probability at least 1 - delta, every per-generator estimate is
    within eps = epsilon_from_shots(m, n, delta) of its mean, so the interval
    [max{0, 1 - (1/2) sum(1 - mu_hat_i) - n eps/2}, min{1, min a_hat_i + eps}]
    contains the true fidelity.
    """
    vals = _check_mu(mu_hat)
    n = len(vals)
    eps = epsilon_from_shots(m, n, delta)
    lower = max(0.0, 1.0 - 0.5 * sum(1.0 - x for x in vals) - n * eps / 2.0)
    u_hat = empirical_upper([mu_to_success(x) for x in vals])
    upper = clipped_upper_certificate(u_hat, eps)
    return OneGaugeCertificate(lower, min(1.0, upper), empirical=True, epsilon=eps)


def nested_syndrome_witness(data: GaugeExpectations) -> SyndromeDistribution:
    """A distribution attaining the one-gauge upper certificate.

    Sorting the per-generator success rates a_i ascending and placing mass on
    the nested syndromes that flip one more sorted generator at a time gives a
    distribution whose gauge expectations are exactly ``data.mu`` and whose
    fidelity equals min a_i: masses a_(1) on the all-pass syndrome, then
    a_(j+1) - a_(j) on each deeper failure pattern, and 1 - a_(n) on the
    all-fail one.
    """
    n = data.gauge.n
    order = sorted(range(n), key=lambda i: mu_to_success(data.mu[i]))
    a_sorted = [mu_to_success(data.mu[i]) for i in order]
    # Build support points in gauge coordinates: prefix-flips of the sorted
    # generators, then map them back with the inverse-transpose.
    inv_cols = invert_columns(data.gauge.column_bits(), n)
    probs = np.zeros(1 << n)
    tilde = 0
    masses = [a_sorted[0]]
    for j in range(n - 1):
        masses.append(a_sorted[j + 1] - a_sorted[j])
    masses.append(1.0 - a_sorted[-1])
    for j in range(n + 1):
        s = apply_transpose(inv_cols, tilde)
        probs[s] += masses[j]
        if j < n:
            tilde |= 1 << order[j]
    return SyndromeDistribution(n, probs, atol=1e-9)
