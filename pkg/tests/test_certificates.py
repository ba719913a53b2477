"""Unit tests for the closed-form one-gauge certificates."""

import math

import numpy as np
import pytest

from stabcert.certificates import (
    GaugeExpectations,
    OneGaugeCertificate,
    clipped_upper_certificate,
    confidence_interval,
    empirical_upper,
    epsilon_from_shots,
    kkl_lower,
    kkl_upper,
    mu_to_success,
    nested_syndrome_witness,
    one_gauge_certificate,
    shots_per_generator,
    success_to_mu,
)
from stabcert.gf2 import Gauge, sample_uniform_gauge
from stabcert.syndrome import make_rho_ex, walsh


def test_mu_success_conversions():
    assert mu_to_success(1.0) == 1.0
    assert mu_to_success(-1.0) == 0.0
    assert success_to_mu(0.75) == 0.5
    for x in np.linspace(-1, 1, 11):
        assert success_to_mu(mu_to_success(x)) == pytest.approx(x)


def test_worked_example_closed_forms():
    # Diagonal three-qubit example: the coordinate gauge reads (1/2,1/2,1/2)
    # and certifies [1/4, 3/4]; the parity gauge reads (0,0,-1/2) and
    # certifies [0, 1/4].
    assert kkl_lower([0.5, 0.5, 0.5]) == pytest.approx(0.25, abs=1e-12)
    assert kkl_upper([0.5, 0.5, 0.5]) == pytest.approx(0.75, abs=1e-12)
    assert kkl_lower([0.0, 0.0, -0.5]) == pytest.approx(0.0, abs=1e-12)
    assert kkl_upper([0.0, 0.0, -0.5]) == pytest.approx(0.25, abs=1e-12)


def test_closed_form_edge_cases():
    assert kkl_lower([1.0, 1.0]) == 1.0
    assert kkl_upper([1.0, 1.0]) == 1.0
    assert kkl_lower([-1.0]) == 0.0
    assert kkl_upper([-1.0]) == 0.0
    # Values outside [-1, 1] beyond tolerance are rejected.
    with pytest.raises(ValueError):
        kkl_lower([1.1])
    with pytest.raises(ValueError):
        kkl_upper([])


def test_certificate_object():
    cert = one_gauge_certificate([0.5, 0.5, 0.5])
    assert cert.lower == pytest.approx(0.25)
    assert cert.upper == pytest.approx(0.75)
    assert cert.width == pytest.approx(0.5)
    with pytest.raises(ValueError):
        OneGaugeCertificate(0.8, 0.2)


def test_lower_never_exceeds_upper_on_real_states():
    # For expectations read off an actual distribution both endpoints are
    # attained by feasible states, so the interval is always well ordered
    # and contains the true fidelity.
    from stabcert.syndrome import sample_dirichlet_uniform

    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        p = sample_dirichlet_uniform(n, rng)
        gauge = sample_uniform_gauge(n, rng)
        spec = walsh(p)
        mu = [spec.value(b) for b in gauge.column_bits()]
        cert = one_gauge_certificate(mu)
        assert cert.lower <= cert.upper + 1e-12
        assert cert.lower - 1e-9 <= p.fidelity() <= cert.upper + 1e-9


def test_empirical_upper():
    assert empirical_upper([0.9, 0.7, 0.95]) == 0.7
    with pytest.raises(ValueError):
        empirical_upper([])
    with pytest.raises(ValueError):
        empirical_upper([1.2])


def test_epsilon_and_shot_count_are_inverse():
    for n in (1, 3, 8):
        for delta in (0.001, 0.05, 0.3):
            for eps in (0.01, 0.05, 0.2):
                m = shots_per_generator(eps, n, delta)
                assert epsilon_from_shots(m, n, delta) <= eps
                if m > 1:
                    assert epsilon_from_shots(m - 1, n, delta) > eps


def test_epsilon_formula_value():
    # sqrt(ln(2n/delta) / (2m)) spelled out once by hand.
    got = epsilon_from_shots(11000 / 3, 3, 0.001)
    assert got == pytest.approx(math.sqrt(math.log(6000.0) / (2 * 11000 / 3)))
    with pytest.raises(ValueError):
        epsilon_from_shots(0, 3, 0.1)
    with pytest.raises(ValueError):
        epsilon_from_shots(100, 3, 1.5)


def test_clipped_upper():
    assert clipped_upper_certificate(0.979, 0.034) == 1.0
    assert clipped_upper_certificate(0.838, 0.040) == pytest.approx(0.878)
    with pytest.raises(ValueError):
        clipped_upper_certificate(1.2, 0.01)
    with pytest.raises(ValueError):
        clipped_upper_certificate(0.5, -0.01)


def test_confidence_interval_formulas():
    mu_hat = [0.771, 0.817, 0.676]
    m = 8192 / 3
    delta = 0.01
    cert = confidence_interval(mu_hat, m, delta)
    eps = epsilon_from_shots(m, 3, delta)
    assert cert.epsilon == pytest.approx(eps)
    assert cert.upper == pytest.approx(min(1.0, (1 + 0.676) / 2 + eps))
    want_lower = max(
        0.0, 1.0 - 0.5 * sum(1.0 - x for x in mu_hat) - 3 * eps / 2.0
    )
    assert cert.lower == pytest.approx(want_lower)
    assert cert.empirical


def test_confidence_interval_widens_with_fewer_shots():
    mu_hat = [0.9, 0.85, 0.95]
    wide = confidence_interval(mu_hat, 100, 0.05)
    narrow = confidence_interval(mu_hat, 10000, 0.05)
    assert wide.width > narrow.width
    assert wide.lower <= narrow.lower
    assert wide.upper >= narrow.upper


def test_nested_witness_attains_the_upper_endpoint():
    # The constructed distribution must reproduce the measured expectations
    # exactly and have fidelity equal to the smallest success rate.
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        gauge = sample_uniform_gauge(n, rng)
        mu = tuple(float(x) for x in rng.uniform(-1.0, 1.0, size=n))
        data = GaugeExpectations(gauge, mu)
        w = nested_syndrome_witness(data)
        spec = walsh(w)
        for i, b in enumerate(gauge.column_bits()):
            assert spec.value(b) == pytest.approx(mu[i], abs=1e-9)
        assert w.fidelity() == pytest.approx(kkl_upper(mu), abs=1e-9)


def test_nested_witness_on_worked_example():
    p = make_rho_ex()
    spec = walsh(p)
    gauge = Gauge.identity(3)
    data = GaugeExpectations(gauge, tuple(spec.value(b) for b in (1, 2, 4)))
    w = nested_syndrome_witness(data)
    assert w.fidelity() == pytest.approx(0.75)


def test_gauge_expectations_validation():
    gauge = Gauge.identity(2)
    GaugeExpectations(gauge, (0.5, -0.5))
    with pytest.raises(ValueError):
        GaugeExpectations(gauge, (0.5,))
    with pytest.raises(ValueError):
        GaugeExpectations(gauge, (0.5, 1.5))
