"""Countable-support log-normalizers and their finiteness certificates."""

from __future__ import annotations

import math

import pytest

from softtilt import (
    CertificateStatus,
    CountableFamily,
    InvalidBounds,
    NotFinite,
    ValidationError,
    log_normalizer_truncated,
    solve_tilt,
    tilt_truncated,
)
from helpers import random_problem

EPS = 1e-12


def geometric_payoff_family(growth: float) -> CountableFamily:
    # prior (1/2)^(n+1), payoff n*log(growth): tilted ratio is growth/2
    return CountableFamily.geometric_linear(0.5, math.log(growth))


class TestGeometricLinear:
    def test_subcritical_growth_is_certified_finite(self):
        logz, cert = log_normalizer_truncated(geometric_payoff_family(1.5), EPS)
        assert cert.status is CertificateStatus.FINITE
        # sum (1/2)(3/4)^n = 2
        assert logz == pytest.approx(math.log(2.0), abs=1e-9)
        assert cert.tail_bound < EPS * cert.partial

    def test_supercritical_growth_diverges(self):
        logz, cert = log_normalizer_truncated(geometric_payoff_family(3.0), EPS)
        assert cert.status is CertificateStatus.DIVERGED
        assert logz == math.inf

    def test_critical_growth_is_inconclusive(self):
        # ratio exactly 1: terms never decay and partial sums grow too
        # slowly to trip the explosion guard
        logz, cert = log_normalizer_truncated(
            geometric_payoff_family(2.0), EPS, max_doublings=4
        )
        assert cert.status is CertificateStatus.INCONCLUSIVE
        assert math.isfinite(logz)

    def test_tilted_probabilities(self):
        tilt = tilt_truncated(geometric_payoff_family(1.5), EPS)
        assert tilt.certificate.status is CertificateStatus.FINITE
        assert tilt.probs[0] == pytest.approx(0.25, abs=1e-9)
        for n in range(0, 40):
            assert tilt.probs[n + 1] / tilt.probs[n] == pytest.approx(0.75, abs=1e-9)
        assert math.fsum(tilt.probs) == pytest.approx(1.0, abs=1e-9)
        assert tilt.tail_mass < 2 * EPS

    def test_bad_parameters_rejected(self):
        for q in (0.0, 1.0, -0.3, 1.5, math.nan):
            with pytest.raises(ValidationError):
                CountableFamily.geometric_linear(q, 0.1)
        with pytest.raises(ValidationError):
            CountableFamily.geometric_linear(0.5, math.inf)
        with pytest.raises(ValidationError):
            CountableFamily.geometric_linear(0.5, 0.1, intercept=math.nan)


class TestGeometricConstant:
    def test_log_normalizer_equals_payoff(self):
        logz, cert = log_normalizer_truncated(CountableFamily.geometric_constant(0.5, 2.0), EPS)
        assert cert.status is CertificateStatus.FINITE
        assert logz == pytest.approx(2.0, abs=1e-12)

    def test_tilt_reproduces_prior(self):
        tilt = tilt_truncated(CountableFamily.geometric_constant(0.5, -1.0), EPS)
        for n in range(0, 20):
            assert tilt.probs[n] == pytest.approx(0.5 ** (n + 1), abs=1e-12)

    def test_large_payoff_does_not_trip_explosion_guard(self):
        # log_partial exceeds the explosion threshold immediately, but the
        # terms are strictly decreasing, so the run must certify finite
        logz, cert = log_normalizer_truncated(CountableFamily.geometric_constant(0.5, 600.0), EPS)
        assert cert.status is CertificateStatus.FINITE
        assert cert.log_partial > 500.0
        assert logz == pytest.approx(600.0, abs=1e-12)

    def test_value_must_be_finite(self):
        with pytest.raises(ValidationError):
            CountableFamily.geometric_constant(0.5, math.inf)


class TestFromFinite:
    def test_matches_direct_solve(self, rng):
        for _ in range(50):
            problem = random_problem(rng)
            solution = solve_tilt(problem)
            family = CountableFamily.from_finite(problem)
            logz, cert = log_normalizer_truncated(family, EPS)
            assert cert.status is CertificateStatus.FINITE
            assert abs(logz - solution.log_normalizer) <= 1e-12

    def test_tilt_matches_direct_optimizer(self, rng):
        for _ in range(20):
            problem = random_problem(rng)
            solution = solve_tilt(problem)
            tilt = tilt_truncated(CountableFamily.from_finite(problem), EPS)
            k = len(problem.prior.probs)
            for i in range(k):
                assert abs(tilt.probs[i] - solution.optimizer.probs[i]) <= 1e-12
            assert all(p == 0.0 for p in tilt.probs[k:])
            assert tilt.tail_mass == 0.0


class TestSplitBounds:
    def test_consistent_with_direct_family(self):
        q, value = 0.5, 2.0
        direct = CountableFamily.geometric_constant(q, value)
        split = CountableFamily.from_split_bounds(
            log_prior_mass=lambda n: math.log1p(-q) + n * math.log(q),
            prior_tail=lambda n: q ** (n + 1),
            payoff=lambda n: value,
            payoff_sup=lambda n: value,
        )
        logz_d, cert_d = log_normalizer_truncated(direct, EPS)
        logz_s, cert_s = log_normalizer_truncated(split, EPS)
        assert cert_s.status is CertificateStatus.FINITE
        assert abs(logz_s - logz_d) <= 1e-12
        assert cert_s.N == cert_d.N

    def test_negative_prior_tail_rejected(self):
        family = CountableFamily.from_split_bounds(
            log_prior_mass=lambda n: math.log1p(-0.5) + n * math.log(0.5),
            prior_tail=lambda n: -1.0,
            payoff=lambda n: 0.0,
            payoff_sup=lambda n: 0.0,
        )
        with pytest.raises(InvalidBounds):
            log_normalizer_truncated(family, EPS)

    def test_zero_prior_tail_short_circuits(self):
        # exp(payoff_sup) never evaluated when the prior tail is exactly 0
        family = CountableFamily.from_split_bounds(
            log_prior_mass=lambda n: 0.0 if n == 0 else -math.inf,
            prior_tail=lambda n: 0.0,
            payoff=lambda n: 1.0,
            payoff_sup=lambda n: math.inf,
        )
        logz, cert = log_normalizer_truncated(family, EPS)
        assert cert.status is CertificateStatus.FINITE
        assert logz == pytest.approx(1.0, abs=1e-12)


class TestContracts:
    def geometric_terms(self):
        return lambda n: (n + 1) * math.log(0.5)

    def test_increasing_tail_bound_rejected(self):
        family = CountableFamily(
            log_prior_mass=self.geometric_terms(),
            payoff=lambda n: 0.0,
            tail_bound=lambda n: 1.0 + n,
        )
        with pytest.raises(InvalidBounds):
            log_normalizer_truncated(family, EPS)

    def test_nan_tail_bound_rejected(self):
        family = CountableFamily(
            log_prior_mass=self.geometric_terms(),
            payoff=lambda n: 0.0,
            tail_bound=lambda n: math.nan,
        )
        with pytest.raises(InvalidBounds):
            log_normalizer_truncated(family, EPS)

    def test_nonreal_payoff_rejected(self):
        for bad in (math.nan, math.inf):
            family = CountableFamily(
                log_prior_mass=self.geometric_terms(),
                payoff=lambda n: bad,
                tail_bound=lambda n: 0.0,
            )
            with pytest.raises(ValidationError):
                log_normalizer_truncated(family, EPS)

    def test_bad_log_prior_mass_rejected(self):
        for bad in (math.nan, math.inf):
            family = CountableFamily(
                log_prior_mass=lambda n: bad,
                payoff=lambda n: 0.0,
                tail_bound=lambda n: 0.0,
            )
            with pytest.raises(ValidationError):
                log_normalizer_truncated(family, EPS)

    def test_bad_eps_tail_rejected(self):
        family = CountableFamily.geometric_constant(0.5, 0.0)
        for eps in (0.0, -1e-9, math.nan, math.inf):
            with pytest.raises(ValidationError):
                log_normalizer_truncated(family, eps)

    def test_bad_schedule_rejected(self):
        family = CountableFamily.geometric_constant(0.5, 0.0)
        with pytest.raises(ValidationError):
            log_normalizer_truncated(family, EPS, start=0)
        with pytest.raises(ValidationError):
            log_normalizer_truncated(family, EPS, max_doublings=-1)

    def test_tilt_requires_finite_certificate(self):
        with pytest.raises(NotFinite):
            tilt_truncated(geometric_payoff_family(3.0), EPS)
        with pytest.raises(NotFinite):
            tilt_truncated(geometric_payoff_family(2.0), EPS, max_doublings=3)
