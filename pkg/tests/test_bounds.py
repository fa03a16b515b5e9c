"""Tests for acarmichael.bounds."""

import math
from fractions import Fraction

import pytest

from acarmichael.bounds import (
    STEP_BINOM,
    STEP_LOGLOGLOG,
    STEP_N_SIDE,
    STEP_N_T20,
    STEP_OMEGA,
    STEP_ORDER,
    STEP_X,
    CountingInputs,
    binom_bound_check,
    counting_report,
)

# y = 2, theta = 1.5, A = 1, omega = 200: w = 100 and n <= e^9 sits far below t = (3/2)^100.
APPLICABLE = dict(y=2, theta=1.5, A=1, gamma=1.0, omega=200)


class TestCountingInputs:
    @pytest.mark.parametrize(
        "overrides, message",
        [
            ({"theta": 1.0}, "theta"),
            ({"theta": 2.0}, "theta"),
            ({"y": 1}, "y must be"),
            ({"A": 0}, "A must be"),
            ({"gamma": 0.0}, "gamma"),
            ({"omega": -1}, "omega"),
            ({"kappa": 1.02}, "kappa"),
            ({"kappa": 0.0}, "kappa"),
            ({"kappa": 0.1}, "log log L"),
        ],
    )
    def test_invalid(self, overrides, message):
        values = dict(APPLICABLE)
        values.update(overrides)
        with pytest.raises(ValueError, match=message):
            CountingInputs(**values)

    def test_weight(self):
        assert CountingInputs(**APPLICABLE).weight == 100
        assert CountingInputs(y=10, theta=1.5, A=2, gamma=1.0, omega=9).weight == 3


class TestCountingReport:
    def test_zero_omega_is_degenerate(self):
        report = counting_report(CountingInputs(y=10, theta=1.5, A=1, gamma=1.0, omega=0))
        assert report.r == 1
        assert report.t == 1
        assert not report.applicable
        assert report.binom_lower is None
        assert report.exponent is None
        assert not report.step(STEP_OMEGA).holds
        assert not report.chain_holds

    def test_moderate_parameters_are_not_applicable(self):
        report = counting_report(CountingInputs(y=100, theta=1.5, A=2, gamma=1.0, omega=300))
        assert report.log_t == pytest.approx(100 * math.log(1.5))
        assert report.log_n_bound == pytest.approx(450)
        assert not report.applicable
        assert not report.step(STEP_ORDER).holds
        with pytest.raises(KeyError):
            report.step(STEP_BINOM)

    def test_applicable_chain(self):
        report = counting_report(CountingInputs(**APPLICABLE))
        assert report.applicable
        assert report.chain_holds
        assert [s.name for s in report.steps] == [
            STEP_N_SIDE,
            STEP_N_T20,
            STEP_ORDER,
            STEP_OMEGA,
            STEP_BINOM,
            STEP_X,
            STEP_LOGLOGLOG,
        ]
        assert report.step(STEP_BINOM).scale == "loglog"
        assert report.exponent > 0
        assert report.X_upper == math.inf

    def test_steps_match_a_direct_evaluation(self):
        report = counting_report(CountingInputs(**APPLICABLE))
        w, log_y = 100, math.log(2)
        log_t = w * math.log(1.5)
        log_L = 2**1.5
        B = log_L + 3 * math.log(log_L)
        C = log_L + 2 * math.log(log_L)
        loglog_X = log_t + math.log(C) + math.log1p(B / C * math.exp(-log_t))

        assert report.log_r == pytest.approx(w * math.log(1.75))
        assert report.log_t == pytest.approx(log_t)
        assert report.log_n_bound == pytest.approx(9.0)
        assert report.loglog_X_upper == pytest.approx(loglog_X)
        assert report.step(STEP_N_SIDE).rhs == pytest.approx(w * math.log(1.25))
        assert report.step(STEP_N_T20).rhs == pytest.approx(log_t - math.log(20))
        assert report.step(STEP_OMEGA).lhs == pytest.approx(math.log(200))
        assert report.step(STEP_OMEGA).rhs == pytest.approx(1.5 * log_y - math.log(log_y))
        assert report.step(STEP_X).rhs == pytest.approx(math.log(3) + 1.5 * log_y + log_t)
        assert report.step(STEP_BINOM).rhs == pytest.approx(log_t + math.log(w * math.log(1.1)))
        assert report.step(STEP_LOGLOGLOG).lhs == pytest.approx(math.log(loglog_X) ** 2)
        assert report.exponent == pytest.approx(math.log(1.1) / 6 / math.log(loglog_X) ** 2)

    def test_binomial_estimate_against_exact_value(self):
        # Small enough to evaluate C(r, t) / C(r, n) exactly: y = 2, theta = 1.01, omega = 40.
        report = counting_report(CountingInputs(y=2, theta=1.01, A=1, gamma=1.0, omega=40))
        assert report.applicable
        r, t, n = math.floor(report.r), math.ceil(report.t), math.ceil(report.n_bound)
        exact = math.log(math.comb(r, t)) - math.log(math.comb(r, n))
        assert math.exp(report.loglog_binom_lower) <= exact + 1

    @pytest.mark.parametrize("omega", [0, 10, 100, 1000, 10_000])
    def test_monotone_in_omega(self, omega):
        low = counting_report(CountingInputs(y=50, theta=1.5, A=1, gamma=1.0, omega=omega))
        high = counting_report(CountingInputs(y=50, theta=1.5, A=1, gamma=1.0, omega=omega + 1))
        assert high.log_r > low.log_r
        assert high.log_t >= low.log_t
        assert high.loglog_X_upper >= low.loglog_X_upper

    def test_kappa_scales_the_modulus(self):
        small = counting_report(CountingInputs(**APPLICABLE, kappa=0.9))
        large = counting_report(CountingInputs(**APPLICABLE, kappa=1.01))
        assert small.loglog_X_upper < large.loglog_X_upper

    def test_to_dict(self):
        data = counting_report(CountingInputs(**APPLICABLE)).to_dict()
        assert data["inputs"] == {**APPLICABLE, "kappa": 1.0}
        assert data["applicable"] is True
        assert len(data["steps"]) == 7
        assert set(data["steps"][0]) == {"name", "lhs", "rhs", "scale", "holds"}


class TestBinomBoundCheck:
    def test_ten_choose_three(self):
        sandwich = binom_bound_check(10, 3)
        assert sandwich.lower_exact == Fraction(1000, 27)
        assert sandwich.exact == 120
        assert sandwich.upper == pytest.approx((10 * math.e / 3) ** 3)
        assert sandwich.holds

    @pytest.mark.parametrize("u, expected_upper", [(5, math.e**5), (1, math.e)])
    def test_diagonal(self, u, expected_upper):
        lower, exact, upper = binom_bound_check(u, u).as_tuple()
        assert (lower, exact) == (1.0, 1)
        assert upper == pytest.approx(expected_upper)

    @pytest.mark.parametrize("u, v", [(0, 0), (3, 0), (3, 4), (1001, 2), (-1, -1)])
    def test_out_of_range(self, u, v):
        with pytest.raises(ValueError, match="0 < v <= u"):
            binom_bound_check(u, v)

    def test_sandwich_holds_up_to_300(self):
        for u in range(1, 301):
            for v in range(1, u + 1):
                assert binom_bound_check(u, v).holds, (u, v)

    @pytest.mark.slow
    def test_sandwich_holds_up_to_1000(self):
        for u in range(301, 1001, 7):
            for v in range(1, u + 1):
                assert binom_bound_check(u, v).holds, (u, v)

    def test_to_dict(self):
        assert binom_bound_check(4, 2).to_dict() == {
            "u": 4,
            "v": 2,
            "lower": 4.0,
            "exact": 6,
            "upper": pytest.approx((2 * math.e) ** 2),
            "holds": True,
        }
