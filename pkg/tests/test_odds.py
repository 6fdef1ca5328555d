"""Closed-form analytics: frozen examples plus property tests."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feaslab.odds import (
    Classification,
    ErrorSplitScheme,
    absorption_probability,
    acceptable_band,
    boundary_thresholds,
    classify,
    continuation_halfwidth,
    error_split,
    expected_stopping_time,
    per_constraint_error,
    tolerance_convert,
)

probs = st.floats(min_value=1e-4, max_value=1.0 - 1e-4, allow_nan=False)
thetas = st.floats(min_value=1.0 + 1e-6, max_value=50.0, allow_nan=False)


class TestErrorSplit:
    def test_single_system_both_branches_equal_alpha(self):
        assert error_split(0.05, 1, crn=False) == pytest.approx(0.05)
        assert error_split(0.05, 1, crn=True) == pytest.approx(0.05)

    def test_crn_is_additive_split(self):
        assert error_split(0.05, 10, crn=True) == pytest.approx(0.005)

    def test_independent_product_split(self):
        # oracle: high-precision closed form 1 - 0.95**0.1
        expected = 1.0 - math.exp(math.log(0.95) / 10.0)
        assert expected == pytest.approx(0.0051162, abs=5e-8)
        assert error_split(0.05, 10, crn=False) == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            error_split(0.0, 3, crn=False)
        with pytest.raises(ValueError):
            error_split(0.05, 0, crn=False)


class TestPerConstraintError:
    def test_two_constraints_two_thresholds_each(self):
        assert per_constraint_error(0.05, [2, 2], ErrorSplitScheme.PER_CONSTRAINT) == [
            pytest.approx(0.0125),
            pytest.approx(0.0125),
        ]
        # the two schemes coincide when every constraint has > 1 thresholds
        assert per_constraint_error(0.05, [2, 2], ErrorSplitScheme.PER_EFFECTIVE_THRESHOLD) == [
            pytest.approx(0.0125),
            pytest.approx(0.0125),
        ]

    def test_effective_threshold_split_hand_value(self):
        # D = min(1,2) + min(3,2) + min(5,2) = 5
        out = per_constraint_error(0.06, [1, 3, 5], ErrorSplitScheme.PER_EFFECTIVE_THRESHOLD)
        assert out == [pytest.approx(0.012)] * 3

    def test_single_threshold_gets_full_share(self):
        out = per_constraint_error(0.05, [1, 3], ErrorSplitScheme.PER_CONSTRAINT)
        assert out[0] == pytest.approx(0.025)
        assert out[1] == pytest.approx(0.0125)

    def test_empty_counts_rejected(self):
        with pytest.raises(ValueError):
            per_constraint_error(0.05, [], ErrorSplitScheme.PER_CONSTRAINT)


class TestHalfwidth:
    def test_paper_values(self):
        assert continuation_halfwidth(0.05, 1.2) == 17
        assert continuation_halfwidth(0.05, 1.5) == 8

    def test_floor_at_one(self):
        # 1/(1+2) = 0.333 <= 0.6 already at H = 1
        assert continuation_halfwidth(0.6, 2.0) == 1

    @given(
        beta=st.floats(min_value=1e-6, max_value=0.49),
        theta=st.floats(min_value=1.01, max_value=50.0),
    )
    @settings(max_examples=200)
    def test_minimality(self, beta, theta):
        H = continuation_halfwidth(beta, theta)
        t = Fraction(theta)
        b = Fraction(beta)
        assert b >= 1 / (1 + t**H)
        assert H == 1 or b < 1 / (1 + t ** (H - 1))

    def test_exact_boundary(self):
        # beta exactly 1/(1 + theta**H) must accept that H
        theta = 2.0
        H = 5
        beta = float(1 / (1 + Fraction(2) ** 5))
        assert continuation_halfwidth(beta, theta) == 5


class TestClassify:
    def test_boundary_threshold_below_is_unacceptable(self):
        # h on the lower boundary curve puts p exactly on the unacceptable
        # side (the inequality is >=)
        assert classify(0.15, 0.1282, 1.2) is Classification.UNACCEPTABLE

    def test_equal_probability_acceptable(self):
        assert classify(0.3, 0.3, 1.5) is Classification.ACCEPTABLE

    def test_hand_computed_unacceptable(self):
        # odds ratio (0.5*0.75)/(0.5*0.25) = 3 >= 1.5
        assert classify(0.5, 0.25, 1.5) is Classification.UNACCEPTABLE

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            classify(0.0, 0.5, 1.5)
        with pytest.raises(ValueError):
            classify(0.5, 1.0, 1.5)

    @given(p=probs, h=probs, theta=thetas)
    @settings(max_examples=300)
    def test_partition(self, p, h, theta):
        assert classify(p, h, theta) in (
            Classification.DESIRABLE,
            Classification.ACCEPTABLE,
            Classification.UNACCEPTABLE,
        )


class TestBoundaryThresholds:
    def test_paper_values(self):
        pair = boundary_thresholds(0.15, 1.2)
        assert pair.f_lower == pytest.approx(0.1282, abs=5e-5)
        assert pair.f_upper == pytest.approx(0.1748, abs=5e-5)
        assert boundary_thresholds(0.15, 1.5).f_lower == pytest.approx(0.10526, abs=5e-6)

    def test_collapse_as_theta_approaches_one(self):
        pair = boundary_thresholds(0.5, 1.0 + 1e-9)
        assert pair.f_lower == pytest.approx(0.5, abs=1e-9)
        assert pair.f_upper == pytest.approx(0.5, abs=1e-9)

    @given(p=probs, theta=thetas)
    @settings(max_examples=300)
    def test_boundaries_sit_exactly_on_the_classification_edges(self, p, theta):
        pair = boundary_thresholds(p, theta)
        assert pair.f_lower < p < pair.f_upper
        # odds ratios at the boundaries equal theta up to float error
        h = pair.f_lower
        ratio_u = p * (1 - h) / ((1 - p) * h)
        assert ratio_u == pytest.approx(theta, rel=1e-9)
        h = pair.f_upper
        ratio_d = (1 - p) * h / (p * (1 - h))
        assert ratio_d == pytest.approx(theta, rel=1e-9)

    @given(p=probs, theta=st.floats(min_value=1.01, max_value=50.0))
    @settings(max_examples=300)
    def test_boundary_classification(self, p, theta):
        pair = boundary_thresholds(p, theta)
        # nudge the threshold toward the classified side to absorb the last
        # ulp of the closed form
        down = pair.f_lower * (1 - 1e-12)
        up = pair.f_upper * (1 + 1e-12)
        if 0 < down and up < 1:
            assert classify(p, down, theta) is Classification.UNACCEPTABLE
            assert classify(p, up, theta) is Classification.DESIRABLE


class TestAbsorption:
    def test_driftless_is_half(self):
        assert absorption_probability(0.3, 0.3, 7) == 0.5

    def test_frozen_values(self):
        # 1.5**8/(1+1.5**8) and 1.2**17/(1+1.2**17), exact arithmetic oracle
        exp_15 = float(Fraction(3, 2) ** 8 / (1 + Fraction(3, 2) ** 8))
        assert exp_15 == pytest.approx(0.96244, abs=1e-4)
        h = boundary_thresholds(0.2, 1.5).f_upper
        assert absorption_probability(0.2, h, 8) == pytest.approx(exp_15, rel=1e-9)
        exp_12 = float(Fraction(6, 5) ** 17 / (1 + Fraction(6, 5) ** 17))
        assert exp_12 == pytest.approx(0.95687, abs=1e-4)
        h = boundary_thresholds(0.15, 1.2).f_upper
        assert absorption_probability(0.15, h, 17) == pytest.approx(exp_12, rel=1e-9)

    @given(p=probs, theta=thetas, beta=st.floats(min_value=1e-4, max_value=0.4))
    @settings(max_examples=200)
    def test_validity_anchor(self, p, theta, beta):
        # at slippage (rho = theta) the absorption bound meets 1 - beta
        H = continuation_halfwidth(beta, theta)
        h = boundary_thresholds(p, theta).f_upper
        if not 0 < h < 1:
            return
        assert absorption_probability(p, h, H) >= (1 - beta) - 1e-9

    def test_overflow_safe(self):
        assert absorption_probability(0.01, 0.99, 400) == pytest.approx(1.0)
        assert absorption_probability(0.99, 0.01, 400) == pytest.approx(0.0)


class TestExpectedStoppingTime:
    def test_driftless_paper_cells(self):
        assert expected_stopping_time(0.5, 0.5, 17) == pytest.approx(578.000, abs=1e-3)
        assert expected_stopping_time(0.15, 0.15, 17) == pytest.approx(1133.333, abs=1e-3)

    def test_slippage_cell(self):
        h = 0.5 / (0.5 + 1.2 * 0.5)  # ratio theta below p
        assert expected_stopping_time(0.5, h, 17) == pytest.approx(341.739, abs=1e-3)

    def test_overflow_safe_with_drift_up(self):
        v = expected_stopping_time(0.01, 0.99, 300)
        assert v == pytest.approx(300 / 0.98, rel=1e-9)

    def test_maximized_at_equal_probability(self):
        # grid check: for fixed p and H the driftless case dominates
        for p in (0.15, 0.3, 0.5, 0.8):
            peak = expected_stopping_time(p, p, 17)
            for dh in (-0.1, -0.05, -0.01, 0.01, 0.05, 0.1):
                h = p + dh
                if 0 < h < 1:
                    assert expected_stopping_time(p, h, 17) < peak


class TestMonteCarloAgreement:
    @pytest.mark.parametrize(
        "p,h,H",
        [(0.5, 0.5, 8), (0.15, 0.1282, 17), (0.3, 0.4, 8), (0.5, 0.455, 17)],
    )
    def test_simulation_matches_closed_forms(self, p, h, H):
        from feaslab.backend import kernels

        n = 100_000
        lower, steps = kernels.simulate_walks(p, h, H, n, seed=2024)
        u = absorption_probability(p, h, H)
        v = expected_stopping_time(p, h, H)
        se_u = math.sqrt(u * (1 - u) / n)
        assert abs(lower / n - u) <= 3 * se_u + 1e-9
        # walk duration s.e. estimated from the dispersion bound sd <= mean
        assert abs(steps / n - v) <= 3 * v / math.sqrt(n) + 1e-9


class TestToleranceConvert:
    def test_center_threshold_attains_maximum(self):
        conv = tolerance_convert([0.5], 1.5)
        t = conv.per_threshold[0]
        peak = (1.5 - 1) / (2 * (1.5 + 1))
        assert t.epsilon == pytest.approx(peak, rel=1e-12)
        assert t.epsilon_tilde == pytest.approx(peak, rel=1e-12)
        assert t.h_tilde == pytest.approx(0.5, rel=1e-12)

    def test_quarter_threshold_frozen_values(self):
        # oracle: LB = h/(h + theta(1-h)), UB = theta h/(h(theta-1)+1)
        conv = tolerance_convert([0.25], 1.5)
        t = conv.per_threshold[0]
        assert t.lb == pytest.approx(0.181818, abs=1e-6)
        assert t.ub == pytest.approx(0.333333, abs=1e-6)
        assert t.h_tilde == pytest.approx(0.257576, abs=1e-6)
        assert t.epsilon_tilde == pytest.approx(0.075758, abs=1e-6)
        assert t.epsilon == pytest.approx(0.068182, abs=1e-6)

    @given(h=st.floats(min_value=0.01, max_value=0.99), theta=thetas)
    @settings(max_examples=300)
    def test_symmetry_and_ordering(self, h, theta):
        a = tolerance_convert([h], theta).per_threshold[0]
        b = tolerance_convert([1 - h], theta).per_threshold[0]
        assert a.epsilon == pytest.approx(b.epsilon, rel=1e-9, abs=1e-15)
        assert a.epsilon_tilde == pytest.approx(b.epsilon_tilde, rel=1e-9, abs=1e-15)
        assert a.epsilon_tilde >= a.epsilon - 1e-15

    def test_vanishes_at_extremes(self):
        for h in (1e-4, 1 - 1e-4):
            t = tolerance_convert([h], 1.5).per_threshold[0]
            assert t.epsilon < 1e-4
            assert t.epsilon_tilde < 1e-4

    def test_constraint_level_minimum(self):
        conv = tolerance_convert([0.1, 0.5], 1.5)
        assert conv.epsilon == min(t.epsilon for t in conv.per_threshold)
        assert conv.epsilon_tilde == min(t.epsilon_tilde for t in conv.per_threshold)

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            tolerance_convert([0.5, 0.25], 1.5)

    def test_band_brackets_threshold(self):
        lb, ub = acceptable_band(0.3, 2.0)
        assert lb < 0.3 < ub
