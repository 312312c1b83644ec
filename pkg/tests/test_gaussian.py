import math

import numpy as np
import pytest

from rdsi.errors import AssumptionError
from rdsi.gaussian import (
    GaussianProblem,
    NoCodingScheme,
    SchemeParams,
    classify_case,
    converse_gamma,
    decoder_distortion,
    encoder_distortion,
    h_x_given_y,
    r_cr_gaussian,
    r_gaussian,
    r_wz_gaussian,
    scheme_params,
    scheme_rate,
    second_branch_rate,
)


class TestClosedForms:
    def test_r_gaussian_clamped(self):
        assert r_gaussian(GaussianProblem(1, 1, 0.6, 0.36)) == 0.0

    def test_r_gaussian_first_branch(self):
        assert r_gaussian(GaussianProblem(1, 1, 0.25, 0.0625)) == pytest.approx(
            0.5, abs=1e-12
        )

    def test_r_gaussian_second_branch(self):
        expect = 0.5 * math.log2(0.5 * 1.05 / 0.24)
        assert r_gaussian(GaussianProblem(1, 1, 0.25, 0.01)) == pytest.approx(
            expect, abs=1e-12
        )

    def test_r_wz_values(self):
        assert r_wz_gaussian(1, 1, 0.5) == 0.0
        assert r_wz_gaussian(1, 1, 0.25) == pytest.approx(0.5, abs=1e-12)
        assert r_wz_gaussian(1, 1, 2.0) == 0.0

    def test_r_cr_values(self):
        assert r_cr_gaussian(1, 1, 1.0) == 0.0
        assert r_cr_gaussian(1, 1, 0.25) == pytest.approx(
            0.5 * math.log2(2.5), abs=1e-12
        )

    def test_r_cr_diverges_as_dd_vanishes(self):
        values = [r_cr_gaussian(1, 1, dd) for dd in (1e-1, 1e-3, 1e-5, 1e-7)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 10

    def test_domain_violations(self):
        with pytest.raises(AssumptionError):
            GaussianProblem(1, 1, 0.0, 0.1)
        with pytest.raises(AssumptionError):
            GaussianProblem(1, 0.0, 0.1, 0.1)
        with pytest.raises(AssumptionError):
            r_wz_gaussian(1, 1, -0.5)

    def test_observation_gain_normalization(self):
        base = GaussianProblem(2.0, 0.5 / 4.0, 0.3, 0.05)
        scaled = GaussianProblem.with_observation_gain(2.0, 0.5, 0.3, 0.05, xi=2.0)
        assert r_gaussian(scaled) == r_gaussian(base)


class TestClassification:
    def test_examples(self):
        assert classify_case(GaussianProblem(1, 1, 0.6, 0.36)) == 1
        assert classify_case(GaussianProblem(1, 1, 0.25, 0.0625)) == 3
        assert classify_case(GaussianProblem(1, 1, 0.25, 0.01)) == 4

    def test_total_and_exclusive(self, rng):
        for _ in range(300):
            p = GaussianProblem(
                rng.uniform(0.2, 3),
                rng.uniform(0.2, 3),
                rng.uniform(0.01, 3),
                rng.uniform(0, 2),
            )
            assert classify_case(p) in (1, 2, 3, 4)

    def test_cases_1_2_are_rate_zero(self, rng):
        for _ in range(300):
            p = GaussianProblem(
                rng.uniform(0.2, 3),
                rng.uniform(0.2, 3),
                rng.uniform(0.01, 3),
                rng.uniform(0, 2),
            )
            if classify_case(p) in (1, 2):
                assert r_gaussian(p) == 0.0


class TestSchemeParams:
    def test_case3_values(self):
        params = scheme_params(GaussianProblem(1, 1, 0.25, 0.0625))
        assert params.case_id == 3
        assert params.var_w == pytest.approx(0.5, abs=1e-12)
        assert params.a == pytest.approx(0.5, abs=1e-12)
        assert params.b == pytest.approx(0.25, abs=1e-12)

    def test_case4_values(self):
        params = scheme_params(GaussianProblem(1, 1, 0.25, 0.01))
        assert params.case_id == 4
        assert params.b == pytest.approx(0.1, abs=1e-12)
        assert params.var_w == pytest.approx(0.24 / 0.57, abs=1e-12)
        assert params.a == pytest.approx(0.9 / (1 + 0.24 / 0.57), abs=1e-12)

    def test_no_coding_cases(self):
        nc1 = scheme_params(GaussianProblem(1, 1, 0.6, 0.36))
        assert isinstance(nc1, NoCodingScheme) and nc1.case_id == 1
        assert nc1.scale == pytest.approx(0.5, abs=1e-15)
        # case 2: pinched but dd above the no-coding threshold
        p2 = GaussianProblem(1, 1, 0.9, 0.16)
        assert classify_case(p2) == 2
        nc2 = scheme_params(p2)
        assert isinstance(nc2, NoCodingScheme) and nc2.scale == pytest.approx(0.4)

    def test_case3_decoder_distortion_binds_exactly(self):
        p = GaussianProblem(1, 1, 0.25, 0.0625)
        params = scheme_params(p)
        assert decoder_distortion(params, 1, 1) == pytest.approx(0.25, abs=1e-12)

    def test_case4_both_bind_exactly(self):
        p = GaussianProblem(1, 1, 0.25, 0.01)
        params = scheme_params(p)
        assert decoder_distortion(params, 1, 1) == pytest.approx(0.25, abs=1e-12)
        assert encoder_distortion(params, 1) == pytest.approx(0.01, abs=1e-12)

    def test_random_cases_meet_constraints(self, rng):
        found = 0
        while found < 100:
            p = GaussianProblem(
                rng.uniform(0.2, 3),
                rng.uniform(0.2, 3),
                rng.uniform(0.01, 2),
                rng.uniform(0, 1.5),
            )
            params = scheme_params(p)
            if isinstance(params, NoCodingScheme):
                continue
            found += 1
            assert decoder_distortion(params, p.var_x, p.var_u) <= p.dd + 1e-9
            assert encoder_distortion(params, p.var_u) <= p.de + 1e-9
            assert decoder_distortion(params, p.var_x, p.var_u) == pytest.approx(
                p.dd, abs=1e-9
            )


class TestSchemeRate:
    def test_case3_matches_wyner_ziv(self):
        p = GaussianProblem(1, 1, 0.25, 0.0625)
        assert scheme_rate(scheme_params(p), 1, 1) == pytest.approx(
            r_wz_gaussian(1, 1, 0.25), abs=1e-12
        )

    def test_case4_matches_second_branch(self):
        p = GaussianProblem(1, 1, 0.25, 0.01)
        assert scheme_rate(scheme_params(p), 1, 1) == pytest.approx(
            r_gaussian(p), abs=1e-12
        )

    def test_rate_vanishes_with_large_var_w(self):
        rates = [
            scheme_rate(SchemeParams(a=1.0, b=0.0, var_w=w, case_id=3), 1, 1)
            for w in (1e2, 1e4, 1e6)
        ]
        assert all(b < a for a, b in zip(rates, rates[1:]))
        assert rates[-1] < 1e-5

    def test_random_case_rates_match_r_gaussian(self, rng):
        found = 0
        while found < 100:
            p = GaussianProblem(
                rng.uniform(0.2, 3),
                rng.uniform(0.2, 3),
                rng.uniform(0.01, 2),
                rng.uniform(0, 1.5),
            )
            params = scheme_params(p)
            if isinstance(params, NoCodingScheme):
                continue
            found += 1
            assert scheme_rate(params, p.var_x, p.var_u) == pytest.approx(
                r_gaussian(p), abs=1e-9
            )


class TestConverseGamma:
    def test_cross_check_pinched(self):
        p = GaussianProblem(1, 1, 0.25, 0.01)
        rate = h_x_given_y(1, 1) - converse_gamma(p)
        assert rate == pytest.approx(second_branch_rate(p, clamp=False), abs=1e-9)
        assert rate == pytest.approx(0.5 * math.log2(0.5 * 1.05 / 0.24), abs=1e-9)

    def test_de_zero_reduces_to_simple_form(self):
        p = GaussianProblem(1, 1, 0.25, 0.0)
        expect = 0.5 * math.log2(2 * math.pi * math.e * 0.25 * 1 / (0.25 + 1))
        assert converse_gamma(p) == pytest.approx(expect, abs=1e-12)

    def test_boundary_point_matches_first_branch(self):
        p = GaussianProblem(1, 1, 0.25, 0.0625)
        rate = h_x_given_y(1, 1) - converse_gamma(p)
        assert rate == pytest.approx(0.5, abs=1e-9)

    def test_condition_violation_raises(self):
        with pytest.raises(AssumptionError):
            converse_gamma(GaussianProblem(1, 1, 0.25, 0.5))

    def test_cross_check_random(self, rng):
        found = 0
        while found < 50:
            p = GaussianProblem(
                rng.uniform(0.3, 2),
                rng.uniform(0.3, 2),
                rng.uniform(0.02, 1.5),
                rng.uniform(0, 0.5),
            )
            if p.constraint_slack:
                continue
            found += 1
            assert h_x_given_y(p.var_x, p.var_u) - converse_gamma(p) == pytest.approx(
                second_branch_rate(p, clamp=False), abs=1e-9
            )


class TestInvariants:
    def test_branch_boundary_continuity(self, rng):
        for _ in range(100):
            var_x = rng.uniform(0.3, 3)
            var_u = rng.uniform(0.3, 3)
            dd = rng.uniform(0.02, 2)
            p0 = GaussianProblem(var_x, var_u, dd, 0.0)
            de = min(dd, p0.residual_var) ** 2 / var_u
            p = GaussianProblem(var_x, var_u, dd, de)
            assert r_wz_gaussian(var_x, var_u, dd) == pytest.approx(
                second_branch_rate(p), abs=1e-12
            )

    def test_de_zero_equals_cr_exactly(self):
        for dd in np.linspace(0.01, 2.0, 50):
            p = GaussianProblem(1.3, 0.7, float(dd), 0.0)
            assert r_gaussian(p) == r_cr_gaussian(1.3, 0.7, float(dd))

    def test_wz_equality_under_slack_conditions(self, rng):
        for _ in range(200):
            var_x = rng.uniform(0.3, 3)
            var_u = rng.uniform(0.3, 3)
            dd = rng.uniform(0.02, 3)
            de = rng.uniform(0, 3)
            p = GaussianProblem(var_x, var_u, dd, de)
            b = math.sqrt(de / var_u)
            si2 = (1 - b) ** 2 * var_x <= dd - de
            if p.constraint_slack or si2:
                assert r_gaussian(p) == r_wz_gaussian(var_x, var_u, dd)

    def test_sandwich(self, rng):
        for _ in range(200):
            var_x = rng.uniform(0.3, 3)
            var_u = rng.uniform(0.3, 3)
            dd = rng.uniform(0.02, 3)
            de = rng.uniform(0, 3)
            p = GaussianProblem(var_x, var_u, dd, de)
            r = r_gaussian(p)
            assert r_cr_gaussian(var_x, var_u, dd) >= r - 1e-12
            assert r >= r_wz_gaussian(var_x, var_u, dd) - 1e-12

    def test_monotone_in_both_targets(self, rng):
        for _ in range(100):
            var_x = rng.uniform(0.3, 3)
            var_u = rng.uniform(0.3, 3)
            dd = rng.uniform(0.02, 2)
            de = rng.uniform(0, 1)
            r = r_gaussian(GaussianProblem(var_x, var_u, dd, de))
            assert r_gaussian(GaussianProblem(var_x, var_u, dd * 1.3, de)) <= r + 1e-12
            assert r_gaussian(GaussianProblem(var_x, var_u, dd, de + 0.2)) <= r + 1e-12

    def test_midpoint_convexity(self, rng):
        for _ in range(100):
            var_x = rng.uniform(0.3, 3)
            var_u = rng.uniform(0.3, 3)
            a = (rng.uniform(0.02, 2), rng.uniform(0, 1))
            b = (rng.uniform(0.02, 2), rng.uniform(0, 1))
            mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            r_mid = r_gaussian(GaussianProblem(var_x, var_u, *mid))
            r_avg = 0.5 * (
                r_gaussian(GaussianProblem(var_x, var_u, *a))
                + r_gaussian(GaussianProblem(var_x, var_u, *b))
            )
            assert r_mid <= r_avg + 1e-12

    def test_boundary_ties_do_not_move_the_rate(self):
        # the classification boundary picks the lower case; rates agree anyway
        p = GaussianProblem(1, 1, 0.25, 0.0625)
        assert classify_case(p) == 3
        assert r_gaussian(p) == pytest.approx(
            scheme_rate(scheme_params(p), 1, 1), abs=1e-12
        )
