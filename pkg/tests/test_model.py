"""Nonlinearity models: evaluation, remainders, combined bounds, hypotheses."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbif import (ConfigError, NonlinearityModel, eval_f, eval_fprime,
                    f_extended, fprime_extended, linear_model,
                    polynomial_model, quadratic_model, r0_bounds,
                    reference_model, remainder, remainder_limits,
                    validate_hypotheses, zeta)


def test_reference_values_at_zero_and_one():
    m = reference_model()
    assert eval_f(m, 1, 0.0) == 0.0
    assert eval_f(m, 1, 1.0) == 1.0  # 1 - 1 + 1
    assert eval_f(m, 2, 2.0) == 4.0  # 2 + 2


def test_negative_argument_is_domain_error():
    m = reference_model()
    with pytest.raises(ValueError):
        eval_f(m, 1, -0.5)
    with pytest.raises(ValueError):
        eval_fprime(m, 2, -1e-9)


def test_extension_is_linear_below_zero():
    m = reference_model()
    assert f_extended(m, 1, -0.25) == -0.25 * m.fp0_1
    assert fprime_extended(m, 1, -0.25) == m.fp0_1
    # C1 match at the origin
    assert f_extended(m, 2, 0.0) == 0.0
    assert fprime_extended(m, 2, 0.0) == m.fp0_2


def test_remainder_reference_points():
    m = reference_model()
    assert remainder(m, 1, 0.1) == pytest.approx(-0.009, abs=1e-15)
    assert remainder(m, 2, 0.2) == pytest.approx(0.02, abs=1e-15)
    with pytest.raises(ValueError):
        remainder(m, 1, 0.0)


def test_linear_model_remainder_vanishes():
    m = linear_model(2.0, 3.0)
    for s in (1e-6, 0.1, 1.0, 50.0):
        assert remainder(m, 1, s) == 0.0
        assert remainder(m, 2, s) == 0.0
    assert r0_bounds(m) == (0.0, 0.0)


def test_remainder_limits_analytic_reference():
    assert remainder_limits(reference_model()) == (-1.0, -1.0, 0.5, 0.5)


def test_remainder_limits_numeric_estimate_matches_analytic():
    # same polynomials, analytic limits withheld
    m = polynomial_model([0.0, 1.0, -1.0, 1.0], [0.0, 1.0, 0.5],
                         p1=2.0, p2=3.0, b1=0.5, b2=1.0,
                         nu1=2.0, nu2=2.0, K=0.75)
    lo1, hi1, lo2, hi2 = remainder_limits(m)
    assert lo1 == pytest.approx(-1.0, rel=0.01)
    assert hi1 == pytest.approx(-1.0, rel=0.01)
    assert lo2 == pytest.approx(0.5, rel=0.01)
    assert hi2 == pytest.approx(0.5, rel=0.01)


def test_r0_bounds_reference_is_minus_one_eighth():
    lo, hi = r0_bounds(reference_model())
    assert lo == pytest.approx(-0.125, abs=1e-15)
    assert hi == pytest.approx(-0.125, abs=1e-15)


def test_r0_bounds_weighted_combination():
    # zeta = 2 (derivative ratio 4), nu = 2, R1 = 3, R2 = 0:
    # R0 = 1/2 * (2/3) * 3 + 1/2 * (1/3) * 0 = 1
    m = NonlinearityModel(
        f1=lambda s: s, f2=lambda s: 4.0 * s,
        df1=lambda s: 1.0, df2=lambda s: 4.0,
        p1=2.0, p2=2.0, b1=1.0, b2=1.0, fp0_1=1.0, fp0_2=4.0,
        nu1=2.0, nu2=2.0, K=1.0, r_lims=(3.0, 3.0, 0.0, 0.0))
    assert zeta(m) == pytest.approx(2.0, abs=1e-15)
    lo, hi = r0_bounds(m)
    assert lo == pytest.approx(1.0, abs=1e-14)
    assert hi == pytest.approx(1.0, abs=1e-14)


def test_validate_reference_model_passes():
    report = validate_hypotheses(reference_model(), 3)
    assert report.all_pass, [c.name for c in report.failed()]
    assert report["exponent-range"].passed  # p1=2, p2=3, window (1, 3]


def test_validate_rejects_vanishing_derivative_at_zero():
    m = NonlinearityModel(
        f1=lambda s: s * s, f2=lambda s: s,
        df1=lambda s: 2.0 * s, df2=lambda s: 1.0,
        p1=2.0, p2=2.0, b1=1.0, b2=1.0, fp0_1=0.0, fp0_2=1.0,
        nu1=2.0, nu2=2.0, K=1e-8)
    report = validate_hypotheses(m, 3)
    assert not report["positive-derivative-at-zero"].passed
    assert not report.all_pass


def test_validate_rejects_both_exponents_critical():
    m = polynomial_model([0.0, 1.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0],
                         p1=3.0, p2=3.0, b1=1.0, b2=1.0,
                         nu1=3.0, nu2=3.0, K=1.0)
    report = validate_hypotheses(m, 3)  # critical exponent N/(N-2) = 3
    assert not report["not-both-critical"].passed


def test_polynomial_model_rejects_bad_coefficients():
    with pytest.raises(ConfigError):
        polynomial_model([1.0, 1.0], [0.0, 1.0], p1=2, p2=2, b1=1, b2=1,
                         nu1=2, nu2=2, K=1)  # f(0) != 0
    with pytest.raises(ConfigError):
        polynomial_model([0.0, -1.0], [0.0, 1.0], p1=2, p2=2, b1=1, b2=1,
                         nu1=2, nu2=2, K=1)  # f'(0) <= 0


def test_model_parameter_validation():
    with pytest.raises(ConfigError):
        linear_model(0.0, 1.0)
    with pytest.raises(ConfigError):
        polynomial_model([0, 1.0], [0, 1.0], p1=2, p2=2, b1=1, b2=1,
                         nu1=1.0, nu2=2.0, K=1)  # nu must exceed 1
    with pytest.raises(ConfigError):
        polynomial_model([0, 1.0], [0, 1.0], p1=2, p2=2, b1=1, b2=1,
                         nu1=2.0, nu2=2.0, K=0.0)


@given(st.floats(min_value=1e-6, max_value=1e3))
def test_remainder_identity(s):
    # f_i(s) = f_i'(0) s + R_i(s) exactly, up to rounding of f_i(s)
    m = reference_model()
    for i in (1, 2):
        fp0 = m.fp0_1 if i == 1 else m.fp0_2
        err = abs(eval_f(m, i, s) - fp0 * s - remainder(m, i, s))
        assert err <= 1e-12 * max(1.0, abs(eval_f(m, i, s)))


@given(st.floats(min_value=1e-3, max_value=1e2))
def test_derivative_matches_central_difference(s):
    m = reference_model()
    d = 1e-6 * max(1.0, s)
    for i in (1, 2):
        fd = (eval_f(m, i, s + d) - eval_f(m, i, s - d)) / (2.0 * d)
        ex = eval_fprime(m, i, s)
        assert abs(ex - fd) <= 1e-6 * max(1.0, abs(ex))


@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0, max_value=3))
def test_r0_bounds_monotone_in_remainder_limits(base, bump):
    # raising the upper limit of either remainder cannot lower R0's upper bound
    def bounds(hi1, hi2):
        m = NonlinearityModel(
            f1=lambda s: s, f2=lambda s: s,
            df1=lambda s: 1.0, df2=lambda s: 1.0,
            p1=2.0, p2=2.0, b1=1.0, b2=1.0, fp0_1=1.0, fp0_2=1.0,
            nu1=2.0, nu2=2.0, K=1.0,
            r_lims=(base - 1.0, hi1, base - 1.0, hi2))
        return r0_bounds(m)
    _, hi_ref = bounds(base, base)
    _, hi_b1 = bounds(base + bump, base)
    _, hi_b2 = bounds(base, base + bump)
    assert hi_b1 >= hi_ref - 1e-12
    assert hi_b2 >= hi_ref - 1e-12


def test_zeta_and_nu_accessors():
    m = reference_model()
    assert zeta(m) == 1.0
    assert m.nu == 2.0
    assert math.isclose(zeta(linear_model(1.0, 4.0)), 2.0)
    with pytest.raises(ValueError):
        zeta(NonlinearityModel(
            f1=lambda s: s * s, f2=lambda s: s,
            df1=lambda s: 2.0 * s, df2=lambda s: 1.0,
            p1=2.0, p2=2.0, b1=1.0, b2=1.0, fp0_1=0.0, fp0_2=1.0,
            nu1=2.0, nu2=2.0, K=1.0))


def test_quadratic_model_data():
    m = quadratic_model()
    assert remainder_limits(m) == (1.0, 1.0, 1.0, 1.0)
    assert r0_bounds(m) == (0.5, 0.5)
    assert validate_hypotheses(m, 3).all_pass


def test_estimation_unused_when_analytic_limits_given():
    # a nonpolynomial remainder would not settle; analytic values bypass it
    m = NonlinearityModel(
        f1=lambda s: s + s * s * math.sin(math.log(max(s, 1e-300))) ** 2,
        f2=lambda s: s + 0.5 * s * s,
        df1=lambda s: 1.0, df2=lambda s: 1.0 + s,
        p1=2.0, p2=2.0, b1=0.5, b2=1.0, fp0_1=1.0, fp0_2=1.0,
        nu1=2.0, nu2=2.0, K=0.5, r_lims=(0.0, 1.0, 0.5, 0.5))
    assert remainder_limits(m) == (0.0, 1.0, 0.5, 0.5)


def test_growth_coefficient_check_detects_wrong_b():
    m = polynomial_model([0.0, 1.0, -1.0, 1.0], [0.0, 1.0, 0.5],
                         p1=2.0, p2=3.0, b1=2.5, b2=1.0,
                         nu1=2.0, nu2=2.0, K=0.75)  # b1 is wrong (true 0.5)
    report = validate_hypotheses(m, 3)
    assert not report["growth-coefficient"].passed
