import math
from fractions import Fraction

import pytest

from numerics import DomainError, SeriesError
from qseries import (
    CHI_M3,
    OMEGA,
    FracSeries,
    Primitive,
    SeriesParseError,
    a_theta,
    b_theta,
    c_theta,
    eta,
    eval_numeric,
    eval_real,
    lambert_eval,
    log_eta_t,
    log_theta_t,
    parse_expr,
    phi,
    phineg,
    psi,
    psi_excess_t,
    qpow,
    series_equal,
    series_of,
)


def test_pentagonal_numbers():
    s = series_of(eta(1) * qpow(Fraction(-1, 24)), 13)
    assert s.items() == [(0, 1), (1, -1), (2, -1), (5, 1), (7, 1), (12, -1)]


def test_theta_coefficients():
    assert series_of(phi(1), 10).items() == [(0, 1), (1, 2), (4, 2), (9, 2)]
    assert series_of(a_theta(1), 8).items() == [(0, 1), (1, 6), (3, 6), (4, 6), (7, 12)]


def test_borwein_cubic_identity():
    assert series_equal(a_theta(1) ** 3, b_theta(1) ** 3 + c_theta(1) ** 3, 60)


def test_somos_identity():
    lhs = 3 * eta(6) ** 4 + b_theta(1) * c_theta(12)
    assert series_equal(lhs, b_theta(4) * c_theta(3), 60)


def test_phi_is_not_psi():
    assert not series_equal(phi(1), psi(1), 5)


def test_fractional_exponents():
    s = series_of(c_theta(1), 3)
    assert s.coefficient(Fraction(1, 3)) == 3
    assert s.valuation() == Fraction(1, 3)
    assert s.lines()[0] == "1/3\t3"


def test_coefficient_beyond_order():
    s = series_of(phi(1), 5)
    with pytest.raises(SeriesError):
        s.coefficient(5)


def test_fracseries_arithmetic():
    x = FracSeries({Fraction(1): 1}, None)
    one = FracSeries.constant(1)
    assert ((one + x) * (one - x)).items() == [(0, 1), (2, -1)]
    assert (x - x).is_zero()


def test_inverse_of_truncated_monomial():
    # 1 + O(q^5): un seul terme connu
    assert series_of(parse_expr("1/phi(q^10)"), 5).items() == [(0, 1)]
    half = FracSeries({Fraction(1): 2}, Fraction(6)).inverse()
    assert half.items() == [(-1, Fraction(1, 2))]
    assert half.order == 4


def test_division_by_constant():
    lhs = series_of(parse_expr("(3*a(q^3) - a(q))/2"), 60)
    assert (lhs - series_of(b_theta(1), 60)).is_zero()
    assert series_equal(c_theta(1), parse_expr("(a(q^(1/3)) - a(q))/2"), 30)


def test_parse_matches_constructors():
    parsed = series_of(parse_expr("b(q^4)*c(q^3) - 3*eta(q^6)^4"), 40)
    built = series_of(b_theta(1) * c_theta(12), 40)
    assert (parsed - built).is_zero()
    assert series_of(parse_expr("eta(q)/eta(q)"), 5).lines() == ["0/1\t1"]


@pytest.mark.parametrize("text,position", [("eta(q", 5), ("phi(q) +", 8), ("foo(q)", 0)])
def test_parse_errors_carry_position(text, position):
    with pytest.raises(SeriesParseError) as info:
        parse_expr(text)
    assert info.value.position == position


def test_log_eta_inversion_continuity():
    t = 2 * math.pi
    assert log_eta_t(t * (1 - 1e-12)) == pytest.approx(log_eta_t(t), abs=1e-10)
    # η(e^{-π}) = √2·η(e^{-4π})
    assert eval_real(eta(1), math.exp(-math.pi)) == pytest.approx(
        math.sqrt(2) * eval_real(eta(1), math.exp(-4 * math.pi)), rel=1e-13)
    with pytest.raises(DomainError):
        log_eta_t(0.0)


def test_log_eta_small_t_is_finite():
    assert math.isfinite(log_eta_t(1e-3))


def test_psi_excess_across_inversion():
    for t in (0.5, 2 * math.pi * (1 - 1e-12), 2 * math.pi, 9.0):
        direct = log_theta_t(Primitive.PSI, t) - t / 8 - 0.5 * math.log(math.pi / (2 * t))
        assert psi_excess_t(t) == pytest.approx(direct, abs=1e-12)
    # D ~ −2e^{−2π²/t} quand t → 0
    t = 0.5
    assert psi_excess_t(t) == pytest.approx(-2 * math.exp(-2 * math.pi ** 2 / t), rel=1e-6)
    assert psi_excess_t(1e-3) == 0.0
    with pytest.raises(DomainError):
        psi_excess_t(0.0)


def test_eval_numeric_at_zero():
    assert eval_numeric(phi(1), 0) == 1
    assert eval_numeric(eta(1), 0) == 0


def test_eval_numeric_rejects_unit_disk_boundary():
    with pytest.raises(DomainError):
        eval_numeric(phi(1), 1.0)


def test_cubic_theta_relations():
    q = 0.2
    a1, a3 = eval_real(a_theta(1), q), eval_real(a_theta(3), q)
    assert eval_real(b_theta(1), q) == pytest.approx((3 * a3 - a1) / 2, rel=1e-13)
    assert eval_real(c_theta(1), q) == pytest.approx(
        (eval_real(a_theta(Fraction(1, 3)), q) - a1) / 2, rel=1e-12)


def test_a_of_omega_q():
    # les exposants de a(q) ne sont jamais ≡ 2 mod 3
    q = 0.2
    a1, a3 = eval_real(a_theta(1), q), eval_real(a_theta(3), q)
    z = eval_numeric(a_theta(1), OMEGA * q)
    assert z == pytest.approx(a3 + OMEGA * (a1 - a3), abs=1e-13)


def test_lambert_numeric_matches_theta():
    q = 0.3
    assert 1 + 6 * lambert_eval("chi3", "plain", q) == pytest.approx(eval_real(a_theta(1), q), rel=1e-13)
    assert 1 + 4 * lambert_eval("chi4", "plain", q) == pytest.approx(eval_real(phi(1), q) ** 2, rel=1e-13)
    assert lambert_eval(CHI_M3, "plain", 0.0) == 0.0
    with pytest.raises(DomainError):
        lambert_eval("chi3", "plain", 1.0)


def test_alternating_lambert_is_a_at_minus_q():
    q = 0.3
    value = 1 + 6 * lambert_eval("chi3", "alt", q)
    assert value == pytest.approx(eval_numeric(a_theta(1), -q).real, rel=1e-13)
    assert value == pytest.approx(2 * eval_real(a_theta(4), q) - eval_real(a_theta(1), q), rel=1e-13)
    assert series_equal(parse_expr("1 + 6*lambert(chi3, alt, q)"), parse_expr("2*a(q^4) - a(q)"), 80)


def test_phineg_numeric():
    q = 0.4
    direct = 1 + 2 * sum((-1) ** n * q ** (n * n) for n in range(1, 30))
    assert eval_real(phineg(1), q) == pytest.approx(direct, rel=1e-14)
