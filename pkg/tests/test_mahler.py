import math

import pytest

from mahler import (
    G_HYPER_MIN,
    Family,
    MahlerQuery,
    df_dz,
    f_aux,
    g_f_decomposition,
    g_via_J,
    jensen_integrand,
    leading_log_integral,
    mahler,
    mahler_direct,
    mahler_grid,
    mahler_hyper,
)
from numerics import DomainError, central_diff


def test_family_parse():
    assert Family.parse("G") is Family.G
    assert Family.parse(Family.M) is Family.M
    with pytest.raises(DomainError):
        Family.parse("x")


@pytest.mark.parametrize("family,alpha,route", [
    ("m", 2.0, "hyper"),
    ("n", 2.0, "direct"),
    ("n", 3.5, "hyper"),
    ("g", -2.0, "direct"),
    ("g", 1.0, "direct"),
    ("g", 4.0, "j_integral"),
    ("g", 8.0, "j_integral"),
    ("g", 10.0, "hyper"),
])
def test_auto_route(family, alpha, route):
    assert MahlerQuery(Family.parse(family), alpha).resolved_route() == route


@pytest.mark.parametrize("family,alpha,route", [
    ("g", 1.0, "j_integral"),
    ("m", 4.0, "j_integral"),
    ("g", 4.0, "nowhere"),
    ("g", math.inf, "auto"),
])
def test_invalid_queries(family, alpha, route):
    with pytest.raises(DomainError):
        MahlerQuery(Family.parse(family), alpha, route)


def test_hyper_refuses_out_of_range():
    with pytest.raises(DomainError, match="j_integral"):
        mahler_hyper(Family.G, 4.0)
    with pytest.raises(DomainError):
        mahler_hyper(Family.N_, 2.0)
    with pytest.raises(DomainError):
        g_f_decomposition(G_HYPER_MIN - 1)


def test_leading_log_vanishes():
    for family in Family:
        assert leading_log_integral(family) == pytest.approx(0.0, abs=1e-10)


def test_g_zero_is_zero():
    assert mahler_direct(Family.G, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_boyd_m8_equals_4_m2():
    m8_direct = mahler_direct(Family.M, 8.0)
    m8_hyper = mahler_hyper(Family.M, 8.0)
    assert m8_direct == pytest.approx(m8_hyper, abs=1e-9)
    assert m8_hyper == pytest.approx(4 * mahler_hyper(Family.M, 2.0), abs=1e-9)


def test_m_is_even():
    assert mahler(Family.M, -3.0) == pytest.approx(mahler(Family.M, 3.0), abs=1e-13)


@pytest.mark.parametrize("alpha", [2.0, 3.0])
def test_m_direct_with_kinks_matches_hyper(alpha):
    assert mahler_direct(Family.M, alpha) == pytest.approx(mahler_hyper(Family.M, alpha), abs=1e-8)


def test_n_routes_agree():
    assert mahler_direct(Family.N_, 4.0) == pytest.approx(mahler_hyper(Family.N_, 4.0), abs=1e-8)


def test_g_routes_agree_above_eight():
    assert mahler_direct(Family.G, 10.0) == pytest.approx(mahler_hyper(Family.G, 10.0), abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [4.0, 6.0])
def test_g_via_J_matches_direct(alpha):
    assert g_via_J(alpha) == pytest.approx(mahler_direct(Family.G, alpha), abs=1e-8)


def test_g_via_J_range():
    with pytest.raises(DomainError):
        g_via_J(9.0)


def test_grid_oracle_is_close():
    assert mahler_grid(Family.M, 8.0, n=256) == pytest.approx(mahler_direct(Family.M, 8.0), abs=1e-6)
    with pytest.raises(DomainError):
        mahler_grid(Family.M, 8.0, n=1)


@pytest.mark.slow
def test_n_at_cube_root_of_two_direct_vs_grid():
    # la courbe coupe le tore: la grille converge lentement
    direct = mahler_direct(Family.N_, 2 ** (1 / 3))
    assert direct == pytest.approx(0.44122, abs=1e-3)
    assert mahler_grid(Family.N_, 2 ** (1 / 3), n=1000) == pytest.approx(direct, abs=2e-3)


def test_jensen_integrand_is_finite():
    for s in (0.0, 0.1, 0.25, 0.5):
        assert math.isfinite(jensen_integrand(Family.N_, 2.0, s))


def test_df_dz_matches_numeric_derivative():
    z = 0.01
    assert df_dz(z) == pytest.approx(central_diff(f_aux, z, h=1e-4), rel=1e-7)
    with pytest.raises(DomainError):
        f_aux(0.05)
    with pytest.raises(DomainError):
        df_dz(1 / 27)
