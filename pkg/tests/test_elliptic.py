import math

import mpmath as mp
import pytest

import elliptic
from elliptic import (
    W_K_MIN,
    agm,
    complete_K,
    ell_pi3,
    elliptic_ratio,
    ellipticexpansion,
    h_alpha,
    jacobi,
    log_sn_fourier,
    modulus_params,
    nome_to_alpha,
    w_curve,
    w_curve_params,
    w_fourier,
    w_nome,
    w_nome_from_periods,
    w_ode_residual,
    w_period_routes,
    w_periods,
)
from numerics import ConvergenceError, DomainError


def test_agm_and_K():
    assert agm(1.0, 1.0) == 1.0
    assert complete_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    # K(1/2) = Γ(1/4)²/(4√π)
    assert complete_K(0.5) == pytest.approx(math.gamma(0.25) ** 2 / (4 * math.sqrt(math.pi)), rel=1e-14)
    with pytest.raises(DomainError):
        complete_K(1.0)
    with pytest.raises(DomainError):
        agm(-1.0, 1.0)


@pytest.mark.parametrize("a,b", [(1.0, math.sqrt(0.5)), (1.0, 1e-3), (3.0, 7.0), (1.0, 1.0 - 1e-15)])
def test_agm_reaches_last_bit(a, b):
    assert agm(a, b) == pytest.approx(float(mp.agm(a, b)), rel=1e-15)


def test_nome_round_trip():
    for alpha in (0.1, 0.5, 0.9):
        q = modulus_params(alpha).nome
        assert nome_to_alpha(q) == pytest.approx(alpha, rel=1e-12)
    # cas lemniscatique
    assert modulus_params(0.5).nome == pytest.approx(math.exp(-math.pi), rel=1e-14)


def test_nome_to_alpha_increasing():
    values = [nome_to_alpha(q) for q in (0.01, 0.1, 0.3, 0.6)]
    assert values == sorted(values)
    assert all(0 < v < 1 for v in values)
    with pytest.raises(DomainError):
        nome_to_alpha(0.0)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.95])
def test_jacobi_identities(alpha):
    K = complete_K(alpha)
    assert jacobi(0.0, alpha) == pytest.approx((0.0, 1.0, 1.0), abs=1e-15)
    sn, cn, dn = jacobi(K, alpha)
    assert sn == pytest.approx(1.0, abs=1e-12)
    assert cn == pytest.approx(0.0, abs=1e-7)
    assert dn == pytest.approx(math.sqrt(1 - alpha), abs=1e-12)
    sn, cn, dn = jacobi(0.37 * K, alpha)
    assert sn * sn + cn * cn == pytest.approx(1.0, abs=1e-14)
    assert dn * dn + alpha * sn * sn == pytest.approx(1.0, abs=1e-14)


def test_ell_pi3_reduces_to_K():
    assert ell_pi3(0.0, 0.3) == pytest.approx(complete_K(0.3), rel=1e-14)
    with pytest.raises(DomainError):
        ell_pi3(1.0, 0.3)


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.7])
def test_h_alpha_is_pi_over_4(alpha):
    assert h_alpha(alpha) == pytest.approx(math.pi / 4, abs=1e-12)


@pytest.mark.parametrize("frac", [0.1, 0.3, 0.8])
def test_fourier_expansion_matches_direct(frac):
    alpha = 0.5
    u = frac * complete_K(alpha)
    assert ellipticexpansion(u, alpha) == pytest.approx(elliptic_ratio(u, alpha), abs=1e-10)


def test_log_sn_fourier():
    alpha = 0.5
    K = complete_K(alpha)
    for frac in (0.2, 0.4, 1.0):
        sn, _, _ = jacobi(frac * K, alpha)
        assert log_sn_fourier(frac * K, alpha) == pytest.approx(math.log(sn), abs=1e-10)
    with pytest.raises(DomainError):
        log_sn_fourier(0.0, alpha)


K_W = 2.0


def test_w_curve_period_routes_agree():
    weierstrass, direct = w_period_routes(K_W)
    assert weierstrass == pytest.approx(direct, rel=1e-9)
    prm = w_curve_params(K_W)
    assert prm.periodK == pytest.approx(direct, rel=1e-9)
    assert prm.periodKprime.real == 0.0
    assert prm.periodKprime.imag > 0


def test_w_periods_refuses_disagreeing_routes(monkeypatch):
    monkeypatch.setattr(elliptic, "w_period_routes", lambda k: (2.0, 2.0 * (1 + 1e-6)))
    with pytest.raises(ConvergenceError):
        w_periods(K_W)
    monkeypatch.setattr(elliptic, "w_period_routes", lambda k: (2.0, 2.0 * (1 + 1e-12)))
    K, Kp = w_periods(K_W)
    assert K == 2.0
    assert Kp.imag > 0


def test_w_curve_values():
    K = w_curve_params(K_W).periodK
    assert w_curve(K, K_W) == pytest.approx(1.0, abs=1e-10)
    # symétrie x -> 2K - x
    assert w_curve(0.3 * K, K_W) == pytest.approx(w_curve(1.7 * K, K_W), abs=1e-10)
    with pytest.raises(DomainError):
        w_curve(0.0, K_W)
    with pytest.raises(DomainError):
        w_curve_params(1.2)


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.9])
def test_w_curve_solves_ode(frac):
    K = w_curve_params(K_W).periodK
    assert w_ode_residual(frac * K, K_W) < 1e-8


def test_w_nome_routes_agree():
    nome = w_nome(K_W)
    assert 0 < nome.q < 1
    assert nome.q == pytest.approx(w_nome_from_periods(K_W), rel=1e-8)


def test_w_fourier_matches_curve():
    K = w_curve_params(K_W).periodK
    for frac in (0.3, 1.0):
        four = w_fourier(frac * K, K_W)
        assert four.w == pytest.approx(w_curve(frac * K, K_W), abs=1e-9)
        assert four.tail < 1e-12


def test_w_k_min():
    assert W_K_MIN > 4 / 3
