import itertools
import math
from fractions import Fraction

import mpmath as mp
import pytest

from elliptic import complete_K
from hypergeo import (
    HypSpec,
    digamma,
    gamma_fn,
    gamma_ratio,
    hyp,
    hyp2f1_12_12_1,
    hyp2f1_13_23_1,
    sum_until_stable,
)
from numerics import ConvergenceError, DomainError


def test_gamma_and_digamma():
    assert gamma_fn(0.5) ** 2 == pytest.approx(math.pi, rel=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-14)
    assert gamma_ratio([5.0], [3.0]) == pytest.approx(12.0, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles(x):
    with pytest.raises(DomainError):
        gamma_fn(x)
    with pytest.raises(DomainError):
        digamma(x)


def test_geometric_series():
    assert hyp([1], [], 0.5) == pytest.approx(2.0, rel=1e-15)


def test_zeta2_at_unit_argument():
    # 3F2(1,1,1;2,2;1) = ζ(2)
    assert hyp([1, 1, 1], [2, 2], 1.0) == pytest.approx(math.pi ** 2 / 6, rel=1e-13)


def test_terminating_series():
    # 2F1(-2, 1; 1; z) = (1 - z)^2
    assert hyp([-2, 1], [1], 3.0) == pytest.approx(4.0, abs=1e-14)


def test_spec_sorts_parameters():
    spec = HypSpec([Fraction(2, 3), Fraction(1, 3)], [1], 0.2)
    assert spec.upper == (Fraction(1, 3), Fraction(2, 3))
    assert spec.excess == 0
    assert "2F1" in spec.label()


@pytest.mark.parametrize("upper,lower,z", [
    ([1, 1, 1], [2, 2], 1.5),        # |z| > 1
    ([1, 1], [1], 1.0),              # excès <= 0 en |z| = 1
    ([1, 1, 1], [2], 0.1),           # p > q + 1
    ([1], [0], 0.1),                 # paramètre inférieur entier <= 0
])
def test_divergent_series_rejected(upper, lower, z):
    with pytest.raises(DomainError):
        hyp(upper, lower, z)


def test_hyp2f1_half_is_complete_K():
    for z in (0.1, 0.5, 0.9):
        assert hyp2f1_12_12_1(z) == pytest.approx(2 / math.pi * complete_K(z), rel=1e-13)
    assert hyp2f1_12_12_1(0.99) == pytest.approx(float(2 / mp.pi * mp.ellipk(0.99)), rel=1e-13)


def test_hyp2f1_third_connection_branch():
    for z in (0.5, 0.9, 0.95, 0.999):
        expected = float(mp.hyp2f1(mp.mpf(1) / 3, mp.mpf(2) / 3, 1, z))
        assert hyp2f1_13_23_1(z) == pytest.approx(expected, rel=1e-12)
    # continuité au seuil de connexion
    assert hyp2f1_13_23_1(0.9) == pytest.approx(hyp2f1_13_23_1(0.9 + 1e-12), rel=1e-10)


def test_hyp2f1_rejects_unit_argument():
    with pytest.raises(DomainError):
        hyp2f1_13_23_1(1.0)
    with pytest.raises(DomainError):
        hyp2f1_12_12_1(1.0)


def test_sum_until_stable_raises_without_convergence():
    with pytest.raises(ConvergenceError):
        sum_until_stable(itertools.repeat(1.0), "constante", max_terms=100)


def test_sum_until_stable_stops_on_zero_term():
    assert sum_until_stable(iter([1.0, 2.0, 0.0, 5.0]), "finie") == 3.0
