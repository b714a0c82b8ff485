"""
Hypergeo - Fonctions Gamma, digamma et séries hypergéométriques pFq

- gamma_fn / digamma : mpmath, pôles refusés explicitement
- pfq : somme directe avec critère d'arrêt "trois termes consécutifs petits
  et décroissants" pour |z| <= 0.95, mpmath.hyper (accélération de
  convergence) au-delà jusqu'à |z| = 1
- hyp2f1_13_23_1 : 2F1(1/3, 2/3; 1; z) avec formule de connexion logarithmique
  (c - a - b = 0) en puissances de 1 - z pour z > 0.9
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Tuple, Union

import mpmath as mp

from numerics import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


# =============================================================================
#  CONFIGURATION
# =============================================================================

STOP_RELATIVE = 1e-17          # seuil relatif d'un "petit" terme
STOP_CONSECUTIVE = 3           # nombre de petits termes consécutifs requis
MAX_TERMS = 200_000            # garde-fou sur la somme directe
DIRECT_RADIUS = 0.95           # au-delà: mpmath.hyper
CONNECTION_THRESHOLD = 0.9     # 2F1(1/3,2/3;1;z): connexion pour z > 0.9

# Γ(1)/(Γ(1/3)Γ(2/3)) = √3/(2π)
_CONNECTION_PREFACTOR = math.sqrt(3) / (2 * math.pi)


# =============================================================================
#  GAMMA / DIGAMMA
# =============================================================================

def _check_pole(x: float, name: str) -> None:
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"{name}: pôle en x={x!r} (entier négatif ou nul)")


def gamma_fn(x: float) -> float:
    _check_pole(x, "gamma")
    return float(mp.gamma(x))


def digamma(x: float) -> float:
    _check_pole(x, "digamma")
    return float(mp.digamma(x))


# =============================================================================
#  SOMMATION
# =============================================================================

def sum_until_stable(terms: Iterator[float], label: str, max_terms: int = MAX_TERMS) -> float:
    """
    Somme une série terme à terme.

    Arrêt quand STOP_CONSECUTIVE termes consécutifs sont chacun
    < STOP_RELATIVE·|somme partielle| et décroissants en module; un terme
    exactement nul après le premier signale une série terminée.
    """
    total = 0.0
    small = 0
    prev = math.inf
    for n, term in enumerate(terms):
        if n >= max_terms:
            break
        total += term
        if n > 0 and term == 0:
            return total
        mag = abs(term)
        if mag < STOP_RELATIVE * abs(total) and mag <= prev:
            small += 1
            if small >= STOP_CONSECUTIVE:
                return total
        else:
            small = 0
        prev = mag
    raise ConvergenceError(f"[HYPER] {label}: critère d'arrêt non atteint après {max_terms} termes")


# =============================================================================
#  pFq
# =============================================================================

@dataclass(frozen=True)
class HypSpec:
    """Paramètres d'une série pFq (listes triées à la construction)."""
    upper: Tuple[Fraction, ...]
    lower: Tuple[Fraction, ...]
    z: float

    def __init__(self, upper: Sequence[Rational], lower: Sequence[Rational], z: float):
        object.__setattr__(self, "upper", tuple(sorted(Fraction(a) for a in upper)))
        object.__setattr__(self, "lower", tuple(sorted(Fraction(b) for b in lower)))
        object.__setattr__(self, "z", float(z))
        self.validate()

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)

    @property
    def excess(self) -> Fraction:
        """Σ(lower) − Σ(upper), qui gouverne la convergence en |z| = 1."""
        return sum(self.lower, Fraction(0)) - sum(self.upper, Fraction(0))

    @property
    def terminates(self) -> bool:
        return any(a <= 0 and a.denominator == 1 for a in self.upper)

    def validate(self) -> None:
        for b in self.lower:
            if b <= 0 and b.denominator == 1:
                raise DomainError(f"paramètre inférieur {b} entier négatif ou nul")
        if not math.isfinite(self.z):
            raise DomainError(f"argument non fini: {self.z!r}")
        if self.terminates or self.p <= self.q:
            return
        if self.p > self.q + 1:
            raise DomainError(f"{self.p}F{self.q} diverge pour tout z != 0")
        if abs(self.z) > 1:
            raise DomainError(f"{self.p}F{self.q} diverge pour |z| = {abs(self.z)} > 1")
        if abs(self.z) == 1 and self.excess <= 0:
            raise DomainError(
                f"{self.p}F{self.q} en |z| = 1 exige Σ(inf) − Σ(sup) > 0 (ici {self.excess})")

    def label(self) -> str:
        up = ",".join(str(a) for a in self.upper)
        lo = ",".join(str(b) for b in self.lower)
        return f"{self.p}F{self.q}({up};{lo};{self.z:g})"


def _pfq_terms(upper: Sequence[float], lower: Sequence[float], z: float) -> Iterator[float]:
    term = 1.0
    n = 0
    while True:
        yield term
        num = 1.0
        for a in upper:
            num *= a + n
        den = float(n + 1)
        for b in lower:
            den *= b + n
        term *= num / den * z
        n += 1


def pfq(spec: HypSpec) -> float:
    """Valeur de pFq(upper; lower; z) pour z réel."""
    if spec.z == 0:
        return 1.0
    if abs(spec.z) <= DIRECT_RADIUS or spec.terminates or spec.p <= spec.q:
        up = [float(a) for a in spec.upper]
        lo = [float(b) for b in spec.lower]
        return sum_until_stable(_pfq_terms(up, lo, spec.z), spec.label())
    value = mp.hyper([mp.mpf(a.numerator) / a.denominator for a in spec.upper],
                     [mp.mpf(b.numerator) / b.denominator for b in spec.lower], spec.z)
    if isinstance(value, mp.mpc):
        if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
            raise DomainError(f"{spec.label()}: valeur complexe hors du domaine réel")
        value = value.real
    result = float(value)
    logger.debug(f"[HYPER] {spec.label()} = {result:.16g} (mpmath)")
    return result


def hyp(upper: Sequence[Rational], lower: Sequence[Rational], z: float) -> float:
    """Raccourci: pfq(HypSpec(upper, lower, z))."""
    return pfq(HypSpec(upper, lower, z))


# =============================================================================
#  2F1(1/3, 2/3; 1; z)
# =============================================================================

def _connection_terms(z: float) -> Iterator[float]:
    a, b = 1.0 / 3.0, 2.0 / 3.0
    w = 1.0 - z
    log_w = math.log(w)
    psi_1 = digamma(1.0)
    psi_a = digamma(a)
    psi_b = digamma(b)
    coef = 1.0
    n = 0
    while True:
        yield coef * (2 * psi_1 - psi_a - psi_b - log_w)
        coef *= (a + n) * (b + n) / ((n + 1) ** 2) * w
        psi_1 += 1.0 / (n + 1)
        psi_a += 1.0 / (a + n)
        psi_b += 1.0 / (b + n)
        n += 1


def hyp2f1_13_23_1(z: float) -> float:
    """
    2F1(1/3, 2/3; 1; z) pour z < 1.

    Série directe pour z <= 0.9; au-delà, développement logarithmique en
    puissances de (1 − z). Refus en z >= 1 (divergence logarithmique).
    """
    if z >= 1:
        raise DomainError(f"2F1(1/3,2/3;1;z) diverge en z={z!r} >= 1")
    if z <= CONNECTION_THRESHOLD:
        return hyp([Fraction(1, 3), Fraction(2, 3)], [1], z)
    series = sum_until_stable(_connection_terms(z), f"connexion 2F1(1/3,2/3;1;{z:g})")
    return _CONNECTION_PREFACTOR * series


def hyp2f1_12_12_1(z: float) -> float:
    """2F1(1/2, 1/2; 1; z) = (2/π)K(z), z < 1."""
    if z >= 1:
        raise DomainError(f"2F1(1/2,1/2;1;z) diverge en z={z!r} >= 1")
    if z <= DIRECT_RADIUS:
        return hyp([Fraction(1, 2), Fraction(1, 2)], [1], z)
    return float(2 / mp.pi * mp.ellipk(z))


def gamma_ratio(numer: Sequence[float], denom: Sequence[float]) -> float:
    """Π Γ(numer) / Π Γ(denom)."""
    out = 1.0
    for x in numer:
        out *= gamma_fn(x)
    for x in denom:
        out /= gamma_fn(x)
    return out


