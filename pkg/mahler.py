"""
Mahler - Mesures de Mahler des familles m, g, n

  m(α) = m(α + X + 1/X + Y + 1/Y)
  g(α) = m((1+X)(1+Y)(X+Y) − αXY)
  n(α) = m(X³ + Y³ + 1 − αXY)

Routes:
- direct  : réduction de Jensen en X pour Y = e^{2πis} fixé, quadrature en s
            coupée aux points anguleux (racine traversant le cercle unité)
- hyper   : formes hypergéométriques (m partout, n pour α >= 3.05,
            g pour α >= 8.05 via la décomposition en f)
- j_integral : g(y) = J(y) pour 2 <= y <= 8
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from hypergeo import hyp, hyp2f1_13_23_1
from numerics import DomainError, MlabError, integrate_finite, poly_roots

logger = logging.getLogger(__name__)


# =============================================================================
#  CONFIGURATION
# =============================================================================

LOGPLUS_EPS = 1e-14            # |r| <= 1 + 1e-14 : log⁺ = 0
KINK_GRID = 240                # détection numérique des points anguleux (famille n)
KINK_BISECTIONS = 60
PERTURB_STEPS = (1e-10, -1e-10, 1e-8, -1e-8)

N_HYPER_MIN = 3.05             # 27/α³ <= 0.95
G_HYPER_MIN = 8.05             # 27α²/(α+4)³ et 27α/(α−2)³ dans (0, 0.95]
G_J_RANGE = (2.0, 8.0)

_F4_UPPER = (Fraction(4, 3), Fraction(5, 3), 1, 1)
_F4_LOWER = (2, 2, 2)


class Family(Enum):
    M = "m"
    G = "g"
    N_ = "n"

    @classmethod
    def parse(cls, value: Union["Family", str]) -> "Family":
        if isinstance(value, Family):
            return value
        for fam in cls:
            if fam.value == str(value).lower():
                return fam
        raise DomainError(f"famille inconnue: {value!r} (m, g ou n)")


ROUTES = ("auto", "direct", "hyper", "j_integral")


# =============================================================================
#  ROUTE DIRECTE (JENSEN)
# =============================================================================

def _coefficients(family: Family, alpha: float, Y: complex) -> List[complex]:
    """Coefficients du polynôme en X (degré décroissant) pour Y fixé."""
    if family is Family.M:
        # X·(α + X + 1/X + Y + 1/Y)
        return [1.0, alpha + Y + 1 / Y, 1.0]
    if family is Family.G:
        return [1 + Y, (1 + Y) ** 2 - alpha * Y, Y * (1 + Y)]
    return [1.0, 0.0, -alpha * Y, Y ** 3 + 1]


def _log_plus(r: complex) -> float:
    a = abs(r)
    return math.log(a) if a > 1 + LOGPLUS_EPS else 0.0


def jensen_integrand(family: Family, alpha: float, s: float) -> float:
    """log|coefficient dominant| + Σ log⁺|racines| pour Y = e^{2πis}."""
    family = Family.parse(family)
    for ds in (0.0, *PERTURB_STEPS):
        Y = cmath.exp(2j * math.pi * (s + ds))
        coeffs = _coefficients(family, alpha, Y)
        try:
            roots = poly_roots(coeffs)
        except DomainError:
            continue
        return math.log(abs(coeffs[0])) + sum(_log_plus(r) for r in roots)
    raise MlabError(f"[MAHLER] racines dégénérées persistantes en s={s!r} ({family.value}, α={alpha!r})")


def leading_log_integral(family: Family) -> float:
    """∫₀¹ log|coefficient dominant(e^{2πis})| ds (nul pour les trois familles)."""
    family = Family.parse(family)
    if family is not Family.G:
        return 0.0
    return integrate_finite(lambda s: math.log(abs(1 + cmath.exp(2j * math.pi * s))),
                            0.0, 1.0, breakpoints=(0.5,)).value


def _count_outside(family: Family, alpha: float, s: float) -> int:
    coeffs = _coefficients(family, alpha, cmath.exp(2j * math.pi * s))
    return sum(1 for r in poly_roots(coeffs) if abs(r) > 1 + 1e-12)


def _kinks_numeric(family: Family, alpha: float, a: float, b: float) -> List[float]:
    grid = np.linspace(a, b, KINK_GRID + 1)
    counts = [_count_outside(family, alpha, float(s)) for s in grid]
    kinks = []
    for lo, hi, clo, chi in zip(grid[:-1], grid[1:], counts[:-1], counts[1:]):
        if clo == chi:
            continue
        lo, hi = float(lo), float(hi)
        for _ in range(KINK_BISECTIONS):
            mid = (lo + hi) / 2
            if _count_outside(family, alpha, mid) == clo:
                lo = mid
            else:
                hi = mid
        kinks.append((lo + hi) / 2)
    return kinks


def _kinks(family: Family, alpha: float) -> List[float]:
    """Points anguleux de l'intégrande de Jensen dans le domaine réduit."""
    if family is Family.M:
        # racines sur le cercle tant que |α + 2cos 2πs| <= 2
        out = []
        for v in ((2 - alpha) / 2, (-2 - alpha) / 2):
            if -1 < v < 1:
                out.append(math.acos(v) / (2 * math.pi))
        return out
    if family is Family.G:
        # sur le tore P/(XY) = 4c(cos(θ − φ/2) + c) − α, c = cos(πs) ∈ [0, 1]
        out = []
        if alpha >= -1:
            r = math.sqrt(1 + alpha)
            for c in ((-1 + r) / 2, (-1 - r) / 2, (1 + r) / 2, (1 - r) / 2):
                if 0 < c < 1:
                    out.append(math.acos(c) / math.pi)
        return out
    if alpha > 3:
        # |X³ + Y³ + 1| <= 3 < α sur le tore: pas de zéro
        return []
    return _kinks_numeric(family, alpha, 0.0, 1.0 / 6.0)


def mahler_direct(family: Union[Family, str], alpha: float) -> float:
    """
    Mesure de Mahler par réduction de Jensen.

    Intégrande pair autour de s = 1/2 (coefficients réels); la famille n est
    de plus invariante par Y -> ωY, X -> ω²X, donc de période 1/3 en s.
    """
    family = Family.parse(family)
    if not math.isfinite(alpha):
        raise DomainError(f"α non fini: {alpha!r}")
    upper, factor = (1.0 / 6.0, 6.0) if family is Family.N_ else (0.5, 2.0)
    kinks = sorted(set(k for k in _kinks(family, alpha) if 0 < k < upper))
    res = integrate_finite(lambda s: jensen_integrand(family, alpha, s), 0.0, upper,
                           breakpoints=kinks)
    value = factor * res.value
    logger.debug(f"[MAHLER] direct {family.value}({alpha:g}) = {value:.15g} "
                 f"± {factor * res.err_estimate:.1e} ({len(kinks)} points anguleux)")
    return value


def mahler_grid(family: Union[Family, str], alpha: float, n: int = 2048) -> float:
    """Somme de Riemann aux points milieux d'une grille n×n du tore (oracle brut)."""
    family = Family.parse(family)
    if n < 2:
        raise DomainError(f"grille trop petite: {n!r}")
    grid = (np.arange(n) + 0.5) / n
    X = np.exp(2j * np.pi * grid)
    total = 0.0
    for s in grid:
        Y = np.exp(2j * np.pi * s)
        if family is Family.M:
            P = alpha + X + 1 / X + Y + 1 / Y
        elif family is Family.G:
            P = (1 + X) * (1 + Y) * (X + Y) - alpha * X * Y
        else:
            P = X ** 3 + Y ** 3 + 1 - alpha * X * Y
        total += float(np.sum(np.log(np.abs(P))))
    return total / (n * n)


# =============================================================================
#  FORMES HYPERGÉOMÉTRIQUES
# =============================================================================

def f_aux(z: float) -> float:
    """f(z) = −(log z)/3 − 2z·₄F₃(4/3,5/3,1,1; 2,2,2; 27z), 0 < z <= 1/27."""
    if not 0 < z <= 1.0 / 27.0:
        raise DomainError(f"f: z={z!r} hors de (0, 1/27]")
    return -math.log(z) / 3 - 2 * z * hyp(_F4_UPPER, _F4_LOWER, min(27 * z, 1.0))


def df_dz(z: float) -> float:
    """f'(z) = −₂F₁(1/3,2/3;1;27z)/(3z), 0 < z < 1/27."""
    if not 0 < z < 1.0 / 27.0:
        raise DomainError(f"f': z={z!r} hors de (0, 1/27)")
    return -hyp2f1_13_23_1(27 * z) / (3 * z)


def _m_hyper(alpha: float) -> float:
    a = abs(alpha)
    if a <= 4:
        return a / 4 * hyp((Fraction(1, 2),) * 3, (1, Fraction(3, 2)), a * a / 16)
    return math.log(a) - 2 / (a * a) * hyp((Fraction(3, 2), Fraction(3, 2), 1, 1), (2, 2, 2), 16 / (a * a))


def g_f_decomposition(alpha: float) -> float:
    """g(α) = f(α²/(α+4)³)/3 + 4f(α/(α−2)³)/3, valide pour α >= 8."""
    if alpha < 8:
        raise DomainError(f"décomposition en f: α={alpha!r} < 8")
    return f_aux(alpha ** 2 / (alpha + 4) ** 3) / 3 + 4 * f_aux(alpha / (alpha - 2) ** 3) / 3


def mahler_hyper(family: Union[Family, str], alpha: float) -> float:
    """Forme hypergéométrique; hors domaine: DomainError orientant vers direct / j_integral."""
    family = Family.parse(family)
    if family is Family.M:
        # m est paire en α
        return _m_hyper(alpha)
    if family is Family.N_:
        if alpha < N_HYPER_MIN:
            raise DomainError(f"n hypergéométrique exige α >= {N_HYPER_MIN} (α={alpha!r}); "
                              f"utiliser la route direct")
        return f_aux(1 / alpha ** 3)
    if alpha < G_HYPER_MIN:
        hint = "j_integral" if G_J_RANGE[0] <= alpha <= G_J_RANGE[1] else "direct"
        raise DomainError(f"g hypergéométrique exige α >= {G_HYPER_MIN} (α={alpha!r}); "
                          f"utiliser la route {hint}")
    return g_f_decomposition(alpha)


def g_via_J(y: float) -> float:
    """g(y) = J(y) sur [2, 8]."""
    if not G_J_RANGE[0] <= y <= G_J_RANGE[1]:
        raise DomainError(f"g_via_J: y={y!r} hors de [2, 8]")
    from lvalues import J_y
    return J_y(y)


# =============================================================================
#  REQUÊTE ET POLITIQUE D'ÉVALUATION
# =============================================================================

@dataclass(frozen=True)
class MahlerQuery:
    """Famille, paramètre et route d'évaluation."""
    family: Family
    alpha: float
    route: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.route not in ROUTES:
            raise DomainError(f"route inconnue: {self.route!r} ({', '.join(ROUTES)})")
        if not math.isfinite(self.alpha):
            raise DomainError(f"α non fini: {self.alpha!r}")
        if self.route == "j_integral":
            if self.family is not Family.G:
                raise DomainError("route j_integral réservée à la famille g")
            if not G_J_RANGE[0] <= self.alpha <= G_J_RANGE[1]:
                raise DomainError(f"route j_integral exige 2 <= α <= 8 (α={self.alpha!r})")

    def resolved_route(self) -> str:
        if self.route != "auto":
            return self.route
        if self.family is Family.M:
            return "hyper"
        if self.family is Family.N_:
            return "hyper" if self.alpha >= N_HYPER_MIN else "direct"
        if G_J_RANGE[0] <= self.alpha <= G_J_RANGE[1]:
            return "j_integral"
        if self.alpha >= G_HYPER_MIN:
            return "hyper"
        return "direct"

    def evaluate(self) -> float:
        route = self.resolved_route()
        if route == "direct":
            return mahler_direct(self.family, self.alpha)
        if route == "hyper":
            return mahler_hyper(self.family, self.alpha)
        return g_via_J(self.alpha)


def mahler(family: Union[Family, str], alpha: float, route: str = "auto") -> float:
    """Point d'entrée unique: applique la politique de routes."""
    return MahlerQuery(Family.parse(family), alpha, route).evaluate()


def g_policy(alpha: float) -> float:
    return mahler(Family.G, alpha)


def n_policy(alpha: float) -> float:
    return mahler(Family.N_, alpha)


def m_policy(alpha: float) -> float:
    return mahler(Family.M, alpha)
