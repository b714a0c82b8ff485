"""
Numerics - Primitives de quadrature, racines et différentiation

Briques communes à tous les autres modules:
- integrate_finite / integrate_semiinf : tanh-sinh (mpmath) avec subdivision
  des panneaux et repli Gauss-Legendre
- poly_roots : racines de polynômes de degré <= 4 (numpy) + polissage Newton
- central_diff : différence centrée extrapolée de Richardson
- solve_bracketed : racine réelle encadrée

La précision mpmath est fixée une seule fois à l'import: aucune fonction ne
la modifie ensuite, les appels concurrents depuis plusieurs threads sont sûrs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import mpmath as mp
import numpy as np

from config_manager import CONFIG

logger = logging.getLogger(__name__)

mp.mp.dps = CONFIG.mp_dps


# =============================================================================
#  ERREURS
# =============================================================================

class MlabError(Exception):
    """Erreur de base de mlab."""


class DomainError(MlabError, ValueError):
    """Argument hors du domaine de validité d'une opération."""


class ConvergenceError(MlabError):
    """Une série n'a pas satisfait son critère d'arrêt."""


class SeriesError(MlabError):
    """Échec d'une opération sur séries exactes."""


class CatalogError(MlabError):
    """Identifiant inconnu ou enregistrement de catalogue mal formé."""


class QuadratureError(MlabError):
    """Quadrature non convergée après le budget de subdivision."""

    def __init__(self, message: str, best: "QuadResult"):
        super().__init__(f"{message} (meilleure estimation {best.value!r} ± {best.err_estimate:.3e})")
        self.best = best


# =============================================================================
#  TYPES
# =============================================================================

@dataclass(frozen=True)
class QuadResult:
    """Valeur d'une quadrature avec estimation d'erreur absolue."""
    value: float
    err_estimate: float
    evaluations: int

    def accepts(self, expected: float, tol: float) -> bool:
        return abs(self.value - expected) <= max(tol, 10.0 * self.err_estimate)


# Bruit d'arrondi relatif toléré sur un intégrande évalué en double précision
_FLOAT_NOISE = 64 * np.finfo(float).eps


class _CountingIntegrand:
    """
    Enveloppe un intégrande: compte les évaluations, convertit les noeuds mpf
    en float (sauf mp_args=True) et neutralise les évaluations non finies
    aux noeuds collés à une extrémité singulière.
    """

    def __init__(self, f: Callable, endpoints: Sequence[float], mp_args: bool):
        self.f = f
        self.endpoints = [float(e) for e in endpoints if mp.isfinite(e)]
        self.mp_args = mp_args
        self.count = 0

    def __call__(self, x):
        self.count += 1
        v = self.f(x if self.mp_args else float(x))
        if isinstance(v, complex):
            raise MlabError(f"[QUAD] intégrande complexe en x={float(x)!r}")
        if mp.isfinite(v):
            return mp.mpf(v)
        xf = float(x)
        near = any(abs(xf - e) <= 1e-12 * max(1.0, abs(e)) for e in self.endpoints)
        if near or math.isinf(xf):
            return mp.mpf(0)
        raise MlabError(f"[QUAD] intégrande non fini ({v!r}) en x={xf!r}")


def _refine(points: List) -> List:
    out = [points[0]]
    for lo, hi in zip(points[:-1], points[1:]):
        if mp.isinf(lo) or mp.isinf(hi):
            out.append(hi)
            continue
        out.extend([(lo + hi) / 2, hi])
    return out


def _quad(f: Callable, points: List, tol: float, mp_args: bool, label: str) -> QuadResult:
    wrapped = _CountingIntegrand(f, points, mp_args)
    best: Optional[QuadResult] = None
    pts = [mp.mpf(p) if not mp.isinf(p) else p for p in points]

    for level in range(CONFIG.quad_max_subdivisions + 1):
        value, err = mp.quad(wrapped, pts, method="tanh-sinh", error=True,
                             maxdegree=CONFIG.quad_max_degree)
        value, err = float(value), float(err)
        if not math.isfinite(value):
            raise MlabError(f"[QUAD] {label}: valeur non finie")
        result = QuadResult(value, err, wrapped.count)
        if best is None or err < best.err_estimate:
            best = result
        if err <= max(tol, _FLOAT_NOISE * abs(value)):
            logger.debug(f"[QUAD] ✅ {label}: {value:.16g} ± {err:.2e} "
                         f"({wrapped.count} évals, {len(pts) - 1} panneaux)")
            return result
        logger.debug(f"[QUAD] {label}: niveau {level}, err={err:.2e} > tol={tol:.1e}, subdivision")
        pts = _refine(pts)

    # Repli Gauss-Legendre pour les intégrandes réguliers
    if all(not mp.isinf(p) for p in pts):
        value, err = mp.quad(wrapped, pts, method="gauss-legendre", error=True,
                             maxdegree=CONFIG.quad_max_degree)
        result = QuadResult(float(value), float(err), wrapped.count)
        if result.err_estimate <= max(tol, _FLOAT_NOISE * abs(result.value)):
            logger.debug(f"[QUAD] ✅ {label}: repli Gauss-Legendre accepté")
            return result
        if result.err_estimate < best.err_estimate:
            best = result

    logger.warning(f"[QUAD] ❌ {label}: non convergée (err={best.err_estimate:.2e})")
    raise QuadratureError(f"{label}: budget de subdivision épuisé", best)


# =============================================================================
#  QUADRATURE
# =============================================================================

def integrate_finite(f: Callable[[float], float], a: float, b: float, tol: Optional[float] = None,
                     breakpoints: Sequence[float] = (), mp_args: bool = False) -> QuadResult:
    """
    Intègre f sur [a, b] par tanh-sinh.

    Singularités d'extrémité en t^(-1/2) ou log t acceptées sans traitement
    particulier. breakpoints ajoute des coupures intérieures (points anguleux).
    Avec mp_args=True, f reçoit les noeuds en mpf (utile quand 1 - t doit
    rester exact près d'une extrémité).
    """
    if not a < b:
        raise DomainError(f"intervalle vide ou inversé: a={a!r}, b={b!r}")
    tol = CONFIG.quad_tol if tol is None else tol
    inner = sorted(float(c) for c in breakpoints if a < c < b)
    return _quad(f, [a, *inner, b], tol, mp_args, f"[{a:g}, {b:g}]")


def integrate_semiinf(f: Callable[[float], float], tol: Optional[float] = None, lower: float = 0.0,
                      scale: float = 1.0, mp_args: bool = False) -> QuadResult:
    """
    Intègre f sur [lower, ∞), coupé en lower + scale.

    scale doit suivre l'échelle de décroissance de l'intégrande (1/24 pour
    η(e^{-24u}), etc.).
    """
    if not scale > 0:
        raise DomainError(f"scale doit être > 0: {scale!r}")
    tol = CONFIG.quad_tol if tol is None else tol
    return _quad(f, [lower, lower + scale, mp.inf], tol, mp_args, f"[{lower:g}, ∞)")


# =============================================================================
#  RACINES
# =============================================================================

def poly_roots(coeffs: Sequence[complex]) -> List[complex]:
    """
    Racines d'un polynôme de degré <= 4, coefficients du plus haut degré au
    terme constant. Résultat trié par (re, im).
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or len(c) < 2:
        raise DomainError(f"au moins deux coefficients requis: {coeffs!r}")
    degree = len(c) - 1
    if degree > 4:
        raise DomainError(f"degré {degree} > 4 non supporté")
    scale = float(np.max(np.abs(c)))
    if scale == 0 or abs(c[0]) <= 1e-300 or abs(c[0]) <= 1e-14 * scale:
        raise DomainError(f"coefficient dominant dégénéré: coeffs[0]={coeffs[0]!r}")

    roots = np.roots(c)
    dc = np.polyder(c)
    polished = []
    for r in roots:
        # Polissage Newton (2 pas); on garde l'itéré seulement s'il améliore |p(r)|
        best, best_res = r, abs(np.polyval(c, r))
        z = r
        for _ in range(2):
            d = np.polyval(dc, z)
            if d == 0:
                break
            z = z - np.polyval(c, z) / d
            res = abs(np.polyval(c, z))
            if res < best_res:
                best, best_res = z, res
        polished.append(complex(best))
    return sorted(polished, key=lambda z: (z.real, z.imag))


# =============================================================================
#  DIFFÉRENTIATION, RACINE ENCADRÉE
# =============================================================================

def central_diff(f: Callable[[float], float], x: float, h: float = 1e-3) -> float:
    """Différence centrée extrapolée (Richardson), erreur O(h^4)."""
    if not h > 0:
        raise DomainError(f"pas h doit être > 0: {h!r}")
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def solve_bracketed(f: Callable[[float], float], a: float, b: float) -> float:
    """Racine de f sur [a, b] avec changement de signe."""
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if (fa > 0) == (fb > 0):
        raise DomainError(f"pas de changement de signe sur [{a}, {b}]")
    root = mp.findroot(lambda t: f(float(t)), (a, b), solver="anderson")
    return float(root)
