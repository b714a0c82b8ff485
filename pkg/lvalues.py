"""
LValues - Sommes de réseau F(b,c), valeurs L(E,2) et intégrales intermédiaires

- F_cube / F_integral : somme par cubes (oracle) et intégrale de Mellin du
  produit de quatre η (route de production)
- L_elliptic : −∫₀¹ f(q) log q dq/q pour les conducteurs 20, 24, 27, 36
- H, G, S, J, F1, F2 : intégrales intermédiaires et leurs formes réduites
- réductions élémentaires, formes ₃F₂/₄F₃ et relations modulaires numériques

Toutes les intégrales en q sont prises en t = −log q; les primitives thêta
passent par log η (inversion modulaire pour t < 2π).
"""

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from config_manager import CONFIG
from elliptic import nome_to_alpha, w_curve, w_curve_params, w_fourier, w_nome
from hypergeo import gamma_fn, hyp, hyp2f1_12_12_1, hyp2f1_13_23_1
from mahler import Family, mahler
from numerics import DomainError, integrate_finite, integrate_semiinf, solve_bracketed
from qseries import (CHI_M3, OMEGA, EtaExpr, Primitive, a_theta, eta, eval_numeric, eval_real,
                     log_eta_t, log_theta_t, phi, psi, psi_excess_t, psineg, qpow)

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


# =============================================================================
#  CONFIGURATION
# =============================================================================

CUBE_MAX_N = 60
SQRT3 = math.sqrt(3.0)
HALF_PI = math.pi / 2

H_METHODS = ("definition", "reduced", "elementary")
G_METHODS = ("definition", "real_reduced", "elementary_x1", "imaginary")
S_METHODS = ("definition", "reduced")

_PHI = Primitive.PHI
_B = Primitive.B
_C = Primitive.C


def _positive(x: Rational, name: str) -> float:
    xf = float(x)
    if not (math.isfinite(xf) and xf > 0):
        raise DomainError(f"{name}: x={x!r} doit être > 0")
    return xf


def _check_method(method: str, allowed: Sequence[str], name: str) -> None:
    if method not in allowed:
        raise DomainError(f"{name}: méthode inconnue {method!r} ({', '.join(allowed)})")


def _trig(theta: float) -> Tuple[float, float]:
    """(sin²θ, cos²θ) sans perte près de π/2."""
    return math.sin(theta) ** 2, math.cos(theta) ** 2


# =============================================================================
#  TYPES
# =============================================================================

@dataclass(frozen=True)
class LatticeSumSpec:
    """Paramètres (b, c) de la somme F(b,c); échelles (1, b, c, bc)."""
    b: Fraction
    c: Fraction

    def __init__(self, b: Rational, c: Rational):
        object.__setattr__(self, "b", Fraction(b))
        object.__setattr__(self, "c", Fraction(c))
        if self.b <= 0 or self.c <= 0:
            raise DomainError(f"F(b,c) exige b, c > 0 (b={self.b}, c={self.c})")

    @property
    def scales(self) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
        return (Fraction(1), self.b, self.c, self.b * self.c)

    @property
    def prefactor(self) -> Fraction:
        return (self.b + 1) ** 2 * (self.c + 1) ** 2

    def label(self) -> str:
        return f"F({self.b},{self.c})"


@dataclass(frozen=True)
class ConductorForm:
    """Produit η^{e₁}(q^{j₁})··· de poids 2 attaché à un conducteur."""
    conductor: int
    pattern: Tuple[Tuple[int, int], ...]

    def log_value(self, t: float) -> float:
        return sum(e * log_eta_t(j * t) for j, e in self.pattern)

    def expr(self) -> EtaExpr:
        out: Optional[EtaExpr] = None
        for j, e in self.pattern:
            factor = eta(j) ** e
            out = factor if out is None else out * factor
        return out


CONDUCTOR_FORMS: Dict[int, ConductorForm] = {
    20: ConductorForm(20, ((2, 2), (10, 2))),
    24: ConductorForm(24, ((2, 1), (4, 1), (6, 1), (12, 1))),
    27: ConductorForm(27, ((3, 2), (9, 2))),
    36: ConductorForm(36, ((6, 4),)),
}


# =============================================================================
#  SOMME DE RÉSEAU F(b,c)
# =============================================================================

def _cube_slice(i: int, s: Tuple[float, ...], x: np.ndarray, sign: np.ndarray,
                sign3: np.ndarray, P: float, summation: str) -> float:
    # même ordre d'addition que P pour que le terme central vaille exactement 1
    D = ((s[0] * x[i] + s[1] * x[:, None, None]) + s[2] * x[None, :, None]) + s[3] * x[None, None, :]
    r = D / P
    terms = sign[i] * sign3 / (r * r)
    if summation == "sequential":
        return float(np.cumsum(terms.ravel())[-1])
    return float(np.sum(terms))


def F_cube(spec: LatticeSumSpec, N: int, parallelism: Optional[int] = None,
           progress_callback: Optional[Callable[[int, int], None]] = None,
           summation: str = "pairwise") -> float:
    """
    Somme partielle de F(b,c) sur max|nᵢ| <= N, préfacteur (b+1)²(c+1)² inclus.

    Découpage en tranches n₁ fixé, réduites en parallèle puis recombinées
    dans l'ordre des indices (résultat identique quel que soit le nombre
    de threads).
    """
    if N < 0:
        raise DomainError(f"F_cube: N={N!r} < 0")
    if N > CUBE_MAX_N:
        raise DomainError(f"F_cube: N={N} > {CUBE_MAX_N} (oracle de diagnostic seulement)")
    if summation not in ("pairwise", "sequential"):
        raise DomainError(f"sommation inconnue: {summation!r}")
    workers = max(1, parallelism or CONFIG.effective_parallelism)
    s = tuple(float(v) for v in spec.scales)
    P = ((s[0] + s[1]) + s[2]) + s[3]

    n = np.arange(-N, N + 1)
    x = (6.0 * n + 1.0) ** 2
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    sign3 = sign[:, None, None] * sign[None, :, None] * sign[None, None, :]
    M = len(n)

    partials = [0.0] * M
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_cube_slice, i, s, x, sign, sign3, P, summation) for i in range(M)]
        for i, fut in enumerate(futures):
            partials[i] = fut.result()
            if progress_callback is not None:
                progress_callback(i + 1, M)
    total = float(np.sum(np.array(partials)))
    logger.debug(f"[LVALUE] {spec.label()} cube N={N}: {total:.12g} ({M ** 4} termes, {workers} threads)")
    return total


def F_integral(spec: LatticeSumSpec) -> float:
    """(b+1)²(c+1)²·∫₀^∞ u·η(e^{−24u})η(e^{−24bu})η(e^{−24cu})η(e^{−24bcu}) du."""
    s = [24.0 * float(v) for v in spec.scales]

    def integrand(u: float) -> float:
        if u <= 0:
            return 0.0
        return u * math.exp(sum(log_eta_t(si * u) for si in s))

    scale = 1.0 / float((1 + spec.b) * (1 + spec.c))
    res = integrate_semiinf(integrand, scale=scale)
    value = float(spec.prefactor) * res.value
    logger.debug(f"[LVALUE] {spec.label()} intégrale = {value:.15g}")
    return value


def F_combination_59() -> float:
    """F(5,9) = (45F(1,1) − 50F(1,5))/9."""
    return (45 * F_integral(LatticeSumSpec(1, 1)) - 50 * F_integral(LatticeSumSpec(1, 5))) / 9


# =============================================================================
#  VALEURS L(E, 2)
# =============================================================================

def L_elliptic(conductor: int) -> float:
    """L(E,2) = −∫₀¹ f(q) log q dq/q = ∫₀^∞ t·f(e^{−t}) dt."""
    form = CONDUCTOR_FORMS.get(int(conductor))
    if form is None:
        raise DomainError(f"conducteur non supporté: {conductor!r} ({sorted(CONDUCTOR_FORMS)})")

    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        return t * math.exp(form.log_value(t))

    value = integrate_semiinf(integrand).value
    logger.debug(f"[LVALUE] L(E_{conductor}, 2) = {value:.15g}")
    return value


def L27_3f2() -> float:
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    return (gamma_fn(1 / 3) ** 3 / 27 * hyp((third, third, 1), (two_thirds, Fraction(4, 3)), 1.0)
            - gamma_fn(2 / 3) ** 3 / 18 * hyp((two_thirds, two_thirds, 1), (Fraction(4, 3), Fraction(5, 3)), 1.0))


def L27_4f3() -> float:
    """(81/(4π²))·L = log 6 + ₄F₃(4/3,5/3,1,1; 2,2,2; −1/8)/108."""
    f = hyp((Fraction(4, 3), Fraction(5, 3), 1, 1), (2, 2, 2), -0.125)
    return 4 * math.pi ** 2 / 81 * (math.log(6) + f / 108)


def L36_3f2() -> float:
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    return (-2 * math.pi ** 2 * math.log(2) / 27
            + gamma_fn(1 / 3) ** 3 / (3 * 2 ** (7 / 3))
            * hyp((third, third, 1), (Fraction(5, 6), Fraction(4, 3)), -0.125)
            + gamma_fn(2 / 3) ** 3 / 2 ** (11 / 3)
            * hyp((two_thirds, two_thirds, 1), (Fraction(7, 6), Fraction(5, 3)), -0.125))


def L36_sqrt_integral() -> float:
    """(π/3)∫₀¹ √t log(1+2t)/√(1−t³) dt, t = sin²θ."""
    def integrand(theta: float) -> float:
        s2, _ = _trig(theta)
        return 2 * s2 * math.log1p(2 * s2) / math.sqrt(1 + s2 + s2 * s2)

    return math.pi / 3 * integrate_finite(integrand, 0.0, HALF_PI).value


def L20_m_integral() -> float:
    """(π/4)∫₁⁵ log(5/m)(3−m)/(m√((5−m)(m−1)(5−2m+m²))) dm, m = 1 + 4sin²θ."""
    def integrand(theta: float) -> float:
        s2, _ = _trig(theta)
        m = 1 + 4 * s2
        return 2 * math.log(5 / m) * (3 - m) / (m * math.sqrt(5 - 2 * m + m * m))

    return math.pi / 4 * integrate_finite(integrand, 0.0, HALF_PI).value


def elementary_E20() -> float:
    """L(E₂₀,2) = −(π/20)∫₀¹ (1−6t)log(1+4t)/√(t(1−t)(1+4t²)) dt."""
    def integrand(theta: float) -> float:
        t, _ = _trig(theta)
        return 2 * (1 - 6 * t) * math.log1p(4 * t) / math.sqrt(1 + 4 * t * t)

    return -math.pi / 20 * integrate_finite(integrand, 0.0, HALF_PI).value


# =============================================================================
#  H(x) : CONDUCTEUR 27
# =============================================================================

def _H_definition(x: float) -> float:
    # (1/3)∫₀¹ b(q^x)c(q) log q dq/q
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        return t * math.exp(log_theta_t(_B, x * t) + log_theta_t(_C, t))

    return -integrate_semiinf(integrand, scale=3.0).value / 3


def _H_reduced(x: float) -> float:
    # (2π/(√3x))∫₀¹ b(q)c(q³) log(3c(q^{9x})/c(q^{3x})) dq/q
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        weight = math.exp(log_theta_t(_B, t) + log_theta_t(_C, 3 * t))
        return weight * (math.log(3) + log_theta_t(_C, 9 * x * t) - log_theta_t(_C, 3 * x * t))

    return 2 * math.pi / (SQRT3 * x) * integrate_semiinf(integrand).value


def _H_elementary_x1() -> float:
    # α = t³: 3/(1+t+t²)·log(t²/(1+c+c²)), c = (1−t³)^{1/3}
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        c = max(1 - t ** 3, 0.0) ** (1 / 3)
        return 3 / (1 + t + t * t) * math.log(t * t / (1 + c + c * c))

    return 2 * math.pi / (3 * SQRT3) * integrate_finite(integrand, 0.0, 1.0).value


def _H_elementary_x13() -> float:
    # 1 − α = (1−u)³
    def integrand(u: float) -> float:
        if u <= 0:
            return 0.0
        w = 3 - 3 * u + u * u
        return 3 / w * (2 * math.log(u) - math.log(w)) / 3

    return 2 * math.pi / SQRT3 * integrate_finite(integrand, 0.0, 1.0).value


def H_eval(x: Rational, method: str = "definition") -> float:
    """H(x) par la définition, la forme réduite ou (x ∈ {1, 1/3}) l'intégrale élémentaire."""
    _check_method(method, H_METHODS, "H")
    xf = _positive(x, "H")
    if method == "definition":
        value = _H_definition(xf)
    elif method == "reduced":
        value = _H_reduced(xf)
    else:
        xq = Fraction(x).limit_denominator(1000)
        if xq == 1:
            value = _H_elementary_x1()
        elif xq == Fraction(1, 3):
            value = _H_elementary_x13()
        else:
            raise DomainError(f"H élémentaire disponible seulement pour x ∈ {{1, 1/3}} (x={x!r})")
    logger.debug(f"[LVALUE] H({x}) [{method}] = {value:.15g}")
    return value


# Relations entre F(b,c) et H: (coefficient de F, (b, c), [(coefficient, x), ...])
H_RELATIONS: Dict[str, Tuple[Fraction, Tuple[Rational, Rational], Tuple[Tuple[Fraction, Fraction], ...]]] = {
    "F13": (Fraction(9), (1, 3), ((Fraction(-1), Fraction(1)),)),
    "F11": (Fraction(36), (1, 1), ((Fraction(-4), Fraction(4, 3)), (Fraction(1, 4), Fraction(1, 12)))),
    "F37": (Fraction(27, 16), (3, 7), ((Fraction(8, 7), Fraction(1)), (Fraction(-1), Fraction(7)),
                                       (Fraction(-1, 49), Fraction(1, 7)))),
    "F67": (Fraction(27, 49), (6, 7), ((Fraction(1, 49), Fraction(2, 7)), (Fraction(1), Fraction(14)),
                                       (Fraction(-8, 7), Fraction(2)))),
    "F327": (Fraction(27, 25), (Fraction(3, 2), 7), ((Fraction(2, 7), Fraction(1, 2)),
                                                      (Fraction(-1, 4), Fraction(7, 2)),
                                                      (Fraction(-1, 196), Fraction(1, 14)))),
}


def H_relation(name: str) -> Tuple[float, float]:
    """(coef·F_integral(b,c), Σ coefᵢ·H(xᵢ)) pour une relation de H_RELATIONS."""
    if name not in H_RELATIONS:
        raise DomainError(f"relation H inconnue: {name!r} ({', '.join(H_RELATIONS)})")
    coef, (b, c), terms = H_RELATIONS[name]
    lhs = float(coef) * F_integral(LatticeSumSpec(b, c))
    rhs = sum(float(a) * H_eval(x, "definition") for a, x in terms)
    return lhs, rhs


# =============================================================================
#  G(x) : CONDUCTEUR 24
# =============================================================================

def _G_definition(x: float) -> float:
    # η²(q²)η²(q⁶)/(η(q)η(q³)) · η²(q^x)η²(q^{3x})/(η(q^{2x})η(q^{6x}))
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        L = log_eta_t
        log_f = (2 * L(2 * t) - L(t) + 2 * L(6 * t) - L(3 * t)
                 + 2 * L(x * t) - L(2 * x * t) + 2 * L(3 * x * t) - L(6 * x * t))
        return t * math.exp(log_f)

    return -integrate_semiinf(integrand, scale=2.0).value


def _G_real_reduced(x: float) -> float:
    # A = q^{1/8}ψ(q) = s·e^{D(t)}, B = A(9t) = (s/3)·e^{D(9t)}: A − 3B sans annulation
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        s = math.sqrt(math.pi / (2 * t))
        dA, dB = psi_excess_t(t), psi_excess_t(9 * t)
        A, B = s * math.exp(dA), s * math.exp(dB) / 3
        A_3B = s * (math.expm1(dA) - math.expm1(dB))
        if A_3B == 0:
            return 0.0
        # log(4q^{3x/2}ψ⁴(q^{6x})/ψ⁴(q^{3x})) = 4(D(6xt) − D(3xt))
        log_term = 4 * (psi_excess_t(6 * x * t) - psi_excess_t(3 * x * t))
        return (A - B) * A_3B * (A * A - 3 * B * B) * log_term

    res = integrate_semiinf(integrand, scale=2.0)
    return math.pi / (2 * SQRT3 * x) * res.value


def _G_imaginary(x: float) -> float:
    # (2π/(3x))·Im ∫₀¹ ωqψ⁴(ω²q²)·log(4q^{3x}ψ⁴(q^{12x})/ψ⁴(q^{6x})) dq/q
    psi1 = psi(1)

    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        log_term = 4 * (psi_excess_t(12 * x * t) - psi_excess_t(6 * x * t))
        if log_term == 0:
            return 0.0
        q = math.exp(-t)
        twisted = (OMEGA * q * eval_numeric(psi1, OMEGA ** 2 * q * q) ** 4).imag
        return twisted * log_term

    res = integrate_semiinf(integrand)
    return 2 * math.pi / (3 * x) * res.value


def _G1_elementary() -> float:
    # (π/12)∫₀^{1/2} √((1−2p)(2−p)) log(p³(2−p)/(1−2p))/((1−p²)√p) dp, p = sin²θ/2
    def integrand(theta: float) -> float:
        s2, c2 = _trig(theta)
        if s2 == 0 or c2 == 0:
            return 0.0
        p = s2 / 2
        lam_minus_p = (3 + c2) / 2
        return (2 * c2 * math.sqrt(lam_minus_p) / ((1 - p) * (1 + p) * math.sqrt(2))
                * math.log(p ** 3 * (2 - p) / c2))

    return math.pi / 12 * integrate_finite(integrand, 0.0, HALF_PI).value


def G_eval(x: Rational, method: str = "definition") -> float:
    """G(x) par la définition, la forme réelle réduite, la forme ω-tordue ou (x=1) l'intégrale élémentaire."""
    _check_method(method, G_METHODS, "G")
    xf = _positive(x, "G")
    if method == "definition":
        value = _G_definition(xf)
    elif method == "real_reduced":
        value = _G_real_reduced(xf)
    elif method == "imaginary":
        value = _G_imaginary(xf)
    else:
        if xf != 1:
            raise DomainError(f"G élémentaire disponible seulement pour x = 1 (x={x!r})")
        value = _G1_elementary()
    logger.debug(f"[LVALUE] G({x}) [{method}] = {value:.15g}")
    return value


# =============================================================================
#  S(x) : CONDUCTEUR 20
# =============================================================================

def _S_definition(x: float) -> float:
    # q^{(1+x)/4}ψ²(q^x)(ψ²(q) − 5qψ²(q⁵)) = A²(xt)·(A²(t) − 5A²(5t))
    # avec A²(t) = (π/2t)·e^{2D(t)} et 5A²(5t) = (π/2t)·e^{2D(5t)}
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        diff = math.expm1(2 * psi_excess_t(t)) - math.expm1(2 * psi_excess_t(5 * t))
        if diff == 0:
            return 0.0
        return math.pi ** 2 / (4 * x * t) * math.exp(2 * psi_excess_t(x * t)) * diff

    res = integrate_semiinf(integrand, scale=4.0 / (1 + x))
    return -res.value


def _psineg4_weight(s: float) -> float:
    """e^{−s/2}ψ⁴(−e^{−s}) = (η(q)η(q⁴)/η(q²))⁴."""
    return math.exp(4 * (log_eta_t(s) + log_eta_t(4 * s) - log_eta_t(2 * s)))


def _S_reduced(x: float) -> float:
    def integrand(t: float) -> float:
        if t <= 0:
            return 0.0
        log_term = math.log(5) + 2 * (log_theta_t(_PHI, 5 * t) - log_theta_t(_PHI, t))
        return _psineg4_weight(x * t) * log_term

    return -math.pi * integrate_semiinf(integrand, scale=2.0 / x).value


def S_eval(x: Rational, method: str = "definition") -> float:
    _check_method(method, S_METHODS, "S")
    xf = _positive(x, "S")
    value = _S_definition(xf) if method == "definition" else _S_reduced(xf)
    logger.debug(f"[LVALUE] S({x}) [{method}] = {value:.15g}")
    return value


def S_reduced_integrand(q: complex, x: Rational = 1) -> complex:
    """q^{x/2}ψ⁴(−q^x)·log(5φ²(q⁵)/φ²(q)), évalué en arithmétique complexe."""
    xf = _positive(x, "S")
    weight = eval_numeric(qpow(Fraction(x) / 2) * psineg(x) ** 4, q)
    ratio = eval_numeric(5 * phi(5) ** 2 / phi(1) ** 2, q)
    return weight * cmath.log(ratio)


# =============================================================================
#  J(y), LEMMES DE TRANSFORMATION
# =============================================================================

def _J_quartic(y: float, t: float) -> float:
    # forme canonique: (yt − (y−4)/2)² + y(8−y)/4, sans annulation près de t*
    u = y * t - (y - 4) / 2
    return u * u + y * (8 - y) / 4


def J_y(y: float) -> float:
    """J(y) = (1/2π)∫₀¹ (2−y+3yt)log(1+yt)/√(t(1−t)(4+(4−y)yt+y²t²)) dt, 2 <= y <= 8."""
    if not 2 <= y <= 8:
        raise DomainError(f"J(y): y={y!r} hors de [2, 8]")
    c = y * (8 - y) / 4

    def integrand(theta: float, side: int) -> float:
        t, _ = _trig(theta)
        u = y * t - (y - 4) / 2
        if c == 0:
            # y = 8: (2−y+3yt)/√Q = 3·signe(u), saut en t* = 1/4
            return 2 * 3 * side * math.log1p(y * t)
        return 2 * (3 * u + (y - 8) / 2) * math.log1p(y * t) / math.sqrt(u * u + c)

    # minimum de la quartique en t* = (y−4)/(2y), nul en y = 8
    if y > 4:
        split = math.asin(math.sqrt((y - 4) / (2 * y)))
        value = (integrate_finite(lambda th: integrand(th, -1), 0.0, split).value
                 + integrate_finite(lambda th: integrand(th, 1), split, HALF_PI).value)
    else:
        value = integrate_finite(lambda th: integrand(th, 1), 0.0, HALF_PI).value
    value /= 2 * math.pi
    logger.debug(f"[LVALUE] J({y:g}) = {value:.15g}")
    return value


def T5_integral(y: float) -> float:
    """(1/2π)∫₀¹ dt/√(t(1−t)(4+(4−y)yt+y²t²)), 2 <= y < 8."""
    if not 2 <= y < 8:
        raise DomainError(f"T5: y={y!r} hors de [2, 8)")

    def integrand(theta: float) -> float:
        t, _ = _trig(theta)
        return 2 / math.sqrt(_J_quartic(y, t))

    return integrate_finite(integrand, 0.0, HALF_PI).value / (2 * math.pi)


def dJ_dy_closed(y: float) -> float:
    """₂F₁(1/3,2/3;1;27y²/(y+4)³)/(y+4)."""
    if not 2 <= y < 8:
        raise DomainError(f"dJ/dy: y={y!r} hors de [2, 8)")
    return hyp2f1_13_23_1(27 * y * y / (y + 4) ** 3) / (y + 4)


def T5a_pair(p: float) -> Tuple[float, float]:
    """Transformation cubique: (côté ₂F₁(1/3,2/3), côté ₂F₁(1/2,1/2))."""
    if not 0 <= p <= 1:
        raise DomainError(f"T5a: p={p!r} hors de [0, 1]")
    u = 1 + p + p * p
    lhs = hyp2f1_13_23_1(27 * p * p * (1 + p) ** 2 / (4 * u ** 3)) / u
    rhs = hyp2f1_12_12_1(p ** 3 * (2 + p) / (1 + 2 * p)) / math.sqrt(1 + 2 * p)
    return lhs, rhs


def theorem20_rhs(k: float) -> float:
    """2g(2(1+p)²/p) − g(4(1+p)/p²), p = (−1 + √((3k−1)/(k−1)))/2, k >= 4/3."""
    if not k >= 4.0 / 3.0:
        raise DomainError(f"k={k!r} < 4/3")
    p = min((-1 + math.sqrt((3 * k - 1) / (k - 1))) / 2, 1.0)
    return 2 * mahler(Family.G, 2 * (1 + p) ** 2 / p) - mahler(Family.G, 4 * (1 + p) / p ** 2)


def funceq_g(p: float, route: str = "direct") -> Tuple[float, float]:
    """(g(4p(1+p)) + g(4(1+p)/p²), 2g(2(1+p)²/p)), (√3−1)/2 <= p <= 1."""
    if not (SQRT3 - 1) / 2 - 1e-12 <= p <= 1:
        raise DomainError(f"équation fonctionnelle: p={p!r} hors de [(√3−1)/2, 1]")
    lhs = mahler(Family.G, 4 * p * (1 + p), route) + mahler(Family.G, 4 * (1 + p) / p ** 2, route)
    return lhs, 2 * mahler(Family.G, 2 * (1 + p) ** 2 / p, route)


# =============================================================================
#  F1, F2 (λ >= 1)
# =============================================================================

def F1_F2(lam: float) -> Tuple[float, float]:
    """
    F1 = ∫₀^{1/λ} √((1−λp)(λ−p)) log(1/p)/((1−p²)√p) dp,
    F2 = même poids avec log((λ−p)/(1−λp)); p = sin²θ/λ.
    """
    if not lam >= 1:
        raise DomainError(f"F1/F2: λ={lam!r} < 1")
    root_lam = math.sqrt(lam)

    def weight(theta: float) -> Tuple[float, float, float]:
        s2, c2 = _trig(theta)
        p = s2 / lam
        one_minus_p = (lam - 1 + c2) / lam
        lam_minus_p = (lam * lam - 1 + c2) / lam
        if c2 == 0:
            return 0.0, p, math.inf
        w = 2 * c2 * math.sqrt(lam_minus_p) / (one_minus_p * (1 + p) * root_lam)
        return w, p, lam_minus_p / c2 if c2 > 0 else math.inf

    def f1(theta: float) -> float:
        w, p, _ = weight(theta)
        return 0.0 if p == 0 else -w * math.log(p)

    def f2(theta: float) -> float:
        w, _, ratio = weight(theta)
        return 0.0 if w == 0 or math.isinf(ratio) else w * math.log(ratio)

    F1 = integrate_finite(f1, 0.0, HALF_PI).value
    F2 = integrate_finite(f2, 0.0, HALF_PI).value
    logger.debug(f"[LVALUE] λ={lam:g}: F1={F1:.15g}, F2={F2:.15g}")
    return F1, F2


def _hyp3f2_half(z: float) -> float:
    h = Fraction(1, 2)
    return hyp((h, h, h), (Fraction(3, 2), 1), z)


def lemk1_rhs(lam: float) -> float:
    """π·₃F₂(1/2,1/2,1/2; 3/2,1; 1/λ²)."""
    return math.pi * _hyp3f2_half(1 / lam ** 2)


def lemk2_rhs(lam: float) -> float:
    """Forme close de F1(λ)."""
    z = 1 / lam ** 2
    f43 = hyp((Fraction(3, 2), Fraction(3, 2), 1, 1), (2, 2, 2), z)
    return HALF_PI * math.log(4 * lam) + HALF_PI * _hyp3f2_half(z) - math.pi * z / 16 * f43


def gn_series_check(z: float, N: int = 30) -> Tuple[float, float]:
    """(Σ_{n<=N} gₙzⁿ, ∫₀¹ √(1−t)/((1−zt²)√(t(1−zt))) dt), gₙ = Γ(n+3/2)Γ(n+1/2)/((2n+1)n!²)."""
    if not 0 <= z < 1:
        raise DomainError(f"z={z!r} hors de [0, 1)")
    series = 0.0
    for n in range(N + 1):
        g = math.exp(math.lgamma(n + 1.5) + math.lgamma(n + 0.5) - 2 * math.lgamma(n + 1)) / (2 * n + 1)
        series += g * z ** n

    def integrand(theta: float) -> float:
        s2, c2 = _trig(theta)
        return 2 * c2 / ((1 - z * s2 * s2) * math.sqrt(1 - z * s2))

    return series, integrate_finite(integrand, 0.0, HALF_PI).value


# =============================================================================
#  RÉDUCTIONS DE JACOBI (sn, cn, dn)
# =============================================================================

def _jacobi_weight(alpha: float, s2: float, c2: float) -> float:
    """√((1−v²)(1−αv²))/(1−αv⁴)·dv/dθ pour v = sin θ."""
    return c2 * math.sqrt((1 - alpha) + alpha * c2) / ((1 - alpha) + alpha * c2 * (1 + s2))


def pi4_integral(alpha: float) -> float:
    """∫₀¹ √((1−v²)(1−αv²))/(1−αv⁴) dv (= π/4 pour 0 <= α <= 1)."""
    if not 0 <= alpha <= 1:
        raise DomainError(f"α={alpha!r} hors de [0, 1]")
    return integrate_finite(lambda th: _jacobi_weight(alpha, *_trig(th)), 0.0, HALF_PI).value


def _m_value(alpha: float) -> float:
    return mahler(Family.M, alpha, "hyper")


def sncndn_mahler(alpha: float) -> Dict[str, Tuple[float, float]]:
    """Les trois réductions −(8/π)∫ poids·log X dv en mesures m, X ∈ {v, 1−v², 1−αv²}."""
    if not 0 < alpha < 1:
        raise DomainError(f"α={alpha!r} hors de (0, 1)")
    ra = math.sqrt(alpha)
    m_out, m_in = _m_value(4 / ra), _m_value(4 * ra)
    tail = math.log((1 - ra) / (1 + ra)) / ra

    def lhs(log_x: Callable[[float, float], float]) -> float:
        def integrand(theta: float) -> float:
            s2, c2 = _trig(theta)
            w = _jacobi_weight(alpha, s2, c2)
            return 0.0 if w == 0 else w * log_x(s2, c2)
        return -8 / math.pi * integrate_finite(integrand, 0.0, HALF_PI).value

    return {
        "sn": (lhs(lambda s2, c2: 0.5 * math.log(s2) if s2 > 0 else 0.0),
               m_out + m_in / ra + math.log(ra)),
        "cn": (lhs(lambda s2, c2: math.log(c2)),
               2 * m_out + math.log(alpha / (1 - alpha)) + tail),
        "dn": (lhs(lambda s2, c2: math.log((1 - alpha) + alpha * c2)),
               2 / ra * m_in - math.log(1 - alpha) + tail),
    }


def g1_elliptic() -> float:
    """G(1) recomposé à partir des réductions sn/cn/dn en α = 1/4 et de l'intégrale π/4."""
    red = sncndn_mahler(0.25)
    R_sn, R_cn, R_dn = red["sn"][1], red["cn"][1], red["dn"][1]
    return math.pi / 6 * (-math.pi / 8 * (6 * R_sn + R_dn - R_cn) - math.pi / 4 * math.log(4))


def ko_funceq(alpha: float) -> Tuple[float, float]:
    """(2m(2(α^{1/4}+α^{−1/4})), m(4√α) + m(4/√α))."""
    if not 0 < alpha <= 1:
        raise DomainError(f"α={alpha!r} hors de (0, 1]")
    r4 = alpha ** 0.25
    ra = math.sqrt(alpha)
    return 2 * _m_value(2 * (r4 + 1 / r4)), _m_value(4 * ra) + _m_value(4 / ra)


# =============================================================================
#  RELATIONS MODULAIRES NUMÉRIQUES
# =============================================================================

def _check_q(q: float) -> None:
    if not 0 < q < 1:
        raise DomainError(f"q={q!r} hors de (0, 1)")


def deg2_orientation(q: float) -> Dict[str, float]:
    """Écart entre 4√α/(1+√α)² et α(q^{1/2}) puis α(q²), avec α = α(q)."""
    _check_q(q)
    ra = math.sqrt(nome_to_alpha(q))
    target = 4 * ra / (1 + ra) ** 2
    return {"q_half": abs(nome_to_alpha(math.sqrt(q)) - target),
            "q_square": abs(nome_to_alpha(q * q) - target)}


@dataclass(frozen=True)
class Degree3Check:
    alpha: float
    beta: float
    p: float
    modular_residual: float
    alpha_mismatch: float


def param_deg3(q: float) -> Degree3Check:
    """α = α(q), β = α(q³): polynôme modulaire et paramétrisation rationnelle en p."""
    _check_q(q)
    a = nome_to_alpha(q)
    b = nome_to_alpha(q ** 3)
    residual = (a * a + b * b + 6 * a * b) ** 2 - 16 * a * b * (4 * (1 + a * b) - 3 * (a + b)) ** 2
    p = solve_bracketed(lambda x: x ** 3 * (2 + x) / (1 + 2 * x) - b, 0.0, 1.0)
    a_param = p * (2 + p) ** 3 / (1 + 2 * p) ** 3
    return Degree3Check(a, b, p, residual, a_param - a)


def alpha_m_deg5(q: float) -> Dict[str, Tuple[float, float]]:
    """Multiplicateur m = φ²(q)/φ²(q⁵) contre α et contre le quotient de ψ(−q)."""
    _check_q(q)
    m = (eval_real(phi(1), q) / eval_real(phi(5), q)) ** 2
    a = nome_to_alpha(q)
    psi_ratio = q * q * (eval_real(psineg(5), q) / eval_real(psineg(1), q)) ** 4
    return {
        "alpha": (4 * a * (1 - a), (m - 1) * (5 - m) ** 5 / (64 * m ** 5)),
        "psi": (1 - psi_ratio, 8 * (3 - m) / (5 - m) ** 2),
    }


# =============================================================================
#  COURBE w(x) : q-SÉRIES ET DEMI-PÉRIODE
# =============================================================================

def J_qseries(k: float) -> float:
    """J(2k/(k−1)) = −Σ (−1)^j j χ₋₃(j) log((1+q^j)/(1−q^j)), q de la courbe w."""
    q = w_nome(k).q
    total = 0.0
    j = 1
    while True:
        qj = q ** j
        if j * qj < 1e-18:
            break
        total += (-1) ** j * j * CHI_M3(j) * (math.log1p(qj) - math.log1p(-qj))
        j += 1
    return -total


def J_w_integral(k: float) -> float:
    """J(2k/(k−1)) = −(1/π)∫₀^K (1 − 3kw)·log(1 − (2k/(1−k))w) dx, w = w(x)."""
    K = w_curve_params(k).periodK
    c = 2 * k / (k - 1)

    def integrand(x: float) -> float:
        w = w_curve(x, k)
        return (1 - 3 * k * w) * math.log1p(c * w)

    return -integrate_finite(integrand, 0.0, K).value / math.pi


def w_half_period_pair(k: float) -> Tuple[float, float]:
    """(2K, −π·a(−q)) sur la courbe w."""
    q = w_nome(k).q
    a_neg = eval_numeric(a_theta(1), -q).real
    return 2 * w_curve_params(k).periodK, -math.pi * a_neg


def w_multiplier_pair(k: float) -> Tuple[float, float]:
    """(1 + 2p, φ²(q)/φ²(q³))."""
    nome = w_nome(k)
    ratio = (eval_real(phi(1), nome.q) / eval_real(phi(3), nome.q)) ** 2
    return 1 + 2 * nome.p, ratio


def w_logform_at_K(k: float) -> Tuple[float, float]:
    """(Σ de Fourier de log(1 − 2kw/(1−k)) en x = K, log((3k−1)/(k−1)))."""
    K = w_curve_params(k).periodK
    return w_fourier(K, k).logform, math.log((3 * k - 1) / (k - 1))
