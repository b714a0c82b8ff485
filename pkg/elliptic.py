"""
Elliptic - Intégrales elliptiques complètes, fonctions de Jacobi, ℘ de Weierstrass
et courbe w(x) du conducteur 20

- modulus_params : K, K', nome par AGM (convention k² = α)
- jacobi : sn, cn, dn par descente de Landen
- ell_pi3 : intégrale complète de troisième espèce (mpmath)
- ellipticexpansion / elliptic_ratio : développement de Fourier de
  cn²dn²/(1 − α sn⁴) et sa valeur directe
- wp : ℘(z; g2, g3) par série de Laurent + duplications
- w_* : courbe w(x) = 3(1−k)²/(1+3℘(x)), périodes, nome, séries de Fourier
"""

import cmath
import logging
import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import mpmath as mp

from hypergeo import hyp2f1_13_23_1
from numerics import (ConvergenceError, DomainError, MlabError, central_diff, integrate_finite,
                      integrate_semiinf, poly_roots)
from qseries import eval_real, phi, phineg

logger = logging.getLogger(__name__)


# =============================================================================
#  CONFIGURATION
# =============================================================================

AGM_TOL = 4 * sys.float_info.epsilon   # relatif, quelques ulp
LANDEN_MAX_STEPS = 40
LAURENT_DEGREE = 20            # troncature de la série de Laurent de ℘
LAURENT_RADIUS = 0.3           # |z|·sqrt(max|e_i|) <= 0.3 au point de départ
WP_OVERFLOW = 1e150
W_K_MIN = 4.0 / 3.0 + 1e-6     # discriminant nul en k = 4/3
W_PERIOD_RTOL = 1e-9          # accord relatif exigé entre les deux formules de K


# =============================================================================
#  MODULE ET NOME
# =============================================================================

@dataclass(frozen=True)
class ModulusParams:
    """Module α = k², intégrales complètes K(α), K'(α) = K(1−α) et nome."""
    alpha: float
    bigK: float
    bigKprime: float
    nome: float


def agm(a: float, b: float) -> float:
    """Moyenne arithmético-géométrique de deux réels positifs."""
    if a <= 0 or b <= 0:
        raise DomainError(f"agm: arguments positifs requis ({a!r}, {b!r})")
    for _ in range(64):
        if abs(a - b) <= AGM_TOL * a:
            return (a + b) / 2
        a_next, b_next = (a + b) / 2, math.sqrt(a * b)
        if (a_next, b_next) == (a, b):
            return a_next
        a, b = a_next, b_next
    raise MlabError(f"agm non convergée ({a!r}, {b!r})")


def complete_K(alpha: float) -> float:
    """K(α) = π/(2·agm(1, sqrt(1−α))), 0 <= α < 1."""
    if not 0 <= alpha < 1:
        raise DomainError(f"K: α={alpha!r} hors de [0, 1)")
    return math.pi / (2 * agm(1.0, math.sqrt(1.0 - alpha)))


def modulus_params(alpha: float) -> ModulusParams:
    if not 0 < alpha < 1:
        raise DomainError(f"modulus_params: α={alpha!r} hors de (0, 1)")
    K = complete_K(alpha)
    Kp = math.pi / (2 * agm(1.0, math.sqrt(alpha)))
    return ModulusParams(alpha, K, Kp, math.exp(-math.pi * Kp / K))


def nome_to_alpha(q: float) -> float:
    """α(q) = 1 − φ⁴(−q)/φ⁴(q), inverse du nome pour 0 < q < 1."""
    if not 0 < q < 1:
        raise DomainError(f"nome_to_alpha: q={q!r} hors de (0, 1)")
    return 1.0 - (eval_real(phineg(), q) / eval_real(phi(), q)) ** 4


# =============================================================================
#  FONCTIONS DE JACOBI
# =============================================================================

def jacobi(u: float, alpha: float) -> Tuple[float, float, float]:
    """
    (sn, cn, dn)(u | α) par la descente AGM/Landen.

    L'amplitude φ0 est obtenue en remontant φ_{n−1} = (φ_n + asin(c_n/a_n·sin φ_n))/2
    depuis φ_N = 2^N·a_N·u. dn est pris comme sqrt(1 − α sn²) (dn > 0 sur R),
    la forme cos φ0 / cos(φ1 − φ0) étant 0/0 en u = K.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"jacobi: α={alpha!r} hors de (0, 1)")
    a: List[float] = [1.0]
    c: List[float] = [math.sqrt(alpha)]
    b = math.sqrt(1.0 - alpha)
    while len(a) < LANDEN_MAX_STEPS:
        an, bn, cn_ = (a[-1] + b) / 2, math.sqrt(a[-1] * b), (a[-1] - b) / 2
        a.append(an)
        c.append(cn_)
        b = bn
        if cn_ < AGM_TOL * an:
            break
    N = len(a) - 1
    ph = 2.0 ** N * a[N] * u
    for n in range(N, 0, -1):
        ph = (ph + math.asin(c[n] / a[n] * math.sin(ph))) / 2
    sn, cn = math.sin(ph), math.cos(ph)
    dn = math.sqrt(1.0 - alpha * sn * sn)
    return sn, cn, dn


def ell_pi3(n: float, alpha: float) -> float:
    """Π(n, α) = ∫₀^{π/2} dθ/((1 − n sin²θ)·sqrt(1 − α sin²θ)), n < 1."""
    if n >= 1:
        raise DomainError(f"Π: n={n!r} >= 1 (valeur principale non traitée)")
    if not 0 <= alpha < 1:
        raise DomainError(f"Π: α={alpha!r} hors de [0, 1)")
    return float(mp.ellippi(n, alpha))


def h_alpha(alpha: float) -> float:
    """Terme constant du développement de cn²dn²/(1 − α sn⁴), égal à π/4."""
    if not 0 < alpha < 1:
        raise DomainError(f"h: α={alpha!r} hors de (0, 1)")
    r = math.sqrt(alpha)
    return (-complete_K(alpha)
            - (1 - r) ** 2 / (2 * r) * ell_pi3(r, alpha)
            + (1 + r) ** 2 / (2 * r) * ell_pi3(-r, alpha))


def elliptic_ratio(u: float, alpha: float) -> float:
    """cn²u·dn²u/(1 − α sn⁴u), évaluée directement."""
    sn, cn, dn = jacobi(u, alpha)
    return cn * cn * dn * dn / (1.0 - alpha * sn ** 4)


def ellipticexpansion(u: float, alpha: float, N: int = 400) -> float:
    """
    Série de Fourier de cn²dn²/(1 − α sn⁴) tronquée à N termes:
    π/(4K) + (π/K)Σ q^n/(1+q^{2n})·cos(2πnu/K)
           + (π/(sqrt(α)K))Σ q^{n+1/2}/(1+q^{2n+1})·cos(π(2n+1)u/K)
    """
    if N < 1:
        raise DomainError(f"N doit être >= 1: {N!r}")
    mod = modulus_params(alpha)
    K, q = mod.bigK, mod.nome
    s_even = 0.0
    s_odd = 0.0
    for n in range(N):
        if n >= 1:
            s_even += q ** n / (1 + q ** (2 * n)) * math.cos(2 * math.pi * n * u / K)
        s_odd += q ** (n + 0.5) / (1 + q ** (2 * n + 1)) * math.cos(math.pi * (2 * n + 1) * u / K)
    return math.pi / (4 * K) + math.pi / K * s_even + math.pi / (math.sqrt(alpha) * K) * s_odd


def log_sn_fourier(u: float, alpha: float, N: int = 200) -> float:
    """log sn u = log(2K/π) + log sin(πu/2K) − 2Σ (1/n)·q^n/(1+q^n)·(1 − cos(πnu/K)), 0 < u < K."""
    mod = modulus_params(alpha)
    K, q = mod.bigK, mod.nome
    if not 0 < u < 2 * K:
        raise DomainError(f"log sn: u={u!r} hors de (0, 2K)")
    s = sum(q ** n / (n * (1 + q ** n)) * (1 - math.cos(math.pi * n * u / K)) for n in range(1, N + 1))
    return math.log(2 * K / math.pi) + math.log(math.sin(math.pi * u / (2 * K))) - 2 * s


# =============================================================================
#  ℘ DE WEIERSTRASS
# =============================================================================

@lru_cache(maxsize=64)
def _laurent_coefficients(g2: float, g3: float) -> Tuple[float, ...]:
    """c_k, k = 2..11: ℘(z) = 1/z² + Σ c_k z^{2k−2}."""
    kmax = LAURENT_DEGREE // 2 + 1
    c = {2: g2 / 20.0, 3: g3 / 28.0}
    for k in range(4, kmax + 1):
        s = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3.0 * s / ((2 * k + 1) * (k - 3))
    return tuple(c[k] for k in range(2, kmax + 1))


@lru_cache(maxsize=64)
def _root_scale(g2: float, g3: float) -> float:
    roots = poly_roots([4.0, 0.0, -g2, -g3])
    return max(abs(r) for r in roots) or 1.0


def _wp_laurent(z: complex, coeffs: Tuple[float, ...]) -> complex:
    z2 = z * z
    s = 0j
    p = z2
    for ck in coeffs:
        s += ck * p
        p *= z2
    return 1.0 / z2 + s


def wp(z: complex, g2: float, g3: float) -> complex:
    """
    ℘(z; g2, g3) pour z hors du réseau.

    Laurent au point z/2^m (|z/2^m|·sqrt(max|e_i|) <= 0.3) puis m duplications
    ℘(2z) = −2℘ + (6℘² − g2/2)²/(4(4℘³ − g2℘ − g3)).
    """
    z = complex(z)
    if z == 0:
        raise DomainError("℘: pôle en z = 0")
    r0 = LAURENT_RADIUS / math.sqrt(_root_scale(g2, g3))
    m = 0
    while abs(z) / 2 ** m > r0:
        m += 1
    coeffs = _laurent_coefficients(float(g2), float(g3))
    P = _wp_laurent(z / 2 ** m, coeffs)
    for _ in range(m):
        dP2 = 4 * P ** 3 - g2 * P - g3
        if dP2 == 0:
            raise DomainError(f"℘: z={z!r} sur le réseau des périodes")
        P = -2 * P + (6 * P * P - g2 / 2) ** 2 / (4 * dP2)
        if not cmath.isfinite(P) or abs(P) > WP_OVERFLOW:
            raise DomainError(f"℘: z={z!r} trop proche d'un point du réseau")
    return P


def wp_prime(z: complex, g2: float, g3: float, h: float = 1e-3) -> complex:
    """℘'(z) par différence centrée de Richardson (pas h relatif à |z|)."""
    step = h * min(1.0, abs(z))
    return central_diff(lambda t: wp(t, g2, g3), complex(z), step)


# =============================================================================
#  COURBE w(x)
# =============================================================================

@dataclass(frozen=True)
class WCurveParams:
    """Invariants et demi-périodes de ℘ pour w(x) = 3(1−k)²/(1+3℘(x))."""
    k: float
    g2: float
    g3: float
    periodK: float
    periodKprime: complex


@dataclass(frozen=True)
class WNome:
    """Nome de signature 3 de la courbe w, avec ses paramètres p et α."""
    q: float
    p: float
    alpha: float


@dataclass(frozen=True)
class WFourier:
    w: float
    logform: float
    tail: float


def w_invariants(k: float) -> Tuple[float, float]:
    """(g2, g3) en fonction de k."""
    g2 = -4.0 / 3.0 * (6 * k ** 3 - 12 * k ** 2 + 6 * k - 1)
    g3 = 4.0 / 27.0 * (2 - 6 * k + 3 * k ** 2) * (1 - 6 * k + 12 * k ** 2 - 18 * k ** 3 + 9 * k ** 4)
    return g2, g3


def _check_k(k: float) -> None:
    if k < W_K_MIN:
        raise DomainError(f"courbe w: k={k!r} < 4/3 + 1e-6 (discriminant dégénéré)")


def w_roots(k: float) -> Tuple[float, complex, complex]:
    """Zéros de 4X³ − g2X − g3: r1 = (1−k)² − 1/3 réel, r2 (Im > 0), r3 = conj(r2)."""
    _check_k(k)
    g2, g3 = w_invariants(k)
    r1 = (1 - k) ** 2 - 1.0 / 3.0
    roots = poly_roots([4.0, 0.0, -g2, -g3])
    r2 = max(roots, key=lambda r: r.imag)
    real = min(roots, key=lambda r: abs(r.imag))
    if abs(real.real - r1) > 1e-9 * max(1.0, abs(r1)):
        raise MlabError(f"courbe w: racine réelle {real!r} != (1−k)² − 1/3 = {r1!r}")
    return r1, r2, r2.conjugate()


def _w_K_direct(k: float) -> float:
    # K = ∫₀¹ dt/sqrt(4t(1−t)(k²t² + (k²−2k)t + (1−k)²)), t = sin²θ
    def f(th: float) -> float:
        s = math.sin(th) ** 2
        return 1.0 / math.sqrt(k * k * s * s + (k * k - 2 * k) * s + (1 - k) ** 2)
    return integrate_finite(f, 0.0, math.pi / 2).value


def _w_K_weierstrass(r1: float, g2: float) -> float:
    # ω = ∫_{r1}^∞ dy/sqrt(4y³ − g2y − g3), y = r1 + s²
    c0 = 3 * r1 * r1 - g2 / 4

    def f(s: float) -> float:
        return 1.0 / math.sqrt(s ** 4 + 3 * r1 * s * s + c0)
    return integrate_semiinf(f, scale=abs(c0) ** 0.25).value


def _w_omega_prime(r1: float, r2: complex, r3: complex) -> complex:
    """ω' = ∫_{r1}^{r2} dy/sqrt(4y³ − g2y − g3) sur le segment, y = r1 + (r2−r1)·sin²θ."""
    front = (r2 - r1) / (cmath.sqrt(r2 - r1) * cmath.sqrt(r1 - r2))

    def g(th: float) -> complex:
        y = r1 + (r2 - r1) * math.sin(th) ** 2
        return 1.0 / cmath.sqrt(y - r3)
    re = integrate_finite(lambda th: g(th).real, 0.0, math.pi / 2).value
    im = integrate_finite(lambda th: g(th).imag, 0.0, math.pi / 2).value
    return front * complex(re, im)


def w_period_routes(k: float) -> Tuple[float, float]:
    """K par l'intégrale de Weierstrass et par la formule directe en t."""
    r1, _, _ = w_roots(k)
    g2, _ = w_invariants(k)
    return _w_K_weierstrass(r1, g2), _w_K_direct(k)


def w_periods(k: float) -> Tuple[float, complex]:
    """
    (K, K') de w(x): K demi-période réelle, K' demi-période imaginaire pure.

    K = ∫_{r1}^∞ dy/sqrt(4y³ − g2y − g3), contrôlé contre la seconde formule
    ∫₀¹ dt/sqrt(4t((1−k)² − t(1−kt)²)). Le réseau est rhombique (r2, r3
    conjugués): la plus petite période imaginaire pure vaut 4i·Im ω2, ω2 étant
    la demi-période où ℘ = r2, et Im ω' = ±Im ω2 pour ω' pris sur le segment
    [r1, r2]. D'où K' = 2i·|Im ω'|.
    """
    r1, r2, r3 = w_roots(k)
    K_w, K_d = w_period_routes(k)
    if abs(K_w - K_d) > W_PERIOD_RTOL * K_d:
        logger.warning(f"[ELLIPTIC] ⚠️ k={k}: deux formules de K en désaccord ({K_w!r} / {K_d!r})")
        raise ConvergenceError(f"w: demi-période K non confirmée pour k={k} ({K_w!r} / {K_d!r})")
    omega_p = _w_omega_prime(r1, r2, r3)
    return K_w, complex(0.0, 2 * abs(omega_p.imag))


@lru_cache(maxsize=32)
def w_curve_params(k: float) -> WCurveParams:
    g2, g3 = w_invariants(k)
    K, Kp = w_periods(k)
    logger.debug(f"[ELLIPTIC] courbe w k={k}: g2={g2:.12g}, g3={g3:.12g}, K={K:.15g}, K'={Kp}")
    return WCurveParams(k, g2, g3, K, Kp)


def w_curve_complex(z: complex, k: float) -> complex:
    """w(z) = 3(1−k)²/(1 + 3℘(z)) pour z complexe hors des pôles."""
    prm = w_curve_params(k)
    P = wp(z, prm.g2, prm.g3)
    den = 1 + 3 * P
    if abs(den) < 1e-12 * max(1.0, abs(P)):
        raise DomainError(f"w: z={z!r} trop proche d'un pôle (℘ = −1/3)")
    return 3 * (1 - k) ** 2 / den


def w_curve(x: float, k: float) -> float:
    """w(x) sur l'axe réel, 0 < x < 2K."""
    prm = w_curve_params(k)
    if not 0 < x < 2 * prm.periodK:
        raise DomainError(f"w: x={x!r} hors de (0, 2K), 2K={2 * prm.periodK!r}")
    return w_curve_complex(x, k).real


def w_ode_residual(x: float, k: float, h: float = 1e-3) -> float:
    """|(w')² − 4w((1−k)² − w(1−kw)²)| avec w' par central_diff."""
    w = w_curve(x, k)
    dw = central_diff(lambda t: w_curve(t, k), x, h)
    return abs(dw * dw - 4 * w * ((1 - k) ** 2 - w * (1 - k * w) ** 2))


def w_p_param(k: float) -> float:
    """p = (−1 + sqrt((3k−1)/(k−1)))/2."""
    if k <= 1:
        raise DomainError(f"p(k): k={k!r} <= 1")
    return (-1 + math.sqrt((3 * k - 1) / (k - 1))) / 2


def w_nome(k: float) -> WNome:
    """
    q = exp(−(2π/sqrt 3)·₂F₁(1/3,2/3;1;1−α)/₂F₁(1/3,2/3;1;α)),
    α = 27p(1+p)⁴/(2(1+4p+p²)³).
    """
    _check_k(k)
    p = w_p_param(k)
    alpha = 27 * p * (1 + p) ** 4 / (2 * (1 + 4 * p + p * p) ** 3)
    if not 0 < alpha < 1:
        raise DomainError(f"w_nome: α={alpha!r} hors de (0, 1) pour k={k!r}")
    q = math.exp(-2 * math.pi / math.sqrt(3) * hyp2f1_13_23_1(1 - alpha) / hyp2f1_13_23_1(alpha))
    return WNome(q, p, alpha)


def w_nome_from_periods(k: float) -> float:
    """q = e^{2πiK'/(6K)} = exp(−π|K'|/(3K))."""
    prm = w_curve_params(k)
    return math.exp(-math.pi * abs(prm.periodKprime) / (3 * prm.periodK))


def w_fourier(x: float, k: float, N: int = 200) -> WFourier:
    """
    Séries de Fourier de w(x) et de log(1 − (2k/(1−k))·w(x)), N termes,
    q donné par la formule d'inversion de signature 3.
    """
    _check_k(k)
    if N < 1:
        raise DomainError(f"N doit être >= 1: {N!r}")
    K = w_curve_params(k).periodK
    if not 0 < x < 2 * K:
        raise DomainError(f"w_fourier: x={x!r} hors de (0, 2K)")
    q = w_nome(k).q
    w = 0.0
    logform = 0.0
    for n in range(1, N + 1):
        qn = q ** n
        s2 = math.sin(math.pi * n * x / (2 * K)) ** 2
        w += (-1) ** (n + 1) * qn / (1 + (-1) ** n * qn + qn * qn) * s2
        if n % 2:
            logform += (qn - qn * qn) / (n * (1 + qn ** 3)) * s2
    w *= 2 * math.pi / (k * K)
    logform *= 8
    qN = q ** (N + 1)
    tail = max(2 * math.pi / (k * K) * qN / (1 - q) ** 2, 8 * qN / (1 - q))
    return WFourier(w, logform, tail)
