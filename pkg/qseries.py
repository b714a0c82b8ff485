"""
QSeries - Séries q exactes, expressions en quotients êta, évaluation numérique

Contenu:
- FracSeries : série tronquée à exposants sur un réseau (1/D)·Z et
  coefficients rationnels exacts, avec suivi pessimiste de l'ordre de validité
- EtaExpr : petit langage d'expressions (η, φ, ψ, a, b, c, L, séries de
  Lambert à caractère, monômes q^r) + parseur avec position d'erreur
- series_of / series_equal : vérification exacte d'identités à O(q^N)
- eval_numeric / eval_real / lambert_eval : évaluation numérique; pour q réel
  les primitives de type thêta passent par log η avec inversion modulaire,
  pour q complexe par sommes directes (branche principale de Log q)
"""

import logging
import math
import cmath
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from numerics import DomainError, MlabError, SeriesError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]


# =============================================================================
#  CONFIGURATION
# =============================================================================

# Inversion η(e^{-t}) = sqrt(2π/t)·η(e^{-4π²/t}) appliquée dès que t < 2π,
# ce qui couvre en particulier tout q > 0.9
INVERSION_T = 2 * math.pi
MIXED_Q_MAX = 0.95             # L et Lambert: refus au-delà
NUMERIC_REL_TAIL = 1e-17       # troncature des sommes directes
SERIES_PAD_START = Fraction(2)  # marge initiale de series_of
SERIES_PAD_RETRIES = 6


class SeriesParseError(MlabError):
    """Erreur de syntaxe dans une expression; position = index du caractère fautif."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


ExprParseError = SeriesParseError


# =============================================================================
#  CARACTÈRES
# =============================================================================

@dataclass(frozen=True)
class CharacterTable:
    """Caractère de Dirichlet défini par ses valeurs sur les résidus."""
    name: str
    period: int
    values: Tuple[int, ...]

    def __call__(self, n: int) -> int:
        return self.values[n % self.period]

    def array(self, n: np.ndarray) -> np.ndarray:
        return np.asarray(self.values, dtype=float)[n % self.period]


CHI_M3 = CharacterTable("chi3", 3, (0, 1, -1))
CHI_M4 = CharacterTable("chi4", 4, (0, 1, 0, -1))
CHI_6 = CharacterTable("chi6", 6, (0, 1, 0, 0, 0, -1))
CHARACTERS: Dict[str, CharacterTable] = {c.name: c for c in (CHI_M3, CHI_M4, CHI_6)}

LAMBERT_VARIANTS = ("plain", "half", "sigma", "alt", "moment_alt")


def _divisors(m: int) -> List[int]:
    out = []
    d = 1
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            if d * d != m:
                out.append(m // d)
        d += 1
    return out


def lambert_coefficient(character: CharacterTable, variant: str, m: int) -> Tuple[Fraction, int]:
    """
    (exposant, coefficient) du terme d'indice m >= 1 d'une série de Lambert.

    plain      Σ χ(n) q^n/(1−q^n)              -> Σ_{d|m} χ(d) q^m
    half       Σ χ(n) q^{n/2}/(1−q^n)          -> Σ_{d|m, m/d impair} χ(d) q^{m/2}
    sigma      Σ_{n,r} r χ(rn) q^{rn}          -> χ(m) σ(m) q^m
    alt        Σ χ(n) (−q)^n/(1−(−q)^n)        -> (−1)^m Σ_{d|m} χ(d) q^m
    moment_alt Σ (−1)^j j χ(j) q^j
    """
    if variant == "plain":
        return Fraction(m), sum(character(d) for d in _divisors(m))
    if variant == "half":
        return Fraction(m, 2), sum(character(d) for d in _divisors(m) if (m // d) % 2 == 1)
    if variant == "sigma":
        return Fraction(m), character(m) * sum(_divisors(m))
    if variant == "alt":
        return Fraction(m), (-1) ** m * sum(character(d) for d in _divisors(m))
    if variant == "moment_alt":
        return Fraction(m), (-1) ** m * m * character(m)
    raise DomainError(f"variante de Lambert inconnue: {variant!r}")


# =============================================================================
#  FRACSERIES
# =============================================================================

def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class FracSeries:
    """
    Série q tronquée: Σ c_k q^{k/D}, exposants de confiance < order.

    order=None signifie "exacte" (polynôme). Les coefficients au-delà de
    l'ordre ne sont jamais conservés. Valeur immuable.
    """

    __slots__ = ("denom", "_coeffs", "order")

    def __init__(self, coeffs: Dict[Fraction, Number], order: Optional[Fraction], denom: int = 1):
        D = denom
        for e in coeffs:
            D = _lcm(D, Fraction(e).denominator)
        if order is not None:
            order = Fraction(order)
        stored: Dict[int, Number] = {}
        for e, c in coeffs.items():
            e = Fraction(e)
            if c == 0 or (order is not None and e >= order):
                continue
            stored[int(e * D)] = c
        self.denom = D
        self._coeffs = stored
        self.order = order

    # -- construction interne sans revalidation
    @classmethod
    def _raw(cls, coeffs: Dict[int, Number], order: Optional[Fraction], denom: int) -> "FracSeries":
        obj = cls.__new__(cls)
        obj.denom = denom
        obj._coeffs = {k: c for k, c in coeffs.items() if c != 0}
        obj.order = order
        if order is not None:
            bound = order * denom
            obj._coeffs = {k: c for k, c in obj._coeffs.items() if k < bound}
        return obj

    @classmethod
    def constant(cls, c: Number, order: Optional[Fraction] = None) -> "FracSeries":
        return cls({Fraction(0): c}, order)

    @classmethod
    def monomial(cls, r: Fraction, c: Number = 1, order: Optional[Fraction] = None) -> "FracSeries":
        return cls({Fraction(r): c}, order)

    # -- accès
    def items(self) -> List[Tuple[Fraction, Number]]:
        return [(Fraction(k, self.denom), c) for k, c in sorted(self._coeffs.items())]

    def coefficient(self, e: Fraction) -> Number:
        e = Fraction(e)
        if self.order is not None and e >= self.order:
            raise SeriesError(f"exposant {e} au-delà de l'ordre de validité {self.order}")
        k = e * self.denom
        if k.denominator != 1:
            return 0
        return self._coeffs.get(int(k), 0)

    def valuation(self) -> Optional[Fraction]:
        if not self._coeffs:
            return None
        return Fraction(min(self._coeffs), self.denom)

    def _effective_valuation(self) -> Optional[Fraction]:
        v = self.valuation()
        return self.order if v is None else v

    def is_zero(self) -> bool:
        return not self._coeffs

    def rescaled(self, denom: int) -> "FracSeries":
        if denom % self.denom:
            raise SeriesError(f"réseau 1/{denom} ne contient pas 1/{self.denom}")
        f = denom // self.denom
        return FracSeries._raw({k * f: c for k, c in self._coeffs.items()}, self.order, denom)

    def _aligned(self, other: "FracSeries") -> Tuple["FracSeries", "FracSeries"]:
        D = _lcm(self.denom, other.denom)
        return self.rescaled(D), other.rescaled(D)

    def truncated(self, order: Fraction) -> "FracSeries":
        order = Fraction(order)
        if self.order is not None:
            order = min(order, self.order)
        return FracSeries._raw(dict(self._coeffs), order, self.denom)

    # -- arithmétique
    def __add__(self, other: "FracSeries") -> "FracSeries":
        if not isinstance(other, FracSeries):
            other = FracSeries.constant(other)
        a, b = self._aligned(other)
        out = dict(a._coeffs)
        for k, c in b._coeffs.items():
            out[k] = out.get(k, 0) + c
        return FracSeries._raw(out, _min_order(a.order, b.order), a.denom)

    __radd__ = __add__

    def __neg__(self) -> "FracSeries":
        return FracSeries._raw({k: -c for k, c in self._coeffs.items()}, self.order, self.denom)

    def __sub__(self, other: "FracSeries") -> "FracSeries":
        if not isinstance(other, FracSeries):
            other = FracSeries.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "FracSeries":
        return (-self) + other

    def scale(self, c: Number) -> "FracSeries":
        if c == 0:
            return FracSeries._raw({}, self.order, self.denom)
        return FracSeries._raw({k: c * v for k, v in self._coeffs.items()}, self.order, self.denom)

    def shift(self, r: Fraction) -> "FracSeries":
        """Multiplication exacte par q^r."""
        r = Fraction(r)
        D = _lcm(self.denom, r.denominator)
        s = self.rescaled(D)
        dk = int(r * D)
        order = None if s.order is None else s.order + r
        return FracSeries._raw({k + dk: c for k, c in s._coeffs.items()}, order, D)

    def __mul__(self, other: "FracSeries") -> "FracSeries":
        if not isinstance(other, FracSeries):
            return self.scale(other)
        a, b = self._aligned(other)
        va, vb = a._effective_valuation(), b._effective_valuation()
        candidates = []
        if a.order is not None and vb is not None:
            candidates.append(a.order + vb)
        if b.order is not None and va is not None:
            candidates.append(b.order + va)
        order = min(candidates) if candidates else None
        if a.is_zero() or b.is_zero():
            return FracSeries._raw({}, order, a.denom)
        bound = None if order is None else order * a.denom
        b_items = sorted(b._coeffs.items())
        out: Dict[int, Number] = {}
        for ka, ca in a._coeffs.items():
            for kb, cb in b_items:
                k = ka + kb
                if bound is not None and k >= bound:
                    break
                out[k] = out.get(k, 0) + ca * cb
        return FracSeries._raw(out, order, a.denom)

    __rmul__ = __mul__

    def inverse(self) -> "FracSeries":
        """Inverse de B = c·q^v·(1 + ...), d'ordre ord(B) − 2v."""
        if self.is_zero():
            raise SeriesError("division par une série nulle à l'ordre de validité")
        kv = min(self._coeffs)
        c0 = self._coeffs[kv]
        D = self.denom
        v = Fraction(kv, D)
        rel = {k - kv: c for k, c in self._coeffs.items()}
        g = 0
        for k in rel:
            g = gcd(g, k)
        if self.order is None and len(rel) == 1:
            return FracSeries._raw({-kv: Fraction(1) / c0}, None, D)
        if self.order is None:
            raise SeriesError("inverse d'un polynôme non monôme: ordre de troncature requis")
        order = self.order - 2 * v
        if len(rel) == 1:
            # monôme tronqué: g = 0, seul le terme de tête survit
            return FracSeries._raw({-kv: Fraction(1) / c0} if -v < order else {}, order, D)
        # indices i sur le sous-réseau (g/D)·Z:
        # exposant du résultat = i·g/D − v < order  <=>  i·g < (order + v)·D
        limit = (order + v) * D
        n_steps = math.ceil(limit / g) if limit > 0 else 0
        u = {k // g: c for k, c in rel.items()}
        u_items = sorted((i, c) for i, c in u.items() if i > 0)
        inv0 = Fraction(1) / c0
        inv: List[Number] = [inv0] if n_steps > 0 else []
        for i in range(1, n_steps):
            s = 0
            for t, ct in u_items:
                if t > i:
                    break
                s += ct * inv[i - t]
            inv.append(-inv0 * s)
        out = {i * g - kv: c for i, c in enumerate(inv)}
        return FracSeries._raw(out, order, D)

    def __truediv__(self, other: "FracSeries") -> "FracSeries":
        if not isinstance(other, FracSeries):
            return self.scale(Fraction(1) / Fraction(other))
        return self * other.inverse()

    def __pow__(self, n: int) -> "FracSeries":
        if not isinstance(n, int):
            raise SeriesError(f"puissance non entière: {n!r}")
        if n < 0:
            return self.inverse() ** (-n)
        result = FracSeries.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self) -> str:
        head = " + ".join(f"{c}*q^{e}" for e, c in self.items()[:6])
        return f"FracSeries({head}{' + ...' if len(self._coeffs) > 6 else ''}; O(q^{self.order}))"

    def lines(self, below: Optional[Fraction] = None) -> List[str]:
        """Lignes "num/den<TAB>coefficient" par exposant croissant."""
        out = []
        for e, c in self.items():
            if below is not None and e >= below:
                break
            out.append(f"{e.numerator}/{e.denominator}\t{c}")
        return out


def _min_order(a: Optional[Fraction], b: Optional[Fraction]) -> Optional[Fraction]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def series_eval(series: FracSeries, q: complex) -> complex:
    """Somme numérique des termes d'une FracSeries (q^e = exp(e·Log q))."""
    if q == 0:
        return complex(series.coefficient(Fraction(0))) if series.valuation() is None or series.valuation() >= 0 else math.inf
    log_q = cmath.log(q)
    return sum(complex(float(c)) * cmath.exp(float(e) * log_q) for e, c in series.items())


# =============================================================================
#  EXPRESSIONS
# =============================================================================

class Primitive(Enum):
    """Primitives du langage d'expressions."""
    ETA = "eta"
    ETAPROD = "etaprod"
    PHI = "phi"
    PHINEG = "phineg"
    PSI = "psi"
    PSINEG = "psineg"
    A = "a"
    B = "b"
    C = "c"
    L = "L"
    LAMBERT = "lambert"


# Primitives de type thêta (évaluables près de q = 1 par inversion de η)
THETA_TYPE = {Primitive.ETA, Primitive.ETAPROD, Primitive.PHI, Primitive.PHINEG,
              Primitive.PSI, Primitive.PSINEG, Primitive.A, Primitive.B, Primitive.C}


class EtaExpr:
    """Base des noeuds d'expression (immuables, opérateurs surchargés)."""

    def __add__(self, other) -> "EtaExpr":
        return _binop("+", self, other)

    def __radd__(self, other) -> "EtaExpr":
        return _binop("+", other, self)

    def __sub__(self, other) -> "EtaExpr":
        return _binop("-", self, other)

    def __rsub__(self, other) -> "EtaExpr":
        return _binop("-", other, self)

    def __mul__(self, other) -> "EtaExpr":
        return _binop("*", self, other)

    def __rmul__(self, other) -> "EtaExpr":
        return _binop("*", other, self)

    def __truediv__(self, other) -> "EtaExpr":
        return _binop("/", self, other)

    def __rtruediv__(self, other) -> "EtaExpr":
        return _binop("/", other, self)

    def __neg__(self) -> "EtaExpr":
        return _binop("*", Const(Fraction(-1)), self)

    def __pow__(self, n: int) -> "EtaExpr":
        if not isinstance(n, int):
            raise DomainError(f"puissance entière requise: {n!r}")
        if isinstance(self, Const):
            return Const(self.value ** n)
        return Power(self, n)

    def walk(self) -> Iterable["EtaExpr"]:
        yield self


@dataclass(frozen=True, eq=True)
class Const(EtaExpr):
    value: Fraction


@dataclass(frozen=True, eq=True)
class QPow(EtaExpr):
    r: Fraction


@dataclass(frozen=True, eq=True)
class Prim(EtaExpr):
    kind: Primitive
    j: Fraction = Fraction(1)
    character: Optional[str] = None
    variant: Optional[str] = None

    def __post_init__(self):
        if not self.j > 0:
            raise DomainError(f"indice de substitution non positif: {self.j}")
        if self.kind is Primitive.LAMBERT:
            if self.character not in CHARACTERS:
                raise DomainError(f"caractère inconnu: {self.character!r}")
            if self.variant not in LAMBERT_VARIANTS:
                raise DomainError(f"variante de Lambert inconnue: {self.variant!r}")


@dataclass(frozen=True, eq=True)
class BinOp(EtaExpr):
    op: str
    left: EtaExpr
    right: EtaExpr

    def walk(self) -> Iterable[EtaExpr]:
        yield self
        yield from self.left.walk()
        yield from self.right.walk()


@dataclass(frozen=True, eq=True)
class Power(EtaExpr):
    base: EtaExpr
    n: int

    def walk(self) -> Iterable[EtaExpr]:
        yield self
        yield from self.base.walk()


def _as_expr(x) -> EtaExpr:
    if isinstance(x, EtaExpr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    raise DomainError(f"scalaire non rationnel dans une expression: {x!r}")


def _binop(op: str, left, right) -> EtaExpr:
    left, right = _as_expr(left), _as_expr(right)
    if isinstance(left, Const) and isinstance(right, Const):
        a, b = left.value, right.value
        if op == "+":
            return Const(a + b)
        if op == "-":
            return Const(a - b)
        if op == "*":
            return Const(a * b)
        if b == 0:
            raise DomainError("division par zéro")
        return Const(a / b)
    return BinOp(op, left, right)


# Constructeurs
def eta(j: Number = 1) -> Prim:
    return Prim(Primitive.ETA, Fraction(j))


def etaprod(j: Number = 1) -> Prim:
    return Prim(Primitive.ETAPROD, Fraction(j))


def phi(j: Number = 1) -> Prim:
    return Prim(Primitive.PHI, Fraction(j))


def phineg(j: Number = 1) -> Prim:
    return Prim(Primitive.PHINEG, Fraction(j))


def psi(j: Number = 1) -> Prim:
    return Prim(Primitive.PSI, Fraction(j))


def psineg(j: Number = 1) -> Prim:
    return Prim(Primitive.PSINEG, Fraction(j))


def a_theta(j: Number = 1) -> Prim:
    return Prim(Primitive.A, Fraction(j))


def b_theta(j: Number = 1) -> Prim:
    return Prim(Primitive.B, Fraction(j))


def c_theta(j: Number = 1) -> Prim:
    return Prim(Primitive.C, Fraction(j))


def eisenstein_L(j: Number = 1) -> Prim:
    return Prim(Primitive.L, Fraction(j))


def lambert(character: str, variant: str, j: Number = 1) -> Prim:
    return Prim(Primitive.LAMBERT, Fraction(j), character, variant)


def qpow(r: Number) -> QPow:
    return QPow(Fraction(r))


def substitution_denominators(expr: EtaExpr) -> int:
    D = 1
    for node in expr.walk():
        if isinstance(node, Prim):
            D = _lcm(D, node.j.denominator)
        elif isinstance(node, QPow):
            D = _lcm(D, node.r.denominator)
    return D


# =============================================================================
#  PARSEUR
# =============================================================================

_FUNCTIONS = {
    "eta": Primitive.ETA, "etaprod": Primitive.ETAPROD, "phi": Primitive.PHI,
    "phineg": Primitive.PHINEG, "psi": Primitive.PSI, "psineg": Primitive.PSINEG,
    "a": Primitive.A, "b": Primitive.B, "c": Primitive.C, "L": Primitive.L,
}


class _Parser:
    """
    Grammaire:
      expr   := term (('+'|'-') term)*
      term   := unary (('*'|'/') unary)*
      unary  := '-' unary | power
      power  := atom ('^' ['-'] INT)?
      atom   := INT | '(' expr ')' | FUNC '(' qarg ')' | 'qpow' '(' ['-'] rat ')'
              | 'lambert' '(' CHAR ',' VARIANT ',' qarg ')'
      qarg   := 'q' ('^' rat)?
      rat    := INT ('/' INT)? | '(' INT '/' INT ')'
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.i = 0

    @staticmethod
    def _tokenize(text: str) -> List[Tuple[str, str, int]]:
        tokens = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                tokens.append(("int", text[i:j], i))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                tokens.append(("name", text[i:j], i))
                i = j
            elif ch in "+-*/^(),":
                tokens.append(("op", ch, i))
                i += 1
            else:
                raise SeriesParseError(f"caractère inattendu {ch!r}", i)
        tokens.append(("end", "", len(text)))
        return tokens

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, kind: str, value: Optional[str] = None) -> Tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] if tok[0] != "end" else "fin d'expression"
            raise SeriesParseError(f"attendu {want!r}, trouvé {got!r}", tok[2])
        self.i += 1
        return tok

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok[0] == kind and (value is None or tok[1] == value)

    def parse(self) -> EtaExpr:
        expr = self.expr()
        self.take("end")
        return expr

    def expr(self) -> EtaExpr:
        node = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.take("op")[1]
            node = _binop(op, node, self.term())
        return node

    def term(self) -> EtaExpr:
        node = self.unary()
        while self.at("op", "*") or self.at("op", "/"):
            op = self.take("op")[1]
            rhs = self.unary()
            if op == "/" and isinstance(rhs, Const) and rhs.value == 0:
                raise SeriesParseError("division par zéro", self.peek()[2])
            node = _binop(op, node, rhs)
        return node

    def unary(self) -> EtaExpr:
        if self.at("op", "-"):
            self.take("op", "-")
            return _binop("*", Const(Fraction(-1)), self.unary())
        return self.power()

    def power(self) -> EtaExpr:
        base = self.atom()
        if self.at("op", "^"):
            self.take("op", "^")
            sign = 1
            if self.at("op", "-"):
                self.take("op", "-")
                sign = -1
            n = sign * int(self.take("int")[1])
            return base ** n
        return base

    def rational(self) -> Fraction:
        if self.at("op", "("):
            self.take("op", "(")
            num = int(self.take("int")[1])
            self.take("op", "/")
            tok = self.take("int")
            self.take("op", ")")
        else:
            num = int(self.take("int")[1])
            if not self.at("op", "/"):
                return Fraction(num)
            self.take("op", "/")
            tok = self.take("int")
        den = int(tok[1])
        if den == 0:
            raise SeriesParseError("dénominateur nul", tok[2])
        return Fraction(num, den)

    def qarg(self) -> Fraction:
        self.take("name", "q")
        if not self.at("op", "^"):
            return Fraction(1)
        self.take("op", "^")
        pos = self.peek()[2]
        j = self.rational()
        if j <= 0:
            raise SeriesParseError("indice de substitution non positif", pos)
        return j

    def atom(self) -> EtaExpr:
        tok = self.peek()
        if tok[0] == "int":
            self.take("int")
            return Const(Fraction(int(tok[1])))
        if self.at("op", "("):
            self.take("op", "(")
            node = self.expr()
            self.take("op", ")")
            return node
        if tok[0] != "name":
            got = tok[1] if tok[0] != "end" else "fin d'expression"
            raise SeriesParseError(f"terme attendu, trouvé {got!r}", tok[2])
        name = tok[1]
        self.take("name")
        if name == "qpow":
            self.take("op", "(")
            sign = 1
            if self.at("op", "-"):
                self.take("op", "-")
                sign = -1
            r = sign * self.rational()
            self.take("op", ")")
            return QPow(r)
        if name == "lambert":
            self.take("op", "(")
            ctok = self.take("name")
            if ctok[1] not in CHARACTERS:
                raise SeriesParseError(f"caractère inconnu {ctok[1]!r}", ctok[2])
            self.take("op", ",")
            vtok = self.take("name")
            if vtok[1] not in LAMBERT_VARIANTS:
                raise SeriesParseError(f"variante inconnue {vtok[1]!r}", vtok[2])
            self.take("op", ",")
            j = self.qarg()
            self.take("op", ")")
            return Prim(Primitive.LAMBERT, j, ctok[1], vtok[1])
        if name not in _FUNCTIONS:
            raise SeriesParseError(f"fonction inconnue {name!r}", tok[2])
        self.take("op", "(")
        j = self.qarg()
        self.take("op", ")")
        return Prim(_FUNCTIONS[name], j)


def parse_expr(text: str) -> EtaExpr:
    """Analyse une expression; SeriesParseError porte la position fautive."""
    return _Parser(text).parse()


# =============================================================================
#  SÉRIES EXACTES DES PRIMITIVES
# =============================================================================

def _scaled(base: Dict[Fraction, int], j: Fraction, order: Fraction, denom: int) -> FracSeries:
    return FracSeries({e * j: c for e, c in base.items()}, order, denom)


@lru_cache(maxsize=256)
def _base_series(kind: Primitive, bound: Fraction, character: Optional[str],
                 variant: Optional[str]) -> Tuple[Tuple[Fraction, int], ...]:
    """Coefficients de la primitive en q (sans substitution), exposants < bound."""
    out: Dict[Fraction, int] = {}
    M = math.ceil(bound) + 1

    if kind is Primitive.ETA:
        # Σ (−1)^n q^{(6n+1)²/24}
        n = 0
        while True:
            hit = False
            for m in (n, -n) if n else (0,):
                e = Fraction((6 * m + 1) ** 2, 24)
                if e < bound:
                    out[e] = out.get(e, 0) + (-1) ** abs(m)
                    hit = True
            if not hit and n > 0:
                break
            n += 1
    elif kind is Primitive.ETAPROD:
        # q^{1/24} ∏_{k>=1} (1 − q^k)
        poly = [0] * M
        poly[0] = 1
        for k in range(1, M):
            for i in range(M - 1, k - 1, -1):
                poly[i] -= poly[i - k]
        for i, c in enumerate(poly):
            if c:
                out[Fraction(i) + Fraction(1, 24)] = c
    elif kind in (Primitive.PHI, Primitive.PHINEG):
        n = 0
        while n * n < bound:
            sign = (-1) ** n if kind is Primitive.PHINEG else 1
            out[Fraction(n * n)] = out.get(Fraction(n * n), 0) + (1 if n == 0 else 2 * sign)
            n += 1
    elif kind in (Primitive.PSI, Primitive.PSINEG):
        n = 0
        while n * (n + 1) // 2 < bound:
            e = n * (n + 1) // 2
            sign = (-1) ** e if kind is Primitive.PSINEG else 1
            out[Fraction(e)] = out.get(Fraction(e), 0) + sign
            n += 1
    elif kind is Primitive.A:
        # comptage brut des représentations m² + mn + n² = k
        R = math.isqrt(4 * M // 3 + 1) + 2
        for m in range(-R, R + 1):
            for n in range(-R, R + 1):
                k = m * m + m * n + n * n
                if k < bound:
                    out[Fraction(k)] = out.get(Fraction(k), 0) + 1
    elif kind is Primitive.L:
        out[Fraction(0)] = 1
        for n in range(1, M):
            if n < bound:
                out[Fraction(n)] = -24 * sum(_divisors(n))
    elif kind is Primitive.LAMBERT:
        chi = CHARACTERS[character]
        m = 1
        while True:
            e, c = lambert_coefficient(chi, variant, m)
            if e >= bound:
                break
            if c:
                out[e] = out.get(e, 0) + c
            m += 1
    else:
        raise SeriesError(f"primitive sans série de base: {kind}")
    return tuple(sorted(out.items()))


def _prim_series(node: Prim, order: Fraction, denom: int) -> FracSeries:
    if node.kind is Primitive.B:
        return _expr_series(eta(node.j) ** 3 / eta(3 * node.j), order, denom)
    if node.kind is Primitive.C:
        return _expr_series(3 * eta(3 * node.j) ** 3 / eta(node.j), order, denom)
    base = _base_series(node.kind, order / node.j, node.character, node.variant)
    return _scaled(dict(base), node.j, order, denom)


def _expr_series(node: EtaExpr, order: Fraction, denom: int) -> FracSeries:
    if isinstance(node, Const):
        return FracSeries({Fraction(0): node.value}, order, denom)
    if isinstance(node, QPow):
        return FracSeries({node.r: 1}, order, denom)
    if isinstance(node, Prim):
        return _prim_series(node, order, denom)
    if isinstance(node, Power):
        return _expr_series(node.base, order, denom) ** node.n
    if isinstance(node, BinOp):
        left = _expr_series(node.left, order, denom)
        right = _expr_series(node.right, order, denom)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    raise SeriesError(f"noeud d'expression inconnu: {node!r}")


def series_of(expr: EtaExpr, N: Number) -> FracSeries:
    """
    Série exacte de expr, valide pour tous les exposants < N.

    Les primitives sont développées avec une marge au-delà de N, doublée
    tant que la perte d'ordre (divisions, monômes négatifs) la consomme.
    """
    N = Fraction(N)
    if not N > 0:
        raise DomainError(f"ordre N doit être > 0: {N}")
    D = 24 * substitution_denominators(expr)
    pad = SERIES_PAD_START
    for _ in range(SERIES_PAD_RETRIES):
        s = _expr_series(expr, N + pad, D)
        if s.order is None or s.order >= N:
            return s.truncated(N)
        logger.debug(f"[SERIES] ordre {s.order} < {N}, marge {pad} -> {2 * pad}")
        pad *= 2
    raise SeriesError(f"impossible d'atteindre l'ordre {N} (dernier ordre {s.order})")


def series_equal(e1: EtaExpr, e2: EtaExpr, N: Number) -> bool:
    """Égalité exacte de tous les coefficients d'exposant < N."""
    diff = series_of(e1, N) - series_of(e2, N)
    if diff.is_zero():
        return True
    e, c = diff.items()[0]
    logger.debug(f"[SERIES] ❌ premier écart en q^{e}: {c}")
    return False


# =============================================================================
#  ÉVALUATION NUMÉRIQUE : q RÉEL (log-espace, inversion de η)
# =============================================================================

def _log_prod(t: float) -> float:
    """log ∏_{k>=1} (1 − e^{−kt}), t >= π (quelques termes suffisent)."""
    s = 0.0
    k = 1
    while True:
        x = math.exp(-k * t)
        # termes en raison <= e^{−π}: arrêt relatif à la somme
        if x == 0 or (k > 1 and x <= 1e-17 * -s):
            return s
        s += math.log1p(-x)
        k += 1


def log_eta_t(t: float) -> float:
    """log η(e^{−t}), t > 0, par inversion modulaire quand t < 2π."""
    if not t > 0:
        raise DomainError(f"log η: t doit être > 0 ({t!r})")
    if t >= INVERSION_T:
        return -t / 24.0 + _log_prod(t)
    s = 4 * math.pi ** 2 / t
    return 0.5 * math.log(2 * math.pi / t) - s / 24.0 + _log_prod(s)


def log_theta_t(kind: Primitive, t: float) -> float:
    """log de la primitive de type thêta en q = e^{−t} (valeurs toutes > 0)."""
    L = log_eta_t
    if kind in (Primitive.ETA, Primitive.ETAPROD):
        return L(t)
    if kind is Primitive.PHI:
        return 5 * L(2 * t) - 2 * L(t) - 2 * L(4 * t)
    if kind is Primitive.PHINEG:
        return 2 * L(t) - L(2 * t)
    if kind is Primitive.PSI:
        return 2 * L(2 * t) - L(t) + t / 8.0
    if kind is Primitive.PSINEG:
        return L(t) + L(4 * t) - L(2 * t) + t / 8.0
    if kind is Primitive.B:
        return 3 * L(t) - L(3 * t)
    if kind is Primitive.C:
        return math.log(3.0) + 3 * L(3 * t) - L(t)
    if kind is Primitive.A:
        lb, lc = log_theta_t(Primitive.B, t), log_theta_t(Primitive.C, t)
        hi, lo = max(lb, lc), min(lb, lc)
        return hi + math.log1p(math.exp(3 * (lo - hi))) / 3.0
    raise DomainError(f"{kind.value}: pas de forme thêta")


def psi_excess_t(t: float) -> float:
    """
    D(t) = log(q^{1/8}ψ(q)) − ½·log(π/(2t)) en q = e^{−t}.

    Par inversion, q^{1/8}ψ(q) = sqrt(π/(2t))·∏(1 − q'^k)²/(1 − q'^{2k}) avec
    q' = e^{−2π²/t}: D est alors calculé sans annulation, D ~ −2q' quand t → 0.
    """
    if not t > 0:
        raise DomainError(f"ψ: t doit être > 0 ({t!r})")
    if t < INVERSION_T:
        s = 4 * math.pi ** 2 / t
        return 2 * _log_prod(s / 2) - _log_prod(s)
    return log_theta_t(Primitive.PSI, t) - t / 8.0 - 0.5 * math.log(math.pi / (2 * t))


def _n_terms(abs_q: float, power: float = 1.0) -> int:
    """Nombre de termes pour que |q|^n·n^power < NUMERIC_REL_TAIL."""
    if abs_q == 0:
        return 1
    n = int(-math.log(NUMERIC_REL_TAIL) / -math.log(abs_q)) + 2
    return int(n * (1 + 0.1 * power)) + 10


def _sigma_array(M: int) -> np.ndarray:
    sig = np.zeros(M + 1)
    for d in range(1, M + 1):
        sig[d::d] += d
    return sig


def _lambert_numeric(chi: CharacterTable, variant: str, x: complex, log_x: complex) -> complex:
    """Somme directe de la série de Lambert en x = q^j (Log x fourni)."""
    ax = abs(x)
    if ax == 0:
        return 0j
    M = _n_terms(ax, 2.0)
    n = np.arange(1, M + 1)
    ch = chi.array(n)
    xn = np.exp(n * log_x)
    if variant == "plain":
        terms = ch * xn / (1 - xn)
    elif variant == "half":
        terms = ch * np.exp(n * log_x / 2) / (1 - xn)
    elif variant == "sigma":
        terms = ch * _sigma_array(M)[1:] * xn
    elif variant == "alt":
        yn = (-1.0) ** n * xn
        terms = ch * yn / (1 - yn)
    elif variant == "moment_alt":
        terms = (-1.0) ** n * n * ch * xn
    else:
        raise DomainError(f"variante de Lambert inconnue: {variant!r}")
    return complex(np.sum(terms))


def lambert_eval(character: Union[CharacterTable, str], variant: str, q: float) -> float:
    """Série de Lambert à caractère, 0 <= q < 1."""
    chi = CHARACTERS[character] if isinstance(character, str) else character
    if not 0 <= q < 1:
        raise DomainError(f"lambert_eval: q={q!r} hors de [0, 1)")
    if q == 0:
        return 0.0
    return _lambert_numeric(chi, variant, q, math.log(q)).real


def _L_numeric(log_x: complex) -> complex:
    x = cmath.exp(log_x)
    M = _n_terms(abs(x), 2.0)
    n = np.arange(1, M + 1)
    xn = np.exp(n * log_x)
    return 1 - 24 * complex(np.sum(n * xn / (1 - xn)))


# =============================================================================
#  ÉVALUATION NUMÉRIQUE : q COMPLEXE (sommes directes)
# =============================================================================

def _theta_direct(kind: Primitive, log_x: complex) -> complex:
    """Primitive de type thêta en x = exp(log_x), somme directe, |x| < 1."""
    x = cmath.exp(log_x)
    ax = abs(x)
    if kind in (Primitive.ETA, Primitive.ETAPROD):
        M = int(math.sqrt(2 * _n_terms(ax) / 3)) + 3
        n = np.arange(-M, M + 1)
        s = np.sum((-1.0) ** np.abs(n) * np.exp(n * (3 * n - 1) / 2 * log_x))
        return cmath.exp(log_x / 24) * complex(s)
    if kind in (Primitive.PHI, Primitive.PHINEG):
        M = int(math.sqrt(_n_terms(ax))) + 3
        n = np.arange(1, M + 1)
        sign = (-1.0) ** n if kind is Primitive.PHINEG else np.ones_like(n, dtype=float)
        return 1 + 2 * complex(np.sum(sign * np.exp(n * n * log_x)))
    if kind in (Primitive.PSI, Primitive.PSINEG):
        M = int(math.sqrt(2 * _n_terms(ax))) + 3
        n = np.arange(0, M + 1)
        e = n * (n + 1) // 2
        sign = (-1.0) ** e if kind is Primitive.PSINEG else np.ones_like(n, dtype=float)
        return complex(np.sum(sign * np.exp(e * log_x)))
    if kind is Primitive.B:
        return _theta_direct(Primitive.ETA, log_x) ** 3 / _theta_direct(Primitive.ETA, 3 * log_x)
    if kind is Primitive.C:
        return 3 * _theta_direct(Primitive.ETA, 3 * log_x) ** 3 / _theta_direct(Primitive.ETA, log_x)
    if kind is Primitive.A:
        # a(q) = φ(q)φ(q³) + 4qψ(q²)ψ(q⁶)
        P, S = Primitive.PHI, Primitive.PSI
        return (_theta_direct(P, log_x) * _theta_direct(P, 3 * log_x)
                + 4 * cmath.exp(log_x) * _theta_direct(S, 2 * log_x) * _theta_direct(S, 6 * log_x))
    raise DomainError(f"{kind.value}: pas de forme thêta")


def _contains_mixed(expr: EtaExpr) -> bool:
    return any(isinstance(n, Prim) and n.kind not in THETA_TYPE for n in expr.walk())


def _eval(node: EtaExpr, q: complex, log_q: Optional[complex], real_t: Optional[float]) -> complex:
    if isinstance(node, Const):
        return complex(float(node.value))
    if isinstance(node, QPow):
        if log_q is None:
            if node.r > 0:
                return 0j
            if node.r == 0:
                return 1 + 0j
            raise DomainError(f"q^{node.r} en q = 0")
        return cmath.exp(float(node.r) * log_q)
    if isinstance(node, Prim):
        return _eval_prim(node, q, log_q, real_t)
    if isinstance(node, Power):
        return _eval(node.base, q, log_q, real_t) ** node.n
    if isinstance(node, BinOp):
        left = _eval(node.left, q, log_q, real_t)
        right = _eval(node.right, q, log_q, real_t)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0:
            raise DomainError("division par zéro à l'évaluation")
        return left / right
    raise MlabError(f"noeud d'expression inconnu: {node!r}")


def _eval_prim(node: Prim, q: complex, log_q: Optional[complex], real_t: Optional[float]) -> complex:
    j = float(node.j)
    if log_q is None:
        # q = 0: termes constants
        if node.kind in (Primitive.ETA, Primitive.ETAPROD, Primitive.C, Primitive.LAMBERT):
            return 0j
        return 1 + 0j
    if node.kind in THETA_TYPE and real_t is not None:
        return complex(math.exp(log_theta_t(node.kind, j * real_t)))
    if node.kind in THETA_TYPE:
        return _theta_direct(node.kind, j * log_q)
    if node.kind is Primitive.L:
        return _L_numeric(j * log_q)
    return _lambert_numeric(CHARACTERS[node.character], node.variant,
                            cmath.exp(j * log_q), j * log_q)


def eval_numeric(expr: EtaExpr, q: complex) -> complex:
    """
    Valeur numérique de expr en q, |q| < 1 (q^r = exp(r·Log q)).

    q réel > 0: primitives thêta via log η avec inversion modulaire;
    expressions contenant L ou des séries de Lambert refusées pour q > 0.95.
    """
    q = complex(q)
    aq = abs(q)
    if aq >= 1:
        raise DomainError(f"|q| = {aq} >= 1")
    if _contains_mixed(expr) and aq > MIXED_Q_MAX:
        raise DomainError(f"expression avec L/Lambert refusée pour |q| = {aq} > {MIXED_Q_MAX}")
    if aq == 0:
        return _eval(expr, q, None, None)
    log_q = cmath.log(q)
    real_t = -math.log(q.real) if q.imag == 0 and q.real > 0 else None
    value = _eval(expr, q, log_q, real_t)
    if not (cmath.isfinite(value)):
        raise MlabError(f"valeur non finie en q={q!r}")
    return value


def eval_real(expr: EtaExpr, q: float) -> float:
    """eval_numeric pour 0 <= q < 1 réel, partie réelle."""
    return eval_numeric(expr, q).real


OMEGA = cmath.exp(2j * math.pi / 3)
