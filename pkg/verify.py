"""
Verify - Catalogue d'identités nommées et exécution uniforme

- IdentityCatalog : chargement de identity_catalog.json, filtrage par tag
- registre d'évaluateurs : chaque enregistrement numérique nomme un
  évaluateur qui renvoie une liste de couples (gauche, droite)
- run / run_all : rapports VerifyReport, exécution parallèle déterministe
  (rapports triés par id, aucune dépendance à l'ordre d'achèvement)
"""

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from config_manager import CONFIG
from elliptic import elliptic_ratio, ellipticexpansion, h_alpha, modulus_params, w_curve, w_curve_params, w_fourier, w_ode_residual
from lvalues import (F1_F2, H_relation, J_qseries, J_w_integral, J_y, L20_m_integral, L27_3f2, L27_4f3,
                     L36_3f2, L36_sqrt_integral, L_elliptic, LatticeSumSpec, F_integral, G_eval, H_eval, S_eval,
                     T5_integral, T5a_pair, alpha_m_deg5, deg2_orientation, dJ_dy_closed, elementary_E20,
                     funceq_g, g1_elliptic, gn_series_check, ko_funceq, lemk1_rhs, lemk2_rhs, param_deg3,
                     pi4_integral, sncndn_mahler, theorem20_rhs, w_half_period_pair, w_logform_at_K,
                     w_multiplier_pair)
from mahler import Family, mahler
from numerics import CatalogError, MlabError, central_diff
from qseries import parse_expr, series_of

logger = logging.getLogger(__name__)


# =============================================================================
#  CONFIGURATION
# =============================================================================

CATALOG_PATH = Path(__file__).resolve().parent / "identity_catalog.json"
KINDS = ("numeric", "exact_series")
STATUSES = ("pass", "fail", "error")
REPORT_FIELDS = ("id", "description", "paper_ref", "lhs", "rhs", "abs_err", "tol", "status", "seconds", "message")

PI2 = math.pi ** 2
SQRT5 = math.sqrt(5.0)

Pair = Tuple[float, float]


# =============================================================================
#  TYPES
# =============================================================================

@dataclass(frozen=True)
class IdentityRecord:
    """Une identité du catalogue."""
    id: str
    description: str
    paper_ref: str
    kind: str
    params: Dict[str, Any]
    tolerance: Optional[float]
    tags: Tuple[str, ...] = ()
    negative_control: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IdentityRecord":
        try:
            record = cls(
                id=str(data["id"]),
                description=str(data.get("description", "")),
                paper_ref=str(data.get("paper_ref", "")),
                kind=str(data["kind"]),
                params=dict(data.get("params", {})),
                tolerance=None if data.get("tolerance") is None else float(data["tolerance"]),
                tags=tuple(data.get("tags", ())),
                negative_control=bool(data.get("negative_control", False)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CatalogError(f"enregistrement mal formé {data.get('id', '?')!r}: {e}") from e
        record.validate()
        return record

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise CatalogError(f"{self.id}: type inconnu {self.kind!r}")
        if self.kind == "numeric":
            if self.tolerance is None or not self.tolerance > 0:
                raise CatalogError(f"{self.id}: tolérance > 0 requise")
            if self.params.get("evaluator") not in EVALUATORS:
                raise CatalogError(f"{self.id}: évaluateur inconnu {self.params.get('evaluator')!r}")
        else:
            for key in ("lhs", "rhs", "N"):
                if key not in self.params:
                    raise CatalogError(f"{self.id}: paramètre {key!r} manquant")
        if not self.negative_control and not self.paper_ref:
            raise CatalogError(f"{self.id}: référence manquante")

    @property
    def tol(self) -> float:
        return self.tolerance if self.tolerance is not None else 0.0

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["tags"] = list(self.tags)
        return out


@dataclass
class VerifyReport:
    """Résultat de l'exécution d'une identité."""
    id: str
    description: str
    paper_ref: str
    lhs: Optional[float]
    rhs: Optional[float]
    abs_err: Optional[float]
    tol: float
    status: str
    seconds: float
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VerifyReport":
        return cls(**{k: data.get(k, "" if k == "message" else None) for k in REPORT_FIELDS})


# =============================================================================
#  REGISTRE D'ÉVALUATEURS
# =============================================================================

Evaluator = Callable[[Dict[str, Any]], List[Pair]]
EVALUATORS: Dict[str, Evaluator] = {}


def evaluator(name: str) -> Callable[[Evaluator], Evaluator]:
    def register(fn: Evaluator) -> Evaluator:
        EVALUATORS[name] = fn
        return fn
    return register


def _chain(values: Sequence[float]) -> List[Pair]:
    """Chaîne d'égalités v₀ = v₁ = ... vue comme couples (v₀, vᵢ)."""
    return [(values[0], v) for v in values[1:]]


def _rational(value: Any) -> Fraction:
    return Fraction(str(value))


def _g(alpha: float, route: str = "auto") -> float:
    return mahler(Family.G, alpha, route)


def _n(alpha: float, route: str = "auto") -> float:
    return mahler(Family.N_, alpha, route)


def _m(alpha: float) -> float:
    return mahler(Family.M, alpha, "hyper")


@evaluator("boyd_m8")
def _boyd_m8(params: Dict[str, Any]) -> List[Pair]:
    return _chain([_m(8), 4 * _m(2), 24 / PI2 * F_integral(LatticeSumSpec(2, 3))])


@evaluator("boyd_g4")
def _boyd_g4(params: Dict[str, Any]) -> List[Pair]:
    return _chain([_g(4), 0.75 * _n(2 ** (5 / 3), "direct"), 10 / PI2 * F_integral(LatticeSumSpec(1, 5))])


@evaluator("l27")
def _l27(params: Dict[str, Any]) -> List[Pair]:
    closed = L27_3f2() if params["form"] == "3f2" else L27_4f3()
    return _chain([L_elliptic(27), closed])


@evaluator("l36")
def _l36(params: Dict[str, Any]) -> List[Pair]:
    form = params["form"]
    if form == "3f2":
        other = L36_3f2()
    elif form == "g2":
        other = 2 * PI2 / 9 * _g(2)
    else:
        other = L36_sqrt_integral()
    return _chain([L_elliptic(36), other])


@evaluator("l20_m")
def _l20_m(params: Dict[str, Any]) -> List[Pair]:
    return _chain([L_elliptic(20), L20_m_integral()])


@evaluator("e20_elementary")
def _e20_elementary(params: Dict[str, Any]) -> List[Pair]:
    return _chain([elementary_E20(), L_elliptic(20)])


@evaluator("g_half")
def _g_half(params: Dict[str, Any]) -> List[Pair]:
    sign = params.get("sign", -1)
    return _chain([G_eval(Fraction(1, 2)), sign * PI2 * math.log(2) / 3])


@evaluator("g_routes")
def _g_routes(params: Dict[str, Any]) -> List[Pair]:
    x = _rational(params["x"])
    return _chain([G_eval(x, m) for m in params["methods"]])


@evaluator("g1_elementary")
def _g1_elementary(params: Dict[str, Any]) -> List[Pair]:
    return _chain([G_eval(1, "elementary_x1"), -4 * L_elliptic(24)])


@evaluator("g1_elliptic")
def _g1_elliptic(params: Dict[str, Any]) -> List[Pair]:
    return _chain([g1_elliptic(), -4 * L_elliptic(24)])


@evaluator("th_f23")
def _th_f23(params: Dict[str, Any]) -> List[Pair]:
    return _chain([L_elliptic(24), -G_eval(1, "definition") / 4, PI2 / 6 * _m(2),
                   F_integral(LatticeSumSpec(2, 3))])


@evaluator("h_relation")
def _h_relation(params: Dict[str, Any]) -> List[Pair]:
    return [H_relation(params["name"])]


@evaluator("h_routes")
def _h_routes(params: Dict[str, Any]) -> List[Pair]:
    x = _rational(params["x"])
    return _chain([H_eval(x, m) for m in params["methods"]])


@evaluator("h_elementary")
def _h_elementary(params: Dict[str, Any]) -> List[Pair]:
    x = _rational(params["x"])
    other = -9 * L_elliptic(27) if x == 1 else H_eval(x, "definition")
    return _chain([H_eval(x, "elementary"), other])


@evaluator("s_rel")
def _s_rel(params: Dict[str, Any]) -> List[Pair]:
    return _chain([S_eval(1) - S_eval(5), -4 * L_elliptic(20)])


@evaluator("s_routes")
def _s_routes(params: Dict[str, Any]) -> List[Pair]:
    x = _rational(params["x"])
    return _chain([S_eval(x, "definition"), S_eval(x, "reduced")])


@evaluator("lemk1")
def _lemk1(params: Dict[str, Any]) -> List[Pair]:
    lam = float(params["lam"])
    F1, F2 = F1_F2(lam)
    return [(F1 - F2, lemk1_rhs(lam))]


@evaluator("lemk2")
def _lemk2(params: Dict[str, Any]) -> List[Pair]:
    lam = float(params["lam"])
    return [(F1_F2(lam)[0], lemk2_rhs(lam))]


@evaluator("gn_coeff")
def _gn_coeff(params: Dict[str, Any]) -> List[Pair]:
    return [gn_series_check(float(params["z"]))]


@evaluator("elliptic_fourier")
def _elliptic_fourier(params: Dict[str, Any]) -> List[Pair]:
    alpha = float(params["alpha"])
    K = modulus_params(alpha).bigK
    N = int(params.get("N", 400))
    return [(ellipticexpansion(f * K, alpha, N), elliptic_ratio(f * K, alpha)) for f in params["fractions"]]


@evaluator("sncndn")
def _sncndn(params: Dict[str, Any]) -> List[Pair]:
    red = sncndn_mahler(float(params["alpha"]))
    return [red[name] for name in ("sn", "cn", "dn")]


@evaluator("pi4")
def _pi4(params: Dict[str, Any]) -> List[Pair]:
    return [(pi4_integral(float(a)), math.pi / 4) for a in params["alphas"]]


@evaluator("h_alpha")
def _h_alpha(params: Dict[str, Any]) -> List[Pair]:
    return [(h_alpha(float(a)), math.pi / 4) for a in params["alphas"]]


@evaluator("ko")
def _ko(params: Dict[str, Any]) -> List[Pair]:
    return [ko_funceq(float(a)) for a in params["alphas"]]


@evaluator("t5")
def _t5(params: Dict[str, Any]) -> List[Pair]:
    return [(T5_integral(float(y)), dJ_dy_closed(float(y))) for y in params["ys"]]


@evaluator("t5a")
def _t5a(params: Dict[str, Any]) -> List[Pair]:
    return [T5a_pair(float(params["p"]))]


@evaluator("djdy")
def _djdy(params: Dict[str, Any]) -> List[Pair]:
    return [(central_diff(J_y, float(y)), dJ_dy_closed(float(y))) for y in params["ys"]]


@evaluator("dgdy")
def _dgdy(params: Dict[str, Any]) -> List[Pair]:
    return [(central_diff(lambda v: _g(v, "direct"), float(y)), dJ_dy_closed(float(y))) for y in params["ys"]]


@evaluator("th1")
def _th1(params: Dict[str, Any]) -> List[Pair]:
    return [(J_y(float(y)), _g(float(y), "direct")) for y in params["ys"]]


@evaluator("th20")
def _th20(params: Dict[str, Any]) -> List[Pair]:
    k = float(params["k"])
    values = [theorem20_rhs(k), J_y(2 * k / (k - 1))]
    if k == 2:
        values.append(10 / PI2 * L_elliptic(20))
    return _chain(values)


@evaluator("w_j_routes")
def _w_j_routes(params: Dict[str, Any]) -> List[Pair]:
    k = float(params["k"])
    return _chain([J_y(2 * k / (k - 1)), J_qseries(k), J_w_integral(k)])


@evaluator("cor0")
def _cor0(params: Dict[str, Any]) -> List[Pair]:
    return _chain([10 / PI2 * L_elliptic(20),
                   2 * _g(4 + 2 * SQRT5) - _g(8 + 4 * SQRT5),
                   _g(4),
                   0.75 * _n(32 ** (1 / 3))])


@evaluator("cor00")
def _cor00(params: Dict[str, Any]) -> List[Pair]:
    L20 = L_elliptic(20)
    if params["which"] == "n":
        return _chain([_n(2 ** (1 / 3), "direct"), 25 / (6 * PI2) * L20])
    return _chain([_g(-2, "direct"), 15 / PI2 * L20])


@evaluator("exotic")
def _exotic(params: Dict[str, Any]) -> List[Pair]:
    c = 4 ** (1 / 3)
    lhs = 16 * _n((7 + SQRT5) / c) - 8 * _n((7 - SQRT5) / c, "direct")
    return _chain([lhs, 19 * _n(32 ** (1 / 3))])


@evaluator("lr226")
def _lr226(params: Dict[str, Any]) -> List[Pair]:
    n1, n5 = _n(2 ** (1 / 3), "direct"), _n(2 ** (5 / 3))
    if params["which"] == "g(-2)":
        return _chain([3 * _g(-2, "direct"), n1 + 4 * n5])
    return _chain([3 * _g(4), 4 * n1 + n5])


@evaluator("funceq")
def _funceq(params: Dict[str, Any]) -> List[Pair]:
    return [funceq_g(float(p), "direct") for p in params["ps"]]


@evaluator("f59")
def _f59(params: Dict[str, Any]) -> List[Pair]:
    f59 = F_integral(LatticeSumSpec(5, 9))
    if params["which"] == "lattice":
        combo = 45 * F_integral(LatticeSumSpec(1, 1)) - 50 * F_integral(LatticeSumSpec(1, 5))
        return _chain([9 * f59, combo])
    return _chain([18 / (5 * PI2) * f59, _g(-4, "direct") - 2 * _g(4)])


@evaluator("w_ode")
def _w_ode(params: Dict[str, Any]) -> List[Pair]:
    k = float(params["k"])
    K = w_curve_params(k).periodK
    points = int(params.get("points", 10))
    xs = [2 * K * (i + 1) / (points + 1) for i in range(points)]
    return [(w_ode_residual(x, k), 0.0) for x in xs]


@evaluator("w_suite")
def _w_suite(params: Dict[str, Any]) -> List[Pair]:
    k = float(params["k"])
    K = w_curve_params(k).periodK
    pairs = [(w_curve(K, k), 1.0)]
    pairs += [(w_fourier(f * K, k).w, w_curve(f * K, k)) for f in (0.3, 0.7)]
    pairs += [w_logform_at_K(k), w_half_period_pair(k), w_multiplier_pair(k)]
    return pairs


@evaluator("param_deg3")
def _param_deg3(params: Dict[str, Any]) -> List[Pair]:
    check = param_deg3(float(params["q"]))
    return [(check.modular_residual, 0.0), (check.alpha_mismatch, 0.0)]


@evaluator("alpha_m_deg5")
def _alpha_m_deg5(params: Dict[str, Any]) -> List[Pair]:
    pairs: List[Pair] = []
    for q in params["qs"]:
        pairs.extend(alpha_m_deg5(float(q)).values())
    return pairs


@evaluator("deg2")
def _deg2(params: Dict[str, Any]) -> List[Pair]:
    return [(deg2_orientation(float(params["q"]))["q_half"], 0.0)]


# =============================================================================
#  CATALOGUE
# =============================================================================

class IdentityCatalog:
    """Catalogue chargé depuis un fichier JSON ({"version", "records"})."""

    def __init__(self, path: Optional[Path] = None, log=None):
        self.path = Path(path) if path is not None else CATALOG_PATH
        self._log = log or logger
        self.records: Dict[str, IdentityRecord] = {}
        self._load()

    def _load(self) -> None:
        try:
            with open(self.path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise CatalogError(f"catalogue illisible {self.path}: {e}") from e
        for raw in data.get("records", []):
            record = IdentityRecord.from_dict(raw)
            if record.id in self.records:
                raise CatalogError(f"id dupliqué: {record.id}")
            self.records[record.id] = record
        self._log.debug(f"[VERIFY] {len(self.records)} identités chargées depuis {self.path.name}")

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, identity_id: str) -> bool:
        return identity_id in self.records

    def get(self, identity_id: str) -> IdentityRecord:
        record = self.records.get(identity_id)
        if record is None:
            raise CatalogError(f"identité inconnue: {identity_id!r}")
        return record

    def list(self, tag: Optional[str] = None) -> List[IdentityRecord]:
        """Identités triées par id; tag None ou "all" pour tout le catalogue."""
        selected = [r for r in self.records.values() if tag in (None, "all") or tag in r.tags]
        return sorted(selected, key=lambda r: r.id)

    def tags(self) -> List[str]:
        return sorted({t for r in self.records.values() for t in r.tags})

    # -------------------------------------------------------------------------

    def _evaluate_exact(self, record: IdentityRecord) -> Tuple[None, None, float]:
        p = record.params
        diff = series_of(parse_expr(p["lhs"]), p["N"]) - series_of(parse_expr(p["rhs"]), p["N"])
        if diff.is_zero():
            return None, None, 0.0
        worst = max(abs(c) for _, c in diff.items())
        return None, None, float(worst)

    def _evaluate_numeric(self, record: IdentityRecord) -> Tuple[float, float, float]:
        pairs = EVALUATORS[record.params["evaluator"]](record.params)
        if not pairs:
            raise CatalogError(f"{record.id}: l'évaluateur n'a produit aucun couple")
        lhs, rhs = max(pairs, key=lambda pr: abs(pr[0] - pr[1]))
        return float(lhs), float(rhs), abs(float(lhs) - float(rhs))

    def run(self, identity_id: str) -> VerifyReport:
        """Évalue une identité; une exception d'évaluation donne status="error"."""
        record = self.get(identity_id)
        start = time.perf_counter()
        lhs = rhs = err = None
        message = ""
        try:
            if record.kind == "exact_series":
                lhs, rhs, err = self._evaluate_exact(record)
            else:
                lhs, rhs, err = self._evaluate_numeric(record)
            status = "pass" if math.isfinite(err) and err <= record.tol else "fail"
            if not math.isfinite(err):
                message = "écart non fini"
        except MlabError as e:
            self._log.debug(f"[VERIFY] {record.id}: erreur d'évaluation", exc_info=True)
            status, message = "error", str(e)
        except (ArithmeticError, ValueError) as e:
            self._log.debug(f"[VERIFY] {record.id}: erreur numérique", exc_info=True)
            status, message = "error", f"{type(e).__name__}: {e}"
        seconds = time.perf_counter() - start

        icon = "✅" if status == "pass" else "❌"
        self._log.info(f"[VERIFY] {icon} {record.id}: {status} (écart {err}, tol {record.tol:g}, {seconds:.2f}s)")
        return VerifyReport(record.id, record.description, record.paper_ref, lhs, rhs, err,
                            record.tol, status, round(seconds, 4), message)

    def run_all(self, tag: Optional[str] = None, parallelism: Optional[int] = None) -> List[VerifyReport]:
        """Exécute la sélection; rapports triés par id quel que soit le parallélisme."""
        ids = [r.id for r in self.list(tag)]
        workers = max(1, parallelism or CONFIG.effective_parallelism)
        if workers == 1 or len(ids) <= 1:
            reports = [self.run(i) for i in ids]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(self.run, ids))
        reports.sort(key=lambda r: r.id)
        counts = summary(reports, self)
        self._log.info(f"[VERIFY] {counts['pass']}/{counts['total']} réussies, "
                       f"{counts['non_control_failures']} échec(s) hors témoins")
        return reports


def summary(reports: Sequence[VerifyReport], catalog: Optional[IdentityCatalog] = None) -> Dict[str, int]:
    """Comptes par statut, plus les échecs hors témoins négatifs."""
    catalog = catalog or default_catalog()
    counts = {s: 0 for s in STATUSES}
    non_control = 0
    for r in reports:
        counts[r.status] += 1
        control = r.id in catalog and catalog.get(r.id).negative_control
        if not control and r.status != "pass":
            non_control += 1
    counts["total"] = len(reports)
    counts["non_control_failures"] = non_control
    return counts


# =============================================================================
#  API MODULE
# =============================================================================

@lru_cache(maxsize=1)
def default_catalog() -> IdentityCatalog:
    return IdentityCatalog()


def list_identities(tag: Optional[str] = None) -> List[IdentityRecord]:
    return default_catalog().list(tag)


def run(identity_id: str) -> VerifyReport:
    return default_catalog().run(identity_id)


def run_all(tag: Optional[str] = None, parallelism: Optional[int] = None) -> List[VerifyReport]:
    return default_catalog().run_all(tag, parallelism)
