"""
mlab_cli - Interface en ligne de commande

    python mlab_cli.py compute mahler --family g --alpha 4
    python mlab_cli.py compute lattice --b 2 --c 3 [--method cube --N 20]
    python mlab_cli.py compute lvalue --conductor 24
    python mlab_cli.py compute hyper --upper 1/3,2/3 --lower 1 --z 0.5
    python mlab_cli.py verify (--id ID | --tag TAG | --all) [--format text|json|csv]
    python mlab_cli.py series --expr "b(q)*c(q^3)" --terms 20
    python mlab_cli.py list [--tag TAG]

Codes de sortie: 0 succès, 1 échec de vérification ou de convergence,
2 erreur d'usage, d'analyse ou identifiant inconnu.
"""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from config_manager import CONFIG, make_logger
from hypergeo import hyp
from lvalues import F_cube, F_integral, L_elliptic, LatticeSumSpec
from mahler import ROUTES, Family, MahlerQuery
from numerics import CatalogError, DomainError, MlabError, SeriesError
from qseries import SeriesParseError, parse_expr, series_of
from verify import REPORT_FIELDS, IdentityCatalog, VerifyReport, default_catalog, summary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

FORMATS = ("text", "json", "csv")


@dataclass(frozen=True)
class CliConfig:
    command: str
    format: str
    parallelism: int
    debug: bool


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"entier >= 1 attendu: {text!r}")
    return value


def _rational_list(text: str) -> List[Fraction]:
    try:
        return [Fraction(part.strip()) for part in text.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"liste de rationnels invalide {text!r}: {e}")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"rationnel invalide {text!r}: {e}")


# =============================================================================
#  PARSEUR
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlab", description="Mesures de Mahler, sommes de réseau et valeurs L(E,2)")
    parser.add_argument("--debug", action="store_true", help="journalisation DEBUG sur stderr")
    parser.add_argument("--format", choices=FORMATS, default="text", help="format de sortie")
    leaf = argparse.ArgumentParser(add_help=False)
    leaf.add_argument("--format", dest="leaf_format", choices=FORMATS, default=None, help="format de sortie")
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", help="calcul d'une valeur")
    what = compute.add_subparsers(dest="what", required=True)

    p = what.add_parser("mahler", parents=[leaf], help="m(α), g(α) ou n(α)")
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--route", default="auto", choices=ROUTES)

    p = what.add_parser("lattice", parents=[leaf], help="somme de réseau F(b,c)")
    p.add_argument("--b", required=True, type=_rational)
    p.add_argument("--c", required=True, type=_rational)
    p.add_argument("--method", default="integral", choices=("integral", "cube"))
    p.add_argument("--N", type=int, default=20, help="demi-côté du cube (méthode cube)")
    p.add_argument("--parallelism", type=_positive_int, default=None)

    p = what.add_parser("lvalue", parents=[leaf], help="L(E,2) par l'intégrale de Mellin du produit η")
    p.add_argument("--conductor", required=True, type=int, choices=(20, 24, 27, 36))

    p = what.add_parser("hyper", parents=[leaf], help="série pFq réelle")
    p.add_argument("--upper", required=True, type=_rational_list)
    p.add_argument("--lower", required=True, type=_rational_list)
    p.add_argument("--z", required=True, type=float)

    p = sub.add_parser("verify", parents=[leaf], help="vérification d'identités du catalogue")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--id", dest="identity")
    sel.add_argument("--tag")
    sel.add_argument("--all", action="store_true")
    p.add_argument("--parallelism", type=_positive_int, default=None)
    p.add_argument("--exclude-controls", action="store_true", help="ignore les témoins négatifs")

    p = sub.add_parser("series", parents=[leaf], help="développement exact d'une expression η")
    p.add_argument("--expr", required=True)
    p.add_argument("--terms", required=True, type=_rational)

    p = sub.add_parser("list", parents=[leaf], help="liste des identités")
    p.add_argument("--tag", default=None)
    return parser


# =============================================================================
#  RENDU
# =============================================================================

def _render_value(label: str, value: float, extra: Dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"quantity": label, "value": value, **extra})
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "value", *extra.keys()])
        writer.writerow([label, repr(value), *extra.values()])
        return buf.getvalue().rstrip("\n")
    details = "  ".join(f"{k}={v}" for k, v in extra.items())
    return f"{label} = {value:.15g}" + (f"  ({details})" if details else "")


def render_reports(reports: Sequence[VerifyReport], fmt: str, single: bool = False,
                   counts: Optional[Dict[str, int]] = None) -> str:
    if fmt == "json":
        if single and len(reports) == 1:
            return json.dumps(reports[0].to_dict(), ensure_ascii=False)
        return json.dumps({"reports": [r.to_dict() for r in reports], "summary": counts or {}},
                          ensure_ascii=False, indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(REPORT_FIELDS), lineterminator="\n")
        writer.writeheader()
        for r in reports:
            writer.writerow(r.to_dict())
        return buf.getvalue().rstrip("\n")
    lines = []
    for r in reports:
        icon = "✅" if r.passed else "❌"
        err = "-" if r.abs_err is None else f"{r.abs_err:.3e}"
        line = f"{icon} {r.id:<32} {r.status:<5} abs_err={err} tol={r.tol:g} ({r.seconds:.2f}s)"
        if r.message:
            line += f"  {r.message}"
        lines.append(line)
    if counts is not None:
        lines.append(f"{counts['pass']}/{counts['total']} réussies, {counts['fail']} échec(s), "
                     f"{counts['error']} erreur(s), {counts['non_control_failures']} hors témoins")
    return "\n".join(lines)


# =============================================================================
#  COMMANDES
# =============================================================================

def cmd_compute(args: argparse.Namespace, cfg: CliConfig) -> int:
    if args.what == "mahler":
        query = MahlerQuery(Family.parse(args.family), args.alpha, args.route)
        value = query.evaluate()
        out = _render_value(f"{args.family}({args.alpha:g})", value, {"route": query.resolved_route()}, cfg.format)
    elif args.what == "lattice":
        spec = LatticeSumSpec(args.b, args.c)
        if args.method == "cube":
            value = F_cube(spec, args.N, parallelism=args.parallelism or cfg.parallelism)
            extra = {"method": "cube", "N": args.N}
        else:
            value = F_integral(spec)
            extra = {"method": "integral", "tol": CONFIG.quad_tol}
        out = _render_value(spec.label(), value, extra, cfg.format)
    elif args.what == "lvalue":
        value = L_elliptic(args.conductor)
        out = _render_value(f"L(E_{args.conductor},2)", value, {"tol": CONFIG.quad_tol}, cfg.format)
    else:
        value = hyp(args.upper, args.lower, args.z)
        label = f"{len(args.upper)}F{len(args.lower)}({','.join(map(str, args.upper))};" \
                f"{','.join(map(str, args.lower))};{args.z:g})"
        out = _render_value(label, value, {}, cfg.format)
    print(out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, cfg: CliConfig, catalog: Optional[IdentityCatalog] = None) -> int:
    catalog = catalog or default_catalog()
    fmt = cfg.format
    if args.identity is not None:
        if args.identity not in catalog:
            print(f"identité inconnue: {args.identity}", file=sys.stderr)
            return EXIT_USAGE
        reports = [catalog.run(args.identity)]
    else:
        tag = None if args.all else args.tag
        selected = catalog.list(tag)
        if not selected:
            print(f"aucune identité pour le tag {args.tag!r}", file=sys.stderr)
            return EXIT_USAGE
        reports = catalog.run_all(tag, cfg.parallelism)
        if args.exclude_controls:
            reports = [r for r in reports if not catalog.get(r.id).negative_control]
    counts = summary(reports, catalog)
    print(render_reports(reports, fmt, single=args.identity is not None,
                         counts=None if args.identity is not None else counts))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE


def cmd_series(args: argparse.Namespace, cfg: CliConfig) -> int:
    try:
        expr = parse_expr(args.expr)
    except SeriesParseError as e:
        print(f"erreur d'analyse en position {e.position}: {e}", file=sys.stderr)
        print(f"  {args.expr}\n  {' ' * e.position}^", file=sys.stderr)
        return EXIT_USAGE
    try:
        series = series_of(expr, args.terms)
    except ArithmeticError as e:
        raise SeriesError(f"arithmétique exacte en échec pour {args.expr!r}: {e!r}") from e
    for line in series.lines():
        print(line)
    return EXIT_OK


def cmd_list(args: argparse.Namespace, cfg: CliConfig) -> int:
    records = default_catalog().list(args.tag)
    if cfg.format == "json":
        print(json.dumps([r.to_dict() for r in records], ensure_ascii=False, indent=2))
        return EXIT_OK
    for r in records:
        print(f"{r.id}\t{r.kind}\t{','.join(r.tags)}\t{r.description}")
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "series": cmd_series, "list": cmd_list}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    make_logger(args.debug)
    cfg = CliConfig(args.command, getattr(args, "leaf_format", None) or args.format, getattr(args, "parallelism", None) or CONFIG.effective_parallelism,
                    args.debug)
    logger.debug(f"[CLI] {cfg}")
    try:
        return COMMANDS[args.command](args, cfg)
    except (DomainError, CatalogError, SeriesParseError) as e:
        print(f"erreur: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MlabError as e:
        logger.debug("[CLI] échec", exc_info=True)
        print(f"échec: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
