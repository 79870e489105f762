"""Command-line entry point: ``dynas <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import report
from .contribution import select_subset
from .engine import vbs_report
from .ingest import EmptyIndexError, build_index, canonical_filename, export_canonical, write_report
from .metrics import admissible_tables
from .model import DEFAULT_GRID, DomainError, DynasError, nearest_grid_index

logger = logging.getLogger("dynas")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _formats(text: str) -> list[str]:
    fs = [t.strip() for t in text.split(",") if t.strip()]
    bad = [f for f in fs if f not in ("csv", "json", "svg")]
    if bad or not fs:
        raise argparse.ArgumentTypeError(f"formats must be a subset of csv,json,svg (got {text!r})")
    return fs


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dims", type=_int_list, help="comma-separated dimensions to keep")
    p.add_argument("--funcs", type=_int_list, help="comma-separated function ids to keep")
    p.add_argument("--target", type=float, help="final target precision (default 1e-8), snapped to the grid")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--format", dest="formats", type=_formats, default=["csv"], help="csv,json,svg")
    p.add_argument("--workers", type=int, default=1, help="threads for per-problem scans")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="dynas", description="Single-switch dynamic algorithm selection on fixed-target logs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="parse archives into a canonical dataset")
    p.add_argument("roots", nargs="+")

    for name, help_ in (("ert", "ERT per algorithm, problem and target"),
                        ("vbs", "static VBS per problem and SBS per dimension"),
                        ("dynas", "single-switch VBS and speedup per problem"),
                        ("contrib", "I1/I2 improvement values")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("dataset", nargs="+")

    p = sub.add_parser("portfolio", parents=[common], help="select a display subset, or analyse a given portfolio")
    p.add_argument("dataset", nargs="+")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--metric", choices=("i1", "i2"), default="i1")
    p.add_argument("--portfolio", dest="portfolio_file", help="file listing algorithm ids (one per line or a JSON list)")

    p = sub.add_parser("figures", parents=[common], help="export figure data (and SVG)")
    p.add_argument("dataset", nargs="+")
    p.add_argument("--which", default=",".join(report.FIGURES), help="comma-separated figure ids")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--portfolio", dest="portfolio_file")

    p = sub.add_parser("table1", parents=[common], help="per-function static vs dynamic table for one dimension")
    p.add_argument("dataset", nargs="+")
    return parser


def _read_portfolio(path: str | None) -> list[str] | None:
    if path is None:
        return None
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return [str(a) for a in json.loads(text)]
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def _load(args):
    index = build_index(args.dataset)
    return index.filtered(args.funcs, args.dims)


def _final(args) -> int | None:
    return None if args.target is None else nearest_grid_index(args.target, DEFAULT_GRID)


def _say(paths):
    for p in paths:
        print(p)


def cmd_ingest(args) -> int:
    index = build_index(args.roots).filtered(args.funcs, args.dims)
    out = Path(args.out)
    data_dir = out / "dataset"
    data_dir.mkdir(parents=True, exist_ok=True)
    write_report(index.report, out / "ingest_report.jsonl")
    if not index.entries:
        raise EmptyIndexError("no entries left after filtering")
    for (alg, p), rs in sorted(index.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        (data_dir / canonical_filename(rs)).write_text(export_canonical(rs), encoding="utf-8")
    skipped = sum(r.status == "skipped" for r in index.report)
    print(f"{len(index.entries)} run sets, {len(index.algorithms)} algorithms, {skipped} skipped files -> {data_dir}")
    return EXIT_OK


def cmd_ert(args) -> int:
    _say(report.write_table(report.ert_export(_load(args)), args.out, args.formats))
    return EXIT_OK


def cmd_vbs(args) -> int:
    static, sbs_t = report.vbs_export(_load(args), final_index=_final(args))
    _say(report.write_table(static, args.out, args.formats) + report.write_table(sbs_t, args.out, args.formats))
    return EXIT_OK


def cmd_dynas(args) -> int:
    _say(report.write_table(report.dynas_export(_load(args), final_index=_final(args), workers=args.workers),
                            args.out, args.formats))
    return EXIT_OK


def cmd_contrib(args) -> int:
    _say(report.write_table(report.contrib_export(_load(args), final_index=_final(args)), args.out, args.formats))
    return EXIT_OK


def cmd_portfolio(args) -> int:
    index = _load(args)
    final = _final(args)
    members = _read_portfolio(args.portfolio_file)
    if members is None:
        t = report.Table("portfolio", ("dimension", "rank", "algorithm"), meta={"k": args.k, "metric": args.metric})
        for dim in sorted({p.dimension for p in index.problems}):
            per_f = {p.function_id: admissible_tables(index, p, final_index=final)
                     for p in index.problems if p.dimension == dim}
            per_f = {f: tabs for f, tabs in per_f.items() if tabs}
            if not per_f:
                continue
            for r, a in enumerate(select_subset(per_f, args.k, args.metric, final), 1):
                t.rows.append((dim, r, a))
        _say(report.write_table(t, args.out, args.formats))
        return EXIT_OK
    t = report.Table("portfolio_vbs", ("function", "dimension", "vbs_static", "ert_static", "A1", "A2",
                                       "log10_tau", "ert_dyn", "speedup"), meta={"portfolio": members})
    for p in index.problems:
        tables = {a: tab for a, tab in admissible_tables(index, p, final_index=final).items() if a in members}
        if not tables:
            continue
        r = vbs_report(p, tables, final)
        d = r.vbs_dyn
        t.rows.append((p.function_id, p.dimension, r.vbs_static[0], r.vbs_static[1], d.a1, d.a2,
                       DEFAULT_GRID.log10_label(d.tau_index), d.composed_ert, r.speedup))
    paths = report.write_table(t, args.out, args.formats)
    figs = report.build_figures(index, ["fig7", "fig8"], final_index=final, portfolio=members)
    _say(paths + report.write_figures(figs, args.out, args.formats))
    return EXIT_OK


def cmd_figures(args) -> int:
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    unknown = [w for w in which if w not in report.FIGURES]
    if unknown:
        raise UsageError(f"unknown figure id(s): {', '.join(unknown)}; choose from {', '.join(report.FIGURES)}")
    index = _load(args)
    figs = report.build_figures(index, which, final_index=_final(args),
                                portfolio=_read_portfolio(args.portfolio_file), k=args.k, workers=args.workers)
    _say(report.write_figures(figs, args.out, args.formats))
    return EXIT_OK


def cmd_table1(args) -> int:
    index = _load(args)
    dims = args.dims or sorted({p.dimension for p in index.problems})
    paths = []
    for dim in dims:
        t = report.table1(index, dim, final_index=_final(args), functions=args.funcs)
        paths += report.write_table1(t, args.out, args.formats)
    _say(paths)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest, "ert": cmd_ert, "vbs": cmd_vbs, "dynas": cmd_dynas, "contrib": cmd_contrib,
    "portfolio": cmd_portfolio, "figures": cmd_figures, "table1": cmd_table1,
}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dynas: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DynasError, DomainError, FileNotFoundError) as exc:
        print(f"dynas: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
