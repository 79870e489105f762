"""Tabular exports (CSV/JSON) and minimal SVG renderings of the analysis results."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from html import escape
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .contribution import CLIP, PAIR_CAP, contribution_table, improvement_grid, pair_matrix, select_subset, switch_markers
from .engine import sbs_ranking, speedup_matrix, vbs_report, vbs_static
from .ingest import DatasetIndex
from .metrics import admissible_counts, admissible_tables, ert_table
from .model import DEFAULT_GRID, DomainError, NoSolverError, ProblemKey, TargetGrid

SCHEMA_VERSION = 1
NA = "n/a"
TABLE1_COLUMNS = ("FID", "vbs_static", "ert_static", "A1", "A2", "log10_tau", "ert_dyn", "speedup")
FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")


def fmt(x) -> str:
    """Shortest round-trip text for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


@dataclass
class Table:
    """One export: fixed header, rows of already-typed cells."""

    name: str
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self, formatter=fmt) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([formatter(c) for c in row])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(c):
            return None if isinstance(c, float) and math.isinf(c) else c

        doc = {
            "schema": f"dynas.{self.name}/{SCHEMA_VERSION}",
            "columns": list(self.header),
            "rows": [[clean(c) for c in row] for row in self.rows],
            "meta": self.meta,
        }
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def write_table(table: Table, out_dir: str | os.PathLike, formats: Iterable[str], stem: str | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or table.name
    written = []
    for f in formats:
        if f == "csv":
            p = out / f"{stem}.csv"
            p.write_text(table.to_csv(), encoding="utf-8")
        elif f == "json":
            p = out / f"{stem}.json"
            p.write_text(table.to_json(), encoding="utf-8")
        else:
            continue
        written.append(p)
    return written


def _by_dimension(index: DatasetIndex, grid: TargetGrid, final_index: int | None):
    """{dimension: {function: admissible tables}}"""
    out: dict[int, dict[int, dict]] = defaultdict(dict)
    for p in index.problems:
        out[p.dimension][p.function_id] = admissible_tables(index, p, grid, final_index)
    return out


# ---------------------------------------------------------------- tables

def ert_export(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID) -> Table:
    t = Table("ert", ("algorithm", "function", "dimension", "target_index", "log10_target",
                      "ert", "successes", "total_runs"))
    for (alg, p), rs in sorted(index.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        tab = ert_table(rs, grid)
        for i in grid.indices:
            v = tab[i]
            t.rows.append((alg, p.function_id, p.dimension, i, grid.log10_label(i),
                           v.as_float(), v.successes, v.total_runs))
    return t


def vbs_export(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> tuple[Table, Table]:
    static = Table("vbs_static", ("function", "dimension", "algorithm", "ert", "admissible"))
    sbs_t = Table("sbs", ("dimension", "algorithm", "rank_sum", "candidates", "reason"))
    for dim, per_f in sorted(_by_dimension(index, grid, final_index).items()):
        for f, tables in sorted(per_f.items()):
            try:
                a, v = vbs_static(tables, final_index)
            except NoSolverError:
                a, v = NA, None
            static.rows.append((f, dim, a, v, len(tables)))
        try:
            ranking = sbs_ranking(per_f, final_index)
            sbs_t.rows.append((dim, ranking[0][0], ranking[0][1], len(ranking), ""))
        except NoSolverError as exc:
            sbs_t.rows.append((dim, NA, None, 0, str(exc)))
    return static, sbs_t


def dynas_export(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None,
                 workers: int = 1) -> Table:
    t = Table("dynas", ("function", "dimension", "vbs_static", "ert_static", "A1", "A2", "tau_index",
                        "log10_tau", "ert_dyn", "speedup", "excluded_triples", "reason"))
    for p, cell in speedup_matrix(index, grid, final_index, workers).items():
        r = cell.report
        if r is None:
            t.rows.append((p.function_id, p.dimension, NA, None, NA, NA, None, NA, None, None, None, cell.reason))
            continue
        d = r.vbs_dyn
        t.rows.append((p.function_id, p.dimension, r.vbs_static[0], r.vbs_static[1], d.a1, d.a2, d.tau_index,
                       grid.log10_label(d.tau_index), d.composed_ert, r.speedup, r.excluded_triples, ""))
    return t


def contrib_export(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> Table:
    t = Table("contrib", ("function", "dimension", "algorithm", "i1", "i2", "i1_clipped", "i2_clipped"))
    for p in index.problems:
        tables = admissible_tables(index, p, grid, final_index)
        if not tables:
            continue
        try:
            contrib = contribution_table(tables, final_index)
        except NoSolverError:
            continue
        for a, c in contrib.items():
            t.rows.append((p.function_id, p.dimension, a, c.i1, c.i2, _clip(c.i1), _clip(c.i2)))
    return t


def _clip(v):
    return CLIP if v is None else min(v, CLIP)


def table1(index: DatasetIndex, dimension: int, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None,
           functions: Iterable[int] | None = None) -> Table:
    """Per-function static vs single-switch comparison for one dimension.

    Functions present in the data but without an admissible solver get a row
    of ``n/a`` markers.
    """
    t = Table("table1", TABLE1_COLUMNS, meta={"dimension": dimension})
    fids = sorted({p.function_id for p in index.problems if p.dimension == dimension}
                  if functions is None else set(functions))
    for f in fids:
        p = ProblemKey(f, dimension)
        tables = admissible_tables(index, p, grid, final_index)
        try:
            r = vbs_report(p, tables, final_index) if tables else None
        except NoSolverError:
            r = None
        if r is None:
            t.rows.append((f, NA, NA, NA, NA, NA, NA, NA))
            continue
        d = r.vbs_dyn
        t.rows.append((f, r.vbs_static[0], r.vbs_static[1], d.a1, d.a2, grid.log10_label(d.tau_index),
                       d.composed_ert, r.speedup))
    return t


def table1_display(row: Sequence) -> list[str]:
    """ERT columns to 1 decimal and speedup to 2, as in a printed table."""
    out = []
    for name, c in zip(TABLE1_COLUMNS, row):
        if isinstance(c, float) and name in ("ert_static", "ert_dyn"):
            out.append(f"{c:.1f}")
        elif isinstance(c, float) and name == "speedup":
            out.append(f"{c:.2f}")
        else:
            out.append(fmt(c))
    return out


def write_table1(table: Table, out_dir: str | os.PathLike, formats: Iterable[str]) -> list[Path]:
    formats = list(formats)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dim = table.meta.get("dimension")
    stem = f"table1_d{dim}"
    written = write_table(table, out, [f for f in formats if f == "json"], stem + "_raw")
    if "csv" in formats:
        raw = out / f"{stem}_raw.csv"
        raw.write_text(table.to_csv(), encoding="utf-8")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE1_COLUMNS)
        for row in table.rows:
            w.writerow(table1_display(row))
        disp = out / f"{stem}.csv"
        disp.write_text(buf.getvalue(), encoding="utf-8")
        written += [raw, disp]
    return written


# ---------------------------------------------------------------- figures

def fig1(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> Table:
    t = Table("fig1", ("function", "dimension", "admissible"))
    for p, n in admissible_counts(index, grid=grid, final_index=final_index).items():
        t.rows.append((p.function_id, p.dimension, n))
    return t


def fig2(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> Table:
    """ERT of each dimension's SBS relative to the static VBS."""
    t = Table("fig2", ("function", "dimension", "sbs", "ert_sbs", "ert_vbs_static", "ratio"))
    for dim, per_f in sorted(_by_dimension(index, grid, final_index).items()):
        try:
            best = sbs_ranking(per_f, final_index)[0][0]
        except NoSolverError:
            continue
        for f, tables in sorted(per_f.items()):
            final = grid.final_index if final_index is None else final_index
            e_sbs = tables[best][final].ert
            e_vbs = vbs_static(tables, final_index)[1]
            t.rows.append((f, dim, best, e_sbs, e_vbs, e_sbs / e_vbs))
    return t


def fig3(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> Table:
    """Final-target ERT of every admissible algorithm, plus both VBS values."""
    t = Table("fig3", ("function", "dimension", "algorithm", "ert"))
    final = grid.final_index if final_index is None else final_index
    for p in index.problems:
        tables = admissible_tables(index, p, grid, final_index)
        if not tables:
            continue
        for a, tab in tables.items():
            t.rows.append((p.function_id, p.dimension, a, tab[final].as_float()))
        r = vbs_report(p, tables, final_index)
        t.rows.append((p.function_id, p.dimension, "VBS_static", r.vbs_static[1]))
        t.rows.append((p.function_id, p.dimension, "VBS_dyn", r.vbs_dyn.composed_ert))
    return t


def fig4(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None, workers: int = 1) -> Table:
    t = Table("fig4", ("function", "dimension", "speedup", "reason"))
    for p, cell in speedup_matrix(index, grid, final_index, workers).items():
        t.rows.append((p.function_id, p.dimension, cell.value, cell.reason))
    return t


def fig56(index: DatasetIndex, metric: str, k: int = 15, grid: TargetGrid = DEFAULT_GRID,
          final_index: int | None = None) -> Table:
    name = "fig5" if metric == "i1" else "fig6"
    t = Table(name, ("dimension", "algorithm", "function", metric, f"{metric}_clipped"), meta={"k": k})
    for dim, per_f in sorted(_by_dimension(index, grid, final_index).items()):
        per_f = {f: tabs for f, tabs in per_f.items() if tabs}
        if not per_f:
            continue
        grid_vals = improvement_grid(per_f, metric, final_index)
        chosen = select_subset(per_f, min(k, len({a for tabs in per_f.values() for a in tabs})), metric, final_index)
        for a in chosen:
            for f in sorted(grid_vals):
                v = grid_vals[f].get(a)
                t.rows.append((dim, a, f, v, _clip(v)))
    return t


def default_portfolio(index: DatasetIndex, dimension: int, k: int = 5, grid: TargetGrid = DEFAULT_GRID,
                      final_index: int | None = None) -> list[str]:
    per_f = {f: tabs for f, tabs in _by_dimension(index, grid, final_index).get(dimension, {}).items() if tabs}
    if not per_f:
        return []
    n = len({a for tabs in per_f.values() for a in tabs})
    return select_subset(per_f, min(k, n), "i1", final_index)


def fig7(index: DatasetIndex, portfolio: Sequence[str] | None = None, grid: TargetGrid = DEFAULT_GRID,
         final_index: int | None = None) -> Table:
    """Best pair ERTs per function; ``speedup_capped`` is what gets drawn."""
    t = Table("fig7", ("dimension", "function", "A1", "A2", "best_ert", "tau_index", "log10_tau",
                       "speedup", "speedup_capped"), meta={"cap": PAIR_CAP})
    for p in index.problems:
        tables = admissible_tables(index, p, grid, final_index)
        members = list(portfolio) if portfolio is not None else default_portfolio(index, p.dimension, 5, grid, final_index)
        members = [a for a in members if a in tables]
        if not members:
            continue
        pm = pair_matrix(p, tables, members, final_index)
        for (a1, a2), e in sorted(pm.entries.items()):
            t.rows.append((p.dimension, p.function_id, a1, a2, e.best_ert, e.tau_index,
                           None if e.tau_index is None else grid.log10_label(e.tau_index),
                           e.speedup, e.speedup_capped))
    return t


def fig8(index: DatasetIndex, problem: ProblemKey, portfolio: Sequence[str] | None = None,
         grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> tuple[Table, Table]:
    """ERT curves of a portfolio on one problem, and the improving switch points."""
    tables = admissible_tables(index, problem, grid, final_index)
    members = list(portfolio) if portfolio is not None else default_portfolio(index, problem.dimension, 5, grid, final_index)
    members = sorted(a for a in members if a in tables)
    curves = Table("fig8_curves", ("algorithm", "target_index", "log10_target", "ert"),
                   meta={"function": problem.function_id, "dimension": problem.dimension})
    markers = Table("fig8_markers", ("A1", "A2", "tau_index", "log10_tau", "ert_at_tau", "composed_ert"),
                    meta=dict(curves.meta))
    final = grid.final_index if final_index is None else final_index
    for a in members:
        for i in range(final + 1):
            curves.rows.append((a, i, grid.log10_label(i), tables[a][i].as_float()))
    if members:
        for m in switch_markers(problem, tables, members, final_index):
            markers.rows.append((m.a1, m.a2, m.tau_index, grid.log10_label(m.tau_index),
                                 tables[m.a1][m.tau_index].ert, m.composed_ert))
    return curves, markers


# ---------------------------------------------------------------- SVG

def _color(v: float, lo: float, hi: float) -> str:
    if v is None or not math.isfinite(v):
        return "#dddddd"
    x = 0.0 if hi <= lo else min(max((v - lo) / (hi - lo), 0.0), 1.0)
    r = int(255 * x)
    b = int(255 * (1 - x))
    return f"#{r:02x}40{b:02x}"


def svg_heatmap(title: str, rows: Sequence[str], cols: Sequence[str], values: Mapping[tuple[str, str], float | None],
                lo: float, hi: float, cell: int = 22) -> str:
    left, top = 120, 40
    w = left + cell * len(cols) + 20
    h = top + cell * len(rows) + 80
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="10">',
             f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>']
    for r, rn in enumerate(rows):
        y = top + r * cell
        parts.append(f'<text x="{left - 4}" y="{y + cell * 0.7:.1f}" text-anchor="end">{escape(str(rn))}</text>')
        for c, cn in enumerate(cols):
            v = values.get((rn, cn))
            parts.append(f'<rect x="{left + c * cell}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="{_color(v, lo, hi)}" stroke="white"><title>{escape(fmt(v))}</title></rect>')
    yb = top + cell * len(rows) + 12
    for c, cn in enumerate(cols):
        x = left + c * cell + cell / 2
        parts.append(f'<text x="{x:.1f}" y="{yb}" transform="rotate(60 {x:.1f} {yb})">{escape(str(cn))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_curves(title: str, series: Mapping[str, Sequence[tuple[float, float]]],
               markers: Sequence[tuple[float, float, str]] = ()) -> str:
    """Log-scale ERT (y) against log10 target (x, decreasing to the right)."""
    width, height, pad = 640, 400, 50
    pts = [(x, y) for s in series.values() for x, y in s if math.isfinite(y) and y > 0]
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"><text x="10" y="20">{escape(title)}: no data</text></svg>\n'
    xs = [x for x, _ in pts]
    ys = [math.log10(y) for _, y in pts]
    x_hi, x_lo = max(xs), min(xs)
    y_lo, y_hi = min(ys), max(ys) + 1e-9

    def px(x):
        return pad + (x_hi - x) / ((x_hi - x_lo) or 1) * (width - 2 * pad)

    def py(y):
        return height - pad - (math.log10(y) - y_lo) / ((y_hi - y_lo) or 1) * (height - 2 * pad)

    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">',
             f'<text x="{pad}" y="20" font-size="13">{escape(title)}</text>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 15}">log10(target)</text>']
    for k, (name, s) in enumerate(sorted(series.items())):
        col = palette[k % len(palette)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in s if math.isfinite(y) and y > 0)
        parts.append(f'<polyline fill="none" stroke="{col}" points="{coords}"/>')
        parts.append(f'<text x="{width - pad + 2}" y="{pad + 12 * k}" fill="{col}">{escape(name)}</text>')
    for x, y, label in markers:
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="4" fill="none" stroke="black">'
                     f'<title>{escape(label)}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def figure_svgs(name: str, tables: Sequence[Table]) -> dict[str, str]:
    """Render SVGs purely from exported tables."""
    t = tables[0]
    out = {}
    if name in ("fig1", "fig4", "fig2"):
        col = {"fig1": 2, "fig4": 2, "fig2": 5}[name]
        fcol, dcol = (0, 1)
        vals = {(f"{r[dcol]}D", f"F{r[fcol]}"): r[col] for r in t.rows}
        dims = sorted({r[dcol] for r in t.rows})
        funcs = sorted({r[fcol] for r in t.rows})
        finite = [v for v in vals.values() if v is not None and math.isfinite(v)]
        lo, hi = (min(finite), max(finite)) if finite else (0, 1)
        out[name] = svg_heatmap(name, [f"{d}D" for d in dims], [f"F{f}" for f in funcs], vals, lo, hi)
    elif name == "fig3":
        by_dim = defaultdict(list)
        for r in t.rows:
            by_dim[r[1]].append(r)
        for dim, rows in sorted(by_dim.items()):
            algs = sorted({r[2] for r in rows})
            funcs = sorted({r[0] for r in rows})
            vals = {(a, f"F{r[0]}"): math.log10(r[3]) for r in rows for a in [r[2]] if math.isfinite(r[3])}
            finite = list(vals.values())
            out[f"fig3_d{dim}"] = svg_heatmap(f"log10 ERT, {dim}D", algs, [f"F{f}" for f in funcs], vals,
                                              min(finite), max(finite))
    elif name in ("fig5", "fig6"):
        by_dim = defaultdict(list)
        for r in t.rows:
            by_dim[r[0]].append(r)
        for dim, rows in sorted(by_dim.items()):
            algs = list(dict.fromkeys(r[1] for r in rows))
            funcs = sorted({r[2] for r in rows})
            vals = {(r[1], f"F{r[2]}"): r[4] for r in rows}
            out[f"{name}_d{dim}"] = svg_heatmap(f"{name} {dim}D (clipped at {CLIP:g})", algs,
                                                [f"F{f}" for f in funcs], vals, 1.0, CLIP)
    elif name == "fig7":
        by_key = defaultdict(list)
        for r in t.rows:
            by_key[(r[0], r[1])].append(r)
        for (dim, f), rows in sorted(by_key.items()):
            algs = sorted({r[2] for r in rows})
            vals = {(r[2], r[3]): r[8] for r in rows}
            out[f"fig7_d{dim}_f{f}"] = svg_heatmap(f"F{f} {dim}D best pair speedup (cap {PAIR_CAP:g})",
                                                   algs, algs, vals, 0.0, PAIR_CAP)
    elif name == "fig8":
        curves, markers = tables
        series = defaultdict(list)
        for a, i, lab, e in curves.rows:
            series[a].append((float(lab), e))
        marks = [(float(r[3]), r[4], f"{r[0]} -> {r[1]} at 1e{r[3]}: {fmt(r[5])}") for r in markers.rows]
        m = curves.meta
        out[f"fig8_f{m['function']}_d{m['dimension']}"] = svg_curves(
            f"ERT curves F{m['function']} {m['dimension']}D", series, marks)
    return out


def write_svgs(svgs: Mapping[str, str], out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, text in sorted(svgs.items()):
        p = out / f"{stem}.svg"
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths


def build_figures(index: DatasetIndex, which: Iterable[str], grid: TargetGrid = DEFAULT_GRID,
                  final_index: int | None = None, portfolio: Sequence[str] | None = None,
                  k: int = 15, workers: int = 1) -> dict[str, list[Table]]:
    """Figure-data tables keyed by figure id (``fig8`` expands per problem)."""
    out: dict[str, list[Table]] = {}
    for name in which:
        if name not in FIGURES:
            raise DomainError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
        if name == "fig1":
            out[name] = [fig1(index, grid, final_index)]
        elif name == "fig2":
            out[name] = [fig2(index, grid, final_index)]
        elif name == "fig3":
            out[name] = [fig3(index, grid, final_index)]
        elif name == "fig4":
            out[name] = [fig4(index, grid, final_index, workers)]
        elif name in ("fig5", "fig6"):
            out[name] = [fig56(index, "i1" if name == "fig5" else "i2", k, grid, final_index)]
        elif name == "fig7":
            out[name] = [fig7(index, portfolio, grid, final_index)]
        elif name == "fig8":
            for p in index.problems:
                curves, markers = fig8(index, p, portfolio, grid, final_index)
                if curves.rows:
                    out[f"fig8_f{p.function_id}_d{p.dimension}"] = [curves, markers]
    return out


def write_figures(figs: Mapping[str, list[Table]], out_dir: str | os.PathLike, formats: Iterable[str]) -> list[Path]:
    formats = list(formats)
    paths = []
    for key, tables in figs.items():
        for t in tables:
            stem = key if len(tables) == 1 else f"{key}_{t.name.split('_')[-1]}"
            paths += write_table(t, out_dir, formats, stem)
        if "svg" in formats:
            paths += write_svgs(figure_svgs(key.split("_")[0], tables), out_dir)
    return paths
