"""Single-switch composition of ERTs, static/dynamic virtual best solvers and SBS."""
from __future__ import annotations

import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.stats import rankdata

from .ingest import DatasetIndex
from .metrics import admissible_tables
from .model import (
    DEFAULT_GRID,
    ErtTable,
    GridRangeError,
    NoSolverError,
    ProblemKey,
    TargetGrid,
)

Portfolio = Mapping[str, ErtTable]


@dataclass(frozen=True)
class SwitchTriple:
    a1: str
    a2: str
    tau_index: int
    composed_ert: float


@dataclass(frozen=True)
class VbsReport:
    problem: ProblemKey
    vbs_static: tuple[str, float]
    vbs_dyn: SwitchTriple
    excluded_triples: int = 0

    @property
    def speedup(self) -> float:
        return self.vbs_static[1] / self.vbs_dyn.composed_ert


def composed_ert(ert_a1: ErtTable, ert_a2: ErtTable, tau_index: int, final_index: int | None = None) -> float | None:
    """ERT of running ``a1`` until target ``tau_index`` and ``a2`` from there to the final target.

    Returns None when ``a1`` never reaches the switch target or ``a2`` never
    reaches the final one.
    """
    final = len(ert_a2) - 1 if final_index is None else final_index
    if not 0 <= tau_index <= final:
        raise GridRangeError(f"switch index {tau_index} outside 0..{final}")
    start, finish = ert_a1[tau_index], ert_a2[final]
    if not (start.finite and finish.finite):
        return None
    if ert_a1.algorithm_id == ert_a2.algorithm_id:
        return finish.ert
    return start.ert + (finish.ert - ert_a2[tau_index].ert)


@dataclass(frozen=True)
class TripleScan:
    """All composed ERTs of a portfolio: ``values[a1, a2, tau]``, ``inf`` where undefined."""

    algorithms: tuple[str, ...]
    values: np.ndarray
    excluded: int
    final_index: int


def scan_triples(tables: Portfolio, final_index: int | None = None) -> TripleScan:
    names = tuple(sorted(tables))
    if not names:
        raise NoSolverError("empty portfolio")
    ert = np.stack([tables[a].array for a in names])
    final = ert.shape[1] - 1 if final_index is None else final_index
    ert = ert[:, : final + 1]
    start = ert[:, None, :]
    finish = ert[None, :, final, None]
    with np.errstate(invalid="ignore"):
        remaining = finish - ert[None, :, :]
        values = start + remaining
    n = len(names)
    diag = np.arange(n)
    # the two A2 terms cancel exactly for a self-switch
    values[diag, diag, :] = np.where(np.isfinite(ert), ert[:, final, None], np.inf)
    undefined = ~np.isfinite(start) | ~np.isfinite(finish)
    values = np.where(undefined, np.inf, values)
    excluded = int(np.broadcast_to(~np.isfinite(start), values.shape).sum())
    return TripleScan(names, values, excluded, final)


def best_of(scan: TripleScan, mask: np.ndarray | None = None) -> SwitchTriple | None:
    """Argmin with ties to the later switch, then lexicographic A1, then A2."""
    vals = scan.values if mask is None else np.where(mask, scan.values, np.inf)
    best = vals.min()
    if not np.isfinite(best):
        return None
    i1, i2, t = np.nonzero(vals == best)
    order = np.lexsort((i2, i1, -t))
    k = order[0]
    return SwitchTriple(scan.algorithms[i1[k]], scan.algorithms[i2[k]], int(t[k]), float(best))


def vbs_static(tables: Portfolio, final_index: int | None = None) -> tuple[str, float]:
    best = None
    for name in sorted(tables):
        tab = tables[name]
        v = tab[len(tab) - 1 if final_index is None else final_index]
        if v.finite and (best is None or v.ert < best[1]):
            best = (name, v.ert)
    if best is None:
        raise NoSolverError("no algorithm reaches the final target")
    return best


def vbs_dyn(tables: Portfolio, final_index: int | None = None) -> SwitchTriple:
    triple = best_of(scan_triples(tables, final_index))
    if triple is None:
        raise NoSolverError("no defined switch triple")
    return triple


def vbs_report(problem: ProblemKey, tables: Portfolio, final_index: int | None = None) -> VbsReport:
    scan = scan_triples(tables, final_index)
    triple = best_of(scan)
    if triple is None:
        raise NoSolverError(f"no defined switch triple on {problem}")
    return VbsReport(problem, vbs_static(tables, final_index), triple, scan.excluded)


def sbs(tables_by_function: Mapping[int, Portfolio], final_index: int | None = None) -> str:
    """Single best solver of one dimension by summed per-function ERT rank."""
    return sbs_ranking(tables_by_function, final_index)[0][0]


def sbs_ranking(tables_by_function: Mapping[int, Portfolio], final_index: int | None = None) -> list[tuple[str, float]]:
    """Candidates with their rank sums, best first.

    Only algorithms admissible (present with a finite final ERT) on every
    function are ranked; ties in ERT share the average rank.
    """
    funcs = sorted(tables_by_function)
    if not funcs:
        raise NoSolverError("no functions given")

    def final(tab: ErtTable):
        return tab[len(tab) - 1 if final_index is None else final_index]

    candidates = None
    for f in funcs:
        ok = {a for a, tab in tables_by_function[f].items() if final(tab).finite}
        candidates = ok if candidates is None else candidates & ok
    names = sorted(candidates)
    if not names:
        raise NoSolverError("no algorithm reaches the final target on every function")
    sums = np.zeros(len(names))
    for f in funcs:
        erts = [final(tables_by_function[f][a]).ert for a in names]
        sums += rankdata(erts, method="average")
    ranking = sorted(zip(names, sums.tolist()), key=lambda item: (item[1], item[0]))
    return ranking


@dataclass(frozen=True)
class SpeedupCell:
    problem: ProblemKey
    report: VbsReport | None
    reason: str = ""

    @property
    def value(self) -> float | None:
        return None if self.report is None else self.report.speedup


def _speedup_cell(index: DatasetIndex, problem: ProblemKey, grid: TargetGrid, final_index: int | None) -> SpeedupCell:
    tables = admissible_tables(index, problem, grid, final_index)
    if not tables:
        return SpeedupCell(problem, None, "no admissible algorithm")
    try:
        return SpeedupCell(problem, vbs_report(problem, tables, final_index))
    except NoSolverError as exc:
        return SpeedupCell(problem, None, str(exc))


def speedup_matrix(index: DatasetIndex, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None,
                   workers: int = 1) -> dict[ProblemKey, SpeedupCell]:
    """Static-over-dynamic VBS ERT ratio for every problem in the index."""
    problems = index.problems
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            cells = list(pool.map(lambda p: _speedup_cell(index, p, grid, final_index), problems))
    else:
        cells = [_speedup_cell(index, p, grid, final_index) for p in problems]
    return dict(zip(problems, cells))


def median_speedup(cells: Mapping[ProblemKey, SpeedupCell]) -> float:
    values = [c.value for c in cells.values() if c.value is not None]
    if not values:
        raise NoSolverError("no problem with a defined speedup")
    return statistics.median(values)
