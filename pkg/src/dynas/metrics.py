"""Hitting times, ERT tables and the admissibility filter."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .model import (
    DEFAULT_GRID,
    DomainError,
    ErtTable,
    ErtValue,
    Finite,
    NeverHit,
    ProblemKey,
    RunSet,
    RunTrace,
    TargetGrid,
)

if TYPE_CHECKING:
    from .ingest import DatasetIndex

MIN_RUNS = 15


@dataclass(frozen=True)
class Hit:
    evals: int


@dataclass(frozen=True)
class Unhit:
    budget: int


def hitting_time(trace: RunTrace, i: int, grid: TargetGrid = DEFAULT_GRID) -> Hit | Unhit:
    target = grid.value(i)
    for evals, precision in trace.points:
        if precision <= target:
            return Hit(evals)
    return Unhit(trace.budget)


def _trace_hits(trace: RunTrace, targets: np.ndarray) -> np.ndarray:
    """First-hit evaluation per target, -1 where the target is never reached."""
    neg = -np.asarray(trace.precisions)
    evals = np.asarray(trace.evals, dtype=np.int64)
    # precision is non-increasing, so its negation is sorted
    pos = np.searchsorted(neg, -targets, side="left")
    hit = pos < len(evals)
    out = np.full(len(targets), -1, dtype=np.int64)
    out[hit] = evals[pos[hit]]
    return out


@dataclass(frozen=True)
class HittingTimeTable:
    """runs x targets matrix; ``hits`` holds evals or -1, ``budgets`` the per-run cap."""

    algorithm_id: str
    problem: ProblemKey
    hits: np.ndarray
    budgets: np.ndarray

    def entry(self, run: int, i: int) -> Hit | Unhit:
        h = int(self.hits[run, i])
        return Hit(h) if h >= 0 else Unhit(int(self.budgets[run]))


def hitting_time_table(run_set: RunSet, grid: TargetGrid = DEFAULT_GRID) -> HittingTimeTable:
    targets = np.asarray(grid.values)
    hits = np.stack([_trace_hits(t, targets) for t in run_set.runs]) if run_set.runs else np.empty((0, grid.count), np.int64)
    budgets = np.array([t.budget for t in run_set.runs], dtype=np.int64)
    return HittingTimeTable(run_set.algorithm_id, run_set.problem, hits, budgets)


def _ert_from_column(hits: np.ndarray, budgets: np.ndarray) -> ErtValue:
    success = hits >= 0
    total = len(hits)
    n_succ = int(success.sum())
    if n_succ == 0:
        return NeverHit(total)
    num = int(np.where(success, np.minimum(hits, budgets), budgets).sum())
    return Finite(num / n_succ, n_succ, total)


def ert(run_set: RunSet, i: int, grid: TargetGrid = DEFAULT_GRID) -> ErtValue:
    """Expected running time to reach target ``i``, pooling runs over instances."""
    if not run_set.runs:
        raise DomainError(f"empty run set for {run_set.algorithm_id} on {run_set.problem}")
    grid._check(i)
    targets = np.asarray([grid.value(i)])
    hits = np.array([_trace_hits(t, targets)[0] for t in run_set.runs], dtype=np.int64)
    budgets = np.array([t.budget for t in run_set.runs], dtype=np.int64)
    return _ert_from_column(hits, budgets)


def ert_table(run_set: RunSet, grid: TargetGrid = DEFAULT_GRID) -> ErtTable:
    if not run_set.runs:
        raise DomainError(f"empty run set for {run_set.algorithm_id} on {run_set.problem}")
    ht = hitting_time_table(run_set, grid)
    values = tuple(_ert_from_column(ht.hits[:, i], ht.budgets) for i in grid.indices)
    return ErtTable(run_set.algorithm_id, run_set.problem, values)


def is_admissible(run_set: RunSet, grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None,
                  min_runs: int = MIN_RUNS) -> bool:
    """At least ``min_runs`` runs, one of which reaches the final target."""
    if len(run_set.runs) < min_runs:
        return False
    final = grid.final_index if final_index is None else final_index
    target = grid.value(final)
    return any(t.points[-1][1] <= target for t in run_set.runs)


def admissible_tables(index: "DatasetIndex", problem: ProblemKey, grid: TargetGrid = DEFAULT_GRID,
                      final_index: int | None = None, algorithms: Iterable[str] | None = None) -> dict[str, ErtTable]:
    """ERT tables of every admissible algorithm on ``problem``, keyed by algorithm id."""
    wanted = None if algorithms is None else set(algorithms)
    out = {}
    for run_set in index.run_sets(problem):
        if wanted is not None and run_set.algorithm_id not in wanted:
            continue
        if is_admissible(run_set, grid, final_index):
            out[run_set.algorithm_id] = ert_table(run_set, grid)
    return dict(sorted(out.items()))


def admissible_counts(index: "DatasetIndex", problems: Iterable[ProblemKey] | None = None,
                      grid: TargetGrid = DEFAULT_GRID, final_index: int | None = None) -> dict[ProblemKey, int]:
    keys = sorted(set(index.problems) if problems is None else set(problems))
    return {p: sum(is_admissible(rs, grid, final_index) for rs in index.run_sets(p)) for p in keys}


def ert_tables(index: "DatasetIndex", grid: TargetGrid = DEFAULT_GRID) -> Mapping[tuple[str, ProblemKey], ErtTable]:
    return {key: ert_table(rs, grid) for key, rs in index.entries.items()}
