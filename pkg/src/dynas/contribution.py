"""Per-algorithm improvement values, portfolio subset selection and pairwise switch matrices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import Portfolio, SwitchTriple, scan_triples, vbs_static
from .model import DomainError, ProblemKey

CLIP = 3.0
PAIR_CAP = 2.0


def _improvement(tables: Portfolio, algorithm: str, axis: int, final_index: int | None) -> float | None:
    if algorithm not in tables:
        raise DomainError(f"{algorithm!r} is not admissible on this problem")
    scan = scan_triples(tables, final_index)
    k = scan.algorithms.index(algorithm)
    own = scan.values[k] if axis == 0 else scan.values[:, k]
    best_own = own.min()
    if not np.isfinite(best_own):
        return None
    return float(best_own / scan.values.min())


def i1(tables: Portfolio, algorithm: str, final_index: int | None = None) -> float | None:
    """Best composed ERT with ``algorithm`` as the starter, relative to the dynamic VBS."""
    return _improvement(tables, algorithm, 0, final_index)


def i2(tables: Portfolio, algorithm: str, final_index: int | None = None) -> float | None:
    """Best composed ERT with ``algorithm`` as the finisher, relative to the dynamic VBS."""
    return _improvement(tables, algorithm, 1, final_index)


@dataclass(frozen=True)
class Contribution:
    i1: float | None
    i2: float | None


def contribution_table(tables: Portfolio, final_index: int | None = None) -> dict[str, Contribution]:
    """I1 and I2 of every algorithm in one problem's portfolio, from a single triple scan."""
    scan = scan_triples(tables, final_index)
    best = scan.values.min()
    out = {}
    for k, name in enumerate(scan.algorithms):
        starts = scan.values[k].min()
        ends = scan.values[:, k].min()
        out[name] = Contribution(
            float(starts / best) if np.isfinite(starts) else None,
            float(ends / best) if np.isfinite(ends) else None,
        )
    return out


def clipped(value: float | None, clip: float = CLIP) -> float:
    return clip if value is None or value > clip else value


def select_subset(tables_by_function: Mapping[int, Portfolio], k: int, metric: str = "i1",
                  final_index: int | None = None) -> list[str]:
    """Pick ``k`` algorithms of one dimension for display.

    Start from the per-function winners (lowest raw value, lexicographic on
    ties), then fill up with the best average of clipped values, where absent
    entries and values above 3 count as 3. If the winners alone exceed ``k``
    the best-averaging winners are kept. The result is ordered by average.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    if metric not in ("i1", "i2"):
        raise DomainError(f"unknown metric {metric!r}")
    values = improvement_grid(tables_by_function, metric, final_index)
    names = sorted({a for per_f in values.values() for a in per_f})
    if k > len(names):
        warnings.warn(f"k={k} exceeds the portfolio size {len(names)}; returning all algorithms")
        k = len(names)
    funcs = sorted(values)
    avg = {a: sum(clipped(values[f].get(a)) for f in funcs) / len(funcs) for a in names}

    winners = set()
    for f in funcs:
        present = [(v, a) for a, v in values[f].items() if v is not None]
        if present:
            winners.add(min(present)[1])

    def by_avg(a):
        return (avg[a], a)

    chosen = sorted(winners, key=by_avg)[:k]
    for a in sorted(names, key=by_avg):
        if len(chosen) >= k:
            break
        if a not in winners:
            chosen.append(a)
    return sorted(chosen, key=by_avg)


def improvement_grid(tables_by_function: Mapping[int, Portfolio], metric: str = "i1",
                     final_index: int | None = None) -> dict[int, dict[str, float | None]]:
    """Raw (unclipped) I1 or I2 per function and algorithm."""
    out = {}
    for f in sorted(tables_by_function):
        tables = tables_by_function[f]
        if not tables:
            out[f] = {}
            continue
        contrib = contribution_table(tables, final_index)
        out[f] = {a: getattr(c, metric) for a, c in contrib.items()}
    return out


@dataclass(frozen=True)
class PairEntry:
    a1: str
    a2: str
    best_ert: float | None
    tau_index: int | None
    speedup: float | None

    @property
    def speedup_capped(self) -> float | None:
        return None if self.speedup is None else min(self.speedup, PAIR_CAP)


@dataclass(frozen=True)
class PairMatrix:
    problem: ProblemKey
    algorithms: tuple[str, ...]
    static_ert: float
    entries: dict[tuple[str, str], PairEntry]

    def __getitem__(self, pair: tuple[str, str]) -> PairEntry:
        return self.entries[pair]


def _portfolio(tables: Portfolio, portfolio: Iterable[str] | None) -> dict[str, object]:
    if portfolio is None:
        return dict(tables)
    missing = [a for a in portfolio if a not in tables]
    if missing:
        raise DomainError(f"not admissible on this problem: {', '.join(sorted(missing))}")
    return {a: tables[a] for a in portfolio}


def pair_matrix(problem: ProblemKey, tables: Portfolio, portfolio: Sequence[str] | None = None,
                final_index: int | None = None) -> PairMatrix:
    sub = _portfolio(tables, portfolio)
    scan = scan_triples(sub, final_index)
    static = vbs_static(sub, final_index)[1]
    n = len(scan.algorithms)
    entries = {}
    for x in range(n):
        for y in range(n):
            row = scan.values[x, y]
            best = row.min()
            a1, a2 = scan.algorithms[x], scan.algorithms[y]
            if not np.isfinite(best):
                entries[a1, a2] = PairEntry(a1, a2, None, None, None)
            else:
                tau = int(np.flatnonzero(row == best)[-1])  # later switch wins ties
                entries[a1, a2] = PairEntry(a1, a2, float(best), tau, static / float(best))
    return PairMatrix(problem, scan.algorithms, static, entries)


def switch_markers(problem: ProblemKey, tables: Portfolio, portfolio: Sequence[str] | None = None,
                   final_index: int | None = None) -> list[SwitchTriple]:
    """Best switch of every ordered pair that beats both algorithms run alone."""
    pm = pair_matrix(problem, tables, portfolio, final_index)
    out = []
    for (a1, a2), e in sorted(pm.entries.items()):
        if a1 == a2 or e.best_ert is None:
            continue
        solo = [pm[a, a].best_ert for a in (a1, a2)]
        if all(s is None or e.best_ert < s for s in solo):
            out.append(SwitchTriple(a1, a2, e.tau_index, e.best_ert))
    return out
