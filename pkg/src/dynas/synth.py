"""Synthetic datasets with known hitting times, and naive reference implementations.

The oracles here deliberately avoid numpy and the engine's vectorised scans:
each is a plain loop over the definition, so disagreements point at the
optimised code paths.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

from .ingest import DatasetIndex
from .model import (
    DEFAULT_GRID,
    DomainError,
    ErtTable,
    ErtValue,
    Finite,
    NeverHit,
    NoSolverError,
    ProblemKey,
    RunSet,
    RunTrace,
    TargetGrid,
)

MASK64 = (1 << 64) - 1


class Lcg64:
    """64-bit linear congruential generator.

    ``state = state * 6364136223846793005 + 1442695040888963407 (mod 2**64)``;
    outputs are the top 32 bits of the new state. Seeding runs the seed
    through one step so nearby seeds diverge.
    """

    MUL = 6364136223846793005
    INC = 1442695040888963407

    def __init__(self, seed: int):
        self.state = (seed * self.MUL + self.INC) & MASK64

    def next32(self) -> int:
        self.state = (self.state * self.MUL + self.INC) & MASK64
        return self.state >> 32

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        hi = self.next32() >> 5
        lo = self.next32() >> 6
        return (hi * 67108864 + lo) / 9007199254740992

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` by rejection (no modulo bias)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        if span > 1 << 32:
            raise ValueError("range too wide")
        limit = (1 << 32) - (1 << 32) % span
        while True:
            x = self.next32()
            if x < limit:
                return lo + x % span

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class HitDistribution:
    """Hitting time at one grid target: ``lo == hi`` for a fixed value.

    ``never`` is the probability that a run still alive at this target
    fails to reach it (and therefore every harder target).
    """

    lo: int
    hi: int
    never: float = 0.0

    def __post_init__(self):
        if self.lo < 1 or self.hi < self.lo:
            raise DomainError(f"bad hitting-time range {self.lo}..{self.hi}")
        if not 0.0 <= self.never <= 1.0:
            raise DomainError("never-hit probability outside [0, 1]")

    @classmethod
    def fixed(cls, value: int, never: float = 0.0) -> "HitDistribution":
        return cls(value, value, never)


@dataclass(frozen=True)
class AlgorithmProfile:
    """Hitting-time profile of one synthetic algorithm.

    ``profile`` maps grid indices to distributions. A target without its own
    entry is reached together with the next harder target that has one;
    targets beyond the hardest entry are never reached. ``budget`` caps every
    run and must be at least the largest possible hitting time.
    """

    name: str
    runs: int
    budget: int
    profile: Mapping[int, HitDistribution]


@dataclass(frozen=True)
class SynthSpec:
    algorithms: tuple[AlgorithmProfile, ...]
    seed: int = 0
    problem: ProblemKey = ProblemKey(1, 5)
    grid: TargetGrid = field(default=DEFAULT_GRID, compare=False)

    def validate(self) -> None:
        for alg in self.algorithms:
            if alg.runs < 1:
                raise DomainError(f"{alg.name}: needs at least one run")
            anchors = sorted(alg.profile)
            if not anchors:
                raise DomainError(f"{alg.name}: empty profile")
            for i in anchors:
                self.grid._check(i)
            for a, b in zip(anchors, anchors[1:]):
                if alg.profile[a].hi > alg.profile[b].lo:
                    raise DomainError(
                        f"{alg.name}: hitting times at index {a} may exceed those at harder index {b}")
            if alg.budget < alg.profile[anchors[-1]].hi:
                raise DomainError(f"{alg.name}: budget below the largest hitting time")

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "function": self.problem.function_id,
            "dimension": self.problem.dimension,
            "algorithms": [
                {"name": a.name, "runs": a.runs, "budget": a.budget,
                 "profile": {str(i): asdict(d) for i, d in sorted(a.profile.items())}}
                for a in self.algorithms
            ],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        obj = json.loads(text)
        algs = tuple(
            AlgorithmProfile(a["name"], a["runs"], a["budget"],
                             {int(i): HitDistribution(**d) for i, d in a["profile"].items()})
            for a in obj["algorithms"])
        return cls(algs, obj.get("seed", 0), ProblemKey(obj.get("function", 1), obj.get("dimension", 5)))


def _draw_run(alg: AlgorithmProfile, rng: Lcg64, grid: TargetGrid, instance: int) -> RunTrace:
    anchors = sorted(alg.profile)
    # hardest reached index per hit time
    deepest: dict[int, int] = {}
    for i in anchors:
        dist = alg.profile[i]
        if dist.never > 0 and rng.random() < dist.never:
            break
        t = dist.lo if dist.lo == dist.hi else rng.randint(dist.lo, dist.hi)
        deepest[t] = i
    start = grid.value(0) * 10
    points = []
    for t in sorted(deepest):
        points.append((t, grid.value(deepest[t])))
    if not points or points[0][0] > 1:
        points.insert(0, (1, start))
    if points[-1][0] < alg.budget:
        points.append((alg.budget, points[-1][1]))
    return RunTrace(instance, tuple(points))


def generate(spec: SynthSpec) -> DatasetIndex:
    """Draw every run of ``spec``; the same spec always yields the same index."""
    spec.validate()
    rng = Lcg64(spec.seed)
    index = DatasetIndex()
    for alg in spec.algorithms:
        runs = tuple(_draw_run(alg, rng, spec.grid, k + 1) for k in range(alg.runs))
        index.add(RunSet(alg.name, spec.problem, runs), f"synth:{spec.seed}")
    return index


def random_spec(seed: int, n_algorithms: int, runs: int = 15, problem: ProblemKey = ProblemKey(1, 5),
                max_step: int = 6, never: float = 0.1, grid: TargetGrid = DEFAULT_GRID) -> SynthSpec:
    """Random monotone profiles over a few anchor targets.

    Small hitting-time ranges make exact ERT ties (and therefore the tie
    rules) common.
    """
    rng = Lcg64(seed ^ 0x5DEECE66D)
    algs = []
    for a in range(n_algorithms):
        n_anchor = rng.randint(1, 6)
        anchors = sorted({rng.randint(0, grid.final_index) for _ in range(n_anchor)} | {grid.final_index})
        profile = {}
        lo = 1
        for i in anchors:
            width = rng.randint(0, max_step)
            hi = lo + width
            p = never if rng.random() < 0.5 else 0.0
            profile[i] = HitDistribution(lo, hi, p)
            lo = hi + rng.randint(0, max_step)
        algs.append(AlgorithmProfile(f"alg{a:02d}", runs, lo + rng.randint(0, max_step), profile))
    return SynthSpec(tuple(algs), seed, problem, grid)


@dataclass(frozen=True)
class CrossingInstance:
    """Two deterministic algorithms whose best switch is known in closed form."""

    spec: SynthSpec
    tau_index: int
    composed_ert: float
    starter: str = "fast-start"
    finisher: str = "fast-finish"


def crossing_instance(tau_index: int, slow: int = 20, runs: int = 15, grid: TargetGrid = DEFAULT_GRID) -> CrossingInstance:
    """The starter gains 1 evaluation per target up to ``tau_index`` and ``slow``
    afterwards; the finisher does the opposite. Every other switch point
    strictly loses, so the optimum is ``(starter, finisher, tau_index)``.
    """
    if slow < 2:
        raise DomainError("slow step must exceed the fast step")
    final = grid.final_index
    if not 0 <= tau_index < final:
        raise DomainError(f"crossing index must lie in 0..{final - 1}")
    a = {}
    b = {}
    for i in grid.indices:
        if i <= tau_index:
            a[i] = i + 1
            b[i] = slow * (i + 1)
        else:
            a[i] = (tau_index + 1) + slow * (i - tau_index)
            b[i] = slow * (tau_index + 1) + (i - tau_index)
    budget = max(a[final], b[final])
    spec = SynthSpec((
        AlgorithmProfile("fast-start", runs, budget, {i: HitDistribution.fixed(t) for i, t in a.items()}),
        AlgorithmProfile("fast-finish", runs, budget, {i: HitDistribution.fixed(t) for i, t in b.items()}),
    ), seed=tau_index, grid=grid)
    expected = float(a[tau_index] + b[final] - b[tau_index])
    return CrossingInstance(spec, tau_index, expected)


# ---------------------------------------------------------------- oracles

def oracle_ert(run_set: RunSet, i: int, grid: TargetGrid = DEFAULT_GRID) -> ErtValue:
    """ERT by literal evaluation of the pooled sum over runs."""
    if not run_set.runs:
        raise DomainError("empty run set")
    target = grid.value(i)
    capped_sum = 0
    successes = 0
    for run in reversed(run_set.runs):
        t = None
        for evals, precision in run.points:
            if precision <= target:
                t = evals
                break
        if t is None:
            capped_sum += run.budget
        else:
            capped_sum += min(t, run.budget)
            successes += 1
    if successes == 0:
        return NeverHit(len(run_set.runs))
    return Finite(capped_sum / successes, successes, len(run_set.runs))


def oracle_ert_table(run_set: RunSet, grid: TargetGrid = DEFAULT_GRID) -> ErtTable:
    return ErtTable(run_set.algorithm_id, run_set.problem,
                    tuple(oracle_ert(run_set, i, grid) for i in grid.indices))


def oracle_composed(tables: Mapping[str, ErtTable], a1: str, a2: str, tau: int, final: int) -> float | None:
    start = tables[a1][tau]
    finish = tables[a2][final]
    if not start.finite or not finish.finite:
        return None
    if a1 == a2:
        return finish.ert
    return start.ert + (finish.ert - tables[a2][tau].ert)


def _final(tables: Mapping[str, ErtTable], final_index: int | None) -> int:
    any_table = next(iter(tables.values()))
    return len(any_table) - 1 if final_index is None else final_index


def _better(cand, best) -> bool:
    # (value, -tau, a1, a2) ordering
    if best is None:
        return True
    v, t, a1, a2 = cand
    bv, bt, b1, b2 = best
    return (v, -t, a1, a2) < (bv, -bt, b1, b2)


def oracle_vbs_dyn(tables: Mapping[str, ErtTable], final_index: int | None = None):
    """Exhaustive triple enumeration with the engine's tie rules."""
    from .engine import SwitchTriple

    if not tables:
        raise NoSolverError("empty portfolio")
    final = _final(tables, final_index)
    best = None
    for a1 in tables:
        for a2 in tables:
            for tau in range(final + 1):
                v = oracle_composed(tables, a1, a2, tau, final)
                if v is not None and _better((v, tau, a1, a2), best):
                    best = (v, tau, a1, a2)
    if best is None:
        raise NoSolverError("no defined switch triple")
    return SwitchTriple(best[2], best[3], best[1], best[0])


def oracle_vbs_static(tables: Mapping[str, ErtTable], final_index: int | None = None) -> tuple[str, float]:
    final = _final(tables, final_index)
    cands = [(t[final].ert, a) for a, t in tables.items() if t[final].finite]
    if not cands:
        raise NoSolverError("no algorithm reaches the final target")
    v, a = min(cands)
    return a, v


def oracle_improvements(tables: Mapping[str, ErtTable], final_index: int | None = None) -> dict:
    """``{algorithm: (i1, i2)}`` from one enumeration of every triple."""
    final = _final(tables, final_index)
    as_start: dict[str, float] = {}
    as_finish: dict[str, float] = {}
    overall = None
    for a1 in tables:
        for a2 in tables:
            for tau in range(final + 1):
                v = oracle_composed(tables, a1, a2, tau, final)
                if v is None:
                    continue
                if a1 not in as_start or v < as_start[a1]:
                    as_start[a1] = v
                if a2 not in as_finish or v < as_finish[a2]:
                    as_finish[a2] = v
                if overall is None or v < overall:
                    overall = v
    if overall is None:
        raise NoSolverError("no defined switch triple")
    return {
        a: (as_start[a] / overall if a in as_start else None,
            as_finish[a] / overall if a in as_finish else None)
        for a in tables
    }


def oracle_i1(tables: Mapping[str, ErtTable], algorithm: str, final_index: int | None = None) -> float | None:
    return oracle_improvements(tables, final_index)[algorithm][0]


def oracle_i2(tables: Mapping[str, ErtTable], algorithm: str, final_index: int | None = None) -> float | None:
    return oracle_improvements(tables, final_index)[algorithm][1]


def oracle_pair_matrix(tables: Mapping[str, ErtTable], final_index: int | None = None) -> dict:
    """``{(a1, a2): (best_ert, tau, speedup)}``, with None triples where undefined."""
    final = _final(tables, final_index)
    static = oracle_vbs_static(tables, final_index)[1]
    out = {}
    for a1 in tables:
        for a2 in tables:
            best = None
            for tau in range(final + 1):
                v = oracle_composed(tables, a1, a2, tau, final)
                if v is not None and (best is None or v <= best[0]):
                    best = (v, tau)
            out[a1, a2] = (None, None, None) if best is None else (best[0], best[1], static / best[0])
    return out
