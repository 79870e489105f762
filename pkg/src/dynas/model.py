"""Shared domain types: target grid, problem keys, run traces and ERT values."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

BBOB_FUNCTIONS = range(1, 25)
BBOB_DIMENSIONS = (2, 3, 5, 10, 20, 40)


class DynasError(Exception):
    """Base class for errors raised by this package."""


class GridRangeError(DynasError, IndexError):
    pass


class DomainError(DynasError, ValueError):
    pass


class FormatError(DynasError, ValueError):
    """Input file content could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoSolverError(DynasError):
    """No candidate algorithm satisfies the selection preconditions."""


@dataclass(frozen=True)
class TargetGrid:
    """Decreasing precision targets ``10 ** (top - step * i)``.

    Exponents are kept in integer tenths so that index arithmetic is exact; the
    floating value of a target is only produced on request.
    """

    count: int = 51
    top_tenths: int = 20
    step_tenths: int = 2

    def __post_init__(self):
        if self.count < 1:
            raise DomainError("grid needs at least one target")
        if self.step_tenths <= 0:
            raise DomainError("grid step must be positive")

    @property
    def final_index(self) -> int:
        return self.count - 1

    @property
    def indices(self) -> range:
        return range(self.count)

    def _check(self, i: int) -> None:
        if not 0 <= i < self.count:
            raise GridRangeError(f"grid index {i} outside 0..{self.count - 1}")

    def exponent_tenths(self, i: int) -> int:
        self._check(i)
        return self.top_tenths - self.step_tenths * i

    def exponent(self, i: int) -> Fraction:
        return Fraction(self.exponent_tenths(i), 10)

    def value(self, i: int) -> float:
        self._check(i)
        return self.values[i]

    @cached_property
    def values(self) -> tuple[float, ...]:
        # decimal power at high precision, then one rounding to float: identical on every platform
        out = []
        with localcontext() as ctx:
            ctx.prec = 50
            for i in range(self.count):
                tenths = self.top_tenths - self.step_tenths * i
                if tenths % 10 == 0:
                    out.append(float(f"1e{tenths // 10}"))
                else:
                    out.append(float(Decimal(10) ** (Decimal(tenths) / 10)))
        return tuple(out)

    def log10_label(self, i: int) -> str:
        """Exact decimal rendering of the exponent, e.g. ``-6.4``."""
        t = self.exponent_tenths(i)
        sign = "-" if t < 0 else ""
        return f"{sign}{abs(t) // 10}.{abs(t) % 10}"

    def nearest_index(self, precision: float) -> int:
        if not precision > 0 or math.isnan(precision):
            raise DomainError(f"precision must be positive, got {precision!r}")
        x = 10.0 * math.log10(precision)
        # continuous position on the grid, then compare the two neighbours
        pos = (self.top_tenths - x) / self.step_tenths
        lo = min(max(math.floor(pos), 0), self.final_index)
        hi = min(lo + 1, self.final_index)
        d_lo = abs(x - self.exponent_tenths(lo))
        d_hi = abs(x - self.exponent_tenths(hi))
        # log10 round-off must not break exact ties; ties go to the easier target
        if d_hi < d_lo - 1e-9:
            return hi
        return lo


DEFAULT_GRID = TargetGrid()


def target_value(i: int, grid: TargetGrid = DEFAULT_GRID) -> float:
    return grid.value(i)


def nearest_grid_index(precision: float, grid: TargetGrid = DEFAULT_GRID) -> int:
    return grid.nearest_index(precision)


@dataclass(frozen=True, order=True)
class ProblemKey:
    function_id: int
    dimension: int

    def __post_init__(self):
        if self.function_id < 1 or self.dimension < 1:
            raise DomainError(f"invalid problem key f{self.function_id} d{self.dimension}")

    def __str__(self):
        return f"F{self.function_id}/{self.dimension}D"


@dataclass(frozen=True)
class ProblemSpace:
    """Admissible key space; BBOB by default, widen it for other suites."""

    functions: frozenset[int] = frozenset(BBOB_FUNCTIONS)
    dimensions: frozenset[int] = frozenset(BBOB_DIMENSIONS)

    def __contains__(self, key: ProblemKey) -> bool:
        return key.function_id in self.functions and key.dimension in self.dimensions

    def check(self, key: ProblemKey) -> ProblemKey:
        if key not in self:
            raise DomainError(f"{key} outside the declared problem space")
        return key


BBOB = ProblemSpace()


@dataclass(frozen=True)
class RunTrace:
    """Best-so-far precision of one run, recorded at strictly increasing evaluation counts."""

    instance_id: int
    points: tuple[tuple[int, float], ...]
    budget: int = 0

    def __post_init__(self):
        pts = tuple((int(e), float(p)) for e, p in self.points)
        if not pts:
            raise DomainError("a run trace needs at least one point")
        prev_e, prev_p = 0, math.inf
        for e, p in pts:
            if e <= prev_e:
                raise DomainError(f"evaluation counts must be strictly increasing ({prev_e} -> {e})")
            if p > prev_p or math.isnan(p):
                raise DomainError(f"best-so-far precision increased at evaluation {e}")
            prev_e, prev_p = e, p
        object.__setattr__(self, "points", pts)
        budget = self.budget or pts[-1][0]
        if budget < pts[-1][0]:
            raise DomainError(f"budget {budget} below last evaluation {pts[-1][0]}")
        object.__setattr__(self, "budget", int(budget))

    @classmethod
    def from_rows(cls, instance_id: int, rows: Iterable[Sequence[float]]) -> "RunTrace":
        """Build a trace from raw log rows, repairing them into a valid trace.

        Negative precisions are clamped to 0, non-monotone precisions are
        replaced by the running minimum, and repeated evaluation counts keep
        the last row.
        """
        pts: list[tuple[int, float]] = []
        best = math.inf
        for e, p in rows:
            e = int(e)
            best = min(best, max(float(p), 0.0))
            if pts and e == pts[-1][0]:
                pts[-1] = (e, best)
            elif pts and e < pts[-1][0]:
                raise DomainError(f"evaluation counts go backwards ({pts[-1][0]} -> {e})")
            else:
                pts.append((e, best))
        return cls(instance_id, tuple(pts))

    @property
    def evals(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.points)

    @property
    def precisions(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.points)


@dataclass(frozen=True)
class RunSet:
    algorithm_id: str
    problem: ProblemKey
    runs: tuple[RunTrace, ...]

    def __post_init__(self):
        if not self.algorithm_id:
            raise DomainError("algorithm id must be non-empty")
        object.__setattr__(self, "runs", tuple(self.runs))

    @property
    def key(self) -> tuple[str, ProblemKey]:
        return self.algorithm_id, self.problem

    def __len__(self):
        return len(self.runs)


@dataclass(frozen=True)
class Finite:
    ert: float
    successes: int
    total_runs: int

    def __post_init__(self):
        if self.successes < 1 or self.total_runs < self.successes:
            raise DomainError("finite ERT needs 1 <= successes <= total_runs")
        if not self.ert >= 1:
            raise DomainError(f"ERT must be at least 1, got {self.ert}")

    finite = True

    def as_float(self) -> float:
        return self.ert


@dataclass(frozen=True)
class NeverHit:
    total_runs: int

    finite = False
    successes = 0

    def as_float(self) -> float:
        return math.inf


ErtValue = Union[Finite, NeverHit]


@dataclass(frozen=True)
class ErtTable:
    """ERT of one algorithm on one problem at every grid target."""

    algorithm_id: str
    problem: ProblemKey
    values: tuple[ErtValue, ...] = field(repr=False)

    def __getitem__(self, i: int) -> ErtValue:
        return self.values[i]

    def __len__(self):
        return len(self.values)

    @cached_property
    def array(self):
        """ERT per target as float64, ``inf`` where never hit."""
        import numpy as np

        return np.array([v.as_float() for v in self.values], dtype=np.float64)
