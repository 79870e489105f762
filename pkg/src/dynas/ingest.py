"""Readers for COCO ``.info``/``.dat`` archives and the canonical JSON-lines trace format."""
from __future__ import annotations

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .model import (
    BBOB,
    DomainError,
    DynasError,
    FormatError,
    ProblemKey,
    ProblemSpace,
    RunSet,
    RunTrace,
)

logger = logging.getLogger(__name__)

CANONICAL_SUFFIXES = (".jsonl", ".ndjson")
CANONICAL_FIELDS = ("algorithm", "function", "dimension", "instance", "trace")


class EmptyIndexError(DynasError):
    pass


@dataclass(frozen=True)
class InstanceSummary:
    instance: int
    evals: int
    precision: float


@dataclass(frozen=True)
class InfoRecord:
    problem: ProblemKey
    algorithm_id: str
    datafile: str
    instances: tuple[InstanceSummary, ...]


@dataclass
class ReportLine:
    file: str
    status: str  # "ok" | "skipped"
    reason: str = ""
    runs: int = 0

    def to_json(self) -> str:
        return json.dumps({"file": self.file, "status": self.status, "reason": self.reason, "runs": self.runs})


@dataclass
class DatasetIndex:
    entries: dict[tuple[str, ProblemKey], RunSet] = field(default_factory=dict)
    provenance: dict[tuple[str, ProblemKey], list[str]] = field(default_factory=dict)
    report: list[ReportLine] = field(default_factory=list)

    def add(self, run_set: RunSet, source: str = "") -> None:
        key = run_set.key
        if key in self.entries:
            old = self.entries[key]
            self.entries[key] = RunSet(old.algorithm_id, old.problem, old.runs + run_set.runs)
        else:
            self.entries[key] = run_set
        self.provenance.setdefault(key, []).append(source)

    def merge(self, other: "DatasetIndex") -> "DatasetIndex":
        out = DatasetIndex()
        for idx in (self, other):
            for key, rs in idx.entries.items():
                out.add(rs)
                out.provenance[key][-1:] = idx.provenance.get(key, [])
            out.report.extend(idx.report)
        return out

    @property
    def problems(self) -> list[ProblemKey]:
        return sorted({p for _, p in self.entries})

    @property
    def algorithms(self) -> list[str]:
        return sorted({a for a, _ in self.entries})

    def run_sets(self, problem: ProblemKey) -> list[RunSet]:
        return [rs for (a, p), rs in sorted(self.entries.items(), key=lambda kv: kv[0][0]) if p == problem]

    def filtered(self, functions: Iterable[int] | None = None, dimensions: Iterable[int] | None = None) -> "DatasetIndex":
        fs = None if functions is None else set(functions)
        ds = None if dimensions is None else set(dimensions)
        out = DatasetIndex(report=list(self.report))
        for key, rs in self.entries.items():
            p = key[1]
            if (fs is None or p.function_id in fs) and (ds is None or p.dimension in ds):
                out.entries[key] = rs
                out.provenance[key] = list(self.provenance.get(key, []))
        return out

    def __len__(self):
        return len(self.entries)


# ---------------------------------------------------------------- .info

_HEADER_RE = re.compile(r"(\w+)\s*=\s*('[^']*'|[^,]*)")
_INSTANCE_RE = re.compile(r"^\s*(\d+)\s*:\s*([^|\s]+)\s*\|\s*(\S+)\s*$")


def _header_fields(line: str) -> dict[str, str]:
    return {k: v.strip().strip("'") for k, v in _HEADER_RE.findall(line)}


def _int_field(fields: dict[str, str], name: str) -> int:
    if name not in fields:
        raise ValueError(f"missing {name}")
    try:
        return int(fields[name])
    except ValueError:
        raise ValueError(f"bad {name} value {fields[name]!r}") from None


def parse_coco_info(text: str, warnings: list[str] | None = None) -> list[InfoRecord]:
    """Parse a COCO ``.info`` index into one record per header block.

    Malformed blocks are skipped; a message for each is appended to
    ``warnings`` (when given) and logged.
    """
    warns = warnings if warnings is not None else []
    lines = [ln.strip() for ln in text.splitlines()]
    records = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if "funcId" not in line:
            i += 1
            continue
        header_line = i + 1
        fields = _header_fields(line)
        # the data line is the next non-comment, non-empty line
        j = i + 1
        while j < len(lines) and (not lines[j] or lines[j].startswith("%")):
            j += 1
        data = lines[j] if j < len(lines) and "funcId" not in lines[j] else ""
        i = j + 1 if data else j
        try:
            func = _int_field(fields, "funcId")
            dim = _int_field(fields, "DIM")
            alg = fields.get("algId", "")
            if not alg:
                raise ValueError("missing algId")
            if not data:
                raise ValueError("missing data line")
            tokens = [t.strip() for t in data.split(",")]
            datafile = tokens[0]
            summaries = []
            for tok in tokens[1:]:
                m = _INSTANCE_RE.match(tok)
                if not m:
                    continue  # unknown tokens are tolerated
                summaries.append(InstanceSummary(int(m.group(1)), int(float(m.group(2))), float(m.group(3))))
            records.append(InfoRecord(ProblemKey(func, dim), alg, datafile, tuple(summaries)))
        except (ValueError, DomainError) as exc:
            msg = f"block at line {header_line} skipped: {exc}"
            warns.append(msg)
            logger.warning(msg)
    if not records:
        raise FormatError("no parseable blocks in .info file")
    return records


# ---------------------------------------------------------------- .dat

def parse_coco_dat(text: str) -> list[RunTrace]:
    """Split a fixed-target ``.dat`` file into one trace per ``%``-headed segment.

    Column 1 is the evaluation count and column 3 the best-so-far precision.
    Instance ids are positional (1-based) here; ``build_index`` replaces them
    with the ids listed in the matching ``.info`` line.
    """
    segments: list[list[tuple[int, float]]] = []
    current: list[tuple[int, float]] | None = None
    in_header = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            if not in_header:
                current = []
                segments.append(current)
            in_header = True
            continue
        in_header = False
        if current is None:
            current = []
            segments.append(current)
        cols = line.split()
        if len(cols) < 3:
            raise FormatError(f"expected at least 3 columns, got {len(cols)}", lineno)
        try:
            evals = float(cols[0])
            precision = float(cols[2])
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
        if evals < 0 or math.isnan(evals):
            raise FormatError(f"negative evaluation count {cols[0]}", lineno)
        if evals < 1:
            continue
        current.append((int(evals), precision))
    traces = []
    for k, rows in enumerate(s for s in segments if s):
        try:
            traces.append(RunTrace.from_rows(k + 1, rows))
        except DomainError as exc:
            raise FormatError(f"run {k + 1}: {exc}") from None
    if not traces:
        raise FormatError("no data rows in .dat file")
    return traces


# ---------------------------------------------------------------- canonical

def parse_canonical(text: str) -> RunSet:
    """Parse newline-delimited JSON traces that all belong to one (algorithm, problem)."""
    key = None
    runs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            alg = obj["algorithm"]
            problem = ProblemKey(int(obj["function"]), int(obj["dimension"]))
            if not isinstance(alg, str) or not alg:
                raise ValueError("algorithm must be a non-empty string")
            trace = RunTrace(int(obj["instance"]), tuple((int(e), float(p)) for e, p in obj["trace"]))
        except (ValueError, KeyError, TypeError, DomainError) as exc:
            raise FormatError(f"malformed record: {exc}", lineno) from None
        if key is None:
            key = (alg, problem)
        elif key != (alg, problem):
            raise FormatError(
                f"record for ({alg}, {problem}) in a file holding ({key[0]}, {key[1]})", lineno)
        runs.append(trace)
    if key is None:
        raise FormatError("empty canonical file")
    return RunSet(key[0], key[1], tuple(runs))


def export_canonical(run_set: RunSet) -> str:
    """Inverse of :func:`parse_canonical` for traces whose budget is their last evaluation."""
    lines = []
    for run in run_set.runs:
        obj = {
            "algorithm": run_set.algorithm_id,
            "function": run_set.problem.function_id,
            "dimension": run_set.problem.dimension,
            "instance": run.instance_id,
            "trace": [[e, p] for e, p in run.points],
        }
        lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"


def canonical_filename(run_set: RunSet) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]+", "_", run_set.algorithm_id)
    return f"{safe}_f{run_set.problem.function_id}_DIM{run_set.problem.dimension}.jsonl"


# ---------------------------------------------------------------- discovery

def _walk(roots: Iterable[str | os.PathLike]) -> Iterator[Path]:
    for root in roots:
        root = Path(root)
        if not root.is_dir():
            raise FileNotFoundError(f"not a directory: {root}")
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames.sort()
            for name in sorted(filenames):
                yield Path(dirpath) / name


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8", errors="replace")


def build_index(roots: Iterable[str | os.PathLike], space: ProblemSpace = BBOB) -> DatasetIndex:
    """Walk ``roots`` and merge every usable trace file into one index.

    Files are visited in sorted path order so the result does not depend on
    directory listing order. Every visited ``.info``, ``.dat`` and canonical
    file gets a line in ``index.report``.
    """
    roots = list(roots)
    files = sorted(set(_walk(roots)))
    index = DatasetIndex()
    report: dict[str, ReportLine] = {}
    claimed: set[Path] = set()
    pending: list[tuple[str, RunSet]] = []

    for path in files:
        if path.suffix != ".info":
            continue
        warns: list[str] = []
        try:
            records = parse_coco_info(_read(path), warns)
        except (OSError, FormatError) as exc:
            report[str(path)] = ReportLine(str(path), "skipped", str(exc))
            continue
        total = 0
        for rec in records:
            dat = Path(os.path.normpath(path.parent / rec.datafile.replace("\\", "/")))
            if rec.problem not in space:
                warns.append(f"{rec.problem} outside problem space")
                continue
            claimed.add(dat.resolve())
            try:
                traces = parse_coco_dat(_read(dat))
            except (OSError, FormatError) as exc:
                report[str(dat)] = ReportLine(str(dat), "skipped", f"{type(exc).__name__}: {exc}")
                continue
            traces = _assign_instances(traces, rec.instances)
            pending.append((str(dat), RunSet(rec.algorithm_id, rec.problem, tuple(traces))))
            # a .dat may be listed by several blocks; report it once with the run total
            prev = report.get(str(dat))
            runs = len(traces) + (prev.runs if prev and prev.status == "ok" else 0)
            report[str(dat)] = ReportLine(str(dat), "ok", "budget=last recorded evaluation", runs)
            total += len(traces)
        report[str(path)] = ReportLine(str(path), "ok", "; ".join(warns), total)

    for path in files:
        if path.suffix in CANONICAL_SUFFIXES:
            try:
                rs = parse_canonical(_read(path))
                space.check(rs.problem)
            except (OSError, FormatError, DomainError) as exc:
                report[str(path)] = ReportLine(str(path), "skipped", str(exc))
                continue
            pending.append((str(path), rs))
            report[str(path)] = ReportLine(str(path), "ok", "", len(rs.runs))
        elif path.suffix == ".dat" and path.resolve() not in claimed:
            report[str(path)] = ReportLine(str(path), "skipped", "not referenced by any .info index")

    for source, rs in sorted(pending, key=lambda item: item[0]):
        index.add(rs, source)
    index.report = [report[k] for k in sorted(report)]
    if not index.entries:
        raise EmptyIndexError("no usable data found under " + ", ".join(map(str, roots)))
    return index


def _assign_instances(traces: list[RunTrace], summaries: tuple[InstanceSummary, ...]) -> list[RunTrace]:
    if not summaries:
        return traces
    out = []
    for k, tr in enumerate(traces):
        inst = summaries[k].instance if k < len(summaries) else 0
        out.append(RunTrace(inst, tr.points, tr.budget))
    return out


def write_report(report: Iterable[ReportLine], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in report:
            fh.write(line.to_json() + "\n")
