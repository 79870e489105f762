from pathlib import Path

import pytest

from dynas.model import ProblemKey, RunSet, RunTrace

DATA = Path(__file__).parent / "data"


@pytest.fixture
def coco_dir():
    return DATA / "coco"


def make_run_set(hits, budget=100, alg="A", problem=ProblemKey(1, 5)):
    """Run set whose runs reach the final target at the given evaluation (None = never)."""
    runs = []
    for k, h in enumerate(hits):
        if h is None:
            pts = ((1, 50.0), (budget, 1e-3))
        elif h == 1:
            pts = ((1, 0.0),) + (((budget, 0.0),) if budget > 1 else ())
        else:
            pts = ((1, 50.0), (h, 1e-9)) + (((budget, 1e-9),) if budget > h else ())
        runs.append(RunTrace(k + 1, pts))
    return RunSet(alg, problem, tuple(runs))


ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the terminal summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        label = marker.args[0].format(**getattr(item, "callspec", None).params if hasattr(item, "callspec") else {})
        ACCEPTANCE_LINES.append(f"[{status}] {label}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
