import os
from collections import OrderedDict
from pathlib import Path

import numpy as np
import pytest

from varstep import SyntheticSpec, generate_separable, new_instance

# criterion number -> description, list of outcomes
_CRITERIA: "OrderedDict[int, list]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion covered by a test")


def pytest_collection_modifyitems(session, config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, text = mark.args
            _CRITERIA.setdefault(n, [text, []])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[mark.args[0]][1].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n, (text, outcomes) in sorted(_CRITERIA.items()):
        if not outcomes:
            verdict = "NOT RUN"
        elif "failed" in outcomes:
            verdict = "FAIL"
        elif "passed" in outcomes:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        skipped = outcomes.count("skipped")
        extra = f" ({skipped} optional part skipped)" if skipped and verdict == "PASS" else ""
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}{extra}  {text}")


def random_instance(rng, m=None, n=None, scale=2.0):
    m = m if m is not None else int(rng.integers(1, 9))
    n = n if n is not None else int(rng.integers(1, 9))
    while True:
        A = rng.uniform(-scale, scale, size=(m, n))
        if np.any(A != 0):
            break
    y = rng.choice([-1.0, 1.0], size=m)
    return new_instance(A, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


PLANTED_SPEC = SyntheticSpec(m=100, n=50, margin=3.0, seed=11, planted_sparsity=3, box=4.0)


@pytest.fixture(scope="session")
def planted():
    """Separable data from a 3-sparse direction, with x* the planted direction
    scaled to unit max-norm (so it lies in the box B = 1)."""
    instance, direction = generate_separable(PLANTED_SPEC)
    return instance, direction / np.max(np.abs(direction))


def adult_path():
    """Location of a fetched LIBSVM adult file (a9a), or None."""
    candidates = [os.environ.get("VARSTEP_ADULT"),
                  Path(__file__).resolve().parents[1] / "data" / "a9a"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None
