import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ideoscale.model import ingest_edges  # noqa: E402


def random_network(rng, n_followers, n_elites, density=0.3):
    """Random bipartite network where every row and column has at least one edge."""
    A = rng.random((n_followers, n_elites)) < density
    A[np.arange(n_followers), rng.integers(0, n_elites, n_followers)] = True
    A[rng.integers(0, n_followers, n_elites), np.arange(n_elites)] = True
    edges = [(f"f{i}", f"e{j}") for i, j in zip(*np.nonzero(A))]
    return ingest_edges(edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# per-criterion outcome of tests marked ``criterion(n)``, summarized at the end of the run
_CRITERIA: dict[int, list[tuple[str, str, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA.setdefault(int(marker.args[0]), []).append((item.name, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        checks = _CRITERIA[key]
        failed = [c for c in checks if c[1] != "passed"]
        status = "PASS" if not failed else "FAIL"
        passed = len(checks) - len(failed)
        terminalreporter.write_line(f"criterion {key}: {status} ({passed}/{len(checks)} checks passed)")
        for name, outcome, detail in checks:
            mark = "ok  " if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"    {mark} {name}" + (f": {detail}" if detail else ""))
