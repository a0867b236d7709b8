import os

import numpy as np
import pytest

from nlsgpc.grid import Grid


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long PDE runs, enabled with NLSGPC_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("NLSGPC_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long PDE run; set NLSGPC_SLOW=1 to enable")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def grid40():
    return Grid(40.0, 2048)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, list[tuple[bool, str]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    detail = props.get("detail", "")
    if report.failed and not detail:
        detail = str(report.longrepr).strip().splitlines()[-1][:200]
    _CRITERIA.setdefault(props["criterion"], []).append((report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(passed for passed, _ in results)
        details = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {details}")
