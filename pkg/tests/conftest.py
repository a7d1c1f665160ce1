import os
from pathlib import Path

import numpy as np
import pytest

from beedance.features import FeatureTable

FIXTURE_DIR = Path(os.environ.get("BEEDANCE_FIXTURES", Path(__file__).parent / "fixtures" / "oh_dataset"))
BEES = (4, 5, 6)


def bee_path(bee: int) -> Path:
    return FIXTURE_DIR / f"bee{bee}.csv"


def have_dataset() -> bool:
    return all(bee_path(b).is_file() for b in BEES)


requires_dataset = pytest.mark.skipif(
    not have_dataset(),
    reason=f"honeybee dataset fixture not found in {FIXTURE_DIR} (set BEEDANCE_FIXTURES to enable)",
)


def table_from(X, y, bee_id="t"):
    return FeatureTable.from_arrays(np.asarray(X, float), y, bee_id=bee_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting -------------------------------------------------------

_CRITERIA: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        number, title = marker.args
        detail = dict(item.user_properties).get("detail", "")
        if rep.skipped and not detail:
            detail = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else ""
        line = f"{status} criterion {number:>2}: {title}" + (f" | {detail}" if detail else "")
        _CRITERIA[number] = line
        print(f"\n{line}")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
