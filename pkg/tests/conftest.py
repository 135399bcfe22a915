import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402  # needs the path insert above

_SESSION_START = time.monotonic()


def session_elapsed() -> float:
    return time.monotonic() - _SESSION_START


def pytest_sessionfinish(session, exitstatus):
    print()
    for line in acceptance_log.RESULTS:
        print(line)
    elapsed = session_elapsed()
    limit = 60.0
    verdict = "PASS" if elapsed < limit else "FAIL"
    print(f"ACCEPTANCE 10b full-suite-wall-time {elapsed:.1f}s (limit {limit:.0f}s): {verdict}")
    if verdict == "FAIL" and exitstatus == 0:
        session.exitstatus = 1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
