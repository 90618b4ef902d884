import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)



# acceptance verdicts, collected by test_acceptance.py and summarised at the end of the run
VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    store = request.config.stash.setdefault(VERDICTS, {})

    def record(criterion: int, check: str, ok: bool, detail: str = ""):
        store.setdefault(criterion, []).append((check, bool(ok), detail))
        print(f"criterion {criterion} [{check}]: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(store):
        checks = store[criterion]
        ok = all(c[1] for c in checks)
        parts = "; ".join(f"{name} {'ok' if good else 'FAILED'}{': ' + d if d else ''}" for name, good, d in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {parts}")
