import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "fracop", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fracop")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    """Frozen mpmath values; regenerate with ``python3 tests/data/make_oracles.py``."""
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store PASS/FAIL sub-results per acceptance criterion for the terminal summary."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(number: int, ok: bool, detail: str) -> None:
        table.setdefault(number, []).append((bool(ok), detail))

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        rows = table[number]
        ok = all(r[0] for r in rows)
        if len(rows) <= 3:
            detail = "; ".join(d for _, d in rows)
        else:
            failed = [d for good, d in rows if not good]
            detail = f"{len(rows) - len(failed)}/{len(rows)} sub-checks pass"
            if failed:
                detail += "; failing: " + "; ".join(failed)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
