from pathlib import Path

import pytest

from sbindex.synth import SynthConfig, capped_pareto_sample

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture(scope="session")
def capped_2000():
    """Seeded censor-mode sample: n=2000, b=0.9, x_min=1, cap=3000."""
    return capped_pareto_sample(SynthConfig(n=2000, b=0.9, x_min=1.0, cap=3000.0, seed=5))


_CRITERIA_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the terminal summary prints them all."""
    log = request.config.stash.setdefault(_CRITERIA_KEY, [])

    def record(name: str, ok: bool, detail: str) -> bool:
        log.append((name, ok, detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_CRITERIA_KEY, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in log:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
