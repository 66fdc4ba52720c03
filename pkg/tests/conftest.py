import re

import pytest

from coredrift.emulator import ConceptProfile, EmulationTimeline

# name -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: (int(re.match(r"\d+", s).group()), s)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def small_timeline():
    """A 60 s, one-UE-per-concept timeline: fast enough for pipeline tests."""
    return EmulationTimeline(
        profiles=(
            ConceptProfile(1, (16, 32), 200, activation_time_ms=0),
            ConceptProfile(2, (48, 128), 500, activation_time_ms=20_000),
            ConceptProfile(3, (256, 512), 1000, activation_time_ms=40_000),
        ),
        ues_per_concept=2,
        duration_ms=60_000,
        seed=7,
    )
