import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from defeed import DeFeedWorld, WorldConfig

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "defeed", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture]
)
settings.load_profile("defeed")

FIXTURES = Path(__file__).parent / "fixtures"
NAME = "vehicle2"
PAYLOAD = b"speed=42;lane=3"


def make_world(**kw) -> DeFeedWorld:
    """A fresh system on the keyed-tag signature scheme, which keeps property suites fast."""
    kw.setdefault("scheme", "test")
    return DeFeedWorld(WorldConfig(**kw))


@pytest.fixture
def world_factory():
    return make_world


@pytest.fixture
def core():
    """Core-mode system with one registered owner and two requestors."""
    w = make_world()
    owner = w.add_owner(NAME, PAYLOAD)
    r1, r2 = w.add_requestors(2)
    return w, owner, r1, r2


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
