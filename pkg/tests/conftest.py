import functools
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from kmsquot.fields import FieldDescriptor
from kmsquot.seeds import GeneratorTriple, build_seed

GOLDEN = Path(__file__).parent / "golden"

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def seed_for(p: int, k: int, variant: str, r: int = 1):
    return build_seed(FieldDescriptor.create(p, r, k), variant)


@functools.lru_cache(maxsize=None)
def gen_for(p: int, k: int, variant: str, r: int = 1):
    return GeneratorTriple(seed_for(p, k, variant, r))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line; all lines are repeated in the terminal summary."""
    lines = request.config._acceptance_lines

    def record(name: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f" :: {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
