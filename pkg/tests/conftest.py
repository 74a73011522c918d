from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from cellforge.cells import build_u, load_w
from cellforge.graph import e412
from cellforge.solver import assemble_system, gauge_fix

settings.register_profile(
    "ci",
    max_examples=200,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("ci")



@pytest.fixture(scope="session")
def graph():
    return e412()


@pytest.fixture(scope="session")
def w():
    return load_w()


@pytest.fixture(scope="session")
def u(w):
    return build_u(w)


@pytest.fixture(scope="session")
def system(graph):
    return gauge_fix(assemble_system(graph))


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion: criterion(n, ok, detail)."""

    def record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
