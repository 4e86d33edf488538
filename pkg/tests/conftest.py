from __future__ import annotations

import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"

sys.path.insert(0, str(Path(__file__).parent))


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def listing1() -> str:
    return fixture_text("listing1.mjs-mini")


@pytest.fixture(scope="session")
def listing1_nocount() -> str:
    return fixture_text("listing1_nocount.mjs-mini")


@pytest.fixture(scope="session")
def listing3() -> str:
    return fixture_text("listing3.mjs-mini")


@pytest.fixture(scope="session")
def fig4() -> str:
    return fixture_text("fig4.mjs-mini")


@pytest.fixture(scope="session")
def busy_pipeline() -> str:
    return fixture_text("busy_pipeline.mjs-mini")


@pytest.fixture(scope="session")
def corpus():
    """Compiled fuzz corpus shared by oracle-comparison tests."""
    from progen import generate

    return [generate(seed) for seed in range(120)]
