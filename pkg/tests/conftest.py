from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest


def _ensure_checkout_imports() -> None:
    """Make the package importable when pytest runs from a checkout without an install."""

    repo_root = Path(__file__).resolve().parents[1]
    s = str(repo_root)
    if s in sys.path:
        sys.path.remove(s)
    sys.path.insert(0, s)


_ensure_checkout_imports()

from pomdpfsc.generators import gen_lanes, gen_paper_micro  # noqa: E402
from pomdpfsc.models import Specification  # noqa: E402


# --- performance test controls --------------------------------------------

def pytest_addoption(parser):
    parser.addoption(
        "--skip-performance-tests",
        action="store_true",
        default=False,
        help="Skip tests marked with @pytest.mark.performance",
    )


def pytest_collection_modifyitems(config, items):
    skip = (
        config.getoption("--skip-performance-tests")
        or os.environ.get("POMDPFSC_SKIP_PERFORMANCE_TESTS") == "1"
    )
    if not skip:
        return

    marker = pytest.mark.skip(
        reason="performance tests skipped (set POMDPFSC_SKIP_PERFORMANCE_TESTS=0 / omit --skip-performance-tests)"
    )
    for item in items:
        if "performance" in item.keywords:
            item.add_marker(marker)


# --- shared models ---------------------------------------------------------

@pytest.fixture
def fig2a():
    return gen_paper_micro("fig2a")


@pytest.fixture
def fig2b():
    return gen_paper_micro("fig2b")


@pytest.fixture
def fig4a():
    return gen_paper_micro("fig4a")


@pytest.fixture
def lanes():
    return gen_lanes()


@pytest.fixture
def min_reward():
    def make(pomdp):
        return Specification.for_pomdp(pomdp, "min-reward")

    return make
