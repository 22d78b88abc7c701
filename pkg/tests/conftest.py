import hypothesis
import numpy as np
import pytest

from pairfuse.datasets import desk_wine
from pairfuse.eval import Experiment

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def pytest_report_header(config):
    _, _, source = desk_wine(200, 0)
    return f"desk-scale wine source: {source}"


@pytest.fixture(scope="session")
def desk():
    """200-item red-wine subset (real file if $PAIRFUSE_RED_WINE is set, else surrogate)."""
    items, quality, source = desk_wine(200, 0)
    exp = Experiment.from_scores(items, quality)
    exp.source = source
    exp.quality = quality
    return exp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
