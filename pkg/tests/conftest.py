import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def oracle_cache(tmp_path, monkeypatch):
    """Isolated oracle cache directory."""
    monkeypatch.setenv("SPLINEPDF_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
