import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synergy  # noqa: E402

DEMO = Path(synergy.__file__).parent / "data" / "demo"
CONFIGS = Path(synergy.__file__).parent / "data" / "configs"


@pytest.fixture
def demo_dir():
    return DEMO


@pytest.fixture
def configs_dir():
    return CONFIGS


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
