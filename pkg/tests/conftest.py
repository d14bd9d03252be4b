import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))

GOLDENS = TESTS_DIR / "goldens"


@pytest.fixture
def goldens_dir() -> Path:
    return GOLDENS
