from pathlib import Path

import pytest

import helpers

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def wine_dir() -> Path:
    return DATA_DIR / "wine"


@pytest.fixture
def golden_path() -> Path:
    return DATA_DIR / "wine_golden.jsonl"


@pytest.fixture
def wine_table():
    return helpers.wine_table()


@pytest.fixture
def fruit_table():
    return helpers.fruit_table()
