from pathlib import Path

import pytest

from dcrmon.model import load_model
from dcrmon.scenarios import fixtures_dir

FIXTURES = fixtures_dir()


def fixture_path(*parts) -> Path:
    return FIXTURES.joinpath(*parts)


@pytest.fixture
def escrow():
    return load_model(fixture_path("escrow", "model.json"))


@pytest.fixture
def casino():
    return load_model(fixture_path("casino", "model.json"))
