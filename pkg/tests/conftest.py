from __future__ import annotations

from pathlib import Path

import pytest

import helpers


@pytest.fixture
def swap_cycle():
    return helpers.swap_cycle_instance()


@pytest.fixture
def one_way_flow():
    return helpers.one_way_flow_instance()


@pytest.fixture
def empty_core():
    return helpers.empty_core_instance()


@pytest.fixture
def data_dir() -> Path:
    return Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def family():
    """The exhaustive small-instance family shared by the acceptance tests."""
    return helpers.exhaustive_family()
