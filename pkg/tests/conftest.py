import json
from importlib import resources

import pytest

from catbranch.model import load_model


def bundled_config(name: str) -> dict:
    text = resources.files("catbranch.configs").joinpath(name).read_text()
    return json.loads(text)


@pytest.fixture(scope="session")
def two_state_model():
    return load_model(bundled_config("two_state.json"))


@pytest.fixture(scope="session")
def z_two_model():
    return load_model(bundled_config("z_two_catalysts.json"))


@pytest.fixture(scope="session")
def z_three_model():
    return load_model(bundled_config("z_three_catalysts.json"))
