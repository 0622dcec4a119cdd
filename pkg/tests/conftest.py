from pathlib import Path

import pytest

from npnconf.events import parse_log
from npnconf.model_io import load_model

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def assistant_model():
    return load_model(FIXTURES / "assistant_model.json")


@pytest.fixture(scope="session")
def assistant_log():
    return parse_log((FIXTURES / "assistant_log.json").read_bytes())


@pytest.fixture(scope="session")
def customer_net(assistant_model):
    return assistant_model.elements["customer"]
