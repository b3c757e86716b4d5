import os

import pytest

FIXTURES = os.path.join(
    os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
    "fixtures", "protocol",
)


@pytest.fixture(scope="session")
def fixtures_dir():
    assert os.path.isdir(FIXTURES), f"golden fixtures not found at {FIXTURES}"
    return FIXTURES


def load_fixture(name):
    with open(os.path.join(FIXTURES, name), "rb") as fh:
        return fh.read()
