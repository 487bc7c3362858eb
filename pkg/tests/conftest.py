import pytest

from helpers import micro_instance


@pytest.fixture
def i1():
    return micro_instance()
