import numpy as np
import pytest

from branchprob import named_model


@pytest.fixture(scope="session")
def hsc():
    return named_model("hsc")


@pytest.fixture(scope="session")
def bds():
    return named_model("bds")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
