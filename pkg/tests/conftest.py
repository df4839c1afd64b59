import hypothesis
import pytest

import pathform as pf

hypothesis.settings.register_profile(
    "det", derandomize=True, deadline=None, max_examples=60)
hypothesis.settings.load_profile("det")


@pytest.fixture(scope="session")
def pm1():
    return pf.uniform_pm1()


@pytest.fixture(scope="session")
def pm1_model(pm1):
    return pf.LatticeModel.from_measure(pm1)


@pytest.fixture(scope="session")
def u12():
    return pf.uniform_interval(1.0, 2.0)
