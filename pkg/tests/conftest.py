import pytest
from hypothesis import settings

from colombeau.mollifier import build_mollifier, build_nonnegative_profile

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def m2():
    return build_mollifier(2)


@pytest.fixture(scope="session")
def m0():
    return build_mollifier(0)


@pytest.fixture(scope="session")
def profile():
    return build_nonnegative_profile()
