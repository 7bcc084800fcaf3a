import os

import pytest

from sgdol import load_libsvm

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def tiny3_path():
    return os.path.join(FIXTURES, "tiny3.libsvm")


@pytest.fixture(scope="session")
def synthetic500_path():
    return os.path.join(FIXTURES, "synthetic500.libsvm")


@pytest.fixture(scope="session")
def synthetic500(synthetic500_path):
    return load_libsvm(synthetic500_path)
