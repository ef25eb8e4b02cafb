import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from spherebundle.models import catalog_model


@pytest.fixture(scope="session")
def cp1():
    return catalog_model("cp1")


@pytest.fixture(scope="session")
def cp2():
    return catalog_model("cp2")


@pytest.fixture(scope="session")
def cp3():
    return catalog_model("cp3")


@pytest.fixture(scope="session")
def ch2():
    return catalog_model("ch2")


@pytest.fixture(scope="session")
def cp1xcp1():
    return catalog_model("cp1xcp1")


@pytest.fixture(scope="session")
def torus4():
    return catalog_model("torus4")


@pytest.fixture(scope="session")
def s2():
    return catalog_model("s2")


@pytest.fixture(scope="session")
def s4():
    return catalog_model("s4")


@pytest.fixture(scope="session")
def conformal_model():
    return catalog_model("conformal_cp1xcp1")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
