import numpy as np
import pytest

from oamturb import (
    TurbulenceModel,
    coupling_table,
    half_plate,
    plate_spectrum,
    quadrant_plate,
)


@pytest.fixture(scope="session")
def quad_spectrum():
    return plate_spectrum(quadrant_plate())


@pytest.fixture(scope="session")
def half_spectrum():
    return plate_spectrum(half_plate())


@pytest.fixture(scope="session")
def table_zero():
    return coupling_table(TurbulenceModel(0.0), 12)


@pytest.fixture(scope="session")
def table_030():
    return coupling_table(TurbulenceModel(0.30), 12)


@pytest.fixture(scope="session")
def table_065():
    return coupling_table(TurbulenceModel(0.65), 12)
