import numpy as np
import pytest

from hypertrace.facade import data as bundled
from hypertrace import engine as eng


@pytest.fixture(scope="session")
def m004_tri():
    return bundled.load_manifold("m004")


@pytest.fixture(scope="session")
def m004_geom():
    return bundled.load_geometry("m004")
