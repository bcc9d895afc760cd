import numpy as np
import pytest

from bernfield.innovations import InnovationField, InnovationSpec


@pytest.fixture
def rad1():
    return InnovationField(InnovationSpec.rademacher(), 11, dim=1)


@pytest.fixture
def rad2():
    return InnovationField(InnovationSpec.rademacher(), 11, dim=2)


@pytest.fixture
def gauss1():
    return InnovationField(InnovationSpec.gaussian(), 11, dim=1)


@pytest.fixture
def gauss2():
    return InnovationField(InnovationSpec.gaussian(), 11, dim=2)


def within_se(estimate, target, se, k=3.0):
    """``|estimate - target| <= k * se`` with a float floor for exact matches."""
    return abs(estimate - target) <= k * se + 1e-12


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
