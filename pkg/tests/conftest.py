import numpy as np
import pytest

from troop import constants as C
from troop.angular import TransitionSpec, line_strengths
from troop.force import TrapModel
from troop.optics import BeamSet

A = C.FOCUS_DISTANCE


@pytest.fixture(scope="session")
def cs():
    return TransitionSpec.from_jg(4, C.CS_GAMMA, C.CS_WAVELENGTH)


@pytest.fixture(scope="session")
def gamma(cs):
    return cs.gamma


def make_beams(gamma, detuning=-2.0, rabi=0.8, **kw):
    return BeamSet.symmetric(A, rabi * gamma, detuning * gamma, **kw)


@pytest.fixture(scope="session")
def nominal_beams(gamma):
    return make_beams(gamma)


@pytest.fixture(scope="session")
def nominal_model(nominal_beams, cs):
    return TrapModel(nominal_beams, cs, line_strengths(cs))


@pytest.fixture(scope="session")
def frozen_model(nominal_beams, cs):
    return TrapModel(nominal_beams, cs, pumping=False)


@pytest.fixture(scope="session")
def same_model(gamma, cs):
    return TrapModel(make_beams(gamma, helicities=(1, 1, 1)), cs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
