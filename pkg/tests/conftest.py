import pytest

from stcmsense.channel import UlaLayout, dft_pilots
from stcmsense.config import build_model, merge_config
from stcmsense.geometry import SceneGeometry
from stcmsense.metasurface import HarmonicSet, PanelLayout, default_coding_matrix

NOISE_POWER = 1e-15          # -120 dBm
PILOT_POWER = 10 ** (-1.8)   # 12 dBm across the block


@pytest.fixture(scope="session")
def geom():
    return SceneGeometry()


@pytest.fixture(scope="session")
def ula():
    return UlaLayout.half_wavelength(16, 1e10)


@pytest.fixture(scope="session")
def panel():
    return PanelLayout.half_wavelength(8, 8, 1e10)


@pytest.fixture(scope="session")
def code(panel):
    return default_coding_matrix(panel)


@pytest.fixture(scope="session")
def harmonics():
    return HarmonicSet(3)


@pytest.fixture(scope="session")
def pilots(ula):
    return dft_pilots(ula.m_antennas, PILOT_POWER)


@pytest.fixture(scope="session")
def model():
    return build_model(merge_config({}))


@pytest.fixture(scope="session")
def default_cfg():
    return merge_config({})
