import math

import pytest
from hypothesis import HealthCheck, settings

from noonlith.geometry import SlitGeometry, grid_for_fringes

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def geom():
    # 100 um slits, 1 um light, 10 cm screen, slit width d/50
    return SlitGeometry.from_wavelength(100e-6, 0.1, 1e-6, a=2e-6)


@pytest.fixture
def grid101(geom):
    return grid_for_fringes(geom, 101, 4.5)


@pytest.fixture
def reference_setup():
    from noonlith.gaussian import GaussianNoonSetup
    return GaussianNoonSetup.from_lab_units(alpha_deg=30, lambda_um=1, L_cm=10, w_mm=1, N=2)


def fold_angle(a):
    return math.remainder(a, 2 * math.pi)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
