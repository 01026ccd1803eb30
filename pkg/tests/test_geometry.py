import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noonlith.geometry import (
    CoincidenceMap,
    DetectorGrid,
    Normalization,
    Pattern1D,
    SlitGeometry,
    count_maxima,
    grid_for_fringes,
    normalize,
)
from noonlith.patterns import phase_step


def test_geometry_validation():
    with pytest.raises(ValueError):
        SlitGeometry(d=0, a=0, R=1, k=1)
    with pytest.raises(ValueError):
        SlitGeometry(d=1e-4, a=1e-4, R=1, k=1)
    with pytest.raises(ValueError):
        SlitGeometry(d=1e-4, a=-1e-6, R=1, k=1)
    assert SlitGeometry(d=1e-4, a=0.0, R=1, k=1).a == 0.0


def test_paraxial_flag():
    assert SlitGeometry(d=1e-3, a=0, R=0.05, k=1).paraxial_warning
    assert not SlitGeometry(d=1e-3, a=0, R=0.5, k=1).paraxial_warning


def test_grid_validation():
    with pytest.raises(ValueError):
        DetectorGrid(S=3, b=1e-6)
    with pytest.raises(ValueError):
        DetectorGrid(S=4, b=0.0)
    g = DetectorGrid(S=4, b=2.0)
    assert g.indices.tolist() == [-2, -1, 0, 1, 2]
    assert g.positions.tolist() == [-4.0, -2.0, 0.0, 2.0, 4.0]


@given(st.integers(1, 200).map(lambda n: 2 * n + 1), st.floats(0.5, 20))
def test_grid_for_fringes_identity(detectors, fringes):
    geom = SlitGeometry.from_wavelength(1e-4, 0.2, 8e-7)
    grid = grid_for_fringes(geom, detectors, fringes)
    assert grid.size == detectors
    assert math.isclose(phase_step(geom, grid) * detectors, fringes * math.pi, rel_tol=1e-12)


def test_normalize_modes():
    v = np.array([1.0, 3.0, 4.0])
    assert normalize(v, "unit_max").max() == 1.0
    assert math.isclose(normalize(v, Normalization.UNIT_SUM).sum(), 1.0)
    with pytest.raises(ValueError):
        normalize(np.zeros(3))
    with pytest.raises(ValueError):
        normalize(np.array([1.0, -1.0]))


def test_containers_reject_bad_input():
    with pytest.raises(ValueError):
        Pattern1D(np.array([[1.0]]))
    with pytest.raises(ValueError):
        CoincidenceMap(np.ones((2, 3)))
    with pytest.raises(ValueError):
        CoincidenceMap(-np.ones((2, 2)))


def _brute_maxima(v):
    # independent reading of the rule: collapse equal runs, then compare neighbours
    runs = [v[0]]
    for x in v[1:]:
        if abs(x - runs[-1]) > 1e-12:
            runs.append(x)
    return sum(1 for i in range(1, len(runs) - 1) if runs[i] > runs[i - 1] and runs[i] > runs[i + 1])


@given(st.lists(st.integers(0, 4).map(float), min_size=0, max_size=40))
def test_count_maxima_matches_brute_force(vals):
    if len(vals) == 0:
        return
    assert count_maxima(vals) == _brute_maxima(vals)


def test_count_maxima_plateau_and_ends():
    assert count_maxima([0, 1, 1, 1, 0]) == 1
    assert count_maxima([2, 1, 0, 1, 2]) == 0
    assert count_maxima([0, 1]) == 0
