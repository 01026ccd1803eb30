"""Closed-form double-slit detection patterns for the two competing models.

The "Boto" model keeps the photons of a bunch together after the slit, so
two-photon events only happen on the diagonal ``s == t``.  The "Steuernagel"
model lets each photon diffract on its own; the pair probability then
depends only on ``s + t``.  Both agree on the diagonal.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .geometry import (
    CoincidenceMap,
    DetectorGrid,
    Normalization,
    Pattern1D,
    SlitGeometry,
    normalize,
)


class Model(str, enum.Enum):
    BOTO = "boto"
    STEUERNAGEL = "steuernagel"


def as_model(model) -> Model:
    return model if isinstance(model, Model) else Model(str(model).lower())


def phase_step(geom: SlitGeometry, grid: DetectorGrid) -> float:
    """Phase per detector index in the single-photon cosine, ``k d b / (2 R)``."""
    return geom.k * geom.d * grid.b / (2.0 * geom.R)


def fringe_phase_step(fringes: float, detectors: int) -> float:
    """Phase step for which ``detectors`` cells span ``fringes`` fringes."""
    return fringes * math.pi / detectors


def single_photon_pattern(geom: SlitGeometry, grid: DetectorGrid, norm=Normalization.UNIT_MAX) -> Pattern1D:
    """``cos^2(theta s)``; the slit-shape envelope is left out on purpose."""
    theta = phase_step(geom, grid)
    raw = np.cos(theta * grid.indices) ** 2
    return Pattern1D(normalize(raw, norm), norm)


def raw_boto(theta: float, s: np.ndarray) -> np.ndarray:
    ss, tt = np.meshgrid(s, s, indexing="ij")
    return np.where(ss == tt, np.cos(2.0 * theta * ss) ** 2, 0.0)


def raw_steuernagel(theta: float, s: np.ndarray) -> np.ndarray:
    ss, tt = np.meshgrid(s, s, indexing="ij")
    return np.cos(theta * (ss + tt)) ** 2


def boto_coincidence(geom: SlitGeometry, grid: DetectorGrid, norm=Normalization.UNIT_MAX) -> CoincidenceMap:
    """``cos^2(2 theta s) delta_st``: photons of a pair always share a detector."""
    raw = raw_boto(phase_step(geom, grid), grid.indices)
    return CoincidenceMap(normalize(raw, norm), norm, {"model": "boto"})


def steuernagel_coincidence(geom: SlitGeometry, grid: DetectorGrid, norm=Normalization.UNIT_MAX) -> CoincidenceMap:
    """``cos^2(theta (s + t))``: independent diffraction, fringes along anti-diagonals."""
    raw = raw_steuernagel(phase_step(geom, grid), grid.indices)
    return CoincidenceMap(normalize(raw, norm), norm, {"model": "steuernagel"})


def exposure_scaling_law(model, S: int, N: int) -> float:
    """Relative exposure time: ``S`` for Boto, ``S**N`` for Steuernagel.

    ``S`` is the pixel count. Only ratios of the returned values are meaningful.
    """
    model = as_model(model)
    if S < 1 or N < 1:
        raise ValueError("S and N must both be >= 1")
    if model is Model.BOTO:
        return float(S)
    return float(S) ** N
