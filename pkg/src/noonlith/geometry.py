"""Slit/detector geometry and the normalized pattern containers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

PARAXIAL_RATIO = 100.0


class Normalization(str, enum.Enum):
    UNIT_MAX = "unit_max"
    UNIT_SUM = "unit_sum"


def _as_norm(norm) -> Normalization:
    if isinstance(norm, Normalization):
        return norm
    key = str(norm).lower().replace("-", "_")
    aliases = {"unitmax": "unit_max", "max": "unit_max", "unitsum": "unit_sum", "sum": "unit_sum"}
    return Normalization(aliases.get(key, key))


def normalize(values: np.ndarray, norm=Normalization.UNIT_MAX) -> np.ndarray:
    """Scale non-negative ``values`` to unit maximum or unit sum."""
    norm = _as_norm(norm)
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise ValueError("pattern values must be non-negative")
    scale = values.max() if norm is Normalization.UNIT_MAX else values.sum()
    if scale <= 0:
        raise ValueError("cannot normalize an all-zero pattern")
    return values / scale


@dataclass(frozen=True)
class SlitGeometry:
    """Double slit: separation ``d``, slit width ``a``, screen distance ``R``, wavenumber ``k``.

    All lengths in meters, ``k`` in rad/m. ``a == 0`` denotes ideal point slits.
    """

    d: float
    a: float
    R: float
    k: float

    def __post_init__(self):
        if not (self.d > 0 and self.R > 0 and self.k > 0):
            raise ValueError("d, R and k must be positive")
        if not (0 <= self.a < self.d):
            raise ValueError("slit width must satisfy 0 <= a < d")

    @classmethod
    def from_wavelength(cls, d: float, R: float, wavelength: float, a: float = 0.0) -> "SlitGeometry":
        return cls(d=d, a=a, R=R, k=2 * math.pi / wavelength)

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.k

    @property
    def paraxial_warning(self) -> bool:
        # set when R < 100 d; the small-angle forms are then questionable
        return self.R < PARAXIAL_RATIO * self.d

    @property
    def fringe_spacing(self) -> float:
        """Single-photon peak separation on the screen, lambda R / d."""
        return self.wavelength * self.R / self.d


@dataclass(frozen=True)
class DetectorGrid:
    """``S + 1`` detectors of width ``b`` centred at ``x = s b``, ``s = -S/2 .. S/2``."""

    S: int
    b: float

    def __post_init__(self):
        if int(self.S) != self.S or self.S < 0 or self.S % 2:
            raise ValueError(f"S must be an even non-negative integer, got {self.S!r}")
        if not self.b > 0:
            raise ValueError("detector width b must be positive")

    @classmethod
    def with_detectors(cls, count: int, b: float) -> "DetectorGrid":
        return cls(S=count - 1, b=b)

    @property
    def size(self) -> int:
        return self.S + 1

    @property
    def indices(self) -> np.ndarray:
        half = self.S // 2
        return np.arange(-half, half + 1)

    @property
    def positions(self) -> np.ndarray:
        return self.indices * self.b


def grid_for_fringes(geom: SlitGeometry, detectors: int, fringes: float) -> DetectorGrid:
    """Detector grid whose ``detectors`` cells span ``fringes`` single-photon fringes.

    Solves ``theta * (S + 1) = fringes * pi`` for the detector width.
    """
    theta = fringes * math.pi / detectors
    b = 2 * geom.R * theta / (geom.k * geom.d)
    return DetectorGrid.with_detectors(detectors, b)


@dataclass(frozen=True)
class Pattern1D:
    values: np.ndarray
    normalization: Normalization = Normalization.UNIT_MAX

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "normalization", _as_norm(self.normalization))
        if self.values.ndim != 1:
            raise ValueError("Pattern1D expects a 1-D array")
        if np.any(self.values < 0):
            raise ValueError("pattern values must be non-negative")

    @property
    def indices(self) -> np.ndarray:
        half = (self.values.size - 1) // 2
        return np.arange(-half, half + 1)


@dataclass(frozen=True)
class CoincidenceMap:
    """Joint detection probabilities indexed ``values[s_index, t_index]``."""

    values: np.ndarray
    normalization: Normalization = Normalization.UNIT_MAX
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "normalization", _as_norm(self.normalization))
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("CoincidenceMap expects a square matrix")
        if np.any(v < 0):
            raise ValueError("coincidence values must be non-negative")

    @property
    def indices(self) -> np.ndarray:
        half = (self.values.shape[0] - 1) // 2
        return np.arange(-half, half + 1)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()

    def renormalized(self, norm) -> "CoincidenceMap":
        norm = _as_norm(norm)
        return CoincidenceMap(normalize(self.values, norm), norm, dict(self.meta))


def count_maxima(values, atol: float = 1e-12) -> int:
    """Count interior local maxima of a sampled curve.

    A point is a maximum when it is strictly above both neighbours. Runs of
    equal values (within ``atol``) are collapsed first, so a plateau counts
    once. End points never count.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0
    keep = np.ones(v.size, dtype=bool)
    keep[1:] = np.abs(np.diff(v)) > atol
    runs = v[keep]
    if runs.size < 3:
        return 0
    mid = runs[1:-1]
    return int(np.count_nonzero((mid > runs[:-2] + atol) & (mid > runs[2:] + atol)))
