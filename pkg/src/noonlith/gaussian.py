"""NOON states shared between two crossing Gaussian beams.

Two Gaussian beams cross at the origin at half-angle ``alpha_beam`` to the
z axis; their waists sit a distance ``L`` back along each beam. Detectors
lie on the x axis (``y = z = 0``). Two input states are compared:

* ``noon`` -- N photons in one beam or the other, each photon diffracting
  on its own (product of single-photon Gaussian amplitudes);
* ``delta`` -- the counterfactual in which all photons are emitted at the
  same transverse point and stay together.

All probabilities are returned normalized to 1 at the origin; absolute
normalization constants are never computed.

Note that ``alpha_beam`` is the beam half-angle. It has nothing to do with
the ``alpha`` of :class:`noonlith.biphoton.BiphotonSlitState`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

VALIDITY_FRACTION = 0.1


class ParaxialWarning(UserWarning):
    """Detector position violates ``|x sin(alpha)| << L``."""


class EnvelopeForm(str, enum.Enum):
    """How the N-photon NOON envelope depends on ``beta``.

    ``PUBLISHED`` keeps the ``sqrt(beta) / (1 + 1/beta)`` factor exactly as the
    closed form is usually quoted. ``EXACT`` uses ``sqrt(beta) / (1 + beta)``,
    which is what free-space propagation of the waist field gives (see
    :func:`single_beam_envelope_coefficient`).
    """

    PUBLISHED = "published"
    EXACT = "exact"


@dataclass(frozen=True)
class GaussianNoonSetup:
    w: float
    L: float
    alpha_beam: float
    wavelength: float
    N: int = 2

    def __post_init__(self):
        if not (self.w > 0 and self.L > 0 and self.wavelength > 0):
            raise ValueError("w, L and wavelength must be positive")
        if not 0 < self.alpha_beam < math.pi / 2:
            raise ValueError("alpha_beam must lie in (0, pi/2)")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    @classmethod
    def from_lab_units(cls, *, alpha_deg: float, lambda_um: float, L_cm: float, w_mm: float,
                       N: int = 2) -> "GaussianNoonSetup":
        return cls(w=w_mm * 1e-3, L=L_cm * 1e-2, alpha_beam=math.radians(alpha_deg),
                   wavelength=lambda_um * 1e-6, N=N)

    def with_N(self, N: int) -> "GaussianNoonSetup":
        return GaussianNoonSetup(self.w, self.L, self.alpha_beam, self.wavelength, N)

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def beta(self) -> float:
        return self.wavelength**2 * self.L**2 / (math.pi**2 * self.w**4)

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.w**2 / self.wavelength

    @property
    def q(self) -> complex:
        # waist: 1/q = 1/rho - i lambda/(pi w^2) with rho = inf
        return 1 / (-1j * self.wavelength / (math.pi * self.w**2))


def _check_validity(setup: GaussianNoonSetup, *xs) -> None:
    limit = VALIDITY_FRACTION * setup.L
    s = math.sin(setup.alpha_beam)
    for x in xs:
        if np.any(np.abs(np.asarray(x)) * s > limit):
            warnings.warn(f"|x sin(alpha)| exceeds L/{1 / VALIDITY_FRACTION:g}; the expansion in "
                          "x sin(alpha)/L is no longer reliable", ParaxialWarning, stacklevel=3)
            return


def _beta_factor(beta: float, form) -> float:
    form = EnvelopeForm(form)
    if form is EnvelopeForm.PUBLISHED:
        return math.sqrt(beta) / (1 + 1 / beta)
    return math.sqrt(beta) / (1 + beta)


def noon_envelope_coefficient(setup: GaussianNoonSetup, form=EnvelopeForm.PUBLISHED, N: int | None = None) -> float:
    """``A`` in ``exp(-A x^2)`` for N photons of a NOON state at one point."""
    N = setup.N if N is None else N
    c2 = math.cos(setup.alpha_beam) ** 2
    return setup.k * c2 * N * _beta_factor(setup.beta, form) / setup.L


def delta_envelope_coefficient(setup: GaussianNoonSetup, N: int | None = None) -> float:
    """``A`` in ``exp(-A x^2)`` for the delta-correlated state."""
    N = setup.N if N is None else N
    c2 = math.cos(setup.alpha_beam) ** 2
    b = setup.beta
    return setup.k * N**2 * math.sqrt(b) * c2 / (setup.L * (b + N**2))


def single_beam_envelope_coefficient(setup: GaussianNoonSetup) -> float:
    """Intensity envelope coefficient of one beam after free propagation over ``L``.

    From ``exp(-i k r^2 / 2(q + L))``: ``|psi|^2 ~ exp(-k z_R r^2 / (L^2 + z_R^2))``,
    i.e. ``k sqrt(beta) / (L (1 + beta))`` along the beam's own transverse axis.
    """
    zr = setup.rayleigh_range
    return setup.k * zr / (setup.L**2 + zr**2)


def cubic_phase_coefficient(setup: GaussianNoonSetup, N: int | None = None) -> float:
    """Coefficient of ``x^3`` in the NOON cosine argument."""
    N = setup.N if N is None else N
    a = setup.alpha_beam
    return setup.k * math.cos(a) ** 2 * math.sin(a) * N / (2 * setup.L**2 * (1 + 1 / setup.beta))


def noon_same_point_probability(setup: GaussianNoonSetup, x, *, include_cubic: bool = True,
                                envelope=EnvelopeForm.PUBLISHED):
    """All N photons of the NOON state detected at ``x``; 1 at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    _check_validity(setup, x)
    N = setup.N
    arg = setup.k * math.sin(setup.alpha_beam) * N * x
    if include_cubic:
        arg = arg - cubic_phase_coefficient(setup) * x**3
    return np.exp(-noon_envelope_coefficient(setup, envelope) * x**2) * np.cos(arg) ** 2


def noon_pair_coincidence(setup: GaussianNoonSetup, x1, x2, *, envelope=EnvelopeForm.PUBLISHED):
    """Two-photon NOON coincidence at ``(x1, x2)`` with the cubic term dropped."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    _check_validity(setup, x1, x2)
    a1 = noon_envelope_coefficient(setup, envelope, N=1)
    return np.exp(-a1 * (x1**2 + x2**2)) * np.cos(setup.k * math.sin(setup.alpha_beam) * (x1 + x2)) ** 2


def delta_state_probability(setup: GaussianNoonSetup, x):
    """All N photons of the delta-correlated state detected at ``x``; 1 at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    _check_validity(setup, x)
    arg = setup.k * math.sin(setup.alpha_beam) * setup.N * x
    return np.exp(-delta_envelope_coefficient(setup) * x**2) * np.cos(arg) ** 2


def delta_pair_coincidence(setup: GaussianNoonSetup, x1, x2):
    """Pair coincidence for the delta-correlated state; a function of ``x1 + x2`` only."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    _check_validity(setup, x1, x2)
    u = x1 + x2
    return (np.exp(-delta_envelope_coefficient(setup, N=2) / 4 * u**2)
            * np.cos(setup.k * math.sin(setup.alpha_beam) * u) ** 2)


@dataclass(frozen=True)
class FringeScan:
    positions: np.ndarray
    values: np.ndarray
    envelope: np.ndarray


def scan(setup: GaussianNoonSetup, x, *, model: str = "noon", include_cubic: bool = True,
         envelope=EnvelopeForm.PUBLISHED) -> FringeScan:
    """Same-point N-photon probability and its Gaussian envelope along ``x``."""
    x = np.asarray(x, dtype=float)
    if model == "noon":
        values = noon_same_point_probability(setup, x, include_cubic=include_cubic, envelope=envelope)
        env = np.exp(-noon_envelope_coefficient(setup, envelope) * x**2)
    elif model == "delta":
        values = delta_state_probability(setup, x)
        env = np.exp(-delta_envelope_coefficient(setup) * x**2)
    else:
        raise ValueError(f"model must be 'noon' or 'delta', got {model!r}")
    return FringeScan(x, values, env)


def fringe_period(setup: GaussianNoonSetup) -> float:
    """Expected peak spacing ``lambda / (2 N sin alpha)`` of the linear term."""
    return setup.wavelength / (2 * setup.N * math.sin(setup.alpha_beam))


def peak_positions(x, values) -> np.ndarray:
    """Local maxima located by sign change of the centred difference.

    Each peak is refined with a three-point parabola; returns positions.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    g = np.gradient(v)
    idx = np.flatnonzero((g[1:-2] > 0) & (g[2:-1] <= 0)) + 1
    peaks = []
    for i in idx:
        j = i if v[i] >= v[i + 1] else i + 1
        if j <= 0 or j >= v.size - 1:
            continue
        den = v[j - 1] - 2 * v[j] + v[j + 1]
        off = 0.5 * (v[j - 1] - v[j + 1]) / den if den != 0 else 0.0
        peaks.append(x[j] + off * (x[j + 1] - x[j]))
    return np.unique(np.round(np.asarray(peaks), 15))


def measure_peak_spacing(x, values) -> float:
    """Median gap between adjacent refined maxima."""
    p = peak_positions(x, values)
    if p.size < 2:
        raise ValueError("need at least two maxima to measure a spacing")
    return float(np.median(np.diff(p)))


def measure_envelope_half_width(envelope_fn, x_max: float) -> float:
    """1/e^2 half-width of a decreasing envelope, found by root bracketing on ``(0, x_max]``."""
    target = math.exp(-2)
    return brentq(lambda x: float(envelope_fn(x)) - target, 0.0, x_max, xtol=1e-16, rtol=1e-13)


@dataclass(frozen=True)
class VisibilityConditions:
    x_low: float
    x_high: float
    always_satisfied: bool
    angle_flag: bool

    def satisfied(self, x) -> np.ndarray:
        """True where the cosine oscillates faster than the envelope decays."""
        x = np.abs(np.asarray(x, dtype=float))
        return (x < self.x_low) | (x > self.x_high)


def visibility_conditions(setup: GaussianNoonSetup) -> VisibilityConditions:
    """Thresholds for visible fringes.

    Fringes are visible below ``x_low = (1 + 1/beta) sin(a)/cos^2(a) pi w^2 / lambda``
    (linear phase beats the envelope exponent) or above
    ``x_high = 2 pi w^2 / (lambda sin a)`` (the published cubic-phase threshold;
    equating the cubic coefficient of :func:`cubic_term_magnitude` with the
    envelope exponent instead gives ``beta * x_high``).
    ``angle_flag`` is the rule of thumb ``alpha > pi/4``; ``always_satisfied``
    is the exact statement ``x_low >= x_high``, which also depends on ``beta``.
    """
    a = setup.alpha_beam
    pw = math.pi * setup.w**2 / setup.wavelength
    x_low = (1 + 1 / setup.beta) * math.sin(a) / math.cos(a) ** 2 * pw
    x_high = 2 * pw / math.sin(a)
    return VisibilityConditions(x_low, x_high, x_low >= x_high, a > math.pi / 4)


@dataclass(frozen=True)
class CubicTermReport:
    linear_coeff: float
    cubic_coeff: float
    ratio: float
    term_ratio: float


def cubic_term_magnitude(setup: GaussianNoonSetup, x: float) -> CubicTermReport:
    """Compare the ``x/lambda`` and ``(x/lambda)^3`` terms of the NOON cosine argument.

    ``ratio`` compares the two prefactors (independent of ``x``);
    ``term_ratio`` compares the two terms themselves at ``x`` and grows as
    ``1/x^2`` when ``x`` shrinks.
    """
    a = setup.alpha_beam
    N = setup.N
    lam = setup.wavelength
    linear = 2 * math.pi * math.sin(a) * N
    cubic = 2 * math.pi * math.cos(a) ** 2 * math.sin(a) * N / (2 * (1 + 1 / setup.beta) * setup.L**2 / lam**2)
    ratio = linear / cubic
    u = abs(x) / lam
    term_ratio = math.inf if u == 0 else ratio / u**2
    return CubicTermReport(linear, cubic, ratio, term_ratio)
