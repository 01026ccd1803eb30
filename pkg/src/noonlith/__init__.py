"""Two-photon and N-photon interference patterns for quantum lithography.

Closed-form double-slit patterns for the two competing pair models, a
quadrature oracle through the full propagation chain, NOON states in
crossing Gaussian beams, and Monte Carlo exposure-time scaling.
"""

from .biphoton import (
    BiphotonSlitState,
    DetectionAmplitude,
    PumpPhaseMatchProfiles,
    default_profiles,
    detection_amplitude,
    figure_a1_panel,
    fresnel_propagator,
    gaussian_profiles,
    make_profiles,
    propagate_numeric,
    slit_amplitudes,
)
from .errors import ExposureBudgetError, MemoryBudgetError, NonConvergenceError, SymmetryError
from .exposure import (
    ExposureConfig,
    ExposureResult,
    Fringe,
    ScalingFit,
    fit_scaling,
    markov_expected_bunches,
    simulate_exposure,
)
from .gaussian import EnvelopeForm, FringeScan, GaussianNoonSetup, cubic_term_magnitude, scan
from .geometry import (
    CoincidenceMap,
    DetectorGrid,
    Normalization,
    Pattern1D,
    SlitGeometry,
    count_maxima,
    grid_for_fringes,
)
from .patterns import (
    Model,
    boto_coincidence,
    exposure_scaling_law,
    phase_step,
    single_photon_pattern,
    steuernagel_coincidence,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
