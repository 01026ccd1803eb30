import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noonlith.biphoton import (
    FIGURE_A1_PARAMS,
    BiphotonSlitState,
    amplitudes_from_params,
    default_profiles,
    detection_amplitude,
    figure_a1_panel,
    fresnel_propagator,
    fresnel_transfer,
    gaussian_profiles,
    make_profiles,
    params_from_amplitudes,
    propagate_numeric,
    slit_amplitudes,
    worker_count,
)
from noonlith.errors import MemoryBudgetError, NonConvergenceError, SymmetryError
from noonlith.geometry import Normalization, SlitGeometry, grid_for_fringes, normalize
from noonlith.patterns import phase_step, steuernagel_coincidence
from noonlith.quadrature import panel_rule

LAM = 1e-6
K = 2 * math.pi / LAM


def gaussian_after(x, z, w0, k=K):
    """exp(-x'^2/w0^2) pushed through the paraxial kernel, by the Gaussian integral."""
    a = 1 / w0**2 - 1j * k / (2 * z)
    b = -1j * k * np.asarray(x) / z
    c = 1j * k * np.asarray(x) ** 2 / (2 * z)
    lam = 2 * math.pi / k
    return cmath.sqrt(-1j / (lam * z)) * np.sqrt(math.pi / a) * np.exp(b**2 / (4 * a) + c)


# --- propagator -------------------------------------------------------------

def test_propagator_rejects_nonpositive_distance():
    for dz in (0.0, -1.0):
        with pytest.raises(ValueError):
            fresnel_propagator(0.0, 0.0, dz, K)


@given(st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3), st.floats(1e-3, 1.0))
def test_kernel_modulus_and_on_axis_phase(x, y, dz):
    h = fresnel_propagator(x, y, dz, K)
    assert math.isclose(abs(h) ** 2, 1 / (LAM * dz), rel_tol=1e-12)
    h0 = fresnel_propagator(x, x, dz, K)
    assert math.isclose(cmath.phase(h0), -math.pi / 4, abs_tol=1e-14)


@given(st.floats(2e-3, 0.05), st.floats(10e-6, 40e-6))
def test_kernel_quadrature_matches_gaussian_integral(z, w0):
    xs, ws = panel_rule(-7 * w0, 7 * w0, 16, 32)
    x_out = np.linspace(-3e-4, 3e-4, 7)
    num = (fresnel_propagator(x_out[:, None], xs[None, :], z, K) * ws) @ np.exp(-xs**2 / w0**2)
    ref = gaussian_after(x_out, z, w0)
    assert np.max(np.abs(num - ref)) <= 1e-9 * np.max(np.abs(ref))


@given(st.floats(1e-3, 0.03), st.floats(1e-3, 0.03))
def test_semigroup_property(dz1, dz2):
    # analytic field after dz1, then kernel quadrature for dz2, against the analytic field after dz1 + dz2
    w0 = 20e-6
    zr = math.pi * w0**2 / LAM
    half = 6 * w0 * math.hypot(1, dz1 / zr)
    # quadratic kernel phase across the window, in cycles; keep ~2 cycles per 32-node panel
    cycles = K * (2 * half) ** 2 / (2 * dz2) / (2 * math.pi)
    y, wy = panel_rule(-half, half, max(16, int(cycles / 2)), 32)
    mid = gaussian_after(y, dz1, w0)
    x_out = np.linspace(-1e-4, 1e-4, 5)
    two = (fresnel_propagator(x_out[:, None], y[None, :], dz2, K) * wy) @ mid
    one = gaussian_after(x_out, dz1 + dz2, w0)
    assert np.max(np.abs(two - one)) <= 1e-6 * np.max(np.abs(one))


def test_transfer_function_matches_kernel_via_fft():
    # propagate a Gaussian with the spectral transfer function and compare with the Gaussian integral
    w0, z = 15e-6, 0.01
    n, span = 1 << 14, 4e-3
    x = (np.arange(n) - n // 2) * (span / n)
    kx = 2 * math.pi * np.fft.fftfreq(n, d=span / n)
    # FFT uses exp(-i kx x) on the forward transform, matching the convention in the docstring
    out = np.fft.ifft(np.fft.fft(np.exp(-x**2 / w0**2)) * fresnel_transfer(kx, z, K))
    sel = np.abs(x) < 3e-4
    ref = gaussian_after(x[sel], z, w0)
    assert np.max(np.abs(out[sel] - ref)) <= 1e-9 * np.max(np.abs(ref))


# --- state parameterization -------------------------------------------------

alphas = st.floats(0.0, 2 * math.pi, exclude_max=True)
phis = st.floats(0.0, 2 * math.pi, exclude_max=True)


@given(st.floats(1e-6, 2 * math.pi - 1e-6), phis)
def test_params_round_trip(alpha, phi):
    a2, p2 = params_from_amplitudes(*amplitudes_from_params(alpha, phi))
    assert math.isclose(a2, alpha, abs_tol=1e-12)
    assert abs(cmath.exp(1j * p2) - cmath.exp(1j * phi)) <= 1e-12


@given(alphas, phis)
def test_from_params_keeps_params(alpha, phi):
    s = BiphotonSlitState.from_params(alpha, phi)
    assert math.isclose(s.alpha, alpha, abs_tol=1e-12)
    assert abs(s.c11 - cmath.exp(1j * phi) * math.sin(alpha / 2)) < 1e-15
    assert abs(abs(s.c11) ** 2 + abs(s.c12) ** 2 - 1) < 1e-12


@given(alphas, phis, st.floats(0, 2 * math.pi), st.floats(0.1, 10))
def test_global_phase_and_scale_do_not_change_the_map(alpha, phi, gamma, scale):
    geom = SlitGeometry.from_wavelength(100e-6, 0.1, LAM)
    grid = grid_for_fringes(geom, 21, 3.0)
    c11, c12 = amplitudes_from_params(alpha, phi)
    g = scale * cmath.exp(1j * gamma)
    raw = BiphotonSlitState.from_raw(g * c11, g * c12, g * c12, g * c11)
    ref = detection_amplitude(BiphotonSlitState.from_params(alpha, phi), geom).coincidence_map(grid)
    got = detection_amplitude(raw, geom).coincidence_map(grid)
    assert np.max(np.abs(got.values - ref.values)) <= 1e-9
    assert 0 <= raw.alpha <= math.pi + 1e-12


def test_from_raw_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        BiphotonSlitState.from_raw(1, 0.5, 0.2, 1)
    with pytest.raises(ValueError):
        BiphotonSlitState.from_raw(0, 0, 0, 0)


# --- closed-form detection amplitude ---------------------------------------

def explicit_map(alpha, phi, theta, s):
    # point slits at +-d/2: h(x, +-d/2) ~ exp(-+ i u) with u = k d x / (2R), common factors dropped
    c11, c12 = amplitudes_from_params(alpha, phi)
    u = theta * s[:, None]
    v = theta * s[None, :]
    p = np.abs(c11 * np.cos(u + v) + c12 * np.cos(u - v)) ** 2
    return p / p.max()


@given(alphas, phis)
def test_detection_amplitude_matches_explicit_phase_form(alpha, phi):
    geom = SlitGeometry.from_wavelength(100e-6, 0.1, LAM)
    grid = grid_for_fringes(geom, 31, 4.5)
    got = detection_amplitude(BiphotonSlitState.from_params(alpha, phi), geom).coincidence_map(grid)
    ref = explicit_map(alpha, phi, phase_step(geom, grid), grid.indices.astype(float))
    assert np.max(np.abs(got.values - ref)) <= 1e-9


@given(alphas, phis, st.floats(-3e-3, 3e-3), st.floats(-3e-3, 3e-3))
def test_amplitude_exchange_symmetry(alpha, phi, x1, x2):
    geom = SlitGeometry.from_wavelength(100e-6, 0.1, LAM)
    psi = detection_amplitude(BiphotonSlitState.from_params(alpha, phi), geom)
    scale = 2 / (LAM * geom.R)  # bound on |psi|
    assert abs(psi(x1, x2) - psi(x2, x1)) <= 1e-12 * scale


def test_noon_state_reproduces_steuernagel_map(geom, grid101):
    noon = figure_a1_panel("a", geom, grid101)
    assert np.max(np.abs(noon.values - steuernagel_coincidence(geom, grid101).values)) <= 1e-9


def test_panel_e_is_product_and_panel_d_is_flat(geom, grid101):
    th = phase_step(geom, grid101)
    s = grid101.indices
    e = figure_a1_panel("e", geom, grid101).values
    assert np.max(np.abs(e - np.outer(np.cos(th * s) ** 2, np.cos(th * s) ** 2))) <= 1e-9
    d = figure_a1_panel("d", geom, grid101)
    assert np.var(d.diagonal) < 1e-12 * d.values.max()


def test_all_panels_available(geom, grid101):
    assert sorted(FIGURE_A1_PARAMS) == list("abcdef")
    for p in FIGURE_A1_PARAMS:
        m = figure_a1_panel(p, geom, grid101, Normalization.UNIT_SUM)
        assert abs(m.values.sum() - 1) < 1e-12
        assert m.meta["panel"] == p
    with pytest.raises(ValueError):
        figure_a1_panel("g", geom, grid101)


def test_slit_envelope_option(geom, grid101):
    st_ = BiphotonSlitState.from_params(math.pi / 3, 0.4)
    plain = detection_amplitude(st_, geom).on_grid(grid101)
    env = detection_amplitude(st_, geom, envelope=True).on_grid(grid101)
    x = grid101.positions
    f = np.sinc(geom.k * geom.a * x / (2 * geom.R) / math.pi)
    assert np.allclose(env, plain * np.outer(f, f), rtol=1e-13, atol=0)


# --- slit amplitudes from crystal profiles --------------------------------

def test_gaussian_profiles_match_closed_form_alpha(geom):
    d = geom.d
    for w, sig in [(5 * d, d / 10), (d, d), (0.8 * d, 1.3 * d)]:
        state = slit_amplitudes(gaussian_profiles(w, sig), geom)
        # separable Gaussians: c11/c12 = exp(-d^2/4 (1/w^2 - 1/sigma^2))
        ratio = math.exp(-d**2 / 4 * (1 / w**2 - 1 / sig**2))
        assert math.isclose(state.alpha, 2 * math.atan(ratio), abs_tol=1e-9)
        assert abs(state.phi) < 1e-9 or abs(state.phi - 2 * math.pi) < 1e-9


@given(st.floats(2e-4, 5e-3), st.floats(2e-4, 5e-3))
def test_symmetry_theorem_sinc_profiles(pump_waist, crystal_length):
    geom = SlitGeometry.from_wavelength(100e-6, 0.1, LAM, a=2e-6)
    s = slit_amplitudes(default_profiles(pump_waist, crystal_length, geom.k), geom)
    scale = np.max(np.abs(s.amplitudes))
    assert abs(s.c11 - s.c22) <= 1e-9 * scale
    assert abs(s.c12 - s.c21) <= 1e-9 * scale


def test_short_crystal_approaches_noon(geom):
    prev = None
    for L in (1e-3, 1e-4, 1e-5):
        s = slit_amplitudes(default_profiles(1e-3, L, geom.k), geom)
        dist = abs(abs(s.c12) / math.hypot(abs(s.c11), abs(s.c12)))
        if prev is not None:
            assert dist < prev
        prev = dist
    assert prev < 1e-3


def test_make_profiles_names(geom):
    assert make_profiles("noon", d=geom.d).support.sum_half_width == pytest.approx(12 / (5 * geom.d))
    assert "sinc" in make_profiles("sinc", k=geom.k, pump_waist=1e-3, crystal_length=1e-3).label
    with pytest.raises(ValueError):
        make_profiles("sinc", pump_waist=1e-3, crystal_length=1e-3)
    with pytest.raises(ValueError):
        make_profiles("nope")


# --- numerical oracle -------------------------------------------------------

def _closed(alpha, geom, grid, envelope=False):
    amp = detection_amplitude(BiphotonSlitState.from_params(alpha, 0.0), geom, envelope=envelope)
    return amp.coincidence_map(grid, Normalization.UNIT_SUM).values


@pytest.fixture
def grid31(geom):
    return grid_for_fringes(geom, 31, 4.5)


@pytest.mark.parametrize("prof, alpha", [
    (lambda d: gaussian_profiles(5 * d, d / 10), math.pi),
    (lambda d: gaussian_profiles(d, d), math.pi / 2),
])
def test_oracle_matches_closed_form(geom, grid31, prof, alpha):
    num = propagate_numeric(prof(geom.d), geom, 0.0, geom.R, grid31)
    assert np.abs(num.values - _closed(alpha, geom, grid31)).sum() <= 0.02
    # with the finite-slit envelope included the remaining difference is quadrature-level
    assert np.abs(num.values - _closed(alpha, geom, grid31, envelope=True)).sum() <= 1e-3


def test_oracle_is_insensitive_to_slit_refinement(geom, grid31):
    prof = gaussian_profiles(5 * geom.d, geom.d / 10)
    a = propagate_numeric(prof, geom, 0.0, geom.R, grid31, slit_order=8)
    b = propagate_numeric(prof, geom, 0.0, geom.R, grid31, slit_order=12, slit_panels=2)
    assert np.abs(a.values - b.values).sum() <= 1e-6


def test_oracle_is_insensitive_to_doubling_slit_width(geom, grid31):
    prof = gaussian_profiles(5 * geom.d, geom.d / 10)
    wide = SlitGeometry(geom.d, 2 * geom.a, geom.R, geom.k)
    a = propagate_numeric(prof, geom, 0.0, geom.R, grid31)
    b = propagate_numeric(prof, wide, 0.0, geom.R, grid31)
    assert np.abs(a.values - b.values).sum() <= 0.01


def test_oracle_short_crystal_to_slit_distance_is_continuous(geom, grid31):
    prof = gaussian_profiles(5 * geom.d, geom.d / 10)
    a = propagate_numeric(prof, geom, 0.0, geom.R, grid31)
    b = propagate_numeric(prof, geom, 1e-6, geom.R, grid31)
    assert np.abs(a.values - b.values).sum() <= 1e-6


def test_oracle_errors(geom, grid31):
    prof = gaussian_profiles(5 * geom.d, geom.d / 10)
    point = SlitGeometry(geom.d, 0.0, geom.R, geom.k)
    with pytest.raises(ValueError):
        propagate_numeric(prof, point, 0.0, geom.R, grid31)
    with pytest.raises(ValueError):
        propagate_numeric(prof, geom, -1.0, geom.R, grid31)
    with pytest.raises(MemoryBudgetError):
        propagate_numeric(prof, geom, 0.0, geom.R, grid31, memory_budget=1e3)
    with pytest.raises(NonConvergenceError):
        propagate_numeric(prof, geom, 0.0, geom.R, grid31, max_doublings=0)


def test_oracle_thread_count_does_not_change_result(geom, grid31):
    prof = gaussian_profiles(geom.d, geom.d)
    a = propagate_numeric(prof, geom, 0.0, geom.R, grid31, threads=1)
    b = propagate_numeric(prof, geom, 0.0, geom.R, grid31, threads=3)
    assert np.array_equal(a.values, b.values)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("NOONLITH_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(5) == 5
    monkeypatch.setenv("NOONLITH_THREADS", "")
    assert worker_count() >= 1
