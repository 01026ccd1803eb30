"""Registry of oracle-equivalence and invariant checks run by ``noonlith validate``.

Each check returns ``(ok, detail)``. Checks marked ``quick`` make up the
``--quick`` subset. :func:`mutation` swaps in deliberately broken model
code so the suite can be shown to catch it.
"""

from __future__ import annotations

import contextlib
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import biphoton, exposure, gaussian, io, patterns
from .geometry import Normalization, SlitGeometry, count_maxima, grid_for_fringes, normalize
from .quadrature import panel_rule

# desk-scale reference geometry: 100 um slits, 1 um light, 10 cm to the screen
REF_D = 100e-6
REF_LAMBDA = 1e-6
REF_R = 0.1
REF_A = REF_D / 50


def reference_geometry(a: float = REF_A) -> SlitGeometry:
    return SlitGeometry.from_wavelength(REF_D, REF_R, REF_LAMBDA, a=a)


def reference_gaussian(N: int = 2) -> gaussian.GaussianNoonSetup:
    return gaussian.GaussianNoonSetup.from_lab_units(alpha_deg=30, lambda_um=1, L_cm=10, w_mm=1, N=N)


@dataclass(frozen=True)
class Check:
    id: str
    description: str
    fn: Callable[[], tuple]
    quick: bool = True


REGISTRY: dict[str, Check] = {}


def check(id_: str, description: str, *, quick: bool = True):
    def deco(fn):
        REGISTRY[id_] = Check(id_, description, fn, quick)
        return fn
    return deco


# --- pattern models ---------------------------------------------------------

def _maps(detectors=101, fringes=4.5, norm=Normalization.UNIT_MAX):
    geom = reference_geometry(a=0.0)
    grid = grid_for_fringes(geom, detectors, fringes)
    return (geom, grid, patterns.single_photon_pattern(geom, grid, norm),
            patterns.boto_coincidence(geom, grid, norm), patterns.steuernagel_coincidence(geom, grid, norm))


@check("PM-fringes", "4.5 fringes: single pattern 4-5 maxima, both diagonals 9")
def _pm_fringes():
    _, _, single, boto, st = _maps()
    ns, nb, nst = count_maxima(single.values), count_maxima(boto.diagonal), count_maxima(st.diagonal)
    return 4 <= ns <= 5 and nb == 9 and nst == 9, f"single={ns} boto={nb} steuernagel={nst}"


@check("PM-diagonal", "Steuernagel diagonal equals Boto diagonal (1e-12)")
def _pm_diagonal():
    _, _, _, boto, st = _maps()
    err = float(np.max(np.abs(boto.diagonal - st.diagonal)))
    return err <= 1e-12, f"max diff {err:.2e}"


@check("PM-exchange", "coincidence maps symmetric under s <-> t")
def _pm_exchange():
    _, _, _, boto, st = _maps()
    err = max(float(np.max(np.abs(m.values - m.values.T))) for m in (boto, st))
    return err <= 1e-12, f"max asymmetry {err:.2e}"


@check("PM-antidiagonal", "Steuernagel map depends only on s + t")
def _pm_antidiagonal():
    _, _, _, _, st = _maps()
    v = st.values
    err = float(np.max(np.abs(v[1:, :-1] - v[:-1, 1:])))
    return err <= 1e-12, f"max |P(s+1,t-1) - P(s,t)| {err:.2e}"


@check("PM-sparsity", "Boto off-diagonal mass is exactly zero")
def _pm_sparsity():
    _, _, _, boto, _ = _maps()
    off = boto.values - np.diag(boto.diagonal)
    return bool(np.all(off == 0)), f"off-diagonal sum {off.sum():.1e}"


@check("PM-normalization", "UnitSum sums to 1 and UnitMax peaks at 1 (1e-12)")
def _pm_normalization():
    errs = []
    for norm in Normalization:
        _, _, single, boto, st = _maps(norm=norm)
        for v in (single.values, boto.values, st.values):
            errs.append(abs((v.sum() if norm is Normalization.UNIT_SUM else v.max()) - 1))
    return max(errs) <= 1e-12, f"max deviation {max(errs):.2e}"


@check("PM-law", "exposure law ratios: 25 (St, S=25), 1e4 (St, S=1e4), 1 (Boto)")
def _pm_law():
    st = patterns.exposure_scaling_law("steuernagel", 25, 3) / patterns.exposure_scaling_law("steuernagel", 25, 2)
    big = patterns.exposure_scaling_law("steuernagel", 10**4, 3) / patterns.exposure_scaling_law("steuernagel", 10**4, 2)
    bo = patterns.exposure_scaling_law("boto", 25, 3) / patterns.exposure_scaling_law("boto", 25, 2)
    return st == 25 and big == 1e4 and bo == 1, f"{st:g} {big:g} {bo:g}"


# --- biphoton propagation ---------------------------------------------------

@check("BP-noon-map", "closed-form NOON amplitude reproduces the Steuernagel map (1e-9)")
def _bp_noon_map():
    geom, grid, _, _, st = _maps()
    amp = biphoton.detection_amplitude(biphoton.BiphotonSlitState.from_params(math.pi, 0.0), geom)
    err = float(np.max(np.abs(amp.coincidence_map(grid).values - st.values)))
    return err <= 1e-9, f"max diff {err:.2e}"


@check("BP-panel-e", "panel (e) equals the independent-slit product cos^2 cos^2 (1e-9)")
def _bp_panel_e():
    geom, grid, *_ = _maps()
    e = biphoton.figure_a1_panel("e", geom, grid)
    th = patterns.phase_step(geom, grid)
    s = grid.indices
    ref = normalize(np.outer(np.cos(th * s) ** 2, np.cos(th * s) ** 2))
    err = float(np.max(np.abs(e.values - ref)))
    return err <= 1e-9, f"max diff {err:.2e}"


@check("BP-panel-d", "panel (d) diagonal is flat (variance < 1e-12 of max)")
def _bp_panel_d():
    geom, grid, *_ = _maps()
    d = biphoton.figure_a1_panel("d", geom, grid)
    var = float(np.var(d.diagonal) / d.values.max())
    return var < 1e-12, f"relative variance {var:.2e}"


@check("BP-symmetry", "default sinc/Gaussian profiles give c11 = c22, c12 = c21 (1e-9)")
def _bp_symmetry():
    geom = reference_geometry()
    prof = biphoton.default_profiles(1e-3, 1e-3, geom.k)
    st = biphoton.slit_amplitudes(prof, geom)
    scale = float(np.max(np.abs(st.amplitudes)))
    e1 = abs(st.c11 - st.c22) / scale
    e2 = abs(st.c12 - st.c21) / scale
    return max(e1, e2) <= 1e-9, f"|c11-c22|={e1:.1e} |c12-c21|={e2:.1e} (relative)"


@check("BP-semigroup", "Fresnel kernel: dz1 then dz2 equals dz1 + dz2 (quadrature)")
def _bp_semigroup():
    k = 2 * math.pi / REF_LAMBDA
    dz1, dz2 = 0.01, 0.015
    x_out = np.linspace(-2e-4, 2e-4, 5)
    # Gaussian-apodized source keeps the intermediate integral absolutely convergent
    w0 = 20e-6
    xs, wxs = panel_rule(-6 * w0, 6 * w0, 8, 32)
    y, wy = panel_rule(-1.5e-3, 1.5e-3, 96, 32)
    src = np.exp(-xs**2 / w0**2)
    mid = (biphoton.fresnel_propagator(y[:, None], xs[None, :], dz1, k) * wxs) @ src
    two = (biphoton.fresnel_propagator(x_out[:, None], y[None, :], dz2, k) * wy) @ mid
    one = (biphoton.fresnel_propagator(x_out[:, None], xs[None, :], dz1 + dz2, k) * wxs) @ src
    err = float(np.max(np.abs(two - one)) / np.max(np.abs(one)))
    return err <= 1e-6, f"relative diff {err:.2e}"


@check("BP-roundtrip", "(alpha, phi) -> amplitudes -> (alpha, phi) round trip")
def _bp_roundtrip():
    worst = 0.0
    for alpha in np.linspace(0.1, 2 * math.pi - 0.1, 7):
        for phi in (0.0, 0.7, 2.0):
            c11, c12 = biphoton.amplitudes_from_params(alpha, phi)
            st = biphoton.BiphotonSlitState.from_raw(c11, c12, c12, c11)
            a2, p2 = st.alpha, st.phi
            # canonical form folds alpha into [0, pi] with phi shifted by pi
            back = biphoton.amplitudes_from_params(a2, p2)
            n = math.sqrt(2 * (abs(c11) ** 2 + abs(c12) ** 2))
            ref = (c11 / n * math.sqrt(2), c12 / n * math.sqrt(2))
            ph = ref[1] / abs(ref[1]) if abs(ref[1]) > 0 else 1
            worst = max(worst, abs(back[0] - ref[0] / ph), abs(back[1] - ref[1] / ph))
    return worst <= 1e-12, f"max amplitude error {worst:.1e}"


def _oracle(profiles, alpha):
    geom = reference_geometry()
    grid = grid_for_fringes(geom, 31, 4.5)
    num = biphoton.propagate_numeric(profiles, geom, 0.0, geom.R, grid)
    cf = biphoton.detection_amplitude(biphoton.BiphotonSlitState.from_params(alpha, 0.0), geom)
    ref = cf.coincidence_map(grid, Normalization.UNIT_SUM).values
    return float(np.abs(num.values - ref).sum())


@check("BP-oracle-noon", "quadrature oracle vs closed form, NOON profiles (2% L1)")
def _bp_oracle_noon():
    err = _oracle(biphoton.gaussian_profiles(5 * REF_D, REF_D / 10), math.pi)
    return err <= 0.02, f"relative L1 {err:.4f}"


@check("BP-oracle-product", "quadrature oracle vs closed form, product profiles (2% L1)")
def _bp_oracle_product():
    err = _oracle(biphoton.gaussian_profiles(REF_D, REF_D), math.pi / 2)
    return err <= 0.02, f"relative L1 {err:.4f}"


# --- Gaussian-beam NOON -----------------------------------------------------

def _measured_spacing_and_width(N):
    setup = reference_gaussian(N)
    period = gaussian.fringe_period(setup)
    x = np.linspace(-12 * period * N, 12 * period * N, 40001)
    v = gaussian.noon_same_point_probability(setup, x, include_cubic=False)
    spacing = gaussian.measure_peak_spacing(x, v)
    peaks = gaussian.peak_positions(x, v)
    pv = gaussian.noon_same_point_probability(setup, peaks, include_cubic=False)
    A = -np.polyfit(peaks**2, np.log(pv), 1)[0]
    return spacing, math.sqrt(2 / A)


@check("GN-spacing", "fringe spacing * N constant over N = 1..4 (0.5%)")
def _gn_spacing():
    vals = [_measured_spacing_and_width(N)[0] * N for N in range(1, 5)]
    spread = (max(vals) - min(vals)) / min(vals)
    return spread <= 5e-3, f"relative spread {spread:.2e}"


@check("GN-width", "envelope width * sqrt(N) constant over N = 1..4 (0.5%)")
def _gn_width():
    vals = [_measured_spacing_and_width(N)[1] * math.sqrt(N) for N in range(1, 5)]
    spread = (max(vals) - min(vals)) / min(vals)
    return spread <= 5e-3, f"relative spread {spread:.2e}"


@check("GN-cubic", "cubic vs linear prefactor ratio within one decade of 1e14")
def _gn_cubic():
    r = gaussian.cubic_term_magnitude(reference_gaussian(2), 1e-4).ratio
    return 1e13 <= r <= 1e15, f"ratio {r:.3e}"


def beta_waist(setup: gaussian.GaussianNoonSetup, beta: float) -> float:
    """Waist ``w`` giving the requested ``beta`` at fixed ``L`` and wavelength."""
    return math.sqrt(setup.wavelength * setup.L / (math.pi * math.sqrt(beta)))


def envelope_w_derivatives(beta: float = 1e4, N: int = 2, rel_step: float = 1e-6):
    base = reference_gaussian(N)
    w = beta_waist(base, beta)
    h = rel_step * w

    def at(wv):
        return gaussian.GaussianNoonSetup(wv, base.L, base.alpha_beam, base.wavelength, N)

    dn = (gaussian.noon_envelope_coefficient(at(w + h)) - gaussian.noon_envelope_coefficient(at(w - h))) / (2 * h)
    dd = (gaussian.delta_envelope_coefficient(at(w + h)) - gaussian.delta_envelope_coefficient(at(w - h))) / (2 * h)
    return dn, dd


@check("GN-discriminate", "d/dw of NOON and delta envelope coefficients differ in sign at beta = 1e4")
def _gn_discriminate():
    dn, dd = envelope_w_derivatives()
    return dn * dd < 0, f"dA_noon/dw={dn:.3e} dA_delta/dw={dd:.3e}"


@check("GN-degenerate", "N = 1: NOON and delta scans coincide (exact envelope, no cubic)")
def _gn_degenerate():
    setup = reference_gaussian(1)
    x = np.linspace(-2e-3, 2e-3, 2001)
    a = gaussian.scan(setup, x, model="noon", include_cubic=False, envelope="exact")
    b = gaussian.scan(setup, x, model="delta")
    err = float(max(np.max(np.abs(a.values - b.values)), np.max(np.abs(a.envelope - b.envelope))))
    return err <= 1e-9, f"max diff {err:.2e}"


# --- exposure simulation ----------------------------------------------------

@check("EX-markov", "Monte Carlo completion within 3 SE of the absorbing-chain value", quick=False)
def _ex_markov():
    worst = 0.0
    for S in (2, 4, 6):
        for N in (1, 2, 3):
            cfg = exposure.ExposureConfig(pixels=S, N=N, trials=1000, seed=11)
            r = exposure.simulate_exposure(cfg)
            exact = exposure.markov_expected_bunches(r.event_probabilities, r.required, 1)
            worst = max(worst, abs(r.mean_bunches - exact) / r.std_error)
    return worst <= 3, f"worst deviation {worst:.2f} SE"


@check("EX-ratio25", "Steuernagel, 25 pixels: mean bunches N=3 / N=2 = 25 +- 15%")
def _ex_ratio25():
    r2 = exposure.simulate_exposure(exposure.ExposureConfig(pixels=25, N=2, trials=200, seed=7))
    r3 = exposure.simulate_exposure(exposure.ExposureConfig(pixels=25, N=3, trials=200, seed=7))
    ratio = r3.mean_bunches / r2.mean_bunches
    return abs(ratio / 25 - 1) <= 0.15, f"ratio {ratio:.2f}"


def scaling_sweep(model, N, pixels, trials=200, seed=3):
    rows = []
    for S in pixels:
        cfg = exposure.ExposureConfig(pixels=S, N=N, model=model, trials=trials, seed=seed)
        rows.append((S, N, exposure.simulate_exposure(cfg)))
    return exposure.fit_scaling(rows)


@check("EX-exponent", "fitted exponent_S: Boto 1, Steuernagel N (+- 0.1)", quick=False)
def _ex_exponent():
    fb = scaling_sweep("boto", 2, (8, 16, 32, 64))
    f2 = scaling_sweep("steuernagel", 2, (4, 6, 8, 12, 16))
    f3 = scaling_sweep("steuernagel", 3, (3, 4, 5, 6, 8))
    ok = abs(fb.exponent_S - 1) <= 0.1 and abs(f2.exponent_S - 2) <= 0.1 and abs(f3.exponent_S - 3) <= 0.1
    return ok, f"boto {fb.exponent_S:.3f}, st N=2 {f2.exponent_S:.3f}, st N=3 {f3.exponent_S:.3f}"


@check("EX-determinism", "same seed gives identical trials regardless of thread count")
def _ex_determinism():
    cfg = exposure.ExposureConfig(pixels=9, N=2, trials=64, seed=5)
    a = exposure.simulate_exposure(cfg, threads=1)
    b = exposure.simulate_exposure(cfg, threads=4)
    return bool(np.array_equal(a.per_trial, b.per_trial)), f"mean {a.mean_bunches:g} vs {b.mean_bunches:g}"


# --- serialization ----------------------------------------------------------

@check("IO-roundtrip", "CSV write-then-read reproduces maps and scans exactly")
def _io_roundtrip():
    rng = np.random.default_rng(0)
    v = rng.random((7, 7)) ** 3
    x = rng.normal(size=11) * 1e-3
    with tempfile.TemporaryDirectory() as tmp:
        io.write_map_csv(Path(tmp) / "m.csv", v)
        _, back = io.read_map_csv(Path(tmp) / "m.csv")
        io.write_scan_csv(Path(tmp) / "s.csv", x, x**2, np.exp(x))
        bx, bp, be = io.read_scan_csv(Path(tmp) / "s.csv")
    ok = np.array_equal(back, v) and np.array_equal(bx, x) and np.array_equal(bp, x**2) and np.array_equal(be, np.exp(x))
    return bool(ok), "bitwise equal" if ok else "mismatch"


@check("IO-pgm", "PGM pixel = round(65535 v / max) on a 3x3 map")
def _io_pgm():
    v = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0, 8.0]])
    with tempfile.TemporaryDirectory() as tmp:
        io.write_pgm(Path(tmp) / "h.pgm", v)
        pix = io.read_pgm(Path(tmp) / "h.pgm")
    expect = np.rint(65535 * v / 8).astype(np.int64).T[::-1, :]
    return bool(np.array_equal(pix, expect)), f"top-left pixel {pix[0, 0]}"


# --- runner -----------------------------------------------------------------

def _steuernagel_difference(theta, s):
    ss, tt = np.meshgrid(s, s, indexing="ij")
    return np.cos(theta * (ss - tt)) ** 2


MUTATIONS = {"steuernagel-difference": (patterns, "raw_steuernagel", _steuernagel_difference)}


@contextlib.contextmanager
def mutation(name: str | None):
    """Temporarily replace a model function with a broken variant."""
    if name is None:
        yield
        return
    try:
        module, attr, bad = MUTATIONS[name]
    except KeyError:
        raise ValueError(f"unknown mutation {name!r}; choose from {sorted(MUTATIONS)}") from None
    good = getattr(module, attr)
    setattr(module, attr, bad)
    try:
        yield
    finally:
        setattr(module, attr, good)


@dataclass(frozen=True)
class Outcome:
    id: str
    ok: bool
    detail: str
    seconds: float


def run_checks(ids=None, *, quick: bool = False, mutate: str | None = None):
    selected = [c for c in REGISTRY.values()
                if (ids is None or c.id in ids) and (not quick or c.quick)]
    if ids is not None:
        unknown = set(ids) - set(REGISTRY)
        if unknown:
            raise ValueError(f"unknown check id(s): {', '.join(sorted(unknown))}")
    out = []
    with mutation(mutate):
        for c in selected:
            t0 = time.perf_counter()
            try:
                ok, detail = c.fn()
            except Exception as exc:  # a crashing check is a failing check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            out.append(Outcome(c.id, bool(ok), detail, time.perf_counter() - t0))
    return out
