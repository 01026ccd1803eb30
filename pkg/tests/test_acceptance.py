"""Acceptance criteria 1-10, each with its runtime bound.

Every criterion prints one PASS/FAIL line (collected into the pytest
terminal summary; ``python tests/test_acceptance.py`` prints them directly).
"""

import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from noonlith import biphoton, exposure, gaussian, io, patterns
from noonlith.geometry import Normalization, SlitGeometry, count_maxima, grid_for_fringes

RESULTS = []

D, LAM, R = 100e-6, 1e-6, 0.1


def _geom(a=D / 50):
    return SlitGeometry.from_wavelength(D, R, LAM, a=a)


def _reference_setup(N=2, w=None):
    s = gaussian.GaussianNoonSetup.from_lab_units(alpha_deg=30, lambda_um=1, L_cm=10, w_mm=1, N=N)
    return s if w is None else gaussian.GaussianNoonSetup(w, s.L, s.alpha_beam, s.wavelength, N)


def criterion_1():
    geom = _geom()
    grid = grid_for_fringes(geom, 101, 4.5)
    single = count_maxima(patterns.single_photon_pattern(geom, grid).values)
    st = count_maxima(patterns.steuernagel_coincidence(geom, grid).diagonal)
    bo = count_maxima(patterns.boto_coincidence(geom, grid).diagonal)
    return 4 <= single <= 5 and st == 9 and bo == 9, f"single={single} steuernagel_diag={st} boto_diag={bo}", 1.0


def criterion_2():
    geom = _geom()
    worst = 0.0
    for detectors, fringes in [(101, 4.5), (31, 4.5), (201, 7.25), (11, 1.0)]:
        grid = grid_for_fringes(geom, detectors, fringes)
        for norm in Normalization:
            st = patterns.steuernagel_coincidence(geom, grid, norm).diagonal
            bo = patterns.boto_coincidence(geom, grid, norm).diagonal
            # matched normalization: both diagonals scaled to unit maximum
            worst = max(worst, float(np.max(np.abs(st / st.max() - bo / bo.max()))))
    return worst <= 1e-12, f"max |diff| = {worst:.2e}", 1.0


def criterion_3():
    geom = _geom()
    grid = grid_for_fringes(geom, 101, 4.5)
    panels = {p: biphoton.figure_a1_panel(p, geom, grid) for p in "abcdef"}
    theta = geom.k * geom.d * grid.b / (2 * geom.R)
    c = np.cos(theta * grid.indices) ** 2
    product = np.outer(c, c)
    e_err = float(np.max(np.abs(panels["e"].values - product / product.max())))
    d_var = float(np.var(panels["d"].diagonal) / panels["d"].values.max())
    ok = len(panels) == 6 and e_err <= 1e-9 and d_var < 1e-12
    return ok, f"6 panels; panel e max diff {e_err:.2e}; panel d diagonal variance/max {d_var:.2e}", 10.0


def criterion_4():
    geom = _geom()
    grid = grid_for_fringes(geom, 31, 4.5)
    parts = []
    ok = True
    for name, prof, alpha in [("noon", biphoton.gaussian_profiles(5 * D, D / 10), math.pi),
                              ("independent", biphoton.gaussian_profiles(D, D), math.pi / 2)]:
        num = biphoton.propagate_numeric(prof, geom, 0.0, geom.R, grid, norm=Normalization.UNIT_SUM)
        amp = biphoton.detection_amplitude(biphoton.BiphotonSlitState.from_params(alpha, 0.0), geom)
        ref = amp.coincidence_map(grid, Normalization.UNIT_SUM).values
        l1 = float(np.abs(num.values - ref).sum() / ref.sum())
        ok &= l1 <= 0.02
        parts.append(f"{name} L1={l1:.4f}")
    return ok, ", ".join(parts), 300.0


def criterion_5():
    geom = _geom()
    worst = 0.0
    for w, L in [(1e-3, 1e-3), (3e-4, 2e-3), (2e-3, 5e-4)]:
        s = biphoton.slit_amplitudes(biphoton.default_profiles(w, L, geom.k), geom)
        scale = float(np.max(np.abs(s.amplitudes)))
        worst = max(worst, abs(s.c11 - s.c22) / scale, abs(s.c12 - s.c21) / scale)
    return worst <= 1e-9, f"max relative asymmetry {worst:.2e}", 30.0


def criterion_6():
    r2 = exposure.simulate_exposure(exposure.ExposureConfig(pixels=25, N=2, trials=200, seed=7))
    r3 = exposure.simulate_exposure(exposure.ExposureConfig(pixels=25, N=3, trials=200, seed=7))
    ratio = r3.mean_bunches / r2.mean_bunches
    fits = {}
    for N, pixels in [(2, (4, 6, 8, 12, 16)), (3, (3, 4, 5, 6, 8))]:
        rows = [(S, N, exposure.simulate_exposure(exposure.ExposureConfig(pixels=S, N=N, trials=200, seed=21)))
                for S in pixels]
        fits[N] = exposure.fit_scaling(rows).exponent_S
    ok = abs(ratio / 25 - 1) <= 0.15 and all(abs(fits[N] - N) <= 0.1 for N in fits)
    return ok, (f"ratio N3/N2 = {ratio:.2f}; exponent_S(N=2) = {fits[2]:.3f}, exponent_S(N=3) = {fits[3]:.3f} "
                f"-> extrapolated 100x100 step {1e4 ** (fits[3] - fits[2]):.3g}"), 120.0


def criterion_7():
    worst = 0.0
    for S in range(2, 7):
        for N in (1, 2, 3):
            cfg = exposure.ExposureConfig(pixels=S, N=N, target_events=1, trials=1000, seed=1000 + 10 * S + N)
            r = exposure.simulate_exposure(cfg)
            exact = exposure.markov_expected_bunches(exposure.enumerate_event_probabilities(cfg), range(S), 1)
            worst = max(worst, abs(r.mean_bunches - exact) / r.std_error)
    return worst <= 3, f"worst |MC - exact| = {worst:.2f} SE over S=2..6, N=1..3", 60.0


def _spacing_and_width(N):
    s = _reference_setup(N)
    period = LAM / (2 * N * math.sin(s.alpha_beam))
    x = np.linspace(-15 * period * N, 15 * period * N, 60001)
    v = gaussian.noon_same_point_probability(s, x, include_cubic=False)
    peaks = gaussian.peak_positions(x, v)
    spacing = float(np.median(np.diff(peaks)))
    # envelope from the peak heights: log p = -A x^2
    A = -np.polyfit(peaks**2, np.log(gaussian.noon_same_point_probability(s, peaks, include_cubic=False)), 1)[0]
    return spacing, math.sqrt(2 / A)


def criterion_8():
    meas = {N: _spacing_and_width(N) for N in (1, 2, 3, 4)}
    sp = [meas[N][0] * N for N in meas]
    wd = [meas[N][1] * math.sqrt(N) for N in meas]
    sp_err = (max(sp) - min(sp)) / min(sp)
    wd_err = (max(wd) - min(wd)) / min(wd)
    ratio = gaussian.cubic_term_magnitude(_reference_setup(2), 1e-4).ratio
    ok = sp_err <= 5e-3 and wd_err <= 5e-3 and abs(math.log10(ratio) - 14) <= 1
    return ok, f"spacing*N spread {sp_err:.1e}; width*sqrt(N) spread {wd_err:.1e}; prefactor ratio {ratio:.3e}", 10.0


def criterion_9():
    base = _reference_setup(2)
    w = (base.wavelength * base.L / (math.pi * math.sqrt(1e4))) ** 0.5
    assert math.isclose(_reference_setup(2, w).beta, 1e4, rel_tol=1e-9)
    h = 1e-6 * w
    f_noon = lambda wv: gaussian.noon_envelope_coefficient(_reference_setup(2, wv))
    f_delta = lambda wv: gaussian.delta_envelope_coefficient(_reference_setup(2, wv))
    dn = (f_noon(w + h) - f_noon(w - h)) / (2 * h)
    dd = (f_delta(w + h) - f_delta(w - h)) / (2 * h)
    return dn * dd < 0, f"dA/dw NOON = {dn:.3e}, delta = {dd:.3e}", 1.0


def criterion_10():
    from noonlith.cli import main

    cfg = exposure.ExposureConfig(pixels=9, N=2, trials=100, seed=42)
    a, b = exposure.simulate_exposure(cfg, threads=1), exposure.simulate_exposure(cfg, threads=4)
    same_mc = np.array_equal(a.per_trial, b.per_trial)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for sub in ("x", "y"):
            main(["pattern", "steuernagel", "--grid", "41", "--out", str(tmp / sub)])
            main(["expose", "--pixels", "6", "--N", "2", "--trials", "20", "--seed", "3", "--out", str(tmp / sub)])
        same_files = all((tmp / "x" / n.name).read_bytes() == n.read_bytes() for n in (tmp / "y").iterdir())
        rng = np.random.default_rng(1)
        v = rng.random((9, 9)) ** 5
        io.write_map_csv(tmp / "m.csv", v)
        x = rng.normal(size=50) * 1e-4
        io.write_scan_csv(tmp / "s.csv", x, x**2, np.exp(-x))
        rt = np.array_equal(io.read_map_csv(tmp / "m.csv")[1], v) and all(
            np.array_equal(u, w) for u, w in zip(io.read_scan_csv(tmp / "s.csv"), (x, x**2, np.exp(-x))))
    ok = same_mc and same_files and rt
    return ok, f"MC identical={same_mc}, CLI files identical={same_files}, CSV round-trip exact={rt}", 10.0


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def evaluate(fn):
    t0 = time.perf_counter()
    ok, detail, limit = fn()
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < limit
    n = fn.__name__.split("_")[1]
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail} ({dt:.2f}s, limit {limit:g}s)"
    RESULTS.append(line)
    print(line)
    return ok, line


@pytest.mark.parametrize("fn", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_acceptance(fn):
    ok, line = evaluate(fn)
    assert ok, line


if __name__ == "__main__":
    for fn in CRITERIA:
        evaluate(fn)
