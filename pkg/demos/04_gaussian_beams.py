"""
NOON states in two crossing Gaussian beams
==========================================

Fringe period and envelope width against photon number, the size of the
cubic phase term, and how the envelope reacts to the beam waist.
"""

import math

import numpy as np

from noonlith import gaussian as gn

setup = gn.GaussianNoonSetup.from_lab_units(alpha_deg=30, lambda_um=1, L_cm=10, w_mm=1)
print(f"beta = {setup.beta:.4g}")

for N in range(1, 5):
    s = setup.with_N(N)
    x = np.linspace(-10 * gn.fringe_period(s), 10 * gn.fringe_period(s), 20001)
    p = gn.noon_same_point_probability(s, x, include_cubic=False)
    A = gn.noon_envelope_coefficient(s)
    print(f"N={N}: fringe spacing {gn.measure_peak_spacing(x, p) * 1e9:7.2f} nm, "
          f"envelope 1/e^2 half-width {math.sqrt(2 / A) * 1e3:.3f} mm")

rep = gn.cubic_term_magnitude(setup, 1e-4)
print(f"linear/cubic prefactor ratio {rep.ratio:.3e}; term ratio at 0.1 mm {rep.term_ratio:.3e}")

vis = gn.visibility_conditions(setup)
print(f"fringes visible for |x| < {vis.x_low * 1e3:.3g} mm or |x| > {vis.x_high * 1e3:.3g} mm")

# Doubling w at beta >> 1 shrinks the NOON envelope coefficient and grows the
# delta-state one, so the fringe count moves in opposite directions.
w = math.sqrt(setup.wavelength * setup.L / (math.pi * 100.0))
for scale in (1, 2):
    s = gn.GaussianNoonSetup(scale * w, setup.L, setup.alpha_beam, setup.wavelength, 2)
    print(f"w={s.w * 1e6:6.2f} um beta={s.beta:8.1f}: A_noon={gn.noon_envelope_coefficient(s):.4g}, "
          f"A_delta={gn.delta_envelope_coefficient(s):.4g}")
