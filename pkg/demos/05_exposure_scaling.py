"""
Exposure time by Monte Carlo
============================

Bunches needed until every pixel has seen one N-photon event, for the two
pair models, compared with the exact absorbing-chain expectation.
"""

from noonlith import ExposureConfig, fit_scaling, markov_expected_bunches, simulate_exposure

# the 5 x 5 pixel example: going from N = 2 to N = 3
r2 = simulate_exposure(ExposureConfig(pixels=25, N=2, trials=200, seed=7))
r3 = simulate_exposure(ExposureConfig(pixels=25, N=3, trials=200, seed=7))
print(f"25 pixels: N=2 {r2.mean_bunches:.0f} +- {r2.std_error:.0f}, N=3 {r3.mean_bunches:.0f} +- {r3.std_error:.0f}, "
      f"ratio {r3.mean_bunches / r2.mean_bunches:.2f}")

# small case against the exact chain
r = simulate_exposure(ExposureConfig(pixels=4, N=2, trials=2000, seed=1))
print(f"4 pixels, N=2: MC {r.mean_bunches:.2f} +- {r.std_error:.2f}, "
      f"exact {markov_expected_bunches(r.event_probabilities, r.required):.2f}")

# scaling exponents; the raw completion time also carries the slowly growing
# coupon-collector factor, which per_pixel_time divides out
for model, N, pixels in [("boto", 2, (8, 16, 32, 64)), ("steuernagel", 2, (4, 8, 16)), ("steuernagel", 3, (3, 4, 6, 8))]:
    rows = [(S, N, simulate_exposure(ExposureConfig(pixels=S, N=N, model=model, trials=200, seed=3))) for S in pixels]
    fit = fit_scaling(rows)
    print(f"{model:>11} N={N}: exponent_S {fit.exponent_S:.3f} (raw {fit.exponent_S_raw:.3f})")
