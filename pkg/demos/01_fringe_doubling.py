"""
Fringe doubling on the diagonal
===============================

A 101-detector screen spanning four and a half single-photon fringes.
Both pair models give the same same-detector pattern, with twice as many
fringes as the single-photon pattern.
"""

import numpy as np

from noonlith import (SlitGeometry, boto_coincidence, count_maxima, grid_for_fringes,
                      single_photon_pattern, steuernagel_coincidence)

# 100 um slit separation, 1 um light, screen 10 cm away
geom = SlitGeometry.from_wavelength(d=100e-6, R=0.1, wavelength=1e-6)
grid = grid_for_fringes(geom, detectors=101, fringes=4.5)
print(f"detector width b = {grid.b * 1e6:.3f} um, fringe spacing = {geom.fringe_spacing * 1e3:.3f} mm")

single = single_photon_pattern(geom, grid)
boto = boto_coincidence(geom, grid)
st = steuernagel_coincidence(geom, grid)

print("single-photon maxima:", count_maxima(single.values))
print("Boto diagonal maxima:", count_maxima(boto.diagonal))
print("Steuernagel diagonal maxima:", count_maxima(st.diagonal))
print("max |diagonal difference|:", np.max(np.abs(boto.diagonal - st.diagonal)))

# the models only differ off the diagonal: Boto puts no weight there at all
off = ~np.eye(grid.size, dtype=bool)
print(f"off-diagonal mass: Boto {boto.values[off].sum():.3g}, Steuernagel {st.renormalized('unit_sum').values[off].sum():.3f}")
