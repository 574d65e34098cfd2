"""Lattice Connes distance against the geodesic distance on a conformal line,
with the exact LP value as a third opinion."""
import numpy as np

import finslerkit as fk
from finslerkit import clifford, spectral

chart = fk.ChartSpec(1, 1)
L = fk.parse_lagrangian("exp(x1)*y1^2", chart)
for count in (17, 33, 65):
    lat = clifford.Lattice(((0.0, 1.0),), (count,))
    D = spectral.base_dirac(L, chart, lat)
    x = lat.axes()[0]
    a, b = 0, count - 1
    exact = 2 * (np.exp(x[b] / 2) - np.exp(x[a] / 2))
    r = spectral.connes_distance(D, a, b)
    lp = spectral.lp_distance_1d(D, a, b)
    print(f"{count:3d} sites  connes {r.distance:.6f}  lp {lp:.6f}  geodesic {exact:.6f}  "
          f"iterations {r.iterations}")
