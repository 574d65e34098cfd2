"""A quadratic Lagrangian reduces to Riemannian geometry: the canonical
d-connection reproduces the Christoffel symbols and the round sphere has
scalar curvature 2."""
import numpy as np

import finslerkit as fk

chart = fk.ChartSpec(2, 2)
L = fk.parse_lagrangian("y1^2 + sin(x1)^2*y2^2", chart)
dm = fk.sasaki_dmetric(L, 2)
conn = fk.canonical_dconnection(dm)

for x1 in (0.4, 1.0, 1.5):
    u = [x1, 0.2, 0.7, -0.3]
    R = fk.dcurvature(conn, dm.nconn, u)
    ric = fk.ricci(R)
    g_inv = np.linalg.inv(dm.at(u).g)
    scalar_h = float(np.sum(g_inv * ric.hh.T))
    print(f"x1={x1:.2f}  R[0,1,0,1]={R.hhhh[0, 1, 0, 1]:+.6f}  "
          f"-sin^2={-np.sin(x1) ** 2:+.6f}  h-scalar={scalar_h:.10f}")
    print(f"          metricity defect {fk.metricity_defect(conn, dm, u):.2e}")
