"""A genuinely Finsler metric: the Hessian depends on y, the canonical
d-connection stays metric, and the Chern and Berwald connections do not."""
import finslerkit as fk

chart = fk.ChartSpec(2, 2)
L = fk.parse_lagrangian("(y1^4 + y2^4)^(1/2)", chart)
print("degree-two homogeneity:", fk.check_homogeneity(L, chart))
dm = fk.sasaki_dmetric(L, 2)
u = [0.1, -0.2, 1.0, 0.4]
print("g at y=(1.0, 0.4):\n", dm.at(u).g)
print("g at y=(0.3, 1.0):\n", dm.at([0.1, -0.2, 0.3, 1.0]).g)
for name, build in (("canonical", fk.canonical_dconnection),
                    ("chern", fk.chern_dconnection),
                    ("berwald", fk.berwald_dconnection)):
    conn = build(dm)
    print(f"{name:10s} metricity defect {fk.metricity_defect(conn, dm, u):.3e}")
