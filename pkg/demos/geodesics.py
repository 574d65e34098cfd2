"""Euler-Lagrange and spray flows agree; RK4 converges at fourth order;
shooting recovers great-circle distances on the sphere."""
import math

import numpy as np

import finslerkit as fk
from finslerkit import dynamics

chart = fk.ChartSpec(2, 2)
L = fk.parse_lagrangian("exp(x1)*(y1^2 + y2^2)", chart)
x0, y0 = [0.1, 0.2], [1.0, 0.5]
print("flow residual:", dynamics.equivalence_residual(L, (x0, y0), 1.0, 1e-2))
ratio, e1, e2 = dynamics.convergence_ratio(dynamics.spray_flow(L), (x0, y0), 1.0, 0.1)
print(f"error ratio after halving the step: {ratio:.2f} (16 for fourth order)")

sphere = fk.parse_lagrangian("y1^2 + sin(x1)^2*y2^2", chart)
a, b = (1.0, 0.0), (1.3, 0.6)
r = dynamics.shoot(sphere, a, b)
p = [np.array([math.sin(t) * math.cos(f), math.sin(t) * math.sin(f), math.cos(t)]) for t, f in (a, b)]
print(f"shooting distance {r.distance:.10f}, great circle {math.acos(float(p[0] @ p[1])):.10f}, "
      f"{r.iterations} Newton steps")
