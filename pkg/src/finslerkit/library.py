"""A small catalogue of regular Lagrangians used by the checks, demos and tests.

Every entry lives on the two-dimensional tangent chart (x1, x2, y1, y2) and
comes with a box of sample points on which it is regular.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsl

TANGENT_2D = dsl.ChartSpec(2, 2)


@dataclass(frozen=True)
class Sample:
    name: str
    text: str
    x_box: tuple  # ((lo, hi), (lo, hi))
    y_box: tuple
    quadratic: bool = False
    homogeneous: bool = True

    @property
    def lagrangian(self):
        return dsl.parse_lagrangian(self.text, TANGENT_2D)

    def points(self, count, seed=0):
        """``count`` points (x, y) drawn uniformly from the sample box."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            x = np.array([rng.uniform(*b) for b in self.x_box])
            y = np.array([rng.uniform(*b) for b in self.y_box]) * rng.choice([-1.0, 1.0], 2)
            out.append((x, y))
        return out


_GENERIC_Y = ((0.4, 1.5), (0.4, 1.5))

SUITE = (
    Sample("flat", "y1^2 + y2^2", ((-1, 1), (-1, 1)), _GENERIC_Y, quadratic=True),
    Sample("conformal", "exp(x1)*(y1^2 + y2^2)", ((-1, 1), (-1, 1)), _GENERIC_Y, quadratic=True),
    Sample("polar", "y1^2 + x1^2*y2^2", ((0.5, 2), (-1, 1)), _GENERIC_Y, quadratic=True),
    Sample("sphere", "y1^2 + sin(x1)^2*y2^2", ((0.4, 2.7), (-1, 1)), _GENERIC_Y, quadratic=True),
    Sample("gaussian", "exp(x1^2 - x2)*y1^2 + y2^2 + 0.5*y1*y2", ((-1, 1), (-1, 1)), _GENERIC_Y,
           quadratic=True),
    Sample("quartic", "(y1^4 + y2^4)^(1/2)", ((-1, 1), (-1, 1)), _GENERIC_Y),
    Sample("randers", "(sqrt(y1^2 + y2^2) + 0.3*x2*y1/(1 + x1^2))^2", ((-1, 1), (-1, 1)),
           _GENERIC_Y),
    Sample("lagrange", "exp(x1)*(y1^2 + y2^2) + x2*y1", ((-1, 1), (-1, 1)), _GENERIC_Y,
           homogeneous=False),
)

BY_NAME = {s.name: s for s in SUITE}


def get(name):
    return BY_NAME[name]


# quadratic samples with independent base metrics, used by the Riemannian checks
RIEMANNIAN = tuple(s for s in SUITE if s.quadratic and s.name != "flat")
