"""Assemble a lattice Dirac operator for a d-metric and check the
commutator with coordinate functions and the chirality grading."""
import numpy as np

import finslerkit as fk
from finslerkit import clifford, spectral

chart = fk.ChartSpec(1, 1)
dm = fk.sasaki_dmetric(fk.parse_lagrangian("exp(x1)*y1^2", chart), 1)
lat = clifford.Lattice(((0.0, 1.0), (0.5, 1.5)), (9, 9))
D = clifford.assemble_discrete_dirac(dm, lat)
print("sites", lat.nsites, "spinor size", D.spinor_size, "nonzeros", D.matrix.nnz)
x = lat.points()[:, 0]
blocks = spectral.commutator_blocks(D, x)[lat.interior()]
print("interior |[D, x1]| range:", blocks.min(), blocks.max())
print("sqrt(g^11) range, the continuum value:", D.ginv[:, 0, 0].min() ** 0.5, D.ginv[:, 0, 0].max() ** 0.5)
gamma = clifford.chirality_operator(D)
print("|{D, chirality}|:", clifford.anticommutator_norm(D.matrix, gamma))
