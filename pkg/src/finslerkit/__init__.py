"""Lagrange-Finsler geometry on a chart: jets, N-connections, d-connections,
curvature, geodesic flows, Clifford/spin structures and a lattice Connes distance."""

from . import (clifford, connection, curvature, dsl, dynamics, errors, geometry, jets,
               library, spectral)
from .connection import (berwald_dconnection, canonical_dconnection, chern_dconnection,
                         deform, dtorsion, metricity_defect, tangent_canonical)
from .curvature import (dcurvature, deform_curvature, einstein_dtensor, ricci,
                        scalar_curvature, tangent_dcurvature)
from .dsl import ChartSpec, check_homogeneity, load_definition, parse_definition, parse_lagrangian
from .geometry import (DMetric, adapted_frame, almost_complex, assemble_offdiagonal,
                       canonical_nconnection, decompose_offdiagonal, hessian_metric,
                       nonholonomy, sasaki_dmetric, spray_coefficients)
from .jets import ChartPoint, Jet, seed

__version__ = "0.1.0"
