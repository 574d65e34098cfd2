import numpy as np
import pytest
import scipy.sparse.linalg as sla

from finslerkit import dsl, dynamics, spectral
from finslerkit.clifford import Lattice
from finslerkit.errors import DisconnectedPatch, FormMismatch, SolverStalled

LINE = dsl.ChartSpec(1, 1)
PLANE = dsl.ChartSpec(2, 2)


def line_dirac(text, count, bounds=(0.0, 1.0)):
    lat = Lattice((bounds,), (count,))
    return spectral.base_dirac(dsl.parse_lagrangian(text, LINE), LINE, lat), lat


def plane_dirac(text, count):
    lat = Lattice(((0.0, 1.0), (0.0, 1.0)), (count, count))
    return spectral.base_dirac(dsl.parse_lagrangian(text, PLANE), PLANE, lat), lat


# -- commutator blocks --------------------------------------------------------------

def test_blocks_of_coordinate_constant_and_square():
    D, lat = line_dirac("y1^2", 11)
    x = lat.axes()[0]
    inter = lat.interior()
    for method in ("closed", "matrix"):
        np.testing.assert_allclose(spectral.commutator_blocks(D, x, method)[inter], 1.0, rtol=1e-13)
        np.testing.assert_allclose(spectral.commutator_blocks(D, np.full(11, 3.0), method)[inter],
                                   0.0, atol=1e-14)
        np.testing.assert_allclose(spectral.commutator_blocks(D, x ** 2, method)[inter],
                                   np.abs(2 * x[inter]), rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        spectral.commutator_blocks(D, x, method="svd")


def test_closed_form_matches_matrix_route_in_2d(rng):
    D, lat = plane_dirac("exp(x1)*(y1^2 + y2^2) + 0.3*y1*y2", 7)
    f = rng.normal(size=lat.nsites)
    inter = lat.interior()
    np.testing.assert_allclose(spectral.commutator_blocks(D, f, "closed")[inter],
                               spectral.commutator_blocks(D, f, "matrix")[inter], rtol=1e-12)


def test_commutator_identity_for_smooth_function():
    D, lat = plane_dirac("y1^2 + y2^2", 9)
    p = lat.points()
    f = p[:, 0] * 2 - p[:, 1]
    grad = np.tile([2.0, -1.0], (lat.nsites, 1))
    assert spectral.commutator_identity_error(D, f, grad) < 1e-12


def test_block_norm_tracks_operator_norm_for_smooth_functions():
    # the gradient peaks mid-patch; the operator norm approaches the block maximum as h -> 0
    gaps = []
    for count in (33, 65, 129):
        D, lat = line_dirac("exp(x1)*y1^2", count)
        x = lat.axes()[0]
        f = np.arctan(10 * (x - 0.5)) / 10
        blocks = spectral.commutator_blocks(D, f)[lat.interior()].max()
        global_norm = sla.svds(spectral.commutator(D, f), k=1, return_singular_vectors=False)[0]
        gaps.append(abs(blocks - global_norm) / global_norm)
    assert gaps[0] / gaps[1] > 1.6 and gaps[1] / gaps[2] > 1.6
    assert gaps[-1] < 0.06


def test_block_norm_misses_rough_functions():
    # alternating values cancel in every central difference
    D, lat = line_dirac("y1^2", 33)
    f = (-1.0) ** np.arange(33)
    assert spectral.commutator_blocks(D, f)[lat.interior()].max() == 0.0
    assert sla.svds(spectral.commutator(D, f), k=1, return_singular_vectors=False)[0] > 10


# -- distance -------------------------------------------------------------------------

def test_same_site_is_zero():
    D, _ = line_dirac("y1^2", 9)
    r = spectral.connes_distance(D, 4, 4)
    assert r.distance == 0.0 and r.iterations == 0


def test_flat_line_distance():
    D, lat = line_dirac("y1^2", 64)
    x = lat.axes()[0]
    r = spectral.connes_distance(D, 3, 59)
    assert r.distance == pytest.approx(x[59] - x[3], rel=0.02)
    assert r.max_block_norm <= 1 + 1e-12
    assert r.upper_bound >= r.distance


@pytest.mark.parametrize("a, b", [(2, 40), (10, 62), (31, 5)])
def test_conformal_line_against_geodesic_and_lp(a, b):
    D, lat = line_dirac("exp(x1)*y1^2", 64)
    x = lat.axes()[0]
    r = spectral.connes_distance(D, a, b)
    geo = dynamics.geodesic_distance(dsl.parse_lagrangian("exp(x1)*y1^2", LINE), [x[a]], [x[b]])
    assert r.distance == pytest.approx(geo, rel=0.05)
    assert r.distance == pytest.approx(spectral.lp_distance_1d(D, a, b), rel=0.01)


def test_symmetry():
    D, _ = line_dirac("exp(x1)*y1^2", 48)
    assert spectral.connes_distance(D, 4, 40).distance == pytest.approx(
        spectral.connes_distance(D, 40, 4).distance, rel=0.02)


def test_refinement_reduces_error():
    errors = []
    for count in (17, 33, 65):
        D, lat = line_dirac("exp(x1)*y1^2", count)
        x = lat.axes()[0]
        a, b = 0, count - 1
        exact = 2 * (np.exp(x[b] / 2) - np.exp(x[a] / 2))
        errors.append(abs(spectral.lp_distance_1d(D, a, b) - exact) / exact)
    assert errors[0] > errors[1] > errors[2]


def test_neighbouring_sites_are_disconnected():
    D, _ = line_dirac("y1^2", 16)
    with pytest.raises(DisconnectedPatch):
        spectral.connes_distance(D, 4, 5)


def test_corner_is_isolated():
    D, lat = plane_dirac("y1^2 + y2^2", 7)
    with pytest.raises(DisconnectedPatch):
        spectral.connes_distance(D, lat.site((0, 0)), lat.site((2, 2)))


def test_tiny_budget_stalls():
    D, _ = line_dirac("exp(x1)*y1^2", 64)
    with pytest.raises(SolverStalled):
        spectral.connes_distance(D, 2, 60, budget=1, tol=1e-6)


def test_diagonal_pair_is_bracketed():
    D, lat = plane_dirac("y1^2 + y2^2", 9)
    p = lat.points()
    s1, s2 = lat.site((1, 1)), lat.site((7, 7))
    r = spectral.connes_distance(D, s1, s2)
    chord = float(np.linalg.norm(p[s2] - p[s1]))
    assert chord * 0.99 <= r.distance <= r.upper_bound * (1 + 1e-9)


def test_lp_oracle_is_one_dimensional():
    D, _ = plane_dirac("y1^2 + y2^2", 5)
    with pytest.raises(ValueError):
        spectral.lp_distance_1d(D, 6, 18)


# -- report ---------------------------------------------------------------------------

def test_report_on_flat_plane_axis_pairs():
    lat = Lattice(((0.0, 1.0), (0.0, 1.0)), (17, 17))
    L = dsl.parse_lagrangian("y1^2 + y2^2", PLANE)
    pairs = [((0.0625, 0.5), (0.9375, 0.5)), ((0.5, 0.0625), (0.5, 0.9375)), ((0.5, 0.5), (0.5, 0.5))]
    rows = spectral.distance_report(L, PLANE, lat, pairs)
    for row in rows[:2]:
        assert 0.98 <= row.ratio <= 1.02
        assert row.geodesic == pytest.approx(0.875, rel=1e-9)
    assert rows[2].connes == 0.0 and rows[2].ratio is None
    d = rows[0].as_dict()
    assert d["relative_deviation"] == pytest.approx(rows[0].ratio - 1)


def test_report_rejects_non_quadratic():
    lat = Lattice(((0.0, 1.0), (0.0, 1.0)), (5, 5))
    with pytest.raises(FormMismatch):
        spectral.distance_report(dsl.parse_lagrangian("(y1^4 + y2^4)^(1/2)", PLANE), PLANE, lat, [])
