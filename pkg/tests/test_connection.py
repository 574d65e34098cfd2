import numpy as np
import pytest

from finslerkit import connection, dsl, geometry, library
from finslerkit.connection import DeformationTensor, Families
from finslerkit.errors import DegenerateHessian, DimensionMismatch
from finslerkit.jets import ChartPoint

from oracles import metric_oracle

CHART = dsl.ChartSpec(2, 2)
OFFDIAG = """dims 2 1
metric_block g 1 1 1 + x1^2
metric_block g 2 2 1
metric_block g 1 2 0.2
metric_block h 1 1 exp(x2)
nconn 1 1 x2
nconn 1 2 0.5*y1
"""


def sasaki(text):
    return geometry.sasaki_dmetric(dsl.parse_lagrangian(text, CHART), 2)


def suite_points(sample, count, seed=0):
    return [np.concatenate(p) for p in sample.points(count, seed)]


def _close(a, b, atol):
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=atol)


def test_flat_canonical_is_zero():
    dm = sasaki("y1^2 + y2^2")
    f = connection.canonical_dconnection(dm).at([0.2, -0.1, 1.0, 0.5])
    for fam in f:
        assert not fam.any()


def test_conformal_coefficient():
    dm = sasaki("exp(x1)*(y1^2 + y2^2)")
    f = connection.canonical_dconnection(dm).at([0.3, 0.1, 1.0, 2.0])
    assert f.Lh[0, 0, 0] == pytest.approx(0.5, abs=1e-14)
    assert f.Lh[1, 1, 0] == pytest.approx(0.5, abs=1e-14)
    assert f.Lh[0, 1, 1] == pytest.approx(-0.5, abs=1e-14)
    np.testing.assert_allclose(f.Ch, 0.0, atol=1e-14)


@pytest.mark.parametrize("name", ["conformal", "polar", "sphere", "gaussian"])
def test_riemannian_families_match_christoffels(name):
    sample = library.get(name)
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    conn = connection.canonical_dconnection(dm)
    gamma = metric_oracle(name)["gamma"]
    for u in suite_points(sample, 6, seed=4):
        f = conn.at(u)
        ref = np.asarray(gamma(*u[:2]), dtype=float)
        np.testing.assert_allclose(f.Lh, ref, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(f.Lv, ref, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(f.Ch, 0.0, atol=1e-12)
        np.testing.assert_allclose(f.Cv, 0.0, atol=1e-12)


@pytest.mark.parametrize("name", ["conformal", "polar"])
def test_base_only_metric_is_levi_civita(name):
    texts = {"conformal": ["exp(x1)", "0", "0", "exp(x1)"], "polar": ["1", "0", "0", "x1^2"]}
    chart = dsl.ChartSpec(2, 0)
    g = [[dsl.parse_lagrangian(t, chart) for t in texts[name][:2]],
         [dsl.parse_lagrangian(t, chart) for t in texts[name][2:]]]
    dm = geometry.DMetric.riemannian(g, chart)
    conn = connection.canonical_dconnection(dm)
    x = [0.7, -0.3]
    np.testing.assert_allclose(conn.at(x).Lh, np.asarray(metric_oracle(name)["gamma"](*x), float),
                               rtol=1e-13, atol=1e-14)
    assert conn.at(x).Lv.shape == (0, 0, 2)


@pytest.mark.parametrize("sample", library.SUITE, ids=lambda s: s.name)
def test_tangent_canonical_agrees_with_canonical(sample):
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    a = connection.canonical_dconnection(dm)
    b = connection.tangent_canonical(dm)
    for u in suite_points(sample, 4, seed=5):
        _close(a.at(u), b.at(u), 1e-11)


@pytest.mark.parametrize("sample", library.SUITE, ids=lambda s: s.name)
def test_canonical_is_metric_and_torsion_free(sample):
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    conn = connection.canonical_dconnection(dm)
    for u in suite_points(sample, 4, seed=6):
        assert connection.metricity_defect(conn, dm, u) < 1e-10
        T = connection.dtorsion(conn, dm.nconn, u)
        assert not T.hhh.any() and not T.vvv.any()


def test_direct_dmetric_is_metric_and_torsion_free():
    dm = geometry.DMetric.from_definition(dsl.parse_definition(OFFDIAG))
    conn = connection.canonical_dconnection(dm)
    u = [0.4, -0.6, 1.2]
    assert connection.metricity_defect(conn, dm, u) < 1e-12
    T = connection.dtorsion(conn, dm.nconn, u)
    assert not T.hhh.any() and not T.vvv.any()
    # Omega^1_12 = 1 + x2/2 for N^1_1 = x2, N^1_2 = y1/2
    assert T.vhh[0, 0, 1] == pytest.approx(0.7, abs=1e-14)


def test_vertical_h_torsion_vanishes_for_quadratic():
    # L^a_bk = dN^a_k/dy^b holds for every quadratic Lagrangian
    dm = sasaki("exp(x1)*(y1^2 + y2^2)")
    T = connection.dtorsion(connection.canonical_dconnection(dm), dm.nconn, [0.2, 0.1, 1.0, 2.0])
    np.testing.assert_allclose(T.vvh, 0.0, atol=1e-14)


def test_vertical_h_torsion_nonzero_for_randers():
    sample = library.get("randers")
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    T = connection.dtorsion(connection.canonical_dconnection(dm), dm.nconn, [0.5, 0.8, 1.0, 0.7])
    assert np.abs(T.vvh).max() > 1e-3


def test_chern_is_not_metric_for_quartic():
    sample = library.get("quartic")
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    u = [0.0, 0.0, 1.0, 0.6]
    assert connection.metricity_defect(connection.chern_dconnection(dm), dm, u) > 1e-3
    f = connection.chern_dconnection(dm).at(u)
    assert not f.Ch.any() and not f.Cv.any()


@pytest.mark.parametrize("name", ["quartic", "randers", "gaussian"])
def test_berwald_h_torsion_free(name):
    sample = library.get(name)
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    conn = connection.berwald_dconnection(dm)
    for u in suite_points(sample, 3, seed=7):
        T = connection.dtorsion(conn, dm.nconn, u)
        np.testing.assert_allclose(T.hhh, 0.0, atol=1e-12)
        np.testing.assert_allclose(T.vvh, 0.0, atol=1e-12)


def test_deformation_algebra():
    sample = library.get("randers")
    dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
    canon = connection.canonical_dconnection(dm)
    berw = connection.berwald_dconnection(dm)
    u = suite_points(sample, 1, seed=8)[0]
    _close(connection.deform(canon, DeformationTensor.zero(2, 2)).at(u), canon.at(u), 0.0)
    P = canon - berw
    _close(connection.deform(berw, P).at(u), canon.at(u), 1e-13)
    _close(connection.deform(canon, -P).at(u), berw.at(u), 1e-13)
    _close(P.scaled(2.0).at(u), [2 * f for f in P.at(u)], 0.0)
    with pytest.raises(DimensionMismatch):
        connection.deform(canon, DeformationTensor.zero(2, 1))


@pytest.mark.parametrize("source", ["offdiag", "gaussian", "randers"])
def test_levi_civita_plus_distortion_is_canonical(source):
    if source == "offdiag":
        dm = geometry.DMetric.from_definition(dsl.parse_definition(OFFDIAG))
        points = [np.array([0.3, -0.2, 0.9]), np.array([-0.5, 0.4, -1.1])]
    else:
        sample = library.get(source)
        dm = geometry.sasaki_dmetric(sample.lagrangian, 2)
        points = suite_points(sample, 2, seed=9)
    canon = connection.canonical_dconnection(dm)
    P = connection.cdc_deformation(dm)
    for u in points:
        lc = connection.levi_civita_families(dm, u).values()
        _close([a + b for a, b in zip(lc, P.at(u))], canon.at(u), 1e-11)


@pytest.mark.parametrize("lam", [0.25, 3.0])
def test_constant_rescaling_invariance(lam):
    sample = library.get("randers")
    a = connection.canonical_dconnection(geometry.sasaki_dmetric(sample.lagrangian, 2))
    scaled = dsl.parse_lagrangian(f"{lam}*({sample.text})", CHART)
    b = connection.canonical_dconnection(geometry.sasaki_dmetric(scaled, 2))
    for u in suite_points(sample, 3, seed=10):
        _close(a.at(u), b.at(u), 1e-11)


def test_tangent_models_need_square_chart():
    dm = geometry.DMetric.from_definition(dsl.parse_definition(OFFDIAG))
    for build in (connection.tangent_canonical, connection.chern_dconnection,
                  connection.berwald_dconnection):
        with pytest.raises(DimensionMismatch):
            build(dm)


def test_degenerate_block_is_reported():
    dm = sasaki("y1*y1*0 + y2^2")
    with pytest.raises(DegenerateHessian):
        connection.canonical_dconnection(dm).at([0.0, 0.0, 1.0, 1.0])


def test_families_values_and_truncate():
    dm = sasaki("exp(x1)*(y1^2 + y2^2)")
    jets = connection.canonical_dconnection(dm).jets(ChartPoint((0.1, 0.0), (1.0, 1.0)), 1)
    assert all(j.order == 1 for j in jets)
    low = jets.truncate(0)
    assert isinstance(low, Families) and all(j.order == 0 for j in low)
    _close(low.values(), jets.values(), 0.0)
