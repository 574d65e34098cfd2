"""Distinguished connections: canonical, Cartan-type tangent, Chern, Berwald,
deformations, d-torsion and metricity defect.

A d-connection is stored as four coefficient families in the N-adapted frame,
always with the derivative direction on the last axis:

* ``Lh[i, j, k]`` = L^i_jk,  ``Lv[a, b, k]`` = L^a_bk,
* ``Ch[i, j, c]`` = C^i_jc,  ``Cv[a, b, c]`` = C^a_bc.

Families are produced as jets by a closure ``fn(u, order)`` so that curvature can
differentiate them; ``at(u)`` gives plain arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import jets
from .errors import DimensionMismatch
from .geometry import DMetric, as_point, check_block, d_y, elongated, nonholonomy_jet
from .jets import Jet


class Families(NamedTuple):
    Lh: object
    Lv: object
    Ch: object
    Cv: object

    def values(self):
        return Families(*(f.value for f in self))

    def truncate(self, order):
        return Families(*(f.truncate(order) for f in self))


def zeros(shape, nvars, order):
    return Jet(np.zeros(tuple(shape) + (jets.ncoef(nvars, order),)), nvars, order)


def _sym(t, a=1, b=2):
    """Average over a pair of axes so the symmetry holds bit for bit."""
    return (t + t.swapaxes(a, b)) * 0.5


class FamilyField:
    """Four-family coefficient field on the chart (connection or deformation)."""

    kind = "field"

    def __init__(self, n, m, fn, kind=None):
        self.n = n
        self.m = m
        self._fn = fn
        if kind is not None:
            self.kind = kind

    def jets(self, u, order):
        return self._fn(as_point(u, self.n), order)

    def at(self, u):
        return self.jets(u, 0).values()

    def _combine(self, other, sign, kind, cls):
        if (self.n, self.m) != (other.n, other.m):
            raise DimensionMismatch(f"dimensions ({self.n},{self.m}) and ({other.n},{other.m}) differ")

        def fn(u, order):
            a, b = self.jets(u, order), other.jets(u, order)
            return Families(*(x + y * sign for x, y in zip(a, b)))
        return cls(self.n, self.m, fn, kind)


class DeformationTensor(FamilyField):
    """P^alpha_beta_gamma with the same four-family layout as a d-connection."""

    kind = "deformation"

    @classmethod
    def zero(cls, n, m):
        def fn(u, order):
            nv = n + m
            return Families(zeros((n, n, n), nv, order), zeros((m, m, n), nv, order),
                            zeros((n, n, m), nv, order), zeros((m, m, m), nv, order))
        return cls(n, m, fn, "deformation")

    def __neg__(self):
        return self.scaled(-1.0)

    def scaled(self, s):
        def fn(u, order):
            return Families(*(f * s for f in self.jets(u, order)))
        return DeformationTensor(self.n, self.m, fn)


class DConnection(FamilyField):
    """d-connection coefficients attached to a d-metric (and its N-connection)."""

    def __init__(self, dmetric, fn, kind):
        super().__init__(dmetric.n, dmetric.m, fn, kind)
        self.dmetric = dmetric

    @property
    def nconn(self):
        return self.dmetric.nconn

    def __sub__(self, other):
        """Deformation tensor self - other."""
        return self._combine(other, -1.0, "deformation", DeformationTensor)


def _metric_jets(dm, u, order):
    g, h, N = dm.jets(u, order + 1)
    check_block(g.value, "h-block g")
    check_block(h.value, "v-block h")
    return g, h, N


def _inv(a):
    if a.shape[0] == 0:
        return a
    return jets.inv(a)


def _canonical_families(g, h, N, n, m):
    """Canonical d-connection families from (g, h, N) jets of order K + 1."""
    K = g.order - 1
    nv = g.nvars
    gi, hi = _inv(g.truncate(K)), _inv(h.truncate(K))
    hK = h.truncate(K)
    eg = elongated(g, N, n, m)                     # [j, r, k] = e_k g_jr
    t = eg + eg.transpose(2, 1, 0) - eg.transpose(0, 2, 1)
    Lh = _sym(jets.einsum("ir,rjk->ijk", gi, t.transpose(1, 0, 2)) * 0.5)
    if m == 0:
        return Families(Lh, zeros((0, 0, n), nv, K), zeros((n, n, 0), nv, K), zeros((0, 0, 0), nv, K))
    dNy = d_y(N, n, m)                             # [a, k, b] = d_b N^a_k
    eh = elongated(h, N, n, m)                     # [b, c, k] = e_k h_bc
    q = jets.einsum("dkb,dc->bck", dNy, hK)        # d_b N^d_k h_dc
    inner = eh - q - q.swapaxes(0, 1)
    Lv = dNy.transpose(0, 2, 1) + jets.einsum("ac,bck->abk", hi, inner) * 0.5
    dgy = d_y(g, n, m)                             # [j, k, c] = d_c g_jk
    Ch = jets.einsum("ik,jkc->ijc", gi, dgy) * 0.5
    dhy = d_y(h, n, m)                             # [b, d, c] = d_c h_bd
    s = dhy.transpose(0, 2, 1) + dhy.transpose(2, 0, 1) - dhy
    # s[b, c, d] = d_c h_bd + d_b h_cd - d_d h_bc
    Cv = _sym(jets.einsum("ad,bcd->abc", hi, s) * 0.5)
    return Families(Lh, Lv, Ch, Cv)


def canonical_dconnection(dm: DMetric) -> DConnection:
    """The metric-compatible d-connection with vanishing h- and v-torsion."""

    def fn(u, order):
        g, h, N = _metric_jets(dm, u, order)
        return _canonical_families(g, h, N, dm.n, dm.m)
    return DConnection(dm, fn, "canonical")


def _require_tangent(dm):
    if dm.n != dm.m:
        raise DimensionMismatch(f"tangent model needs n == m, got n={dm.n}, m={dm.m}")


def _cartan_families(g, N, n):
    """(L^i_jk, C^i_jk) of the tangent-model canonical connection."""
    K = g.order - 1
    gi = _inv(g.truncate(K))
    eg = elongated(g, N, n, n)
    t = eg + eg.transpose(2, 1, 0) - eg.transpose(0, 2, 1)
    L = _sym(jets.einsum("ir,rjk->ijk", gi, t.transpose(1, 0, 2)) * 0.5)
    dgy = d_y(g, n, n)
    s = dgy + dgy.transpose(2, 1, 0) - dgy.transpose(0, 2, 1)
    C = _sym(jets.einsum("ir,rjk->ijk", gi, s.transpose(1, 0, 2)) * 0.5)
    return L, C


def tangent_canonical(dm: DMetric) -> DConnection:
    """Canonical connection of the tangent model: v-families mirror h-families.

    Only the h-block g and N are used; the h-block plays the role of the v-block.
    """
    _require_tangent(dm)

    def fn(u, order):
        g, h, N = _metric_jets(dm, u, order)
        L, C = _cartan_families(g, N, dm.n)
        return Families(L, L, C, C)
    return DConnection(dm, fn, "tangent_canonical")


def chern_dconnection(dm: DMetric) -> DConnection:
    """h-coefficients of the canonical connection, all C-coefficients zero."""
    _require_tangent(dm)

    def fn(u, order):
        g, h, N = _metric_jets(dm, u, order)
        L, C = _cartan_families(g, N, dm.n)
        z = zeros(C.shape, C.nvars, C.order)
        return Families(L, L, z, z)
    return DConnection(dm, fn, "chern")


def berwald_dconnection(dm: DMetric) -> DConnection:
    """L^i_jk = dN^i_k/dy^j, all C-coefficients zero."""
    _require_tangent(dm)
    n = dm.n

    def fn(u, order):
        N = dm.nconn.jet(as_point(u, n), order + 1)
        L = d_y(N, n, n).transpose(0, 2, 1)        # [i, j, k] = d_j N^i_k
        z = zeros((n, n, n), N.nvars, order)
        return Families(L, L, z, z)
    return DConnection(dm, fn, "berwald")


def deform(base: DConnection, P: DeformationTensor) -> DConnection:
    """Connection base + P (coefficient-wise)."""
    if (base.n, base.m) != (P.n, P.m):
        raise DimensionMismatch(f"dimensions ({base.n},{base.m}) and ({P.n},{P.m}) differ")

    def fn(u, order):
        a, b = base.jets(u, order), P.jets(u, order)
        return Families(*(x + y for x, y in zip(a, b)))
    return DConnection(base.dmetric, fn, "deformed")


# -- torsion and metricity ------------------------------------------------------

@dataclass(frozen=True)
class TorsionTensor:
    """d-torsion blocks; index order follows the component names."""

    hhh: np.ndarray   # T^i_jk
    hhv: np.ndarray   # T^i_ja
    vhh: np.ndarray   # T^a_ji
    vvh: np.ndarray   # T^a_bi
    vvv: np.ndarray   # T^a_bc

    def max_abs(self):
        return max((float(np.abs(t).max()) if t.size else 0.0) for t in
                   (self.hhh, self.hhv, self.vhh, self.vvh, self.vvv))


def dtorsion(conn: FamilyField, nconn, u) -> TorsionTensor:
    u = as_point(u, conn.n)
    n, m = conn.n, conn.m
    f = conn.at(u)
    Nj = nconn.jet(u, 1)
    W, omega = nonholonomy_jet(Nj, n, m)
    dNy = W.value                                   # [a, i, b] = d_b N^a_i
    return TorsionTensor(
        hhh=f.Lh - f.Lh.transpose(0, 2, 1),
        hhv=f.Ch.copy(),
        vhh=omega.value,
        vvh=dNy.transpose(0, 2, 1) - f.Lv,
        vvv=f.Cv - f.Cv.transpose(0, 2, 1),
    )


def metricity_components(conn: FamilyField, dm: DMetric, u):
    """Nonzero blocks of D g in the adapted frame.

    Returns ``(Dh_g, Dh_h, Dv_g, Dv_h)`` with the derivative direction last,
    e.g. ``Dh_g[i, j, k]`` = D_k g_ij.
    """
    u = as_point(u, dm.n)
    n, m = dm.n, dm.m
    g, h, N = dm.jets(u, 1)
    f = conn.at(u)
    g0, h0 = g.value, h.value
    eg = elongated(g, N, n, m).value
    eh = elongated(h, N, n, m).value
    dgy = d_y(g, n, m).value
    dhy = d_y(h, n, m).value

    def cov(de, G, Gam):
        t = np.einsum("rik,rj->ijk", Gam, G)
        return de - t - t.transpose(1, 0, 2)
    return (cov(eg, g0, f.Lh), cov(eh, h0, f.Lv), cov(dgy, g0, f.Ch), cov(dhy, h0, f.Cv))


def metricity_defect(conn: FamilyField, dm: DMetric, u) -> float:
    """max |D_gamma g_alpha_beta| over all adapted-frame components."""
    return max((float(np.abs(t).max()) if t.size else 0.0)
               for t in metricity_components(conn, dm, u))


# -- Levi-Civita connection of the assembled metric --------------------------------

def _assemble_jet(g, h, N):
    n, m = g.shape[0], h.shape[0]
    nv, K = g.nvars, g.order
    hN = jets.einsum("ae,ej->aj", h, N)
    top = g + jets.einsum("aj,ak->jk", N, hN)
    c = np.zeros((n + m, n + m, jets.ncoef(nv, K)))
    c[:n, :n] = top.c
    c[:n, n:] = hN.T.c
    c[n:, :n] = hN.c
    c[n:, n:] = h.truncate(K).c
    return Jet(c, nv, K)


def levi_civita_frame(dm: DMetric, u, order=0):
    """Levi-Civita connection of the assembled metric in the N-adapted frame.

    Returns jets ``Gam[alpha, beta, gamma]`` = (nabla_{e_gamma} e_beta)^alpha.
    """
    u = as_point(u, dm.n)
    n, m = dm.n, dm.m
    g, h, N = dm.jets(u, order + 1)
    G = _assemble_jet(g, h, N)
    Gi = _inv(G.truncate(order))
    dG = G.gradient()                               # [b, c, d] = d_d G_bc
    s = dG.transpose(0, 2, 1) + dG - dG.transpose(2, 0, 1)
    # s[d, b, c] = d_b G_dc + d_c G_db - d_d G_bc
    gam = jets.einsum("ad,dbc->abc", Gi, s) * 0.5   # coordinate Christoffels
    # adapted frame vectors are the rows of theta; e is its inverse
    theta = Jet.constant(np.eye(n + m), g.nvars, order + 1)
    theta.c[:n, n:] = -N.T.c
    e = _inv(theta.truncate(order))
    dtheta = theta.gradient()                      # [b, mu, nu] = d_nu theta_b^mu
    th = theta.truncate(order)
    # nabla_{E_g} E_b = th[g,v] (d_v th[b,m] + th[b,l] gam[m,l,v]) d_m
    a = jets.einsum("bl,mlv->bmv", th, gam)
    x = jets.einsum("gv,bmv->bgm", th, dtheta + a)
    return jets.einsum("bgm,ma->abg", x, e)


def levi_civita_families(dm: DMetric, u, order=0) -> Families:
    """Adapted-frame Levi-Civita coefficients split into the four families.

    The mixed families are read with the derivative direction first:
    L^a_bk = Gam[a, k, b] and C^i_jc = Gam[i, c, j].
    """
    n = dm.n
    gam = levi_civita_frame(dm, u, order)
    return Families(gam[:n, :n, :n], gam[n:, :n, n:].transpose(0, 2, 1),
                    gam[:n, n:, :n].transpose(0, 2, 1), gam[n:, n:, n:])


def cdc_deformation(dm: DMetric) -> DeformationTensor:
    """The deformation P-hat that takes the Levi-Civita families to the canonical ones."""
    n, m = dm.n, dm.m

    def fn(u, order):
        g, h, N = dm.jets(u, order + 1)
        nv = g.nvars
        W, omega = nonholonomy_jet(N, n, m)
        gi = _inv(g.truncate(order))
        Ph = jets.einsum("ik,akj->iaj", gi, omega)
        Ch = jets.einsum("iaj,ca->ijc", Ph, h.truncate(order)) * -0.5
        return Families(zeros((n, n, n), nv, order), W.transpose(0, 2, 1), Ch,
                        zeros((m, m, m), nv, order))
    return DeformationTensor(n, m, fn)
