"""Curvature of d-connections: the six d-curvature blocks, Ricci d-tensor,
scalar curvature, Einstein d-tensor and the deformation formula.

Block index order follows the component names (direction pair last):

* ``hhhh[i, h, j, k]`` = R^i_hjk,   ``vvhh[a, b, j, k]`` = R^a_bjk,
* ``hhhv[i, j, k, a]`` = R^i_jka,   ``vvhv[c, b, k, a]`` = R^c_bka,
* ``hhvv[i, j, b, c]`` = R^i_jbc,   ``vvvv[a, b, c, d]`` = R^a_bcd.

R^i_hjk is the h-part of R(e_k, e_j) e_h, so R^k_ijk is the usual Ricci sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .connection import DeformationTensor, Families, FamilyField
from .errors import DimensionMismatch
from .geometry import as_point, check_block, d_y, elongated, nonholonomy_jet

BLOCKS = ("hhhh", "vvhh", "hhhv", "vvhv", "hhvv", "vvvv")


@dataclass(frozen=True)
class CurvatureTensor:
    hhhh: np.ndarray
    vvhh: np.ndarray
    hhhv: np.ndarray
    vvhv: np.ndarray
    hhvv: np.ndarray
    vvvv: np.ndarray

    def blocks(self):
        return {k: getattr(self, k) for k in BLOCKS}

    def max_abs(self):
        return max((float(np.abs(b).max()) if b.size else 0.0) for b in self.blocks().values())

    def __add__(self, other):
        return CurvatureTensor(*(getattr(self, k) + getattr(other, k) for k in BLOCKS))

    def __sub__(self, other):
        return CurvatureTensor(*(getattr(self, k) - getattr(other, k) for k in BLOCKS))


@dataclass(frozen=True)
class RicciDTensor:
    hh: np.ndarray   # R_ij
    hv: np.ndarray   # R_ia
    vh: np.ndarray   # R_ai
    vv: np.ndarray   # R_ab

    def full(self):
        return np.block([[self.hh, self.hv], [self.vh, self.vv]])


@dataclass(frozen=True)
class EinsteinDTensor:
    hh: np.ndarray
    hv: np.ndarray
    vh: np.ndarray
    vv: np.ndarray
    scalar: float

    def full(self):
        return np.block([[self.hh, self.hv], [self.vh, self.vv]])


def _prepare(conn, nconn, u):
    n, m = conn.n, conn.m
    u = as_point(u, n)
    f = conn.jets(u, 1)
    N = nconn.jet(u, 1)
    dNy, omega = nonholonomy_jet(N, n, m)
    return u, f, N.truncate(0), dNy.value, omega.value


def _block_formulas(f, N0, dNy, omega, n, m):
    """The six d-curvature blocks from order-1 family jets."""
    fv = f.values()
    Lh, Lv, Ch, Cv = fv
    # elongated derivatives of each family; the last axis is the direction
    eLh = elongated(f.Lh, N0, n, m).value          # [i, h, j, k] = e_k L^i_hj
    eLv = elongated(f.Lv, N0, n, m).value
    eCh = elongated(f.Ch, N0, n, m).value          # [i, j, a, k] = e_k C^i_ja
    eCv = elongated(f.Cv, N0, n, m).value
    yLh = d_y(f.Lh, n, m).value                    # [i, j, k, a] = d_a L^i_jk
    yLv = d_y(f.Lv, n, m).value
    yCh = d_y(f.Ch, n, m).value                    # [i, j, b, c] = d_c C^i_jb
    yCv = d_y(f.Cv, n, m).value

    def quad(G1, G2):
        # G1[m, h, j] G2[i, m, k] - (j <-> k)
        q = np.einsum("mhj,imk->ihjk", G1, G2)
        return q - q.transpose(0, 1, 3, 2)

    hhhh = (eLh - eLh.transpose(0, 1, 3, 2)) + quad(Lh, Lh) - np.einsum("iha,akj->ihjk", Ch, omega)
    vvhh = (eLv - eLv.transpose(0, 1, 3, 2)) + quad(Lv, Lv) - np.einsum("abc,ckj->abjk", Cv, omega)
    # mixed torsion T^b_ka = d_a N^b_k - L^b_ak
    Tmix = dNy - Lv.transpose(0, 2, 1)             # [b, k, a]
    # D_k C^i_ja = e_k C^i_ja + L^i_rk C^r_ja - L^r_jk C^i_ra - L^b_ak C^i_jb
    DCh = (eCh + np.einsum("irk,rja->ijak", Lh, Ch) - np.einsum("rjk,ira->ijak", Lh, Ch)
           - np.einsum("bak,ijb->ijak", Lv, Ch))
    hhhv = yLh - DCh.transpose(0, 1, 3, 2) + np.einsum("ijb,bka->ijka", Ch, Tmix)
    DCv = (eCv + np.einsum("cdk,dba->cbak", Lv, Cv) - np.einsum("dbk,cda->cbak", Lv, Cv)
           - np.einsum("dak,cbd->cbak", Lv, Cv))
    vvhv = yLv - DCv.transpose(0, 1, 3, 2) + np.einsum("cbd,dka->cbka", Cv, Tmix)

    def vert(C, yC):
        # d_c C_jb - d_b C_jc + C^h_jb C^i_hc - C^h_jc C^i_hb
        q = np.einsum("hjb,ihc->ijbc", C, C)
        return (yC - yC.transpose(0, 1, 3, 2)) + (q - q.transpose(0, 1, 3, 2))

    return CurvatureTensor(hhhh, vvhh, hhhv, vvhv, vert(Ch, yCh), vert(Cv, yCv))


def dcurvature(conn: FamilyField, nconn, u) -> CurvatureTensor:
    """All six d-curvature blocks of ``conn`` at ``u``."""
    u, f, N0, dNy, omega = _prepare(conn, nconn, u)
    return _block_formulas(f, N0, dNy, omega, conn.n, conn.m)


@dataclass(frozen=True)
class TangentCurvature:
    hhhh: np.ndarray   # R^i_hjk
    hhhv: np.ndarray   # R^i_jka
    vvvv: np.ndarray   # R^a_bcd


def tangent_dcurvature(conn: FamilyField, nconn, u) -> TangentCurvature:
    """Three-block curvature of a tangent-model connection (v-families mirror h)."""
    if conn.n != conn.m:
        raise DimensionMismatch(f"tangent model needs n == m, got n={conn.n}, m={conn.m}")
    u, f, N0, dNy, omega = _prepare(conn, nconn, u)
    f = Families(f.Lh, f.Lh, f.Ch, f.Ch)
    R = _block_formulas(f, N0, dNy, omega, conn.n, conn.m)
    return TangentCurvature(R.hhhh, R.hhhv, R.vvvv)


# -- full-frame route ------------------------------------------------------------

def _full_gamma(fam, n, m):
    """Gam[alpha, beta, gamma] assembled from the four families (any jet order)."""
    nv, K = fam.Lh.nvars, fam.Lh.order
    c = np.zeros((n + m, n + m, n + m, jets.ncoef(nv, K)))
    c[:n, :n, :n] = fam.Lh.c
    c[n:, n:, :n] = fam.Lv.c
    c[:n, :n, n:] = fam.Ch.c
    c[n:, n:, n:] = fam.Cv.c
    return jets.Jet(c, nv, K)


def _structure(dNy, omega, n, m):
    """W[eps, gamma, delta] with [e_gamma, e_delta] = W^eps_gamma_delta e_eps."""
    W = np.zeros((n + m, n + m, n + m))
    W[n:, :n, :n] = omega
    # [e_a, e_k] = -d_a N^b_k e_b
    W[n:, n:, :n] = -dNy.transpose(0, 2, 1)
    W[n:, :n, n:] = dNy
    return W


def _frame_derivative(G, N0, n, m):
    """Stack of e_gamma G over a trailing axis (elongated h-part, plain v-part)."""
    eh = elongated(G, N0, n, m).value
    ev = d_y(G, n, m).value
    return np.concatenate([eh, ev], axis=-1)


def _to_blocks(full, n):
    """Blocks from full[alpha, beta, gamma, delta] = (R(e_gamma, e_delta) e_beta)^alpha."""
    P = full.transpose(0, 1, 3, 2)
    h, v = slice(0, n), slice(n, None)
    return CurvatureTensor(P[h, h, h, h], P[v, v, h, h], P[h, h, h, v], P[v, v, h, v],
                           P[h, h, v, v], P[v, v, v, v])


def frame_curvature(conn: FamilyField, nconn, u) -> CurvatureTensor:
    """Curvature blocks from the frame formula

    R(e_g, e_d) e_b = e_g G_bd - e_d G_bg + G^e_bd G_eg - G^e_bg G_ed - W^e_gd G_be,

    an independent route to the same quantities as :func:`dcurvature`.
    """
    n, m = conn.n, conn.m
    u, f, N0, dNy, omega = _prepare(conn, nconn, u)
    G = _full_gamma(f, n, m)
    eG = _frame_derivative(G, N0, n, m)            # [a, b, d, g] = e_g G^a_bd
    G0 = G.value
    W = _structure(dNy, omega, n, m)
    full = (eG.transpose(0, 1, 3, 2) - eG
            + np.einsum("ebd,aeg->abgd", G0, G0) - np.einsum("ebg,aed->abgd", G0, G0)
            - np.einsum("egd,abe->abgd", W, G0))
    return _to_blocks(full, n)


def deform_curvature(base: FamilyField, P: DeformationTensor, nconn, u) -> CurvatureTensor:
    """Curvature of base + P as  R-hat + D-hat P + P ^ P."""
    n, m = base.n, base.m
    if (P.n, P.m) != (n, m):
        raise DimensionMismatch("deformation and connection dimensions differ")
    u, fb, N0, dNy, omega = _prepare(base, nconn, u)
    Rb = _block_formulas(fb, N0, dNy, omega, n, m)
    Gb = _full_gamma(fb, n, m).value
    Pj = _full_gamma(P.jets(u, 1), n, m)
    eP = _frame_derivative(Pj, N0, n, m)
    P0 = Pj.value
    W = _structure(dNy, omega, n, m)
    DP = (eP.transpose(0, 1, 3, 2) - eP
          + np.einsum("ebd,aeg->abgd", Gb, P0) + np.einsum("ebd,aeg->abgd", P0, Gb)
          - np.einsum("ebg,aed->abgd", Gb, P0) - np.einsum("ebg,aed->abgd", P0, Gb)
          - np.einsum("egd,abe->abgd", W, P0))
    PP = np.einsum("ebd,aeg->abgd", P0, P0) - np.einsum("ebg,aed->abgd", P0, P0)
    return Rb + _to_blocks(DP + PP, n)


# -- contractions ------------------------------------------------------------------

def ricci(R: CurvatureTensor) -> RicciDTensor:
    """R_ij = R^k_ijk, R_ia = -R^k_ika, R_ai = R^b_aib, R_ab = R^c_abc."""
    return RicciDTensor(
        hh=np.einsum("kijk->ij", R.hhhh),
        hv=-np.einsum("kika->ia", R.hhhv),
        vh=np.einsum("baib->ai", R.vvhv),
        vv=np.einsum("cabc->ab", R.vvvv),
    )


def ricci_tangent(R: TangentCurvature) -> RicciDTensor:
    """Contractions of the three tangent-model blocks (R_ai is absent there)."""
    n = R.hhhh.shape[0]
    return RicciDTensor(np.einsum("kijk->ij", R.hhhh), -np.einsum("kika->ia", R.hhhv),
                        np.zeros((n, n)), np.einsum("cabc->ab", R.vvvv))


def _blocks_at(dm, u):
    p = dm.at(u)
    check_block(p.g, "h-block g")
    check_block(p.h, "v-block h")
    return p


def scalar_curvature(ric: RicciDTensor, dm, u) -> float:
    """g^ij R_ij + h^ab R_ab."""
    p = _blocks_at(dm, u)
    s = float(np.sum(np.linalg.inv(p.g) * ric.hh.T))
    if p.h.size:
        s += float(np.sum(np.linalg.inv(p.h) * ric.vv.T))
    return s


def einstein_dtensor(ric: RicciDTensor, dm, u) -> EinsteinDTensor:
    """G_ab = R_ab - (1/2) g_ab R blockwise; the off-diagonal d-metric blocks vanish."""
    p = _blocks_at(dm, u)
    s = scalar_curvature(ric, dm, u)
    return EinsteinDTensor(ric.hh - 0.5 * s * p.g, ric.hv.copy(), ric.vh.copy(),
                           ric.vv - 0.5 * s * p.h, s)


__all__ = ["CurvatureTensor", "RicciDTensor", "EinsteinDTensor", "TangentCurvature",
           "dcurvature", "tangent_dcurvature", "frame_curvature", "deform_curvature",
           "ricci", "ricci_tangent", "scalar_curvature", "einstein_dtensor"]
