"""Clifford algebra of a quadratic form, gamma matrices, vielbeins, spin
d-connection and the discrete Dirac d-operator on a lattice patch."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .connection import canonical_dconnection
from .curvature import _full_gamma
from .errors import DimensionTooLarge, FormMismatch, NotPositiveDefinite, PatchTooSmall
from .geometry import as_point, d_y, elongated

MAX_DIM = 8

# -- multivectors ---------------------------------------------------------------


def _wedge_blade(i, blade):
    """e_i ^ blade as (sign, blade) or None if i already occurs."""
    if i in blade:
        return None
    pos = sum(1 for b in blade if b < i)
    return (-1) ** pos, tuple(sorted(blade + (i,)))


@lru_cache(maxsize=None)
def _blade_product(a, b, q):
    """Geometric product of wedge-basis blades a, b under the form q (tuple of tuples).

    Uses e_i B = e_i _| B + e_i ^ B and, for a = e_i ^ A', the identity
    a B = e_i (A' B) - (e_i _| A') B.
    """
    if not a:
        return {b: 1.0}
    i, rest = a[0], a[1:]
    out = {}
    for blade, c in _blade_product(rest, b, q).items():
        for bl, cc in _vector_times_blade(i, blade, q).items():
            out[bl] = out.get(bl, 0.0) + c * cc
    for blade, c in _contract(i, rest, q).items():
        for bl, cc in _blade_product(blade, b, q).items():
            out[bl] = out.get(bl, 0.0) - c * cc
    return {k: v for k, v in out.items() if v != 0.0}


def _contract(i, blade, q):
    """Left contraction e_i _| blade."""
    out = {}
    for j, bj in enumerate(blade):
        w = q[i][bj]
        if w != 0.0:
            key = blade[:j] + blade[j + 1:]
            out[key] = out.get(key, 0.0) + (-1) ** j * w
    return out


def _vector_times_blade(i, blade, q):
    out = _contract(i, blade, q)
    w = _wedge_blade(i, blade)
    if w is not None:
        out[w[1]] = out.get(w[1], 0.0) + w[0]
    return out


class Multivector:
    """Element of the Clifford algebra Cl(V, q) in the wedge basis of a fixed frame.

    ``coeffs`` maps sorted index tuples (blades) to real coefficients.
    """

    __slots__ = ("coeffs", "q", "_qkey")

    def __init__(self, coeffs, q):
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or not np.allclose(q, q.T, rtol=0, atol=0):
            raise FormMismatch("quadratic form must be a symmetric square matrix")
        self.q = q
        self._qkey = tuple(map(tuple, q.tolist()))
        self.coeffs = {tuple(k): float(v) for k, v in coeffs.items() if v != 0.0}

    @property
    def dim(self):
        return self.q.shape[0]

    @classmethod
    def scalar(cls, s, q):
        return cls({(): s}, q)

    @classmethod
    def basis(cls, i, q):
        return cls({(i,): 1.0}, q)

    @classmethod
    def vector(cls, v, q):
        return cls({(i,): c for i, c in enumerate(v)}, q)

    def _check(self, other):
        if self._qkey != other._qkey:
            raise FormMismatch("multivectors carry different quadratic forms")

    def __add__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other, self.q)
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return Multivector(out, self.q)

    __radd__ = __add__

    def __neg__(self):
        return Multivector({k: -v for k, v in self.coeffs.items()}, self.q)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Multivector):
            return Multivector({k: v * other for k, v in self.coeffs.items()}, self.q)
        self._check(other)
        out = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                for k, c in _blade_product(ka, kb, self._qkey).items():
                    out[k] = out.get(k, 0.0) + va * vb * c
        return Multivector(out, self.q)

    def __rmul__(self, s):
        return self * s

    def grade(self, r):
        return Multivector({k: v for k, v in self.coeffs.items() if len(k) == r}, self.q)

    @property
    def scalar_part(self):
        return self.coeffs.get((), 0.0)

    def max_abs(self):
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def allclose(self, other, atol=1e-12):
        return (self - other).max_abs() <= atol

    def __repr__(self):
        terms = " + ".join(f"{v:g}*e{''.join(str(i + 1) for i in k) or '0'}"
                           for k, v in sorted(self.coeffs.items()))
        return f"Multivector({terms or '0'})"


def clifford_product(a, b):
    return a * b


# -- gamma matrices -----------------------------------------------------------------

SIGMA = (np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex))


def _chirality(gammas):
    d = len(gammas)
    prod = np.eye(gammas[0].shape[0], dtype=complex)
    for g in gammas:
        prod = prod @ g
    return (-1j) ** (d // 2) * prod


@lru_cache(maxsize=None)
def _flat_gammas(dim):
    if dim == 1:
        return (np.eye(1, dtype=complex),)
    if dim == 2:
        return SIGMA[:2]
    if dim % 2:
        even = _flat_gammas(dim - 1)
        return even + (_chirality(even),)
    prev = _flat_gammas(dim - 2)
    eye = np.eye(prev[0].shape[0], dtype=complex)
    return tuple(np.kron(SIGMA[0], g) for g in prev) + (np.kron(SIGMA[1], eye),
                                                        np.kron(SIGMA[2], eye))


@dataclass(frozen=True)
class CliffordRep:
    """Flat gammas (``gammas[a]``), chirality (even dim only) and an optional vielbein.

    ``vielbein[alpha, a]`` holds the components of the orthonormal frame vector
    a in the frame the metric was given in; curved gammas are
    gamma^alpha = vielbein[alpha, a] gamma^a.
    """

    gammas: np.ndarray
    chirality: np.ndarray | None
    vielbein: np.ndarray | None = None

    @property
    def dim(self):
        return self.gammas.shape[0]

    @property
    def size(self):
        return self.gammas.shape[1]

    def curved(self, vielbein=None):
        E = self.vielbein if vielbein is None else vielbein
        return np.einsum("ra,aij->rij", E, self.gammas)

    def with_metric(self, G):
        return CliffordRep(self.gammas, self.chirality, orthonormal_vielbein(G))


def gamma_representation(dim, metric=None):
    """Hermitian gammas with {g^a, g^b} = 2 delta^ab; size 2^(dim // 2)."""
    if not 1 <= dim <= MAX_DIM:
        raise DimensionTooLarge(f"dimension {dim} outside 1..{MAX_DIM}")
    g = np.array(_flat_gammas(dim))
    chi = _chirality(list(g)) if dim % 2 == 0 else None
    E = orthonormal_vielbein(metric) if metric is not None else None
    return CliffordRep(g, chi, E)


def orthonormal_vielbein(block):
    """Symmetric inverse square root E = G^(-1/2), so that E^T G E = I."""
    G = np.asarray(getattr(block, "matrix", block), dtype=float)
    G = 0.5 * (G + G.T)
    lam, Q = np.linalg.eigh(G)
    if lam.size and lam.min() <= 0:
        raise NotPositiveDefinite(f"metric block has eigenvalue {lam.min():.3e} <= 0")
    return (Q / np.sqrt(lam)) @ Q.T


def _vielbein_derivative(G, dG):
    """d(G^(-1/2)) along each direction; dG[..., mu] is the derivative of G."""
    lam, Q = np.linalg.eigh(0.5 * (G + G.T))
    s = np.sqrt(lam)
    E = (Q / s) @ Q.T
    denom = s[:, None] + s[None, :]
    out = np.empty_like(dG)
    for mu in range(dG.shape[-1]):
        dX = Q @ ((Q.T @ dG[..., mu] @ Q) / denom) @ Q.T
        out[..., mu] = -E @ dX @ E
    return E, out


def _block_diag(g, h):
    n, m = g.shape[0], h.shape[0]
    G = np.zeros((n + m, n + m) + g.shape[2:])
    G[:n, :n] = g
    G[n:, n:] = h
    return G


# -- spin connection ----------------------------------------------------------------

@dataclass(frozen=True)
class SpinData:
    """Per-point spin geometry: vielbein, curved gammas and the matrices S_mu."""

    vielbein: np.ndarray
    gammas: np.ndarray
    omega: np.ndarray      # omega[a, b, mu] in the orthonormal frame
    S: np.ndarray          # S[mu] (k x k)


def spin_data(conn, rep, u):
    """Spin connection of a d-connection in the orthonormal frame E = G^(-1/2).

    omega^a_b_mu = theta^a_alpha (e_mu E^alpha_b + Gam^alpha_beta_mu E^beta_b) and
    S_mu = (1/4) omega_ab_mu gamma^a gamma^b, which gives [S_mu, gamma^c] = -omega^c_d_mu gamma^d.
    """
    dm = conn.dmetric
    n, m = dm.n, dm.m
    u = as_point(u, n)
    g, h, N = dm.jets(u, 1)
    N0 = N.truncate(0)
    dg = np.concatenate([elongated(g, N0, n, m).value, d_y(g, n, m).value], axis=-1)
    dh = np.concatenate([elongated(h, N0, n, m).value, d_y(h, n, m).value], axis=-1)
    G = _block_diag(g.value, h.value)
    dG = _block_diag(dg, dh)
    orthonormal_vielbein(G)  # positivity check with the documented error
    E, dE = _vielbein_derivative(G, dG)
    theta = np.linalg.inv(E)
    Gam = _full_gamma(conn.jets(u, 0), n, m).value     # [alpha, beta, mu]
    omega = np.einsum("xa,abm->xbm", theta, dE + np.einsum("abm,bc->acm", Gam, E))
    gam = rep.gammas
    pair = np.einsum("aij,bjk->abik", gam, gam)
    S = 0.25 * np.einsum("abm,abik->mik", omega, pair)
    return SpinData(E, np.einsum("ra,aij->rij", E, gam), omega, S)


def spin_dconnection_term(conn, rep, u, mu, frame="orthonormal"):
    """The mu-th spin connection matrix.

    ``frame="orthonormal"`` returns S_mu built from the orthonormal-frame
    connection form (anti-Hermitian for metric-compatible connections).
    ``frame="adapted"`` returns -(1/4) Gam^alpha_beta_mu gamma_alpha gamma^beta with
    curved gammas and the index lowered by the block d-metric at ``u``.
    """
    if frame == "orthonormal":
        return spin_data(conn, rep, u).S[mu]
    if frame != "adapted":
        raise ValueError(f"unknown frame {frame!r}")
    dm = conn.dmetric
    p = dm.at(u)
    G = _block_diag(p.g, p.h)
    up = rep.curved(orthonormal_vielbein(G))
    down = np.einsum("ab,bij->aij", G, up)
    Gam = _full_gamma(conn.jets(as_point(u, dm.n), 0), dm.n, dm.m).value
    return -0.25 * np.einsum("ab,aij,bjk->ik", Gam[:, :, mu], down, up)


# -- lattice ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """Regular grid over the chart; ``bounds[k] = (lo, hi)``, ``counts[k]`` sites."""

    bounds: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.bounds) != len(self.counts):
            raise ValueError("bounds and counts differ in length")
        for (lo, hi), c in zip(self.bounds, self.counts):
            if c < 3:
                raise PatchTooSmall(f"each axis needs at least 3 sites, got {c}")
            if not hi > lo:
                raise ValueError(f"empty interval ({lo}, {hi})")

    @property
    def ndim(self):
        return len(self.counts)

    @property
    def spacing(self):
        return np.array([(hi - lo) / (c - 1) for (lo, hi), c in zip(self.bounds, self.counts)])

    @property
    def nsites(self):
        return int(np.prod(self.counts))

    def axes(self):
        return [np.linspace(lo, hi, c) for (lo, hi), c in zip(self.bounds, self.counts)]

    def points(self):
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def multi_index(self, site):
        return np.unravel_index(site, self.counts)

    def site(self, idx):
        return int(np.ravel_multi_index(tuple(idx), self.counts))

    def nearest(self, point):
        idx = [int(np.argmin(np.abs(ax - p))) for ax, p in zip(self.axes(), point)]
        return self.site(idx)

    def interior(self):
        idx = np.indices(self.counts).reshape(self.ndim, -1)
        c = np.array(self.counts)[:, None]
        return np.all((idx > 0) & (idx < c - 1), axis=0)

    def weights(self):
        """Trapezoid quadrature weights per site."""
        w = np.ones(1)
        for (lo, hi), c in zip(self.bounds, self.counts):
            wk = np.full(c, (hi - lo) / (c - 1))
            wk[[0, -1]] *= 0.5
            w = np.multiply.outer(w, wk).ravel()
        return w

    def central_difference(self, axis):
        """Sparse central difference along ``axis``; rows at the boundary drop the missing neighbour."""
        mats = []
        for k, c in enumerate(self.counts):
            if k == axis:
                hk = self.spacing[k]
                mats.append(sp.diags([-np.ones(c - 1), np.ones(c - 1)], [-1, 1]) / (2 * hk))
            else:
                mats.append(sp.identity(c))
        out = mats[0]
        for mtx in mats[1:]:
            out = sp.kron(out, mtx)
        return sp.csr_matrix(out)


@dataclass
class DiscreteDiracOperator:
    """D = -i sum_mu gamma^mu(site) (delta_mu + S_mu(site)) on a lattice of spinors.

    ``matrix`` acts on vectors ordered site-major (site * k + spinor index).
    ``deriv[mu]`` are the scalar difference operators delta_mu, ``ginv[s]`` the
    inverse block d-metric at site s; ``gammas[s, mu]`` the curved gammas.
    """

    lattice: Lattice
    matrix: sp.csr_matrix
    deriv: list
    gammas: np.ndarray
    ginv: np.ndarray
    volume_density: np.ndarray
    chirality: np.ndarray | None
    n: int
    m: int

    @property
    def spinor_size(self):
        return self.gammas.shape[-1]

    def site_operator(self, M):
        """Block-diagonal operator with the same k x k matrix on each site."""
        return sp.kron(sp.identity(self.lattice.nsites), sp.csr_matrix(M), format="csr")

    def multiplication(self, f):
        return sp.kron(sp.diags(np.asarray(f, dtype=float)), sp.identity(self.spinor_size), format="csr")

    def split_parts(self):
        """(h-part, v-part) of the operator without spin terms."""
        k = self.spinor_size
        parts = []
        for rng in (range(self.n), range(self.n, self.n + self.m)):
            acc = sp.csr_matrix((self.lattice.nsites * k,) * 2, dtype=complex)
            for mu in rng:
                acc = acc + _gamma_times(self.deriv[mu], self.gammas[:, mu]) * (-1j)
            parts.append(acc)
        return tuple(parts)

    def to_coo_text(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{coo.row[i]} {coo.col[i]} {float(coo.data[i].real)!r} {float(coo.data[i].imag)!r}"
                 for i in order]
        return "\n".join(lines) + ("\n" if lines else "")


def _gamma_times(Dmu, gam_sites):
    """Sparse operator (Dmu (x) 1) with row-site gamma matrix: gamma(row) * Dmu[row, col]."""
    Dmu = sp.coo_matrix(Dmu)
    k = gam_sites.shape[-1]
    S = Dmu.shape[0] * k
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    rows = (Dmu.row[:, None] * k + ii.ravel()[None, :]).ravel()
    cols = (Dmu.col[:, None] * k + jj.ravel()[None, :]).ravel()
    vals = (Dmu.data[:, None] * gam_sites[Dmu.row].reshape(-1, k * k)).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(S, S))


def assemble_discrete_dirac(dm, lattice, spin=True, conn=None):
    """Discrete Dirac d-operator with central differences and Dirichlet truncation.

    The lattice axes are (x1..xn, y1..ym). The h-derivatives are realised as
    e_k = d_k - N^a_k(site) d_a with central differences on both terms.
    ``spin=False`` omits the spin connection (it is site-diagonal and drops out
    of every commutator with a function).
    """
    n, m = dm.n, dm.m
    dim = n + m
    if lattice.ndim != dim:
        raise ValueError(f"lattice has {lattice.ndim} axes, chart has {dim}")
    rep = gamma_representation(dim)
    k = rep.size
    pts = lattice.points()
    S = lattice.nsites
    cd = [lattice.central_difference(ax) for ax in range(dim)]
    Ns = np.empty((S, m, n))
    E = np.empty((S, dim, dim))
    ginv = np.empty((S, dim, dim))
    dens = np.empty(S)
    spins = np.zeros((S, dim, k, k), dtype=complex)
    if spin and conn is None:
        conn = canonical_dconnection(dm)
    for s in range(S):
        u = as_point(pts[s], n)
        if spin:
            data = spin_data(conn, rep, u)
            E[s] = data.vielbein
            spins[s] = data.S
            p = dm.at(u)
        else:
            p = dm.at(u)
            E[s] = orthonormal_vielbein(_block_diag(p.g, p.h))
        Ns[s] = p.N
        G = _block_diag(p.g, p.h)
        ginv[s] = np.linalg.inv(G)
        dens[s] = np.sqrt(np.linalg.det(p.g)) * (np.sqrt(np.linalg.det(p.h)) if m else 1.0)
    deriv = []
    for mu in range(n):
        op = cd[mu]
        for a in range(m):
            op = op - sp.diags(Ns[:, a, mu]) @ cd[n + a]
        deriv.append(sp.csr_matrix(op))
    deriv.extend(cd[n:])
    gam = np.einsum("sra,aij->srij", E, rep.gammas)
    M = sp.csr_matrix((S * k, S * k), dtype=complex)
    for mu in range(dim):
        M = M + _gamma_times(deriv[mu], gam[:, mu])
    if spin:
        diag = np.einsum("smij,smjk->sik", gam, spins)
        M = M + sp.block_diag(list(diag), format="csr")
    M = (-1j * M).tocsr()
    return DiscreteDiracOperator(lattice, M, deriv, gam, ginv, dens, rep.chirality, n, m)


def spinor_scalar_product(psi, phi, D):
    """sum_sites w_s sqrt(det g) sqrt(det h) (psi_s, phi_s) with trapezoid weights w."""
    k = D.spinor_size
    psi = np.asarray(psi).reshape(-1, k)
    phi = np.asarray(phi).reshape(-1, k)
    w = D.lattice.weights() * D.volume_density
    return complex(np.sum(w * np.einsum("si,si->s", psi.conj(), phi)))


def anticommutator_norm(A, B):
    """Largest absolute entry of AB + BA (sparse or dense)."""
    C = A @ B + B @ A
    if sp.issparse(C):
        return float(np.abs(C.data).max()) if C.nnz else 0.0
    return float(np.abs(C).max())


def chirality_operator(D):
    if D.chirality is None:
        raise DimensionTooLarge("chirality exists only in even dimension")
    return D.site_operator(D.chirality)


def flat_anticommutators(rep):
    """Max deviation of {g^a, g^b} from 2 delta^ab I over all pairs."""
    g = rep.gammas
    eye = np.eye(rep.size)
    worst = 0.0
    for a, b in itertools.product(range(rep.dim), repeat=2):
        ac = g[a] @ g[b] + g[b] @ g[a]
        worst = max(worst, float(np.abs(ac - 2.0 * (a == b) * eye).max()))
    return worst
