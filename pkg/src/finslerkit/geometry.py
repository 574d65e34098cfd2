"""Fundamental Lagrange-Finsler objects: Hessian metric, spray, canonical
N-connection, N-adapted frames, nonholonomy, Sasaki d-metric and the
off-diagonal metric ansatz.

Index conventions used throughout the package:

* ``N[a, i]`` is N^a_i (shape ``(m, n)``);
* ``omega[a, i, j]`` is Omega^a_ij, ``W[b, i, a]`` is W^b_ia = dN^b_i/dy^a;
* metric blocks ``g`` (n x n) and ``h`` (m x m) are in the N-adapted frame.

Every field is exposed twice: ``jet(u, order)`` returns a :class:`~finslerkit.jets.Jet`
truncated at ``order`` (derivatives for later stages), ``at(u)`` returns plain arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsl, jets
from .errors import DegenerateHessian, DimensionMismatch, SingularVBlock
from .jets import ChartPoint, Jet

#: Metric blocks with a larger condition number are treated as degenerate.
MAX_CONDITION = 1e12


def as_point(u, n):
    if isinstance(u, ChartPoint):
        return u
    return ChartPoint.from_array(u, n)


def check_block(mat, what="metric block"):
    """Raise DegenerateHessian for a (numerically) singular symmetric block."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return
    det = float(np.linalg.det(mat))
    cond = float(np.linalg.cond(mat)) if np.all(np.isfinite(mat)) else np.inf
    if det == 0.0 or not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateHessian(det, cond, f"{what} is degenerate")


# -- jet helpers shared with the connection and curvature modules -------------

def d_x(f, n):
    """Stack of d/dx^k over a new trailing axis."""
    return Jet.stack([f.deriv(k) for k in range(n)], axis=f.ndim)


def d_y(f, n, m):
    """Stack of d/dy^a over a new trailing axis."""
    if m == 0:
        c = np.zeros(f.shape + (0,) + (jets.ncoef(f.nvars, f.order - 1),))
        return Jet(c, f.nvars, f.order - 1)
    return Jet.stack([f.deriv(n + a) for a in range(m)], axis=f.ndim)


def elongated(f, nj, n, m):
    """N-elongated derivatives e_k f = d_k f - N^a_k d_a f on a trailing axis.

    ``nj`` is the N-connection jet (shape (m, n)).
    """
    dx = d_x(f, n)
    if m == 0:
        return dx
    dy = d_y(f, n, m)
    letters = "pqrs"[:f.ndim]
    return dx - jets.einsum(f"ak,{letters}a->{letters}k", nj, dy)


def y_jet(u, order):
    """Jet vector of the fibre coordinates y (shape (m,))."""
    return jets.seed_vector(u, order)[u.n:]


# -- Lagrangian-derived objects ------------------------------------------------

def _hessian_y(lj, n):
    """(1/2) d^2 L / dy^i dy^j as a jet (order lowered by two)."""
    rows = []
    for i in range(n):
        di = lj.deriv(n + i)
        rows.append([di.deriv(n + j) * 0.5 for j in range(n)])
    g = Jet.from_nested(rows)
    # the coefficient arrays of g[i,j] and g[j,i] coincide only up to rounding
    return (g + g.T) * 0.5


def _spray(lj, u, n):
    """Spray coefficients G^i as a jet (order lowered by two)."""
    order = lj.order - 2
    g = _hessian_y(lj, n)
    y = y_jet(u, order)
    mixed = Jet.from_nested([[lj.deriv(n + j).deriv(k) for k in range(n)] for j in range(n)])
    dlx = Jet.stack([lj.deriv(k).truncate(order) for k in range(n)])
    v = jets.einsum("jk,k->j", mixed, y) - dlx
    return jets.einsum("ij,j->i", jets.inv(g), v) * 0.25, g


def _require_tangent(u):
    if u.n != u.m:
        raise DimensionMismatch(f"tangent-bundle model needs n == m, got n={u.n}, m={u.m}")


@dataclass(frozen=True)
class MetricBlock:
    matrix: np.ndarray
    point: ChartPoint

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    @property
    def cond(self):
        return float(np.linalg.cond(self.matrix))

    @property
    def is_symmetric(self):
        return bool(np.allclose(self.matrix, self.matrix.T, rtol=0, atol=1e-12))

    @property
    def is_positive_definite(self):
        return bool(np.all(np.linalg.eigvalsh(self.matrix) > 0))


def hessian_metric(L, u):
    """Lagrange fundamental form g_ij = (1/2) d^2L/dy^i dy^j at ``u``."""
    _require_tangent(u)
    g = _hessian_y(dsl.jet_at(L, u, 2), u.n).value
    check_block(g, "Hessian metric")
    return MetricBlock(g, u)


def lagrangian_derivatives(L, u):
    """(dL/dx, g, M) at ``u`` with g the Hessian metric and M[j, k] = d^2L/dy^j dx^k."""
    _require_tangent(u)
    n = u.n
    _, grad, hess = jets.value_gradient_hessian(dsl.jet_at(L, u, 2))
    g = 0.5 * hess[n:, n:]
    g = 0.5 * (g + g.T)
    check_block(g, "Hessian metric")
    return grad[:n], g, hess[n:, :n]


def spray_coefficients(L, u):
    """G^i = (1/4) g^ij (d^2L/dy^j dx^k y^k - dL/dx^j)."""
    dlx, g, M = lagrangian_derivatives(L, u)
    return 0.25 * np.linalg.solve(g, M @ u.y - dlx)


def _lagrangian_fields(L, u, order):
    """(g, N) jets at ``order`` from one evaluation of L at ``order + 3``."""
    _require_tangent(u)
    n = u.n
    lj = dsl.jet_at(L, u, order + 3)
    check_block(_hessian_y(lj.truncate(2), n).value, "Hessian metric")
    G, g = _spray(lj, u, n)
    return g.truncate(order), d_y(G, n, n)


class NConnection:
    """Coefficients N^a_i(u) evaluated lazily through jets."""

    def __init__(self, n, m, jet_fn, source="direct"):
        self.n = n
        self.m = m
        self._jet_fn = jet_fn
        self.source = source

    def jet(self, u, order):
        u = as_point(u, self.n)
        return self._jet_fn(u, order)

    def at(self, u):
        return self.jet(u, 0).value

    __call__ = at

    @classmethod
    def zero(cls, n, m):
        def fn(u, order):
            return Jet.constant(np.zeros((m, n)), u.n + u.m, order)
        return cls(n, m, fn, "zero")

    @classmethod
    def from_expressions(cls, exprs, chart):
        """``exprs[a][i]`` is the expression of N^a_i."""
        n, m = chart.n, chart.m

        def fn(u, order):
            seeds = jets.seed(u, order)
            if m == 0:
                return Jet.constant(np.zeros((0, n)), u.n + u.m, order)
            return Jet.from_nested([[dsl.evaluate_on_jets(exprs[a][i], seeds)
                                     for i in range(n)] for a in range(m)])
        return cls(n, m, fn, "direct")

    @classmethod
    def from_lagrangian(cls, L, n):
        def fn(u, order):
            return _lagrangian_fields(L, u, order)[1]
        return cls(n, n, fn, "canonical")


def canonical_nconnection(L, n):
    """Canonical N-connection N^i_j = dG^i/dy^j of a regular Lagrangian."""
    return NConnection.from_lagrangian(L, n)


def nonholonomy_jet(nj, n, m):
    """(W, Omega) jets from an N-connection jet of order >= 1."""
    dnx = d_x(nj, n)          # [a, i, j] = d_j N^a_i
    dny = d_y(nj, n, m)       # [a, i, b] = d_b N^a_i
    t = jets.einsum("bi,ajb->aij", nj.truncate(dny.order), dny)
    omega = (dnx - dnx.swapaxes(1, 2)) + (t - t.swapaxes(1, 2))
    return dny, omega


def nonholonomy(nconn, u):
    """Anholonomy coefficients ``(W, Omega)`` with W[b,i,a] = dN^b_i/dy^a."""
    u = as_point(u, nconn.n)
    W, omega = nonholonomy_jet(nconn.jet(u, 1), nconn.n, nconn.m)
    return W.value, omega.value


# -- d-metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class DMetricPoint:
    g: np.ndarray
    h: np.ndarray
    N: np.ndarray


class DMetric:
    """Block d-metric [g, h] together with its N-connection.

    ``jets(u, order)`` returns ``(g, h, N)`` jets truncated at ``order``.
    """

    def __init__(self, n, m, jet_fn, nconn, lagrangian=None, source="direct"):
        self.n = n
        self.m = m
        self._jet_fn = jet_fn
        self.nconn = nconn
        self.lagrangian = lagrangian
        self.source = source

    def point(self, u):
        return as_point(u, self.n)

    def jets(self, u, order):
        return self._jet_fn(self.point(u), order)

    def at(self, u):
        g, h, N = self.jets(u, 0)
        return DMetricPoint(g.value, h.value, N.value)

    @classmethod
    def from_expressions(cls, g, h, nconn, chart):
        n, m = chart.n, chart.m
        ncon = NConnection.from_expressions(nconn, chart) if m else NConnection.zero(n, 0)

        def fn(u, order):
            seeds = jets.seed(u, order)
            gj = Jet.from_nested([[dsl.evaluate_on_jets(g[i][j], seeds) for j in range(n)]
                                  for i in range(n)])
            if m:
                hj = Jet.from_nested([[dsl.evaluate_on_jets(h[a][b], seeds) for b in range(m)]
                                      for a in range(m)])
            else:
                hj = Jet.constant(np.zeros((0, 0)), n, order)
            return gj, hj, ncon.jet(u, order)
        return cls(n, m, fn, ncon, source="direct")

    @classmethod
    def riemannian(cls, g, chart):
        """Base-only metric g_ij(x): no fibre directions (m = 0)."""
        if chart.m != 0:
            chart = dsl.ChartSpec(chart.n, 0)
        return cls.from_expressions(g, (), (), chart)

    @classmethod
    def from_definition(cls, definition):
        if definition.is_lagrangian:
            return sasaki_dmetric(definition.lagrangian, definition.chart.n)
        return cls.from_expressions(definition.g, definition.h, definition.nconn,
                                    definition.chart)


def sasaki_dmetric(L, n):
    """Sasaki-type lift: g = h = Hessian metric, N = canonical N-connection."""

    def fn(u, order):
        g, N = _lagrangian_fields(L, u, order)
        return g, g, N
    return DMetric(n, n, fn, NConnection.from_lagrangian(L, n), lagrangian=L, source="sasaki")


def assemble_offdiagonal(dm, u):
    """Coordinate-basis metric of the off-diagonal ansatz built from (g, h, N)."""
    p = dm.at(u) if isinstance(dm, DMetric) else dm
    return _assemble(p.g, p.h, p.N)


def _assemble(g, h, N):
    n, m = g.shape[0], h.shape[0]
    G = np.zeros((n + m, n + m))
    hN = h @ N                      # [a, j] = h_ae N^e_j
    G[:n, :n] = g + N.T @ hN
    G[:n, n:] = hN.T
    G[n:, :n] = hN
    G[n:, n:] = h
    return G


def decompose_offdiagonal(G, split):
    """Invert the ansatz: recover (g, h, N) from a symmetric coordinate metric."""
    n, m = split
    G = np.asarray(G, dtype=float)
    if G.shape != (n + m, n + m):
        raise DimensionMismatch(f"matrix shape {G.shape} does not match split {split}")
    h = G[n:, n:]
    try:
        if m and np.linalg.cond(h) > MAX_CONDITION:
            raise np.linalg.LinAlgError
        N = np.linalg.solve(h, G[n:, :n]) if m else np.zeros((0, n))
    except np.linalg.LinAlgError:
        raise SingularVBlock("lower-right (v) block is singular") from None
    g = G[:n, :n] - N.T @ h @ N
    return DMetricPoint(0.5 * (g + g.T), h.copy(), N)


@dataclass(frozen=True)
class AdaptedFrame:
    """Frame transform of the off-diagonal ansatz.

    ``e`` is the block-triangular matrix [[I, N^T], [0, I]] so that the
    coordinate metric equals ``e @ diag(g, h) @ e.T``; ``theta`` is its
    inverse [[I, -N^T], [0, I]], whose rows are the N-elongated vectors
    e_i = d_i - N^a_i d_a and e_a = d_a in coordinate components.
    """

    e: np.ndarray
    theta: np.ndarray


def adapted_frame(nconn, u):
    N = nconn.at(u) if isinstance(nconn, NConnection) else np.asarray(nconn, dtype=float)
    m, n = N.shape
    e = np.eye(n + m)
    e[:n, n:] = N.T
    theta = np.eye(n + m)
    theta[:n, n:] = -N.T
    return AdaptedFrame(e, theta)


def almost_complex(nconn, u, basis="coordinate"):
    """Almost complex structure F(e_i) = e_(n+i), F(e_(n+i)) = -e_i.

    With ``basis="adapted"`` the constant matrix [[0, -I], [I, 0]] is returned;
    otherwise its coordinate-basis form, which depends on N.
    """
    N = nconn.at(u) if isinstance(nconn, NConnection) else np.asarray(nconn, dtype=float)
    m, n = N.shape
    if n != m:
        raise DimensionMismatch(f"almost complex structure needs n == m, got {n}, {m}")
    F = np.zeros((2 * n, 2 * n))
    F[n:, :n] = np.eye(n)
    F[:n, n:] = -np.eye(n)
    if basis == "adapted":
        return F
    if basis != "coordinate":
        raise ValueError(f"unknown basis {basis!r}")
    fr = adapted_frame(N, u)
    # columns of theta.T are the adapted vectors in coordinate components
    return fr.theta.T @ F @ fr.e.T
