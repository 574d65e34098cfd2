"""Connes spectral distance on a discrete Dirac operator.

For a site-diagonal real function f the commutator [D, f] has, at an interior
site s, the row-block sum -i gamma^mu(s) (delta_mu f)(s), whose spectral norm is
sqrt(a^T G^{-1}(s) a) with a = (delta f)(s). The distance between sites p1, p2 is

    sup { f(p2) - f(p1) : that norm <= 1 at every interior site }.

Central differences couple only sites of equal index parity along each axis
(the stencil of a site never contains the site itself), so the constraint graph
splits into parity classes; pairs in different classes are reported as
disconnected instead of returning an infinite distance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import DisconnectedPatch, SolverStalled


def commutator(D, f):
    F = D.multiplication(f)
    return (D.matrix @ F - F @ D.matrix).tocsr()


def commutator_blocks(D, f, method="closed"):
    """Spectral norm of the site block of [D, f] at every site.

    ``method="closed"`` uses sqrt(a^T G^-1 a); ``method="matrix"`` sums the
    row blocks of the explicit commutator and takes matrix 2-norms.
    """
    f = np.asarray(f, dtype=float)
    if method == "closed":
        a = np.stack([d @ f for d in D.deriv], axis=-1)
        q = np.einsum("sm,smn,sn->s", a, D.ginv, a)
        return np.sqrt(np.maximum(q, 0.0))
    if method != "matrix":
        raise ValueError(f"unknown method {method!r}")
    blocks = row_blocks(D, f)
    return np.array([np.linalg.norm(b, 2) for b in blocks])


def row_blocks(D, f):
    """Site blocks sum_t [D, f]_(s, t) of the explicit commutator, shape (sites, k, k)."""
    k = D.spinor_size
    C = commutator(D, np.asarray(f, dtype=float)).tocoo()
    blocks = np.zeros((D.lattice.nsites, k, k), dtype=complex)
    np.add.at(blocks, (C.row // k, C.row % k, C.col % k), C.data)
    return blocks


def commutator_identity_error(D, f, grad):
    """Max over interior sites of |row block of [D, f] + i gamma^mu(s) grad_mu f(s)|.

    ``grad[s, mu]`` is the exact elongated derivative of f at site s.
    """
    blocks = row_blocks(D, f)
    expected = -1j * np.einsum("smij,sm->sij", D.gammas, np.asarray(grad, dtype=float))
    inter = D.lattice.interior()
    return float(np.abs(blocks[inter] - expected[inter]).max())


@dataclass
class LipschitzProgram:
    """Constraint data restricted to the parity class that holds the endpoints."""

    sites: np.ndarray          # global indices of the free variables
    A: list                    # A[mu]: (rows x len(sites)) difference operators
    ginv: np.ndarray           # (rows, dim, dim)
    rows: np.ndarray           # global indices of the constrained sites
    p1: int                    # local index
    p2: int

    def norms(self, f):
        a = np.stack([A @ f for A in self.A], axis=-1)
        return np.sqrt(np.maximum(np.einsum("rm,rmn,rn->r", a, self.ginv, a), 0.0))


def constraint_graph(D):
    """Sparse adjacency linking sites that share an interior stencil row."""
    S = D.lattice.nsites
    inter = np.where(D.lattice.interior())[0]
    pattern = sum((abs(d) for d in D.deriv), sp.csr_matrix((S, S)))
    P = sp.csr_matrix(pattern)[inter]
    P.data[:] = 1.0
    # two sites are linked if some interior row touches both
    return (P.T @ P).tocsr()


def lipschitz_program(D, p1, p2):
    S = D.lattice.nsites
    adj = constraint_graph(D)
    ncomp, labels = connected_components(adj, directed=False)
    if labels[p1] != labels[p2]:
        raise DisconnectedPatch(f"sites {p1} and {p2} are not linked by interior constraints")
    sites = np.where(labels == labels[p1])[0]
    local = -np.ones(S, dtype=int)
    local[sites] = np.arange(len(sites))
    inter = np.where(D.lattice.interior())[0]
    sub = [sp.csr_matrix(d)[inter][:, sites] for d in D.deriv]
    touched = np.zeros(len(inter), dtype=bool)
    for A in sub:
        touched |= np.asarray(abs(A).sum(axis=1)).ravel() > 0
    rows = inter[touched]
    A = [sp.csr_matrix(a[touched]) for a in sub]
    return LipschitzProgram(sites, A, D.ginv[rows], rows, int(local[p1]), int(local[p2]))


def path_upper_bound(D, p1, p2):
    """Shortest chain of single-axis steps; each interior row bounds |a_mu| by sqrt(G_mu_mu).

    Valid as an upper bound when every difference operator is a plain central
    difference (no N-elongation), otherwise returns None.
    """
    S = D.lattice.nsites
    derivs = [sp.csr_matrix(d) for d in D.deriv]
    if any(np.diff(d.indptr).max(initial=0) > 2 for d in derivs):
        return None
    rows, cols, w = [], [], []
    for s in np.where(D.lattice.interior())[0]:
        G = np.linalg.inv(D.ginv[s])
        for mu, d in enumerate(derivs):
            lo, hi = d.indptr[s], d.indptr[s + 1]
            if hi - lo != 2:
                continue
            j, k = d.indices[lo:hi]
            # |f_k - f_j| = |a_mu| / coef <= sqrt(G_mu_mu) / coef
            wt = np.sqrt(G[mu, mu]) / abs(d.data[lo])
            rows += [j, k]
            cols += [k, j]
            w += [wt, wt]
    graph = sp.csr_matrix((w, (rows, cols)), shape=(S, S))
    dist = dijkstra(graph, directed=False, indices=p1, min_only=True)
    return float(dist[p2])


@dataclass
class DistanceResult:
    distance: float
    certificate: np.ndarray     # maximizing f on all sites (zero off the parity class)
    upper_bound: float | None
    iterations: int
    max_block_norm: float

    @property
    def gap(self):
        if self.upper_bound is None or not np.isfinite(self.upper_bound):
            return None
        return self.upper_bound - self.distance


def _smooth_ratio(prog, p):
    """-(f2 - f1) / (sum_r |a_r|^p)^(1/p) and its gradient."""
    Ts = [A.T.tocsr() for A in prog.A]

    def fun(f):
        a = np.stack([A @ f for A in prog.A], axis=-1)
        Ga = np.einsum("rmn,rn->rm", prog.ginv, a)
        nrm = np.sqrt(np.maximum(np.einsum("rm,rm->r", a, Ga), 1e-300))
        top = nrm.max()
        if top == 0.0:
            g = np.zeros_like(f)
            g[prog.p2] -= 1.0
            g[prog.p1] += 1.0
            return -(f[prog.p2] - f[prog.p1]), g
        t = nrm / top
        s = np.sum(t ** p)
        M = top * s ** (1.0 / p)
        # dM/da_r = M^(1-p) |a_r|^(p-2) G a_r
        coef = (t ** (p - 2)) * s ** (1.0 / p - 1.0) / top
        dM_da = coef[:, None] * Ga
        dM = sum(T @ dM_da[:, mu] for mu, T in enumerate(Ts))
        obj = f[prog.p2] - f[prog.p1]
        dobj = np.zeros_like(f)
        dobj[prog.p2] += 1.0
        dobj[prog.p1] -= 1.0
        val = -obj / M
        grad = -(dobj / M - obj * dM / M ** 2)
        return val, grad
    return fun


def connes_distance(D, p1, p2, budget=20000, tol=0.01, powers=(8, 32, 128, 512)):
    """Lower bound (feasible value) on the spectral distance between two sites.

    The scale-invariant ratio (f(p2) - f(p1)) / max_s |[D, f]|_s is maximized
    through a smoothed p-norm of the block norms with increasing p (L-BFGS,
    warm-started), then the best iterate is rescaled by its true maximum block
    norm so that the returned certificate is exactly feasible. ``budget`` caps
    the total number of L-BFGS iterations; exhausting it while the relative gap
    to the path upper bound exceeds ``tol`` raises SolverStalled.
    """
    p1, p2 = int(p1), int(p2)
    S = D.lattice.nsites
    if p1 == p2:
        return DistanceResult(0.0, np.zeros(S), 0.0, 0, 0.0)
    prog = lipschitz_program(D, p1, p2)
    upper = path_upper_bound(D, p1, p2)
    pts = D.lattice.points()[prog.sites]
    # start from the linear function along the chord
    chord = pts[prog.p2] - pts[prog.p1]
    f = pts @ chord / max(np.linalg.norm(chord), 1e-300)
    used = 0
    best, best_f = -np.inf, f
    exhausted = False
    for p in powers:
        left = budget - used
        if left <= 0:
            exhausted = True
            break
        res = minimize(_smooth_ratio(prog, p), f, jac=True, method="L-BFGS-B",
                       options={"maxiter": left, "gtol": 1e-12, "ftol": 1e-15})
        used += res.nit
        if res.nit >= left and not res.success:
            exhausted = True
        f = res.x / max(prog.norms(res.x).max(), 1e-300)
        val = f[prog.p2] - f[prog.p1]
        if val > best:
            best, best_f = val, f
    full = np.zeros(S)
    full[prog.sites] = best_f
    mx = float(prog.norms(best_f).max())
    result = DistanceResult(float(best), full, upper, used, mx)
    if exhausted:
        gap = result.gap
        if gap is None or gap > tol * max(abs(upper), 1e-300):
            raise SolverStalled(used, float("nan") if gap is None else gap)
    return result


def lp_distance_1d(D, p1, p2):
    """Linear-programming oracle for one-dimensional lattices.

    In 1D the block norm at an interior site is |(f_{s+1} - f_{s-1}) / 2h| sqrt(g^{-1}),
    so the constraints are interval bounds on differences.
    """
    from scipy.optimize import linprog

    if D.lattice.ndim != 1:
        raise ValueError("the LP oracle handles one-dimensional lattices only")
    p1, p2 = int(p1), int(p2)
    S = D.lattice.nsites
    if p1 == p2:
        return 0.0
    prog = lipschitz_program(D, p1, p2)
    A = prog.A[0].toarray() * np.sqrt(prog.ginv[:, 0, 0])[:, None]
    c = np.zeros(len(prog.sites))
    c[prog.p2] = -1.0
    c[prog.p1] = 1.0
    A_ub = np.vstack([A, -A])
    b_ub = np.ones(2 * A.shape[0])
    bounds = [(None, None)] * len(prog.sites)
    bounds[prog.p1] = (0.0, 0.0)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverStalled(int(getattr(res, "nit", 0)), float("nan"))
    return float(-res.fun)


# -- report ---------------------------------------------------------------------------

@dataclass
class DistanceRow:
    p1: tuple
    p2: tuple
    connes: float
    geodesic: float
    ratio: float | None
    upper_bound: float | None

    def as_dict(self):
        return {"p1": list(self.p1), "p2": list(self.p2), "connes": self.connes,
                "geodesic": self.geodesic, "ratio": self.ratio,
                "relative_deviation": None if self.ratio is None else self.ratio - 1.0,
                "upper_bound": self.upper_bound}


def base_dirac(L, chart, lattice):
    """Dirac operator of the base metric g(x) of a y-quadratic Lagrangian."""
    from .clifford import assemble_discrete_dirac

    return assemble_discrete_dirac(base_dmetric(L, chart), lattice, spin=False)


def base_dmetric(L, chart, y0=None):
    """Riemannian d-metric (m = 0) with g_ij(x) = Hessian metric of L at fixed y0.

    Exact when the Hessian does not depend on y.
    """
    from . import dsl, jets
    from .geometry import DMetric, NConnection, _hessian_y
    from .jets import ChartPoint

    n = chart.n
    y0 = np.ones(n) if y0 is None else np.asarray(y0, dtype=float)

    def fn(u, order):
        lj = dsl.jet_at(L, ChartPoint(u.x, y0), order + 2)
        g = jets.restrict(_hessian_y(lj, n), n)
        return g, jets.Jet.constant(np.zeros((0, 0)), n, order), \
            jets.Jet.constant(np.zeros((0, n)), n, order)
    return DMetric(n, 0, fn, NConnection.zero(n, 0), source="base")


def distance_report(L, chart, lattice, pairs, budget=20000, tol=0.01, check_quadratic=True):
    """Connes vs geodesic distance for pairs of x-points snapped to lattice sites.

    ``L`` must be quadratic in y with y-independent Hessian g(x); the lattice
    covers x only. Pairs in different parity classes raise DisconnectedPatch.
    """
    from .dynamics import geodesic_distance
    from .errors import FormMismatch

    if check_quadratic and not _is_y_quadratic(L, chart, lattice):
        raise FormMismatch("distance report needs a Lagrangian quadratic in y")
    D = base_dirac(L, chart, lattice)
    pts = lattice.points()
    out = []
    for a, b in pairs:
        s1, s2 = lattice.nearest(a), lattice.nearest(b)
        x1, x2 = pts[s1], pts[s2]
        if s1 == s2:
            out.append(DistanceRow(tuple(map(float, x1)), tuple(map(float, x2)), 0.0, 0.0, None, 0.0))
            continue
        res = connes_distance(D, s1, s2, budget=budget, tol=tol)
        geo = geodesic_distance(L, x1, x2)
        out.append(DistanceRow(tuple(map(float, x1)), tuple(map(float, x2)), res.distance, geo,
                               res.distance / geo if geo > 0 else None, res.upper_bound))
    return out


def _is_y_quadratic(L, chart, lattice, samples=5, seed=0):
    from .geometry import hessian_metric
    from .jets import ChartPoint
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in lattice.bounds])
    hi = np.array([b[1] for b in lattice.bounds])
    for _ in range(samples):
        x = rng.uniform(lo, hi)
        g1 = hessian_metric(L, ChartPoint(x, rng.uniform(0.3, 1.5, chart.m))).matrix
        g2 = hessian_metric(L, ChartPoint(x, rng.uniform(-1.5, -0.3, chart.m))).matrix
        if not np.allclose(g1, g2, rtol=1e-9, atol=1e-12):
            return False
    return True
