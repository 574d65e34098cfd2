"""Truncated multivariate Taylor jets (forward-mode AD of arbitrary mixed order).

A :class:`Jet` stores the Taylor coefficients of one or more scalar functions of
``nvars`` variables around a base point, truncated at total degree ``order``.
The coefficient axis is the *last* axis of ``Jet.c``; any leading axes make the
jet a tensor of jets, so a metric block is a single ``Jet`` of shape ``(n, n)``.

Monomials are stored in graded order (all degree-0, then all degree-1, ...), so
truncating to a lower order is a prefix slice of the coefficient axis.
"""
from __future__ import annotations

import functools
import itertools
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError

#: Highest supported truncation order.  Full d-curvature of a Lagrangian-derived
#: d-metric needs fifth derivatives of L (the v-block L^a_bk contains dN/dy).
MAX_ORDER = 5


def ncoef(nvars, order):
    return math.comb(nvars + order, order)


@functools.lru_cache(maxsize=None)
def _degree_monomials(nvars, degree):
    # exponent tuples of fixed total degree, lexicographically descending
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def monomials(nvars, order):
    """Exponent tuples of total degree <= order, graded."""
    out = []
    for d in range(order + 1):
        out.extend(_degree_monomials(nvars, d))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _index(nvars, order):
    return {m: k for k, m in enumerate(monomials(nvars, order))}


@functools.lru_cache(maxsize=None)
def _second_order_index(nvars, order):
    idx = _index(nvars, order)
    unit = np.eye(nvars, dtype=int)
    grad = np.array([idx[tuple(unit[v])] for v in range(nvars)])
    hess = np.array([[idx[tuple(unit[p] + unit[q])] for q in range(nvars)] for p in range(nvars)])
    scale = np.where(np.eye(nvars, dtype=bool), 2.0, 1.0)
    return grad, hess, scale


@functools.lru_cache(maxsize=None)
def _restrict_index(nvars, keep, order):
    idx = _index(nvars, order)
    pad = (0,) * (nvars - keep)
    return np.array([idx[m + pad] for m in monomials(keep, order)])


def restrict(f, keep):
    """Jet in the first ``keep`` variables only (other variables frozen at the base point)."""
    return Jet(f.c[..., _restrict_index(f.nvars, keep, f.order)], keep, f.order)


def value_gradient_hessian(f):
    """(value, gradient, Hessian) of a scalar jet of order >= 2 as plain arrays."""
    if f.ndim != 0 or f.order < 2:
        raise ValueError("need a scalar jet of order >= 2")
    grad, hess, scale = _second_order_index(f.nvars, f.order)
    return float(f.c[0]), f.c[grad], f.c[hess] * scale


class _Tables:
    """Multiplication and differentiation tables for one (nvars, order)."""

    def __init__(self, nvars, order):
        monos = monomials(nvars, order)
        index = _index(nvars, order)
        self.size = len(monos)
        I, J, K = [], [], []
        for k, mk in enumerate(monos):
            for i, mi in enumerate(monos):
                if sum(mi) > sum(mk):
                    break
                mj = tuple(a - b for a, b in zip(mk, mi))
                if min(mj, default=0) < 0:
                    continue
                I.append(i)
                J.append(index[mj])
                K.append(k)
        self.I = np.asarray(I, dtype=np.intp)
        self.J = np.asarray(J, dtype=np.intp)
        K = np.asarray(K, dtype=np.intp)
        # K is sorted by construction; reduceat needs the segment starts
        self.starts = np.flatnonzero(np.r_[True, K[1:] != K[:-1]])
        self.deriv = []
        if order > 0:
            lower = monomials(nvars, order - 1)
            for v in range(nvars):
                src = np.empty(len(lower), dtype=np.intp)
                fac = np.empty(len(lower))
                for b, mb in enumerate(lower):
                    up = list(mb)
                    up[v] += 1
                    src[b] = index[tuple(up)]
                    fac[b] = up[v]
                self.deriv.append((src, fac))
        self.factorials = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=float)


@functools.lru_cache(maxsize=None)
def tables(nvars, order):
    return _Tables(nvars, order)


def _check_order(order):
    if not isinstance(order, numbers.Integral) or order < 0 or order > MAX_ORDER:
        raise ValueError(f"jet order must be an integer in 0..{MAX_ORDER}, got {order!r}")


class Jet:
    """Tensor of truncated Taylor series in ``nvars`` variables."""

    __slots__ = ("c", "nvars", "order")
    __array_priority__ = 100  # make ndarray * Jet defer to Jet.__rmul__

    def __init__(self, c, nvars, order):
        _check_order(order)
        c = np.asarray(c, dtype=float)
        if c.ndim == 0 or c.shape[-1] != ncoef(nvars, order):
            raise ValueError(f"coefficient axis must have length {ncoef(nvars, order)}")
        self.c = c
        self.nvars = nvars
        self.order = order

    # -- construction ------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars, order):
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (ncoef(nvars, order),))
        c[..., 0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, value, var, nvars, order):
        j = cls.constant(value, nvars, order)
        if order >= 1:
            j.c[..., 1 + var] = 1.0
        return j

    @classmethod
    def stack(cls, jets, axis=0):
        jets = list(jets)
        order = min(j.order for j in jets)
        nvars = jets[0].nvars
        return cls(np.stack([j.truncate(order).c for j in jets], axis=axis), nvars, order)

    @classmethod
    def from_nested(cls, rows):
        """Build a 2-D jet tensor from a nested list of scalar jets."""
        return cls.stack([cls.stack(r) for r in rows])

    # -- basic accessors ---------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def ndim(self):
        return self.c.ndim - 1

    @property
    def value(self):
        return self.c[..., 0]

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, idx):
        moved = np.moveaxis(self.c, -1, 0)
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(np.moveaxis(moved[(slice(None),) + idx], 0, -1), self.nvars, self.order)

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the truncation order of a jet")
        if order == self.order:
            return self
        return Jet(self.c[..., :ncoef(self.nvars, order)], self.nvars, order)

    def copy(self):
        return Jet(self.c.copy(), self.nvars, self.order)

    @property
    def T(self):
        return self.transpose()

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], tuple):
            axes = axes[0]
        return Jet(np.transpose(self.c, tuple(axes) + (self.ndim,)), self.nvars, self.order)

    def swapaxes(self, a, b):
        return Jet(np.swapaxes(self.c, a, b), self.nvars, self.order)

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        elif not isinstance(axis, tuple):
            axis = (axis,)
        axis = tuple(a % self.ndim for a in axis)  # never the coefficient axis
        return Jet(self.c.sum(axis=axis), self.nvars, self.order)

    # -- calculus ----------------------------------------------------------
    def deriv(self, var):
        """Partial derivative in variable ``var``; the result has order - 1."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = tables(self.nvars, self.order).deriv[var]
        return Jet(self.c[..., src] * fac, self.nvars, self.order - 1)

    def gradient(self):
        """Stack of all first partials along a new trailing tensor axis."""
        return Jet.stack([self.deriv(v) for v in range(self.nvars)], axis=self.ndim)

    def partial(self, multi_index):
        """True partial derivative values for exponent tuple ``multi_index``."""
        multi_index = tuple(int(a) for a in multi_index)
        if len(multi_index) != self.nvars:
            raise ValueError("multi-index length must equal the number of variables")
        if sum(multi_index) > self.order:
            raise ValueError("multi-index exceeds the jet order")
        k = _index(self.nvars, self.order)[multi_index]
        return self.c[..., k] * tables(self.nvars, self.order).factorials[k]

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, None

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is not None:
            return Jet(a.c + b.c, a.nvars, a.order)
        c = np.array(np.broadcast_to(a.c, np.broadcast_shapes(a.c.shape, np.shape(other) + (1,))))
        c[..., 0] = c[..., 0] + other
        return Jet(c, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            return Jet(a.c * np.asarray(other, dtype=float)[..., None], a.nvars, a.order)
        t = tables(a.nvars, a.order)
        prod = a.c[..., t.I] * b.c[..., t.J]
        return Jet(np.add.reduceat(prod, t.starts, axis=-1), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.c / np.asarray(other, dtype=float)[..., None], self.nvars, self.order)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


# -- tensor contraction ---------------------------------------------------------

def einsum(subscripts, a, b):
    """``np.einsum`` for two operands, either of which may be a Jet.

    Only explicit-output subscripts without ellipses are supported.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = a._coerce(b)
        t = tables(a.nvars, a.order)
        res = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.c[..., t.I], b.c[..., t.J])
        return Jet(np.add.reduceat(res, t.starts, axis=-1), a.nvars, a.order)
    if isinstance(a, Jet):
        return Jet(np.einsum(f"{sa}Z,{sb}->{out}Z", a.c, np.asarray(b, float)), a.nvars, a.order)
    if isinstance(b, Jet):
        return Jet(np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a, float), b.c), b.nvars, b.order)
    return np.einsum(subscripts, a, b)


def matmul(a, b):
    na = a.ndim if isinstance(a, Jet) else np.ndim(a)
    nb = b.ndim if isinstance(b, Jet) else np.ndim(b)
    sub = {(2, 2): "ij,jk->ik", (2, 1): "ij,j->i", (1, 2): "j,jk->k", (1, 1): "j,j->"}[(na, nb)]
    return einsum(sub, a, b)


def inv(a):
    """Inverse of a square jet matrix via the terminating Neumann series."""
    a0inv = np.linalg.inv(a.value)
    nil = a - a.value
    x = -einsum("ij,jk->ik", a0inv, nil)
    r = Jet.constant(a0inv, a.nvars, a.order)
    for _ in range(a.order):
        r = einsum("ij,jk->ik", x, r) + a0inv
    return r


# -- scalar functions by power-series composition -----------------------------

def _compose(a, coeffs):
    """sum_p coeffs[p] * (a - a0)**p; coeffs has shape (order+1,) + a.shape."""
    h = a - a.value
    r = Jet.constant(coeffs[a.order], a.nvars, a.order)
    for p in range(a.order - 1, -1, -1):
        r = r * h + coeffs[p]
    return r


def _as_jet_or_float(f_float, f_jet):
    def wrapper(a):
        if isinstance(a, Jet):
            return f_jet(a)
        return f_float(a)
    return wrapper


def _exp_jet(a):
    e = np.exp(a.value)
    coeffs = np.stack([e / math.factorial(p) for p in range(a.order + 1)])
    return _compose(a, coeffs)


def _log_jet(a):
    a0 = a.value
    if np.any(a0 <= 0):
        raise DomainError("log of a non-positive value")
    coeffs = [np.log(a0)]
    for p in range(1, a.order + 1):
        coeffs.append((-1.0) ** (p + 1) / (p * a0 ** p))
    return _compose(a, np.stack(coeffs))


def _sin_jet(a):
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    coeffs = np.stack([cycle[p % 4] / math.factorial(p) for p in range(a.order + 1)])
    return _compose(a, coeffs)


def _cos_jet(a):
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    coeffs = np.stack([cycle[p % 4] / math.factorial(p) for p in range(a.order + 1)])
    return _compose(a, coeffs)


def _float_log(x):
    if x <= 0:
        raise DomainError("log of a non-positive value")
    return math.log(x)


def reciprocal(a):
    if not isinstance(a, Jet):
        if a == 0:
            raise DomainError("division by zero")
        return 1.0 / a
    a0 = a.value
    if np.any(a0 == 0):
        raise DomainError("division by a jet with zero constant term")
    coeffs = np.stack([(-1.0) ** p / a0 ** (p + 1) for p in range(a.order + 1)])
    return _compose(a, coeffs)


def power(a, exponent):
    """``a ** exponent`` for integer or rational exponents.

    Non-integer exponents require a positive base so the jet stays real.
    """
    r = Fraction(exponent).limit_denominator(10**6) if not isinstance(exponent, Fraction) \
        else exponent
    if r.denominator == 1:
        k = r.numerator
        if k == 0:
            return a * 0.0 + 1.0 if isinstance(a, Jet) else 1.0
        base = a if k > 0 else reciprocal(a)
        out = base
        for _ in range(abs(k) - 1):
            out = out * base
        return out
    a0 = a.value if isinstance(a, Jet) else a
    if np.any(np.asarray(a0) <= 0):
        raise DomainError(f"non-integer power {r} of a non-positive value")
    if not isinstance(a, Jet):
        return float(a) ** float(r)
    rf = float(r)
    coeffs = []
    binom = 1.0
    for p in range(a.order + 1):
        coeffs.append(binom * a0 ** (rf - p))
        binom *= (rf - p) / (p + 1)
    return _compose(a, np.stack(coeffs))


def sqrt(a):
    a0 = a.value if isinstance(a, Jet) else a
    if np.any(np.asarray(a0) <= 0):
        raise DomainError("sqrt of a non-positive value")
    return power(a, Fraction(1, 2))


exp = _as_jet_or_float(math.exp, _exp_jet)
log = _as_jet_or_float(_float_log, _log_jet)
sin = _as_jet_or_float(math.sin, _sin_jet)
cos = _as_jet_or_float(math.cos, _cos_jet)


# -- chart points and seeding ---------------------------------------------------

@dataclass(frozen=True)
class ChartPoint:
    """A point u = (x, y) of the total space; ``x`` has n entries, ``y`` m."""

    x: tuple
    y: tuple = field(default=())

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        y = tuple(float(v) for v in np.atleast_1d(self.y)) if len(np.atleast_1d(self.y)) else ()
        if not all(math.isfinite(v) for v in x + y):
            raise ValueError("chart point entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return len(self.x)

    @property
    def m(self):
        return len(self.y)

    @property
    def u(self):
        return np.array(self.x + self.y)

    @classmethod
    def from_array(cls, u, n):
        u = np.asarray(u, dtype=float)
        return cls(tuple(u[:n]), tuple(u[n:]))

    def names(self):
        return [f"x{i + 1}" for i in range(self.n)] + [f"y{a + 1}" for a in range(self.m)]


def seed(u, order):
    """Identity jets for every coordinate of ``u``.

    Returns a dict ``{"x1": Jet, ..., "y1": Jet, ...}``; variable ``k`` of the
    jets is the k-th coordinate in the order x1..xn, y1..ym.
    """
    _check_order(order)
    vals = u.u
    d = len(vals)
    return {name: Jet.variable(vals[k], k, d, order) for k, name in enumerate(u.names())}


def seed_vector(u, order):
    """All coordinate jets of ``u`` stacked into one jet vector of shape (n+m,)."""
    _check_order(order)
    vals = u.u
    d = len(vals)
    c = np.zeros((d, ncoef(d, order)))
    c[:, 0] = vals
    if order >= 1:
        c[np.arange(d), 1 + np.arange(d)] = 1.0
    return Jet(c, d, order)
