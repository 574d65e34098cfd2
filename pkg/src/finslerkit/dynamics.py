"""Euler-Lagrange and spray geodesic flows, fixed-step RK4, shooting distance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import dsl
from .errors import DegenerateHessian, DomainError, ShootingDiverged
from .geometry import check_block, spray_coefficients
from .jets import ChartPoint


def _point(x, y):
    return ChartPoint(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def euler_lagrange_rhs(L, x, y):
    """Acceleration a from d/dtau(dL/dy) = dL/dx, i.e. g a = (1/2) dL/dx - (1/2) (d^2L/dy dx) y.

    The partials are read off the jet one variable at a time, independently of
    the Hessian extraction used by the spray.
    """
    u = _point(x, y)
    n = u.n
    lj = dsl.jet_at(L, u, 2)
    p = [lj.deriv(n + i) for i in range(n)]  # dL/dy^i as order-1 jets
    hyy = np.array([[p[i].deriv(n + j).value for j in range(n)] for i in range(n)])
    hyx = np.array([[p[i].deriv(k).value for k in range(n)] for i in range(n)])
    dlx = np.array([lj.deriv(k).value for k in range(n)])
    g = 0.25 * (hyy + hyy.T)
    check_block(g, "Hessian metric")
    return np.linalg.solve(g, 0.5 * dlx - 0.5 * (hyx @ u.y))


def spray_rhs(L, x, y):
    """Acceleration -2 G(x, y) of the semispray."""
    return -2.0 * spray_coefficients(L, _point(x, y))


@dataclass
class Trajectory:
    tau: np.ndarray
    x: np.ndarray
    y: np.ndarray
    step: float
    integrator: str = "rk4"
    aborted: bool = False
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def end(self):
        return self.x[-1], self.y[-1]

    def to_csv(self):
        n = self.x.shape[1]
        head = ["tau"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
        rows = [",".join(head)]
        for t, x, y in zip(self.tau, self.x, self.y):
            rows.append(",".join(repr(float(v)) for v in (t, *x, *y)))
        return "\n".join(rows) + "\n"


def integrate(rhs, x0, y0, horizon, step):
    """Classical RK4 for x'' = rhs(x, x') with fixed step (last step shortened).

    A DegenerateHessian or DomainError during the run stops the integration and
    returns the samples reached so far with ``aborted`` set.
    """
    if not step > 0 or not horizon > 0:
        raise ValueError("step and horizon must be positive")
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    nsteps = max(1, math.ceil(horizon / step - 1e-9))
    taus, xs, ys = [0.0], [x.copy()], [y.copy()]
    for k in range(nsteps):
        h = step if k < nsteps - 1 else horizon - step * (nsteps - 1)
        try:
            a1 = rhs(x, y)
            x2, y2 = x + 0.5 * h * y, y + 0.5 * h * a1
            a2 = rhs(x2, y2)
            x3, y3 = x + 0.5 * h * y2, y + 0.5 * h * a2
            a3 = rhs(x3, y3)
            x4, y4 = x + h * y3, y + h * a3
            a4 = rhs(x4, y4)
        except (DegenerateHessian, DomainError, np.linalg.LinAlgError) as exc:
            return Trajectory(np.array(taus), np.array(xs), np.array(ys), step,
                              aborted=True, message=str(exc))
        x = x + h / 6.0 * (y + 2 * y2 + 2 * y3 + y4)
        y = y + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        taus.append(step * k + h)
        xs.append(x.copy())
        ys.append(y.copy())
    return Trajectory(np.array(taus), np.array(xs), np.array(ys), step)


def euler_lagrange_flow(L):
    return lambda x, y: euler_lagrange_rhs(L, x, y)


def spray_flow(L):
    return lambda x, y: spray_rhs(L, x, y)


def equivalence_residual(L, initial, horizon, step):
    """max_tau |x_EL(tau) - x_spray(tau)| for identical initial data."""
    x0, y0 = initial
    a = integrate(euler_lagrange_flow(L), x0, y0, horizon, step)
    b = integrate(spray_flow(L), x0, y0, horizon, step)
    if a.aborted or b.aborted:
        raise DegenerateHessian(float("nan"), float("inf"),
                                "integration aborted: " + (a.message or b.message))
    return float(np.abs(a.x - b.x).max())


def convergence_ratio(rhs, initial, horizon, step, refine=16):
    """Endpoint error ratio e(step) / e(step/2) against a run at step/refine.

    Returns ``(ratio, e_coarse, e_fine)``; about 16 for a fourth-order method.
    """
    x0, y0 = initial
    ref = integrate(rhs, x0, y0, horizon, step / refine)
    e1 = float(np.abs(integrate(rhs, x0, y0, horizon, step).x[-1] - ref.x[-1]).max())
    e2 = float(np.abs(integrate(rhs, x0, y0, horizon, step / 2).x[-1] - ref.x[-1]).max())
    return (e1 / e2 if e2 > 0 else math.inf), e1, e2


def lagrangian_length(L, traj):
    """Integral of sqrt(L) along a sampled trajectory (Simpson rule)."""
    vals = np.array([math.sqrt(max(dsl.evaluate(L, _env(x, y)), 0.0))
                     for x, y in zip(traj.x, traj.y)])
    if len(vals) < 3:
        return float(np.trapezoid(vals, traj.tau)) if len(vals) > 1 else 0.0
    return float(simpson(vals, x=traj.tau))


def _env(x, y):
    env = {f"x{i + 1}": float(v) for i, v in enumerate(x)}
    env.update({f"y{i + 1}": float(v) for i, v in enumerate(y)})
    return env


@dataclass
class ShootingResult:
    distance: float
    velocity: np.ndarray
    iterations: int
    residual: float
    trajectory: Trajectory | None


def shoot(L, x1, x2, steps=200, tol=1e-10, max_iter=50, fd=1e-7):
    """Damped Newton on the initial velocity so that x(1) = x2 under the spray flow."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.array_equal(x1, x2):
        return ShootingResult(0.0, np.zeros_like(x1), 0, 0.0, None)
    flow = spray_flow(L)
    h = 1.0 / steps

    def miss(v):
        tr = integrate(flow, x1, v, 1.0, h)
        if tr.aborted:
            return None, tr
        return tr.x[-1] - x2, tr

    v = x2 - x1
    r, tr = miss(v)
    if r is None:
        raise ShootingDiverged(0, float("inf"))
    scale = 1.0 + float(np.abs(x2 - x1).max())
    res = float(np.abs(r).max())
    for it in range(1, max_iter + 1):
        if res <= tol * scale:
            return ShootingResult(lagrangian_length(L, tr), v, it - 1, res, tr)
        J = np.empty((len(v), len(v)))
        for k in range(len(v)):
            dv = np.zeros_like(v)
            dv[k] = fd * max(1.0, abs(v[k]))
            rk, _ = miss(v + dv)
            if rk is None:
                raise ShootingDiverged(it, res)
            J[:, k] = (rk - r) / dv[k]
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise ShootingDiverged(it, res) from None
        lam = 1.0
        while lam > 1e-4:
            r_new, tr_new = miss(v + lam * delta)
            if r_new is not None and float(np.abs(r_new).max()) < res:
                break
            lam *= 0.5
        else:
            raise ShootingDiverged(it, res)
        v = v + lam * delta
        r, tr = r_new, tr_new
        res = float(np.abs(r).max())
    if res <= tol * scale:
        return ShootingResult(lagrangian_length(L, tr), v, max_iter, res, tr)
    raise ShootingDiverged(max_iter, res)


def geodesic_distance(L, x1, x2, steps=200):
    """Length (integral of sqrt L) of the spray geodesic from x1 to x2."""
    return shoot(L, x1, x2, steps=steps).distance
