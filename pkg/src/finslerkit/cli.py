"""Command-line front end.

    finslerkit --input FILE --command {report,geodesics,dirac,distance,check} [options]

Every command prints one JSON document on stdout. Errors print a JSON object on
stderr and exit with 2 (input or usage), 3 (degenerate metric), 4 (numerical
failure); ``check`` exits with 1 when an invariant fails.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import clifford, connection, curvature, dsl, dynamics, geometry, spectral
from .errors import (DefinitionFileError, DegenerateHessian, DimensionMismatch,
                     DimensionTooLarge, DisconnectedPatch, DomainError,
                     ExpressionSyntaxError, FinslerError, FormMismatch,
                     NotPositiveDefinite, PatchTooSmall, ShootingDiverged,
                     SingularVBlock, SolverStalled, UnknownSymbol)
from .jets import ChartPoint

SCHEMA_VERSION = 1
COMMANDS = ("report", "geodesics", "dirac", "distance", "check")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 1, 2, 3, 4

# first match wins, so the specific library errors come before the builtin bases
_EXIT_CODES = (
    ((DegenerateHessian, SingularVBlock, NotPositiveDefinite), EXIT_DEGENERATE),
    ((DomainError, ShootingDiverged, SolverStalled, DisconnectedPatch), EXIT_NUMERIC),
    ((ExpressionSyntaxError, UnknownSymbol, DefinitionFileError, PatchTooSmall,
      DimensionMismatch, DimensionTooLarge, FormMismatch, OSError, ValueError), EXIT_INPUT),
    ((np.linalg.LinAlgError, ArithmeticError), EXIT_NUMERIC),
)

CONVENTIONS = {
    "N": "N[a][i] = N^a_i",
    "W": "W[b][i][a] = dN^b_i/dy^a",
    "omega": "omega[a][i][j] = Omega^a_ij = e_j N^a_i - e_i N^a_j",
    "connection": "Lh[i][j][k] = L^i_jk, Lv[a][b][k] = L^a_bk, Ch[i][j][c] = C^i_jc, "
                  "Cv[a][b][c] = C^a_bc; the differentiation direction is last",
    "torsion": "hhh = T^i_jk, hhv = T^i_ja, vhh = T^a_ij (= Omega), vvh = T^a_bi, vvv = T^a_bc",
    "curvature": "hhhh = R^i_hjk, vvhh = R^a_bjk, hhhv = R^i_jka, vvhv = R^c_bka, "
                 "hhvv = R^i_jbc, vvvv = R^a_bcd",
    "ricci": "hh = R_ij, hv = R_ia, vh = R_ai, vv = R_ab",
    "complex": "complex numbers are written as [re, im]",
}


# -- argument handling -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="finslerkit", description=__doc__.split("\n\n")[0])
    p.add_argument("--input", required=True, help="definition file (see README for the grammar)")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--points", default="3",
                   help="sample count, or explicit points 'u1,u2,...;u1,u2,...' in chart order")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for sampled points and fields")
    p.add_argument("--x-box", default="-1,1", help="box 'lo,hi' for sampled x coordinates")
    p.add_argument("--y-box", default="0.4,1.2", help="box 'lo,hi' for sampled y coordinates")
    p.add_argument("--lattice", default=None,
                   help="'lo:hi:count' for every axis, or a comma list with one entry per axis")
    p.add_argument("--step", type=float, default=1e-3, help="integrator step")
    p.add_argument("--horizon", type=float, default=1.0, help="integration horizon")
    p.add_argument("--budget", type=int, default=20000, help="distance solver iteration budget")
    p.add_argument("--tol", type=float, default=0.01, help="distance solver relative gap")
    p.add_argument("--pairs", default=None,
                   help="distance pairs 'x,..:x,..;x,..:x,..' (default: three axis pairs)")
    p.add_argument("--out", default=None, help="directory for the JSON copy and side files")
    return p


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"cannot read {what} {text!r}") from None


def _box(text, what):
    vals = _floats(text, what)
    if len(vals) != 2 or not vals[1] > vals[0]:
        raise ValueError(f"{what} must be 'lo,hi' with lo < hi")
    return vals


def sample_points(spec, chart, seed, x_box, y_box):
    """Explicit points, or ``count`` points drawn from the boxes with a seeded RNG."""
    spec = spec.strip()
    if ";" in spec or "," in spec:
        pts = [np.array(_floats(chunk, "point")) for chunk in spec.split(";") if chunk.strip()]
        for pt in pts:
            if pt.size != chart.dim:
                raise ValueError(f"point has {pt.size} coordinates, chart has {chart.dim}")
        return pts
    try:
        count = int(spec)
    except ValueError:
        raise ValueError(f"--points must be a count or a point list, got {spec!r}") from None
    if count < 1:
        raise ValueError("--points count must be positive")
    rng = np.random.default_rng(seed)
    return [np.concatenate([rng.uniform(*x_box, chart.n), rng.uniform(*y_box, chart.m)])
            for _ in range(count)]


def parse_lattice(spec, dims, default):
    spec = spec or default
    entries = [e for e in spec.split(",") if e.strip()]
    if len(entries) == 1:
        entries = entries * dims
    if len(entries) != dims:
        raise ValueError(f"lattice needs 1 or {dims} axis entries, got {len(entries)}")
    bounds, counts = [], []
    for e in entries:
        parts = e.split(":")
        if len(parts) != 3:
            raise ValueError(f"lattice axis {e!r} is not 'lo:hi:count'")
        try:
            bounds.append((float(parts[0]), float(parts[1])))
            counts.append(int(parts[2]))
        except ValueError:
            raise ValueError(f"lattice axis {e!r} is not 'lo:hi:count'") from None
    return clifford.Lattice(tuple(bounds), tuple(counts))


def parse_pairs(spec, n):
    pairs = []
    for chunk in spec.split(";"):
        if not chunk.strip():
            continue
        ends = chunk.split(":")
        if len(ends) != 2:
            raise ValueError(f"pair {chunk!r} is not 'p:q'")
        a, b = (_floats(e, "pair endpoint") for e in ends)
        if len(a) != n or len(b) != n:
            raise ValueError(f"pair endpoints need {n} coordinates")
        pairs.append((a, b))
    return pairs


def default_pairs(lattice):
    """Axis-aligned pairs through the middle of the patch, in one parity class."""
    axes = lattice.axes()
    mid = [c // 2 for c in lattice.counts]

    def even(k):
        return k - (k % 2)

    pairs = []
    for ax, c in enumerate(lattice.counts):
        lo = [a[i] for a, i in zip(axes, mid)]
        hi = list(lo)
        lo[ax], hi[ax] = axes[ax][0], axes[ax][even(c - 1)]
        pairs.append((lo, hi))
    c0 = lattice.counts[0]
    lo = [a[i] for a, i in zip(axes, mid)]
    hi = list(lo)
    lo[0], hi[0] = axes[0][0], axes[0][even(c0 // 2)]
    pairs.append((lo, hi))
    return pairs[:3]


# -- JSON helpers -------------------------------------------------------------------

def plain(obj):
    """Convert numpy data to JSON-ready Python objects; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [plain(obj.real), plain(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc):
    return json.dumps(plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _envelope(args, definition, body):
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command,
           "input": str(args.input), "seed": args.seed,
           "chart": {"n": definition.chart.n, "m": definition.chart.m},
           "mode": "lagrangian" if definition.is_lagrangian else "d-metric"}
    if definition.is_lagrangian:
        doc["lagrangian"] = dsl.to_text(definition.lagrangian)
    doc.update(body)
    return doc


# -- commands -----------------------------------------------------------------------

def _point_fields(dm, conn, u):
    n = dm.n
    p = dm.at(u)
    W, omega = geometry.nonholonomy(dm.nconn, u)
    fam = conn.at(u)
    T = connection.dtorsion(conn, dm.nconn, u)
    R = curvature.dcurvature(conn, dm.nconn, u)
    ric = curvature.ricci(R)
    ein = curvature.einstein_dtensor(ric, dm, u)
    out = {
        "x": u[:n], "y": u[n:],
        "g": p.g, "h": p.h, "N": p.N, "W": W, "omega": omega,
        "connection": fam._asdict(),
        "torsion": {k: getattr(T, k) for k in ("hhh", "hhv", "vhh", "vvh", "vvv")},
        "curvature": R.blocks(),
        "ricci": {"hh": ric.hh, "hv": ric.hv, "vh": ric.vh, "vv": ric.vv},
        "scalar": ein.scalar,
        "einstein": {"hh": ein.hh, "hv": ein.hv, "vh": ein.vh, "vv": ein.vv},
        "metricity_defect": connection.metricity_defect(conn, dm, u),
    }
    if dm.lagrangian is not None:
        out["spray"] = geometry.spray_coefficients(dm.lagrangian, ChartPoint(u[:n], u[n:]))
    return out


def cmd_report(args, definition):
    dm = geometry.DMetric.from_definition(definition)
    conn = connection.canonical_dconnection(dm)
    pts = sample_points(args.points, definition.chart, args.seed, _box(args.x_box, "--x-box"),
                        _box(args.y_box, "--y-box"))
    return {"conventions": CONVENTIONS, "connection_kind": "canonical",
            "points": [_point_fields(dm, conn, u) for u in pts]}, {}


def _require_lagrangian(definition, what):
    if not definition.is_lagrangian:
        raise FormMismatch(f"{what} needs a 'lagrangian' definition")
    if definition.chart.n != definition.chart.m:
        raise DimensionMismatch(f"{what} needs dims n n (tangent chart)")


def cmd_geodesics(args, definition):
    _require_lagrangian(definition, "geodesics")
    L = definition.lagrangian
    chart = definition.chart
    n = chart.n
    homogeneous = dsl.check_homogeneity(L, chart, samples=5, seed=args.seed)
    pts = sample_points(args.points, chart, args.seed, _box(args.x_box, "--x-box"),
                        _box(args.y_box, "--y-box"))
    runs, files = [], {}
    for k, u in enumerate(pts):
        x0, y0 = u[:n], u[n:]
        el = dynamics.integrate(dynamics.euler_lagrange_flow(L), x0, y0, args.horizon, args.step)
        sp_ = dynamics.integrate(dynamics.spray_flow(L), x0, y0, args.horizon, args.step)
        common = min(len(el.tau), len(sp_.tau))
        row = {"x0": x0, "y0": y0, "aborted": el.aborted or sp_.aborted,
               "message": el.message or sp_.message, "samples": len(sp_.tau),
               "equivalence_residual": float(np.abs(el.x[:common] - sp_.x[:common]).max()),
               "end_x": sp_.x[-1], "end_y": sp_.y[-1],
               "files": {"euler_lagrange": f"geodesic_{k}_el.csv",
                         "spray": f"geodesic_{k}_spray.csv"}}
        if homogeneous:
            energy = [dsl.evaluate(L, dynamics._env(x, y)) for x, y in zip(sp_.x, sp_.y)]
            row["energy_drift"] = float(np.max(np.abs(np.array(energy) - energy[0])))
        runs.append(row)
        files[f"geodesic_{k}_el.csv"] = el.to_csv()
        files[f"geodesic_{k}_spray.csv"] = sp_.to_csv()
    body = {"integrator": "rk4", "step": args.step, "horizon": args.horizon,
            "homogeneous": homogeneous, "trajectories": runs}
    return body, files


def _hermiticity_defect(D, rng):
    """|<D psi, phi> - <psi, D phi>| for random fields vanishing on two boundary layers."""
    lat = D.lattice
    idx = np.indices(lat.counts).reshape(lat.ndim, -1)
    c = np.array(lat.counts)[:, None]
    inside = np.all((idx > 1) & (idx < c - 2), axis=0)
    k = D.spinor_size
    mask = np.repeat(inside, k)
    psi = (rng.standard_normal(mask.size) + 1j * rng.standard_normal(mask.size)) * mask
    phi = (rng.standard_normal(mask.size) + 1j * rng.standard_normal(mask.size)) * mask
    lhs = clifford.spinor_scalar_product(D.matrix @ psi, phi, D)
    rhs = clifford.spinor_scalar_product(psi, D.matrix @ phi, D)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def cmd_dirac(args, definition):
    dm = geometry.DMetric.from_definition(definition)
    dims = dm.n + dm.m
    default = ",".join(["0:1:5"] * dm.n + ["0.5:1.5:5"] * dm.m)
    lattice = parse_lattice(args.lattice, dims, default)
    D = clifford.assemble_discrete_dirac(dm, lattice)
    pts = lattice.points()
    Ns = np.array([dm.at(geometry.as_point(p, dm.n)).N for p in pts])
    comm = []
    for axis in range(dims):
        grad = np.zeros((lattice.nsites, dims))
        grad[:, axis] = 1.0
        if axis >= dm.n:
            grad[:, :dm.n] = -Ns[:, axis - dm.n, :]
        comm.append(spectral.commutator_identity_error(D, pts[:, axis], grad))
    rng = np.random.default_rng(args.seed)
    body = {
        "lattice": {"bounds": lattice.bounds, "counts": lattice.counts},
        "sites": lattice.nsites, "spinor_size": D.spinor_size,
        "nnz": int(D.matrix.nnz), "matrix_size": int(D.matrix.shape[0]),
        "operator_file": "dirac.coo",
        "coordinate_commutator_error": comm,
        "hermiticity_defect_interior": _hermiticity_defect(D, rng),
        "volume": float(np.sum(lattice.weights() * D.volume_density)),
    }
    if D.chirality is not None:
        body["chirality_anticommutator"] = clifford.anticommutator_norm(
            D.matrix, clifford.chirality_operator(D))
    return body, {"dirac.coo": D.to_coo_text()}


def cmd_distance(args, definition):
    _require_lagrangian(definition, "distance")
    chart = definition.chart
    lattice = parse_lattice(args.lattice, chart.n, "0:1:17")
    pairs = parse_pairs(args.pairs, chart.n) if args.pairs else default_pairs(lattice)
    rows = spectral.distance_report(definition.lagrangian, chart, lattice, pairs,
                                    budget=args.budget, tol=args.tol)
    return {"lattice": {"bounds": lattice.bounds, "counts": lattice.counts},
            "budget": args.budget, "tol": args.tol,
            "rows": [r.as_dict() for r in rows]}, {}


# -- invariant battery ----------------------------------------------------------------

def _verdict(name, value, tol, note=""):
    ok = value is not None and math.isfinite(value) and value <= tol
    return {"name": name, "value": value, "tolerance": tol, "passed": bool(ok), "note": note}


def run_checks(definition, points, seed=0):
    """List of verdicts over the sample points; every list includes canonical metricity."""
    dm = geometry.DMetric.from_definition(definition)
    n, m = dm.n, dm.m
    L = definition.lagrangian
    tangent = definition.is_lagrangian
    # fail fast on degeneracy so that it is reported with its own exit code
    for u in points:
        p = dm.at(u)
        geometry.check_block(p.g, "g block")
        geometry.check_block(p.h, "h block")
    canon = connection.canonical_dconnection(dm)
    acc = {}

    def worst(name, v):
        acc[name] = max(acc.get(name, 0.0), float(v))

    for u in points:
        p = dm.at(u)
        worst("metric_symmetry", max(np.abs(p.g - p.g.T).max(initial=0),
                                     np.abs(p.h - p.h.T).max(initial=0)))
        worst("canonical_metricity", connection.metricity_defect(canon, dm, u))
        T = connection.dtorsion(canon, dm.nconn, u)
        worst("canonical_h_torsion", np.abs(T.hhh).max(initial=0))
        worst("canonical_v_torsion", np.abs(T.vvv).max(initial=0))
        worst("omega_antisymmetry", np.abs(T.vhh + T.vhh.transpose(0, 2, 1)).max(initial=0))
        G = geometry.assemble_offdiagonal(dm, u)
        back = geometry.decompose_offdiagonal(G, (n, m))
        worst("offdiagonal_round_trip", max(np.abs(back.g - p.g).max(initial=0),
                                            np.abs(back.h - p.h).max(initial=0),
                                            np.abs(back.N - p.N).max(initial=0)))
        fr = geometry.adapted_frame(p.N, u)
        worst("coframe_diagonalization",
              np.abs(fr.theta @ G @ fr.theta.T - clifford._block_diag(p.g, p.h)).max())
        lc = connection.levi_civita_families(dm, u).values()
        dfm = connection.cdc_deformation(dm).at(u)
        cf = canon.at(u)
        worst("levi_civita_plus_deformation",
              max(np.abs(a + b - c).max(initial=0) for a, b, c in zip(lc, dfm, cf)))
        R = curvature.dcurvature(canon, dm.nconn, u)
        worst("curvature_antisymmetry", max(
            np.abs(R.hhhh + R.hhhh.transpose(0, 1, 3, 2)).max(initial=0),
            np.abs(R.hhvv + R.hhvv.transpose(0, 1, 3, 2)).max(initial=0),
            np.abs(R.vvvv + R.vvvv.transpose(0, 1, 3, 2)).max(initial=0)))
        worst("frame_curvature_agreement",
              (R - curvature.frame_curvature(canon, dm.nconn, u)).max_abs())
        if np.all(np.linalg.eigvalsh(p.g) > 0) and (m == 0 or np.all(np.linalg.eigvalsh(p.h) > 0)):
            Gd = clifford._block_diag(p.g, p.h)
            rep = clifford.gamma_representation(n + m, Gd)
            gam = rep.curved()
            ginv = np.linalg.inv(Gd)
            eye = np.eye(rep.size)
            worst("curved_gamma_relation", max(
                np.abs(gam[a] @ gam[b] + gam[b] @ gam[a] - 2 * ginv[a, b] * eye).max()
                for a in range(n + m) for b in range(n + m)))
        if n == m:
            F = geometry.almost_complex(dm.nconn, u)
            worst("almost_complex_square", np.abs(F @ F + np.eye(2 * n)).max())
        if tangent:
            x, y = u[:n], u[n:]
            tc = connection.tangent_canonical(dm).at(u)
            worst("tangent_canonical_agreement",
                  max(np.abs(a - b).max() for a, b in zip(tc, cf)))
            berw = connection.berwald_dconnection(dm)
            worst("berwald_h_torsion", np.abs(connection.dtorsion(berw, dm.nconn, u).hhh).max())
            P = canon - berw
            worst("curvature_deformation_identity",
                  (curvature.deform_curvature(berw, P, dm.nconn, u) - R).max_abs())
            scaled = connection.canonical_dconnection(
                geometry.sasaki_dmetric(dsl.mul(dsl.const(2.0), L), n)).at(u)
            worst("canonical_scale_invariance",
                  max(np.abs(a - b).max() for a, b in zip(scaled, cf)))
            el = dynamics.euler_lagrange_rhs(L, x, y)
            spr = dynamics.spray_rhs(L, x, y)
            worst("euler_lagrange_equals_spray", np.abs(el - spr).max() / (1 + np.abs(spr).max()))
    tolerances = {
        "metric_symmetry": 1e-12, "canonical_metricity": 1e-9, "canonical_h_torsion": 1e-12,
        "canonical_v_torsion": 1e-12, "omega_antisymmetry": 0.0,
        "offdiagonal_round_trip": 1e-12, "coframe_diagonalization": 1e-10,
        "levi_civita_plus_deformation": 1e-9, "curvature_antisymmetry": 1e-12,
        "frame_curvature_agreement": 1e-9, "curved_gamma_relation": 1e-10,
        "almost_complex_square": 1e-12, "tangent_canonical_agreement": 1e-10,
        "berwald_h_torsion": 1e-10, "curvature_deformation_identity": 1e-9,
        "canonical_scale_invariance": 1e-10, "euler_lagrange_equals_spray": 1e-12,
    }
    out = [_verdict(name, acc[name], tolerances[name]) for name in sorted(acc)]
    if tangent:
        out.append({"name": "homogeneous_degree_two", "value": None, "tolerance": None,
                    "passed": True, "note": "informational: "
                    + str(dsl.check_homogeneity(L, definition.chart, samples=5, seed=seed))})
    return out


def cmd_check(args, definition):
    pts = sample_points(args.points, definition.chart, args.seed, _box(args.x_box, "--x-box"),
                        _box(args.y_box, "--y-box"))
    verdicts = run_checks(definition, pts, seed=args.seed)
    failed = [v["name"] for v in verdicts if not v["passed"]]
    return {"points": pts, "checks": verdicts, "failed": failed, "passed": not failed}, {}


_COMMANDS = {"report": cmd_report, "geodesics": cmd_geodesics, "dirac": cmd_dirac,
             "distance": cmd_distance, "check": cmd_check}


# -- entry point ----------------------------------------------------------------------

def exit_code_for(exc):
    for kinds, code in _EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return EXIT_NUMERIC


def _error_doc(exc, code):
    doc = {"schema_version": SCHEMA_VERSION, "error": type(exc).__name__,
           "message": str(exc), "exit_code": code}
    for attr in ("position", "line", "name", "det", "cond", "iterations", "residual", "gap"):
        if hasattr(exc, attr):
            doc[attr] = getattr(exc, attr)
    return doc


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        definition = dsl.load_definition(args.input)
        body, files = _COMMANDS[args.command](args, definition)
        text = dumps(_envelope(args, definition, body))
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{args.command}.json").write_text(text, encoding="utf-8")
            for name, content in files.items():
                (out / name).write_text(content, encoding="utf-8")
    except (FinslerError, OSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code = exit_code_for(exc)
        stderr.write(dumps(_error_doc(exc, code)))
        return code
    except Exception as exc:  # keep tracebacks away from the user
        stderr.write(dumps(_error_doc(exc, EXIT_NUMERIC)))
        return EXIT_NUMERIC
    stdout.write(text)
    if args.command == "check" and not body["passed"]:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
