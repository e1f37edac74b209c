"""Command-line front end.

Set configs are JSON objects ``{"dim": n, "parts": [...]}`` where each part
is one of::

    {"type": "interval", "a": -1, "b": 1}
    {"type": "ball", "center": [0, 0], "radius": 1}
    {"type": "sphere", "center": [0, 0, 0], "radius": 1}
    {"type": "ellipsoid", "center": [0, 0, 0], "semi_axes": [1, 1, 2], "surface": false}
    {"type": "annulus", "center": [0, 0], "r_inner": 0.5, "r_outer": 1}

Campaign configs are described in docs/campaign.schema.json.  Exit codes:
0 success, 1 numerical failure, 2 configuration error, 3 a violated verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import closedform
from .closedform import ClosedFormError
from .equilibrium import SolverError, SolverOptions, solve_equilibrium
from .geometry import Ball, GeometryError, SetSpec, build_mesh, load_setspec
from .kernels import (KernelError, KernelSpec, kernel_matrix, monte_carlo_self_energy_constant,
                      self_energy_constant)
from .moments import MomentError, closed_form_ball, compare_pair
from .startransform import LiftedPotential, jgrid_scan
from .verify import (CampaignError, CampaignReport, CampaignSpec, Record, load_campaign,
                     run_campaign)

CSV_HEADER = ("set_id", "n", "p", "q", "resolution", "capacity_K", "matched_radius",
              "moment_K", "moment_ball", "gap", "error_estimate", "verdict")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_VIOLATED = 0, 1, 2, 3

CONFIG_ERRORS = (GeometryError, CampaignError, KernelError, ClosedFormError, MomentError,
                 OSError, json.JSONDecodeError, KeyError, TypeError, ValueError)


class ConfigError(Exception):
    """Bad flags or config contents."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.set_id, _fmt(r.n), _fmt(r.p), _fmt(r.q), _fmt(r.resolution),
                    _fmt(r.capacity_K), _fmt(r.matched_radius), _fmt(r.moment_K),
                    _fmt(r.moment_ball), _fmt(r.gap), _fmt(r.error_estimate), r.verdict])
    return buf.getvalue()


def emit_csv(report: CampaignReport, path) -> None:
    """Write the report rows as CSV; ``-`` or None writes to stdout."""
    text = csv_text(report.records)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_csv(path):
    """Rows of an emitted CSV as dicts with numeric fields converted."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in CSV_HEADER:
            if key in ("set_id", "verdict"):
                continue
            v = row[key]
            if v != "log":
                row[key] = int(v) if key in ("n", "resolution") else float(v)
    return rows


# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, needs_set=True):
    if needs_set:
        p.add_argument("--set", required=True, metavar="PATH", help="set config (JSON)")
    p.add_argument("--kernel", choices=("log", "riesz"), default=None,
                   help="kernel family (default: riesz if --p is given, else log)")
    p.add_argument("--p", type=float, default=None, help="Riesz exponent")
    p.add_argument("--n-points", type=int, default=2000, help="mesh resolution")
    p.add_argument("--grading", choices=("uniform", "endpoint_refined"),
                   default="endpoint_refined", help="mesh grading")
    p.add_argument("--solver", choices=("active-set", "pgd"), default="active-set")
    p.add_argument("--tol", type=float, default=1e-8, help="KKT tolerance")
    p.add_argument("--out", metavar="PATH", default=None, help="output file")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: RIESZLAB_THREADS)")


def _q_value(s):
    if s == "log":
        return "log"
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"q must be a number or 'log', got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rieszlab", description="Equilibrium measures, capacities and "
                     "moment comparisons for discretized compact sets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("equilibrium", help="solve for the equilibrium measure")
    _common(p)

    p = sub.add_parser("capacity", help="capacity of a set")
    _common(p)
    p.add_argument("--seed", type=int, default=None,
                   help="also run a Monte Carlo check of the cell self-energy constant")
    p.add_argument("--samples", type=int, default=200_000, help="Monte Carlo samples")

    p = sub.add_parser("moments", help="moments against the capacity-matched ball")
    _common(p)
    p.add_argument("--q", type=_q_value, action="append", default=None,
                   help="moment exponent or 'log' (repeatable; default 2)")

    p = sub.add_parser("jscan", help="scan the star-function difference on a grid")
    _common(p)
    p.add_argument("--r-max", type=float, default=6.0)
    p.add_argument("--z-max", type=float, default=4.0)
    p.add_argument("--nr", type=int, default=60)
    p.add_argument("--nz", type=int, default=40)

    p = sub.add_parser("verify", help="run a verification campaign")
    p.add_argument("--campaign", required=True, metavar="PATH", help="campaign config (JSON)")
    p.add_argument("--out", metavar="PATH", default=None, help="CSV output (default stdout)")
    p.add_argument("--summary", metavar="PATH", default=None, help="JSON summary output")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: RIESZLAB_THREADS)")

    p = sub.add_parser("sweep", help="conjecture sweep over Riesz exponents")
    _common(p)
    p.add_argument("--p-values", type=float, nargs="+", required=True,
                   help="exponents with n - 2 < p < n")
    p.add_argument("--q", type=_q_value, action="append", default=None,
                   help="moment exponent (repeatable; default 0.5 1 2 4)")
    return parser


def _kernel(args, dim: int) -> KernelSpec:
    kind = args.kernel or ("riesz" if args.p is not None else "log")
    if kind == "log":
        if args.p is not None:
            raise ConfigError("--p is meaningless for the log kernel")
        return KernelSpec.log(dim)
    if args.p is None:
        raise ConfigError("--kernel riesz needs --p")
    return KernelSpec.riesz(args.p, dim)


def _opts(args) -> SolverOptions:
    method = "active_set" if args.solver == "active-set" else "projected_gradient"
    return SolverOptions(method, args.tol)


def _solve(spec: SetSpec, kernel, n_points, grading, opts):
    mesh = build_mesh(spec, n_points, grading)
    return solve_equilibrium(kernel_matrix(kernel, mesh), kernel, mesh, opts)


def _print_table(rows):
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {_fmt(v) if not isinstance(v, str) else v}")


def _cmd_equilibrium(args):
    spec = load_setspec(args.set)
    kernel = _kernel(args, spec.dim)
    res = _solve(spec, kernel, args.n_points, args.grading, _opts(args))
    _print_table([("atoms", len(res.mesh)), ("energy", res.energy), ("capacity", res.capacity),
                  ("kkt_residual", res.kkt_residual),
                  ("support_fraction", res.active_support_fraction),
                  ("method", res.method), ("iterations", res.iterations)])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i}" for i in range(spec.dim)] + ["weight"])
            for x, wt in zip(res.mesh.atoms, res.w):
                w.writerow([_fmt(v) for v in x] + [_fmt(wt)])
    return EXIT_OK


def _cmd_capacity(args):
    spec = load_setspec(args.set)
    kernel = _kernel(args, spec.dim)
    res = _solve(spec, kernel, args.n_points, args.grading, _opts(args))
    rows = [("atoms", len(res.mesh)), ("capacity", res.capacity)]
    if args.seed is not None:
        d = res.mesh.intrinsic_dim
        p = "log" if kernel.is_log else kernel.p
        mean, err = monte_carlo_self_energy_constant(p, d, args.samples, args.seed)
        rows += [("self_energy_constant", self_energy_constant(p, d)),
                 ("self_energy_monte_carlo", mean), ("self_energy_mc_stderr", err)]
    _print_table(rows)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({k: v for k, v in rows}, fh, indent=2)
    return EXIT_OK


def _set_records(set_id, spec, kernel, args, qs):
    opts = _opts(args)
    coarse = _solve(spec, kernel, args.n_points, args.grading, opts)
    fine = _solve(spec, kernel, 2 * args.n_points, args.grading, opts)
    ball = closed_form_ball(spec.dim, kernel)
    p = "log" if kernel.is_log else kernel.p
    records = []
    for q in qs:
        for res, comp in zip((args.n_points, 2 * args.n_points),
                             compare_pair(coarse, fine, kernel, q, spec.dim, ball)):
            records.append(Record(set_id, spec.dim, p, q, res, comp.capacity_K,
                                  comp.matched_radius, comp.moment_K, comp.moment_ball,
                                  comp.gap, comp.error_estimate, comp.verdict))
    return records


def _cmd_moments(args):
    spec = load_setspec(args.set)
    kernel = _kernel(args, spec.dim)
    qs = args.q or [2.0]
    set_id = os.path.splitext(os.path.basename(args.set))[0]
    records = _set_records(set_id, spec, kernel, args, qs)
    report = CampaignReport("moments", spec.dim, records[0].p, (args.n_points, 2 * args.n_points),
                            records)
    emit_csv(report, args.out)
    return EXIT_VIOLATED if report.aggregate_verdict == "violated" else EXIT_OK


def _cmd_jscan(args):
    spec = load_setspec(args.set)
    n = spec.dim
    if n == 1:
        kernel = KernelSpec.log(2)
    elif n == 2:
        kernel = KernelSpec.riesz(1.0, 3)
    else:
        raise ConfigError("jscan supports sets in dimension 1 or 2")
    if args.kernel is not None or args.p is not None:
        raise ConfigError("jscan fixes the codimension-one kernel; drop --kernel/--p")
    opts = _opts(args)
    case = closedform.case_for(n, "log" if n == 1 else 1.0)
    grids = []
    for res_n in (args.n_points, 2 * args.n_points):
        K = _solve(spec, kernel, res_n, args.grading, opts)
        R = closedform.matched_ball_radius(K.capacity, n, case)
        B = _solve(SetSpec(n, [Ball((0.0,) * n, R)]), kernel, res_n, args.grading, opts)
        grids.append(jgrid_scan((LiftedPotential(B), LiftedPotential(K)),
                                args.r_max, args.z_max, args.nr, args.nz))
    g0, g1 = grids
    err = float(np.abs(g1.values - g0.values).max())
    _print_table([("min_value", g1.min_value),
                  ("min_r", g1.min_location[0]), ("min_z", g1.min_location[1]),
                  ("error_estimate", err),
                  ("nonnegative", "yes" if g1.min_value >= -3 * err else "no")])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "z", "J"])
            for i, r in enumerate(g1.r_nodes):
                for j, z in enumerate(g1.z_nodes):
                    w.writerow([_fmt(r), _fmt(z), _fmt(g1.values[i, j])])
    return EXIT_OK


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("RIESZLAB_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"RIESZLAB_THREADS must be an integer, got {env!r}") from None


def _finish_report(report: CampaignReport, out, summary_path=None):
    emit_csv(report, out)
    summary = report.summary()
    if summary_path:
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
    print(f"aggregate verdict: {report.aggregate_verdict} "
          f"({len(report.records)} rows, {report.wall_time:.1f} s)", file=sys.stderr)
    for set_id, why in sorted(report.failures.items()):
        print(f"failed: {set_id}: {why}", file=sys.stderr)
    return EXIT_VIOLATED if report.aggregate_verdict == "violated" else EXIT_OK


def _cmd_verify(args):
    spec = load_campaign(args.campaign)
    report = run_campaign(spec, threads=_threads(args))
    return _finish_report(report, args.out, args.summary)


def _cmd_sweep(args):
    spec = load_setspec(args.set)
    n = spec.dim
    qs = args.q or [0.5, 1.0, 2.0, 4.0]
    records, failures, wall = [], {}, 0.0
    for p in args.p_values:
        camp = CampaignSpec("C3_sweep", [spec], n, p, qs, (args.n_points, 2 * args.n_points),
                            set_ids=(os.path.splitext(os.path.basename(args.set))[0],),
                            solver=_opts(args), grading=args.grading)
        rep = run_campaign(camp, threads=_threads(args))
        records += rep.records
        failures.update({f"{k}@p={p}": v for k, v in rep.failures.items()})
        wall += rep.wall_time
    report = CampaignReport("C3_sweep", n, "mixed", (args.n_points, 2 * args.n_points),
                            records, failures=failures, wall_time=wall)
    return _finish_report(report, args.out)


COMMANDS = {"equilibrium": _cmd_equilibrium, "capacity": _cmd_capacity,
            "moments": _cmd_moments, "jscan": _cmd_jscan, "verify": _cmd_verify,
            "sweep": _cmd_sweep}


def _diag(kind, exc):
    msg = " ".join(str(exc).split()) or type(exc).__name__
    print(f"rieszlab: {kind}: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        _diag("config error", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        _diag("solver failure", exc)
        return EXIT_FAILURE
    except CONFIG_ERRORS as exc:
        _diag("config error", exc)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError) as exc:
        _diag("failure", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
