"""Verification campaigns: moment comparisons over sets, exponents and resolutions."""

from __future__ import annotations

import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import closedform
from .equilibrium import EquilibriumResult, SolverOptions, solve_equilibrium
from .geometry import (Ball, GeometryError, Interval, Mesh, SetSpec, build_mesh, concat_meshes,
                       setspec_from_dict)
from .kernels import KernelSpec, kernel_matrix
from .moments import (MARGIN, BallReference, MomentComparison, MomentError, any_moment,
                      closed_form_ball, origin_is_regular, solved_ball)
from .startransform import LiftedPotential, PhiSpec, jgrid_scan, moment_difference_via_J

THEOREMS = ("T1_newton", "T2_codim_one", "P4_threshold", "C3_sweep")


class CampaignError(ValueError):
    """Illegal campaign configuration."""


@dataclass(frozen=True)
class CampaignSpec:
    theorem: str
    sets: tuple
    n: int
    p: object
    q_values: tuple
    resolutions: tuple
    set_ids: tuple = ()
    solver: SolverOptions = field(default_factory=SolverOptions)
    grading: str = "endpoint_refined"
    jgrid: dict | None = None
    dual_path: bool | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "q_values", tuple(self.q_values))
        object.__setattr__(self, "resolutions", tuple(int(r) for r in self.resolutions))
        if not self.set_ids:
            object.__setattr__(self, "set_ids", tuple(f"set{i}" for i in range(len(self.sets))))
        if len(self.set_ids) != len(self.sets):
            raise CampaignError("set ids and sets differ in number")
        validate_campaign(self)

    @property
    def kernel(self) -> KernelSpec:
        return campaign_kernel(self.theorem, self.n, self.p)


def _is_log(p):
    return p == "log"


def campaign_kernel(theorem, n, p) -> KernelSpec:
    if _is_log(p):
        ambient = 2 if n == 1 else n
        return KernelSpec.log(ambient)
    ambient = n + 1 if theorem == "T2_codim_one" else n
    return KernelSpec.riesz(float(p), ambient)


def validate_campaign(spec: CampaignSpec) -> None:
    t, n, p = spec.theorem, spec.n, spec.p
    if t not in THEOREMS:
        raise CampaignError(f"unknown theorem {t!r}")
    if n not in (1, 2, 3):
        raise CampaignError("campaigns support n in {1, 2, 3}")
    if len(spec.resolutions) < 2:
        raise CampaignError("at least two resolutions are needed for error estimates")
    if not spec.sets:
        raise CampaignError("a campaign needs at least one set")
    for s in spec.sets:
        if s.dim != n:
            raise CampaignError(f"set of dimension {s.dim} in an n={n} campaign")
    if not _is_log(p):
        try:
            p = float(p)
        except (TypeError, ValueError):
            raise CampaignError(f"p must be a number or 'log', got {p!r}") from None
    if t == "T1_newton":
        ok = (n >= 3 and p == n - 2) or (n == 2 and _is_log(p))
        rule = "p = n - 2 with n >= 3, or log with n = 2"
    elif t == "T2_codim_one":
        ok = (n >= 2 and p == n - 1) or (n == 1 and _is_log(p))
        rule = "p = n - 1 with n >= 2, or log with n = 1"
    elif t == "P4_threshold":
        ok = not _is_log(p) and n >= 3 and 0 < p < n - 2
        rule = "0 < p < n - 2"
    else:
        ok = not _is_log(p) and n >= 2 and n - 2 < p < n
        rule = "n - 2 < p < n"
    if not ok:
        raise CampaignError(f"{t} requires {rule}; got n={n}, p={spec.p}")
    for q in spec.q_values:
        if q == "log":
            if t in ("P4_threshold", "C3_sweep"):
                raise CampaignError(f"{t} takes positive numeric q only")
            continue
        q = float(q)
        if t in ("P4_threshold", "C3_sweep") and q <= 0:
            raise CampaignError(f"{t} needs q > 0")
        if t == "T2_codim_one" and not 0 < q <= 2:
            raise CampaignError("T2 needs 0 < q <= 2 or log")
        if q == 0:
            raise CampaignError("q = 0 compares total masses only")
    if t == "P4_threshold":
        qs = [float(q) for q in spec.q_values]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise CampaignError("P4 q values must be strictly ascending")


@dataclass(frozen=True)
class Record:
    set_id: str
    n: int
    p: object
    q: object
    resolution: int
    capacity_K: float
    matched_radius: float
    moment_K: float
    moment_ball: float
    gap: float
    error_estimate: float
    verdict: str
    note: str = ""


@dataclass
class CampaignReport:
    theorem: str
    n: int
    p: object
    resolutions: tuple
    records: list = field(default_factory=list)
    jgrids: dict = field(default_factory=dict)
    dual_paths: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def aggregate_verdict(self) -> str:
        verdicts = [r.verdict for r in self.records]
        if "violated" in verdicts:
            return "violated"
        if self.failures or "inconclusive" in verdicts or not verdicts:
            return "inconclusive"
        if all(v == "holds_with_margin" for v in verdicts):
            return "holds_with_margin"
        return "holds"

    def summary(self) -> dict:
        return {
            "theorem": self.theorem, "n": self.n, "p": self.p,
            "resolutions": list(self.resolutions),
            "aggregate_verdict": self.aggregate_verdict,
            "records": len(self.records),
            "failures": dict(self.failures),
            "jgrids": self.jgrids, "dual_paths": self.dual_paths,
            "thresholds": self.thresholds,
            "wall_time": round(self.wall_time, 3),
        }


def series_verdicts(gaps, error, expected_sign=1):
    """Per-resolution verdicts with a shared error estimate.

    A row is violated only if every resolution shows the gap beyond the
    margin on the wrong side.
    """
    s = [expected_sign * g for g in gaps]
    if math.isnan(error) or any(not math.isfinite(g) for g in s):
        return ["inconclusive"] * len(gaps)
    persistent = all(g < -MARGIN * error for g in s)
    out = []
    for g in s:
        if g > MARGIN * error:
            out.append("holds_with_margin")
        elif g < -MARGIN * error:
            out.append("violated" if persistent else "inconclusive")
        else:
            out.append("holds")
    return out


# ---------------------------------------------------------------------------
# solved unit balls for the conjecture sweep, cached per (n, p, resolution)

_BALL_CACHE: dict = {}
_BALL_LOCK = threading.Lock()


def solved_unit_ball(n, kernel: KernelSpec, resolution, grading, opts) -> EquilibriumResult:
    key = (n, kernel.kind, kernel.p, kernel.dim_ambient, resolution, grading)
    with _BALL_LOCK:
        if key in _BALL_CACHE:
            return _BALL_CACHE[key]
    spec = SetSpec(n, [Ball((0.0,) * n, 1.0)])
    res = _solve(spec, kernel, resolution, grading, opts)
    with _BALL_LOCK:
        _BALL_CACHE[key] = res
    return res


def _solve(spec, kernel, resolution, grading, opts):
    mesh = build_mesh(spec, resolution, grading)
    return solve_equilibrium(kernel_matrix(kernel, mesh), kernel, mesh, opts)


def _thread_count(threads):
    if threads and threads > 0:
        return threads
    env = os.environ.get("RIESZLAB_THREADS")
    return max(1, int(env)) if env else 1


def _expected_sign(theorem, n, q):
    if theorem == "T1_newton" and q != "log" and float(q) < 0 and float(q) >= -(n - 2):
        return -1
    return 1


def run_campaign(spec: CampaignSpec, threads: int | None = None) -> CampaignReport:
    """Mesh, solve, match and compare every set at every resolution."""
    t0 = time.perf_counter()
    kernel = spec.kernel
    n = spec.n
    report = CampaignReport(spec.theorem, n, spec.p, spec.resolutions)
    jobs = [(i, res) for i in range(len(spec.sets)) for res in spec.resolutions]
    workers = _thread_count(threads if threads is not None else spec.threads)

    def job(args):
        i, res = args
        try:
            return _solve(spec.sets[i], kernel, res, spec.grading, spec.solver)
        except Exception as exc:  # recorded per set; the campaign continues
            return exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            solved = dict(zip(jobs, pool.map(job, jobs)))
    else:
        solved = {j: job(j) for j in jobs}

    balls = {}
    for res in spec.resolutions:
        if spec.theorem == "C3_sweep":
            balls[res] = solved_ball(
                solved_unit_ball(n, kernel, res, spec.grading, spec.solver), n)
        else:
            balls[res] = closed_form_ball(n, kernel)

    for i, set_id in enumerate(spec.set_ids):
        results = [solved[(i, res)] for res in spec.resolutions]
        bad = [r for r in results if isinstance(r, Exception)]
        if bad:
            report.failures[set_id] = f"{type(bad[0]).__name__}: {bad[0]}"
            continue
        series = [_compare_series(spec, set_id, results, q, kernel, balls)
                  for q in spec.q_values]
        # merge as (set, resolution, q)
        for k in range(len(spec.resolutions)):
            report.records.extend(rows[k] for rows in series)
        if spec.theorem == "T2_codim_one":
            _t2_extras(spec, set_id, results, kernel, report)
        if spec.theorem == "P4_threshold":
            recs = [r for r in report.records if r.set_id == set_id
                    and r.resolution == spec.resolutions[-1]]
            report.thresholds[set_id] = _threshold_summary(recs)
    report.wall_time = time.perf_counter() - t0
    return report


def _compare_series(spec, set_id, results, q, kernel, balls):
    n = spec.n
    sign = _expected_sign(spec.theorem, n, q)
    rows = []
    for res, r in zip(spec.resolutions, results):
        ball: BallReference = balls[res]
        R = ball.radius(r.capacity)
        try:
            mk = any_moment(r.measure, q)
            note = ""
        except MomentError as exc:
            mk, note = math.inf, str(exc)
        mb = ball.moment(q, R)
        rows.append([res, r, R, mk, mb, mk - mb, note])
    gaps = [row[5] for row in rows]
    err = abs(gaps[-1] - gaps[-2]) if all(math.isfinite(g) for g in gaps) else float("nan")
    verdicts = series_verdicts(gaps, err, sign)
    out = []
    for (res, r, R, mk, mb, gap, note), verdict in zip(rows, verdicts):
        if spec.theorem == "T1_newton" and q != "log" and float(q) < -(n - 2):
            if not origin_is_regular(r, kernel):
                verdict, note = "inconclusive", "origin not a regular point of K"
        if sign < 0:
            note = (note + "; " if note else "") + "reversed inequality"
        out.append(Record(set_id, n, spec.p, q, res, r.capacity, R, mk, mb, gap, err,
                          verdict, note))
    return out


def _threshold_summary(records):
    q_star = next((r.q for r in records if r.verdict in ("holds", "holds_with_margin")), None)
    seen = False
    persistent = True
    for r in records:
        if r.verdict == "holds_with_margin":
            seen = True
        elif r.verdict == "violated" and seen:
            persistent = False
    return {"q_star": q_star, "persistent": persistent,
            "verdicts": [r.verdict for r in records]}


def _t2_extras(spec, set_id, results, kernel, report):
    n = spec.n
    if n not in (1, 2):
        return
    grid = dict(spec.jgrid or {})
    do_grid = bool(grid) or n == 1
    do_dual = spec.dual_path if spec.dual_path is not None else n == 1
    case = closedform.case_for(n, spec.p)
    pairs = []
    for r in results[-2:]:
        R = closedform.matched_ball_radius(r.capacity, n, case)
        ball_spec = SetSpec(n, [Ball((0.0,) * n, R)])
        ball_res = _solve(ball_spec, kernel, len(r.mesh), spec.grading, spec.solver)
        pairs.append((LiftedPotential(ball_res), LiftedPotential(r)))
    if do_grid:
        params = {"r_max": 6.0, "z_max": 4.0, "nr": 60, "nz": 40}
        params.update(grid)
        g0 = jgrid_scan(pairs[0], **params)
        g1 = jgrid_scan(pairs[1], **params)
        err = float(np.abs(g0.values - g1.values).max())
        report.jgrids[set_id] = {
            "min_value": float(g1.min_value), "min_location": [float(x) for x in g1.min_location],
            "error_estimate": err,
            "nonnegative": bool(g1.min_value >= -MARGIN * err),
            **params,
        }
    if do_dual:
        v, u = pairs[1]
        d = moment_difference_via_J(u, v, PhiSpec("power", 2.0))
        report.dual_paths[set_id] = {
            "direct": float(d.direct), "via_J": float(d.via_J),
            "via_ball_integral": None if d.via_ball_integral is None else float(d.via_ball_integral),
            "a_n": float(d.a_n), "rel_discrepancy": float(d.rel_discrepancy), "R": float(d.R),
        }


# ---------------------------------------------------------------------------

def equality_case_probe(base: SetSpec, extra_atoms, kernel: KernelSpec, resolution: int,
                        q=2.0, extra_cell_radius: float | None = None,
                        grading: str = "endpoint_refined",
                        opts: SolverOptions | None = None) -> MomentComparison:
    """Ball plus extra atoms: a discrete stand-in for adding a capacity-zero set.

    Isolated extra atoms are points (infinite self-energy), so they can
    take no mass.  Passing ``extra_cell_radius`` turns them into cells of
    positive capacity, e.g. a dense second component.  The comparison is
    run at ``resolution`` and twice that for the error estimate; the
    extra weight is reported in ``note``.
    """
    if len(base.parts) != 1 or not isinstance(base.parts[0], (Ball, Interval)):
        raise CampaignError("the probe base must be a single ball or interval")
    part = base.parts[0]
    if isinstance(part, Interval):
        center, radius = np.array([0.5 * (part.a + part.b)]), 0.5 * (part.b - part.a)
    else:
        center, radius = np.asarray(part.center, dtype=float), part.radius
    n = base.dim
    extra = np.atleast_2d(np.asarray(extra_atoms, dtype=float)) if len(extra_atoms) else \
        np.zeros((0, n))
    if extra.size and np.any(np.linalg.norm(extra - center, axis=1) <= radius):
        raise CampaignError("extra atoms must lie outside the ball")
    results, weights = [], []
    for res in (resolution, 2 * resolution):
        mesh = build_mesh(base, res, grading)
        M0 = kernel_matrix(kernel, mesh)
        if len(extra):
            r_extra = np.full(len(extra), 0.0 if extra_cell_radius is None
                              else extra_cell_radius)
            full = Mesh(n, np.vstack([mesh.atoms, extra]),
                        np.concatenate([mesh.weights, np.where(r_extra > 0, 2 * r_extra, 1.0)]),
                        np.concatenate([mesh.cell_radius, r_extra]), mesh.intrinsic_dim,
                        part_index=np.concatenate([mesh.part_index,
                                                   np.full(len(extra), mesh.part_index.max() + 1)]))
            M = _extend_matrix(M0, mesh.atoms, extra, kernel, mesh.intrinsic_dim,
                               extra_cell_radius)
        else:
            full, M = mesh, M0
        r = solve_equilibrium(M, kernel, full, opts)
        results.append(r)
        weights.append(float(r.w[len(mesh):].sum()))
    ref = closed_form_ball(n, kernel)
    gaps, rows = [], []
    for r in results:
        R = ref.radius(r.capacity)
        mk, mb = any_moment(r.measure, q), ref.moment(q, R)
        gaps.append(mk - mb)
        rows.append((r, R, mk, mb))
    err = abs(gaps[1] - gaps[0])
    verdict = series_verdicts(gaps, err)[1]
    r, R, mk, mb = rows[1]
    kind = "point atoms" if extra_cell_radius is None else "cells"
    note = (f"extra weight {weights[1]:.3g} ({kind}); heuristic surrogate for "
            "a capacity-zero addition")
    return MomentComparison(q, mk, mb, gaps[1], R, err, verdict, r.capacity, 1, note)


def _extend_matrix(M0, atoms, extra, kernel, intrinsic_dim, cell_radius):
    from scipy.spatial.distance import cdist
    from .kernels import self_energy

    n0, k = len(atoms), len(extra)
    M = np.empty((n0 + k, n0 + k))
    M[:n0, :n0] = M0
    D = cdist(extra, atoms)
    M[n0:, :n0] = kernel.of_distance(D)
    M[:n0, n0:] = M[n0:, :n0].T
    E = cdist(extra, extra)
    np.fill_diagonal(E, 1.0)
    M[n0:, n0:] = kernel.of_distance(E)
    diag = math.inf if cell_radius is None else self_energy(kernel, cell_radius, intrinsic_dim)
    M[np.arange(n0, n0 + k), np.arange(n0, n0 + k)] = diag
    return M


# ---------------------------------------------------------------------------
# config files

def _solver_from_dict(d):
    d = dict(d or {})
    method = d.pop("method", "active_set").replace("-", "_")
    if method == "pgd":
        method = "projected_gradient"
    unknown = set(d) - {"tol", "max_iter"}
    if unknown:
        raise CampaignError(f"unknown solver options: {sorted(unknown)}")
    return SolverOptions(method, float(d.get("tol", 1e-8)), int(d.get("max_iter", 500)))


def campaign_from_dict(d: dict) -> CampaignSpec:
    known = {"theorem", "n", "p", "q_values", "resolutions", "sets", "solver", "grading",
             "jgrid", "dual_path", "threads", "description"}
    unknown = set(d) - known
    if unknown:
        raise CampaignError(f"unknown campaign keys: {sorted(unknown)}")
    for key in ("theorem", "n", "p", "q_values", "resolutions", "sets"):
        if key not in d:
            raise CampaignError(f"campaign config is missing {key!r}")
    sets, ids = [], []
    for k, s in enumerate(d["sets"]):
        s = dict(s)
        ids.append(str(s.pop("id", f"set{k}")))
        if "dim" not in s:
            s["dim"] = d["n"]
        try:
            sets.append(setspec_from_dict(s))
        except GeometryError as exc:
            raise CampaignError(f"set {ids[-1]}: {exc}") from None
    q_values = [q if q == "log" else float(q) for q in d["q_values"]]
    return CampaignSpec(
        theorem=d["theorem"], sets=sets, n=int(d["n"]), p=d["p"], q_values=q_values,
        resolutions=d["resolutions"], set_ids=tuple(ids), solver=_solver_from_dict(d.get("solver")),
        grading=d.get("grading", "endpoint_refined"), jgrid=d.get("jgrid"),
        dual_path=d.get("dual_path"), threads=int(d.get("threads", 0)),
    )


def load_campaign(path) -> CampaignSpec:
    with open(Path(path)) as fh:
        return campaign_from_dict(json.load(fh))
