"""Moments of discrete measures and comparisons with the capacity-matched ball."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import closedform
from .equilibrium import DiscreteMeasure, EquilibriumResult, potential
from .kernels import KernelSpec

VERDICTS = ("holds", "holds_with_margin", "inconclusive", "violated")

# Relative tolerance for the discrete origin-regularity test.
REGULARITY_TOL = 0.02

# Verdict margin in units of the error estimate.
MARGIN = 3.0


class MomentError(ValueError):
    """Divergent moment or unsupported comparison."""


def _radii(measure: DiscreteMeasure):
    return np.linalg.norm(measure.mesh.atoms, axis=1)


def moment(measure: DiscreteMeasure, q: float) -> float:
    """sum_i w_i |x_i|^q."""
    r = _radii(measure)
    w = measure.w
    if q == 0:
        return float(w.sum())
    if q < 0 and np.any((r == 0) & (w > 0)):
        raise MomentError("moment diverges: an atom with positive weight sits at the origin")
    mask = w > 0
    return float(np.dot(w[mask], r[mask] ** q))


def log_moment(measure: DiscreteMeasure) -> float:
    """sum_i w_i log|x_i|."""
    r = _radii(measure)
    w = measure.w
    mask = w > 0
    if np.any(r[mask] == 0):
        raise MomentError("log moment diverges: an atom with positive weight sits at the origin")
    return float(np.dot(w[mask], np.log(r[mask])))


def any_moment(measure: DiscreteMeasure, q) -> float:
    return log_moment(measure) if q == "log" else moment(measure, float(q))


@dataclass(frozen=True)
class BallReference:
    """Capacity and moments of the centred ball as functions of its radius.

    ``unit_moment(q)`` is the moment of the unit ball's equilibrium measure;
    moments scale as R^q (log moments shift by log R).
    """

    n: int
    unit_capacity: float
    unit_moment: Callable[[object], float]
    label: str = ""

    def radius(self, capacity: float) -> float:
        if not capacity > 0:
            raise MomentError("capacity must be positive")
        return capacity / self.unit_capacity

    def moment(self, q, R: float) -> float:
        if q == "log":
            return math.log(R) + self.unit_moment("log")
        return R ** float(q) * self.unit_moment(q)


def closed_form_ball(n: int, kernel: KernelSpec) -> BallReference:
    p = "log" if kernel.is_log else kernel.p
    case = closedform.case_for(n, p)
    pp = None if kernel.is_log else kernel.p
    cap = closedform.ball_capacity(n, case, 1.0, pp)
    return BallReference(n, cap, lambda q: closedform.ball_moment(n, case, q, 1.0, pp), case)


def solved_ball(result: EquilibriumResult, n: int) -> BallReference:
    """Ball reference from a numerically solved unit ball."""
    return BallReference(n, result.capacity, lambda q: any_moment(result.measure, q), "solved")


@dataclass(frozen=True)
class MomentComparison:
    q: object
    moment_K: float
    moment_ball: float
    gap: float
    matched_radius: float
    error_estimate: float
    verdict: str
    capacity_K: float = float("nan")
    expected_sign: int = 1
    note: str = ""


def classify(gap: float, error: float, other_gap: float | None = None,
             expected_sign: int = 1) -> str:
    """Verdict for a signed gap with a resolution-doubling error estimate.

    ``expected_sign`` is +1 when the inequality asserts moment_K >=
    moment_ball and -1 for reversed inequalities.  A violation needs the
    gap at the other resolution to be beyond the margin as well.  Without
    an error estimate (NaN) no margin or violation is ever claimed.
    """
    g = expected_sign * gap
    if not math.isfinite(g):
        return "inconclusive"
    if math.isnan(error):
        return "holds" if g >= 0 else "inconclusive"
    if g > MARGIN * error:
        return "holds_with_margin"
    if g < -MARGIN * error:
        if other_gap is not None and expected_sign * other_gap < -MARGIN * error:
            return "violated"
        return "inconclusive"
    return "holds"


def _raw(result: EquilibriumResult, q, ball: BallReference):
    mk = any_moment(result.measure, q)
    R = ball.radius(result.capacity)
    mb = ball.moment(q, R)
    return mk, mb, R


def compare_moments(K_result: EquilibriumResult, spec: KernelSpec, q, n: int | None = None,
                    refined: EquilibriumResult | None = None, ball: BallReference | None = None,
                    expected_sign: int = 1) -> MomentComparison:
    """Moment gap between K and its capacity-matched ball.

    ``refined`` is the solution on a mesh of doubled resolution; the error
    estimate is the change of the gap between the two.
    """
    n = K_result.mesh.dim if n is None else n
    ball = ball or closed_form_ball(n, spec)
    mk, mb, R = _raw(K_result, q, ball)
    gap = mk - mb
    other = None
    err = float("nan")
    if refined is not None:
        mk2, mb2, _ = _raw(refined, q, ball)
        other = mk2 - mb2
        err = abs(gap - other)
    return MomentComparison(q, mk, mb, gap, R, err,
                            classify(gap, err, other, expected_sign),
                            K_result.capacity, expected_sign)


def compare_pair(coarse: EquilibriumResult, fine: EquilibriumResult, spec: KernelSpec, q,
                 n: int | None = None, ball: BallReference | None = None,
                 expected_sign: int = 1):
    """Comparisons at both resolutions sharing one error estimate."""
    a = compare_moments(coarse, spec, q, n, fine, ball, expected_sign)
    b = compare_moments(fine, spec, q, n, coarse, ball, expected_sign)
    return a, b


def origin_in_set(result: EquilibriumResult) -> bool:
    """Whether the origin lies within two cell radii of some atom."""
    mesh = result.mesh
    d = np.linalg.norm(mesh.atoms, axis=1)
    return bool(np.any(d <= 2.0 * mesh.cell_radius))


def origin_is_regular(result: EquilibriumResult, spec: KernelSpec,
                      tol: float = REGULARITY_TOL) -> bool:
    """Discrete test: the origin belongs to K and its potential equals the energy within ``tol``."""
    if not origin_in_set(result):
        return False
    u0 = potential(result, spec, np.zeros(result.mesh.dim))
    scale = abs(result.energy) if not spec.is_log else max(abs(result.energy), 1.0)
    return abs(u0 - result.energy) < tol * scale


def reversed_and_negative_moment_checks(K_result: EquilibriumResult, spec: KernelSpec, q: float,
                                        refined: EquilibriumResult | None = None,
                                        n: int | None = None) -> MomentComparison:
    """Negative-exponent comparisons in the Newtonian case.

    For -(n-2) <= q < 0 the inequality is reversed.  For q < -(n-2) it holds
    in the usual direction only when the origin is a regular point of K;
    otherwise the verdict is inconclusive.
    """
    n = K_result.mesh.dim if n is None else n
    newtonian = (spec.is_log and n == 2) or (not spec.is_log and n >= 3 and spec.p == n - 2)
    if not newtonian:
        raise MomentError("negative-moment checks apply to the Newtonian case only")
    q = float(q)
    if q >= 0:
        raise MomentError("negative-moment checks need q < 0")
    if q >= -(n - 2):
        try:
            return compare_moments(K_result, spec, q, n, refined, expected_sign=-1)
        except MomentError as exc:
            return _divergent(K_result, spec, q, n, str(exc), -1)
    try:
        comp = compare_moments(K_result, spec, q, n, refined)
    except MomentError as exc:
        return _divergent(K_result, spec, q, n, str(exc), 1)
    if origin_is_regular(K_result, spec):
        return replace(comp, note="origin regular")
    return replace(comp, verdict="inconclusive", note="origin not regular; hypothesis unmet")


def _divergent(result, spec, q, n, why, sign):
    ball = closed_form_ball(n, spec)
    R = ball.radius(result.capacity)
    return MomentComparison(q, math.inf, ball.moment(q, R), math.inf, R, float("nan"),
                            "inconclusive", result.capacity, sign, why)


def threshold_scan(K_result: EquilibriumResult, spec: KernelSpec, q_grid: Sequence[float],
                   refined: EquilibriumResult | None = None, n: int | None = None,
                   ball: BallReference | None = None):
    """Comparisons over an ascending q grid in the regime 0 < p < n - 2."""
    n = K_result.mesh.dim if n is None else n
    if spec.is_log or not (n >= 3 and 0 < spec.p < n - 2):
        raise MomentError("threshold scans need 0 < p < n - 2 with n >= 3")
    q_grid = [float(q) for q in q_grid]
    if any(b <= a for a, b in zip(q_grid, q_grid[1:])):
        raise MomentError("q grid must be strictly ascending")
    return [compare_moments(K_result, spec, q, n, refined, ball) for q in q_grid]


def threshold_summary(comparisons: Sequence[MomentComparison]):
    """Smallest q with a holding verdict, and whether no violation follows a margin."""
    q_star = next((c.q for c in comparisons
                   if c.verdict in ("holds", "holds_with_margin")), None)
    persistent = True
    seen_margin = False
    for c in comparisons:
        if c.verdict == "holds_with_margin":
            seen_margin = True
        elif c.verdict == "violated" and seen_margin:
            persistent = False
    return q_star, persistent
