"""Potentials of sets in R^n viewed inside R^(n+1), and the slice operator J.

A set K in R^n sits in the slice z = 0 of R^(n+1).  Its (n-1)-equilibrium
potential u(x, z) is Newtonian in R^(n+1) (log kernel when n = 1).  The
operator J integrates a function over the n-ball of radius r in the
height-z slice,

    (J f)(r, z) = int_{|x| < r} f(x, z) dx,

and satisfies delta_star J = J Delta with

    delta_star = d_rr - ((n - 1)/r) d_r + d_zz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .equilibrium import EquilibriumResult, potential_many
from .geometry import fibonacci_sphere
from .kernels import KernelSpec
from .moments import any_moment

GL_NODES = 64
# slice integrals carry ~1e-9 quadrature noise; refining below it never converges
SIMPSON_DEPTH = 14
SIMPSON_ABS_TOL = 1e-9


def a_n(n: int) -> float:
    """Normalizing constant of the fundamental solution in R^(n+1)."""
    if n == 1:
        return 1.0 / (2.0 * math.pi)
    area = 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
    return 1.0 / ((n - 1) * area)


def b_n(n: int) -> float:
    return 1.0 if n == 1 else float(n - 1)


def lifted_kernel(n: int) -> KernelSpec:
    return KernelSpec.log(2) if n == 1 else KernelSpec.riesz(n - 1, n + 1)


class LiftedPotential:
    """Equilibrium potential of a solved set, evaluated in R^(n+1).

    Either ``source`` (a solved mesh in R^n) or ``closed_form_radius`` (the
    exact potential of the centred ball of that radius, n in {1, 2}) is
    given.
    """

    def __init__(self, source: EquilibriumResult | None = None, n: int | None = None,
                 closed_form_radius: float | None = None):
        if (source is None) == (closed_form_radius is None):
            raise ValueError("give exactly one of source and closed_form_radius")
        self.source = source
        self.radius = closed_form_radius
        self.n = source.mesh.dim if n is None else n
        self.kernel = lifted_kernel(self.n)
        if source is not None:
            if source.mesh.dim != self.n:
                raise ValueError("source mesh must live in R^n")
            self.atoms = source.mesh.atoms
            self.w = source.w
        elif self.n not in (1, 2):
            raise ValueError("closed-form ball potentials exist for n = 1, 2")

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    @property
    def circumradius(self) -> float:
        if self.source is None:
            return self.radius
        return float(np.linalg.norm(self.atoms, axis=1).max())

    def values(self, X, z) -> np.ndarray:
        """u at points (X_k, z_k); X has shape (m, n), z broadcasts to (m,)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = np.broadcast_to(np.asarray(z, dtype=float), (len(X),))
        if self.source is None:
            rho = np.linalg.norm(X, axis=1)
            return _ball_potential(self.n, self.radius, rho, z)
        pts = np.hstack([X, z[:, None]])
        return potential_many(self.source, self.kernel, pts)


def lifted_potential_value(lp: LiftedPotential, x, z: float) -> float:
    return float(lp.values(np.atleast_1d(np.asarray(x, float))[None, :], z)[0])


def _ball_potential(n, R, rho, z):
    """Exact equilibrium potential of the centred n-ball (n = 1, 2) in R^(n+1)."""
    rho = np.abs(rho)
    z = np.abs(z)
    if n == 1:
        # log(2/R) - log|w + sqrt(w^2 - 1)| with w = (rho + i z)/R
        w = (rho + 1j * z) / R
        s = np.sqrt(w - 1) * np.sqrt(w + 1)
        return math.log(2.0 / R) - np.log(np.abs(w + s))
    s = np.sqrt((rho + R) ** 2 + z ** 2) + np.sqrt((rho - R) ** 2 + z ** 2)
    return np.arcsin(np.minimum(1.0, 2.0 * R / s)) / R


def spherical_mean(lp: LiftedPotential, r: float, nodes: int = 4096) -> float:
    """Mean of u over the sphere of radius r in R^(n+1) (equal-weight lattice)."""
    if r <= lp.circumradius:
        warnings.warn("sphere radius does not enclose the set", RuntimeWarning, stacklevel=2)
    if lp.n == 1:
        th = (np.arange(nodes) + 0.5) * 2 * math.pi / nodes
        pts = r * np.c_[np.cos(th), np.sin(th)]
    elif lp.n == 2:
        pts = r * fibonacci_sphere(nodes)
    else:
        raise ValueError("spherical means are implemented for n = 1, 2")
    return float(lp.values(pts[:, :-1], pts[:, -1]).mean())


# ---------------------------------------------------------------------------
# J

def _log_antiderivative(t, z):
    """Antiderivative in t of log(t^2 + z^2)."""
    t = np.asarray(t, dtype=float)
    out = np.empty(np.broadcast(t, z).shape)
    z = np.broadcast_to(z, out.shape)
    t = np.broadcast_to(t, out.shape)
    nz = z != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = t * t + z * z
        base = np.where(sq > 0, t * np.log(np.where(sq > 0, sq, 1.0)), 0.0) - 2.0 * t
    out[:] = base
    out[nz] += 2.0 * z[nz] * np.arctan(t[nz] / z[nz])
    return out


def _gl(nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _J_discrete_1d(lp, r, z):
    """Exact J of a sum of point-mass log potentials, n = 1."""
    a = lp.atoms[:, 0]
    hi = _log_antiderivative(r - a, z)
    lo = _log_antiderivative(-r - a, z)
    return -0.5 * float(np.dot(lp.w, hi - lo))


def _J_quadrature(lp, r, z, nodes):
    """J by Gauss-Legendre (n = 1, split at kinks) or a polar product rule (n = 2)."""
    if lp.n == 1:
        g, gw = _gl(nodes)
        brk = [-r, r]
        if lp.source is None and lp.radius < r:
            brk = [-r, -lp.radius, lp.radius, r]
        if 0.0 not in brk:
            brk = sorted(brk + [0.0])
        total = 0.0
        for a, b in zip(brk[:-1], brk[1:]):
            x = a + (b - a) * g
            total += (b - a) * float(np.dot(gw, lp.values(x[:, None], z)))
        return total
    g, gw = _gl(nodes)
    m = 2 * nodes
    th = (np.arange(m) + 0.5) * 2 * math.pi / m
    rho = r * g
    P = np.stack([np.outer(rho, np.cos(th)).ravel(), np.outer(rho, np.sin(th)).ravel()], 1)
    vals = lp.values(P, z).reshape(len(rho), m)
    return float(r * np.dot(gw * rho, vals.mean(axis=1)) * 2 * math.pi)


def J_single(lp: LiftedPotential, r: float, z: float, quad_nodes: int = GL_NODES) -> float:
    """(J u)(r, z) for one potential."""
    if r <= 0:
        return 0.0
    if lp.n == 1 and lp.source is not None:
        return _J_discrete_1d(lp, r, z)
    nodes = quad_nodes if z != 0 else 2 * quad_nodes
    return _J_quadrature(lp, r, z, nodes)


def J_value(lp_pair, r: float, z: float, quad_nodes: int = GL_NODES) -> float:
    """J(v - u)(r, z) for the pair (v, u)."""
    v, u = lp_pair
    if v.n != u.n:
        raise ValueError("both potentials must come from sets in the same R^n")
    return J_single(v, r, z, quad_nodes) - J_single(u, r, z, quad_nodes)


@dataclass(frozen=True)
class JGrid:
    r_nodes: np.ndarray
    z_nodes: np.ndarray
    values: np.ndarray
    min_value: float
    min_location: tuple


def jgrid_scan(lp_pair, r_max: float, z_max: float, nr: int, nz: int,
               quad_nodes: int = GL_NODES) -> JGrid:
    """Sample J(v - u) on a uniform (r, z) lattice of [0, r_max] x [0, z_max]."""
    r_nodes = np.linspace(0.0, r_max, nr)
    z_nodes = np.linspace(0.0, z_max, nz)
    vals = np.array([[J_value(lp_pair, r, z, quad_nodes) for z in z_nodes] for r in r_nodes])
    k = np.unravel_index(np.argmin(vals), vals.shape)
    return JGrid(r_nodes, z_nodes, vals, float(vals[k]),
                 (float(r_nodes[k[0]]), float(z_nodes[k[1]])))


# ---------------------------------------------------------------------------
# delta_star and the commutation relation

def delta_star_apply(W, h_r: float, h_z: float, r_nodes, n: int) -> np.ndarray:
    """Centred second-order differences of delta_star on interior lattice nodes.

    ``W`` has shape (len(r_nodes), nz); the result has shape
    (len(r_nodes) - 2, nz - 2) and corresponds to W[1:-1, 1:-1].
    """
    W = np.asarray(W, dtype=float)
    r = np.asarray(r_nodes, dtype=float)[1:-1, None]
    if np.any(r <= 0):
        raise ValueError("delta_star needs r > 0 at interior nodes")
    c = W[1:-1, 1:-1]
    w_rr = (W[2:, 1:-1] - 2 * c + W[:-2, 1:-1]) / h_r ** 2
    w_r = (W[2:, 1:-1] - W[:-2, 1:-1]) / (2 * h_r)
    w_zz = (W[1:-1, 2:] - 2 * c + W[1:-1, :-2]) / h_z ** 2
    return w_rr - (n - 1) / r * w_r + w_zz


def J_of_function(f: Callable, n: int, r: float, z: float, nodes: int = GL_NODES) -> float:
    """J f for a smooth function f(x, z) with x of shape (m, n)."""
    g, gw = _gl(nodes)
    if r <= 0:
        return 0.0
    if n == 1:
        x = -r + 2 * r * g
        return 2 * r * float(np.dot(gw, f(x[:, None], np.full(nodes, z))))
    if n == 2:
        m = 2 * nodes
        th = (np.arange(m) + 0.5) * 2 * math.pi / m
        rho = r * g
        P = np.stack([np.outer(rho, np.cos(th)).ravel(), np.outer(rho, np.sin(th)).ravel()], 1)
        vals = f(P, np.full(len(P), z)).reshape(len(rho), m)
        return float(r * np.dot(gw * rho, vals.mean(axis=1)) * 2 * math.pi)
    raise ValueError("J_of_function supports n = 1, 2")


def commutation_check(test_field: Callable, laplacian: Callable, n: int,
                      r_range=(0.5, 1.5), z_range=(-0.5, 0.5), h: float = 0.1) -> float:
    """max |delta_star(J f) - J(Delta f)| over interior nodes of a lattice of spacing h."""
    r_nodes = np.arange(r_range[0], r_range[1] + h / 2, h)
    z_nodes = np.arange(z_range[0], z_range[1] + h / 2, h)
    Jf = np.array([[J_of_function(test_field, n, r, z) for z in z_nodes] for r in r_nodes])
    lhs = delta_star_apply(Jf, h, h, r_nodes, n)
    rhs = np.array([[J_of_function(laplacian, n, r, z) for z in z_nodes[1:-1]]
                    for r in r_nodes[1:-1]])
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# moment difference through potentials in R^(n+1)

@dataclass(frozen=True)
class PhiSpec:
    """Radial profile Phi(r) = r^q (kind "power") or log r (kind "log")."""

    kind: str
    q: float = 2.0

    def phi(self, r):
        return np.log(r) if self.kind == "log" else r ** self.q

    def psi(self, r, n):
        """Laplacian of Phi(|x|) in R^(n+1): Phi'' + (n/r) Phi'."""
        if self.kind == "log":
            return (n - 1) / r ** 2
        q = self.q
        return q * (q + n - 1) * r ** (q - 2)

    def dpsi(self, r, n):
        if self.kind == "log":
            return -2.0 * (n - 1) / r ** 3
        q = self.q
        return q * (q + n - 1) * (q - 2) * r ** (q - 3)

    def validate(self, n):
        if self.kind == "log":
            if n < 2:
                raise ValueError("log profile needs n >= 2")
        elif self.kind == "power":
            if not 0 < self.q <= 2:
                raise ValueError("power profile needs 0 < q <= 2")
        else:
            raise ValueError(f"unknown profile {self.kind!r}")


@dataclass(frozen=True)
class MomentDiffDual:
    direct: float
    via_J: float
    via_ball_integral: float | None
    a_n: float
    rel_discrepancy: float
    R: float


def ball_integral_slices(lp_pair, r: float, nodes: int = GL_NODES) -> float:
    """int over B^(n+1)(r) of (v - u) as int_{-r}^{r} J(v - u)(sqrt(r^2 - z^2), z) dz.

    The substitution z = r sin t removes the square-root endpoint behaviour;
    the integrand is even in z, so only [0, r] is integrated.
    """
    if r <= 0:
        return 0.0
    g, gw = _gl(nodes)
    t = 0.5 * math.pi * g
    z = r * np.sin(t)
    rad = r * np.cos(t)
    vals = np.array([J_value(lp_pair, a, b) for a, b in zip(rad, z)])
    return 2.0 * 0.5 * math.pi * float(np.dot(gw, vals * r * np.cos(t)))


def ball_integral_polar(lp_pair, R: float, n_radial: int = 256, n_angular: int = 256) -> float:
    """int over B^(n+1)(R) of (v - u) by a polar (spherical) product rule.

    Independent of J: radial composite Gauss-Legendre, angular equal-weight
    points offset from the slice z = 0.
    """
    v, u = lp_pair
    n = v.n
    panels = max(1, n_radial // 8)
    g, gw = _gl(8)
    edges = np.linspace(0.0, R, panels + 1)
    rho = (edges[:-1, None] + np.diff(edges)[:, None] * g[None]).ravel()
    wr = (np.diff(edges)[:, None] * gw[None]).ravel()
    if n == 1:
        th = (np.arange(n_angular) + 0.5) * 2 * math.pi / n_angular + math.pi / (3 * n_angular)
        dirs = np.c_[np.cos(th), np.sin(th)]
        measure = 2 * math.pi
    elif n == 2:
        dirs = fibonacci_sphere(n_angular * n_angular // 8)
        measure = 4 * math.pi
    else:
        raise ValueError("polar ball integral supports n = 1, 2")
    total = 0.0
    for rk, wk in zip(rho, wr):
        P = rk * dirs
        diff = v.values(P[:, :-1], P[:, -1]) - u.values(P[:, :-1], P[:, -1])
        total += wk * rk ** n * measure * float(diff.mean())
    return total


def _adaptive_simpson(f, a, b, tol, depth=SIMPSON_DEPTH):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)


def _phi_moment(lp: LiftedPotential, phi: PhiSpec):
    if lp.source is not None:
        return any_moment(lp.source.measure, "log" if phi.kind == "log" else phi.q)
    from . import closedform
    if phi.kind == "log":
        return closedform.ball_moment(lp.n, "codim_one", "log", lp.radius)
    return closedform.ball_moment(lp.n, "codim_one", phi.q, lp.radius)


def moment_difference_via_J(K_lp: LiftedPotential, ball_lp: LiftedPotential, phi: PhiSpec,
                            R: float | None = None, tol: float = 1e-7,
                            third_path: bool = True) -> MomentDiffDual:
    """Phi-moment difference of K and the ball, directly and through potentials.

    The potential route evaluates
    a_n (Psi(R) I(R) - int_0^R Psi'(r) I(r) dr),  I(r) = int_{B(r)} (v - u),
    with I from J slices and the outer integral by adaptive Simpson.  For
    q = 2 the ball integral is also computed by an independent polar rule
    and scaled by 2 (n + 1) a_n.
    """
    n = K_lp.n
    phi.validate(n)
    R = R if R is not None else 2.0 * max(K_lp.circumradius, ball_lp.circumradius)
    if R <= max(K_lp.circumradius, ball_lp.circumradius):
        raise ValueError("R must enclose both sets")
    pair = (ball_lp, K_lp)
    an = a_n(n)
    direct = _phi_moment(K_lp, phi) - _phi_moment(ball_lp, phi)
    I_R = ball_integral_slices(pair, R)
    via_J = an * phi.psi(R, n) * I_R
    if not (phi.kind == "power" and phi.q == 2):
        # r = R t^m makes Psi'(r) I(r) dr bounded near t = 0
        expo = (phi.q + n - 1) if phi.kind == "power" else 1.0
        m = max(1.0, 2.0 / expo)

        def integrand(t):
            if t <= 0:
                return 0.0
            r = R * t ** m
            return phi.dpsi(r, n) * ball_integral_slices(pair, r) * m * R * t ** (m - 1)

        scale = abs(via_J) + abs(direct) + 1e-12
        via_J -= an * _adaptive_simpson(integrand, 0.0, 1.0,
                                        max(tol * scale, SIMPSON_ABS_TOL) / an)
    third = None
    if third_path and phi.kind == "power" and phi.q == 2:
        third = 2 * (n + 1) * an * ball_integral_polar(pair, R)
    floor = 1e-12
    rel = abs(direct - via_J) / max(abs(direct), floor)
    if third is not None:
        rel = max(rel, abs(direct - third) / max(abs(direct), floor),
                  abs(via_J - third) / max(abs(direct), floor))
    return MomentDiffDual(direct, via_J, third, an, rel, R)
