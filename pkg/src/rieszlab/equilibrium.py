"""Energy minimization over the probability simplex.

The discrete problem is  minimize w^T M w  subject to  w >= 0, sum w = 1.
Its KKT conditions say the potential g = M w equals lambda = w^T M w on
the support and is at least lambda elsewhere, the discrete counterpart of
the Frostman conditions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .geometry import Mesh
from .kernels import KernelSpec, kernel_value, self_energy


class SolverError(RuntimeError):
    """The solver did not reach its tolerance; ``best`` holds the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    mesh: Mesh
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.shape != (len(self.mesh),):
            raise ValueError("weight vector does not match the mesh")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12 * max(1, len(w)) ** 0.5 * 10:
            raise ValueError("weights must form a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    measure: DiscreteMeasure
    energy: float
    capacity: float
    kkt_residual: float
    active_support_fraction: float
    iterations: int
    method: str = "active_set"
    matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def mesh(self) -> Mesh:
        return self.measure.mesh

    @property
    def w(self) -> np.ndarray:
        return self.measure.w


@dataclass(frozen=True)
class FrostmanReport:
    max_potential_on_support: float
    min_potential_on_support: float
    energy: float
    max_violation: float
    regular_fraction: float


@dataclass(frozen=True)
class SolverOptions:
    method: str = "active_set"
    tol: float = 1e-8
    max_iter: int = 500

    def __post_init__(self):
        if self.method not in ("active_set", "projected_gradient"):
            raise ValueError(f"unknown solver method {self.method!r}")


def discrete_energy(M, w) -> float:
    M = np.asarray(M)
    w = np.asarray(w, dtype=float)
    if M.shape != (len(w), len(w)):
        raise ValueError("matrix and weight vector sizes differ")
    return float(w @ M @ w)


def capacity_from_energy(energy: float, kind: KernelSpec) -> float:
    if kind.is_log:
        return math.exp(-energy)
    if not energy > 0:
        raise ValueError("Riesz energy must be positive")
    return energy ** (-1.0 / kind.p)


def kkt_residual(M, w, support_tol=0.0) -> float:
    """Largest violation of the KKT conditions, relative to max(|lambda|, 1)."""
    supp = w > support_tol
    g = M[:, supp] @ w[supp]
    lam = float(w[supp] @ g[supp])
    res = float(np.abs(g[supp] - lam).max()) if supp.any() else math.inf
    # atoms with infinite self-energy can never take mass
    off = ~supp & ~np.isposinf(np.diag(M))
    if off.any():
        res = max(res, max(0.0, float((lam - g[off]).max())))
    return float(res / max(abs(lam), 1.0))


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorting method)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _kkt_solve(M, free):
    """Minimizer of w^T M w on span(free) with sum w = 1 (bordered system)."""
    F = np.flatnonzero(free)
    s = len(F)
    A = np.empty((s + 1, s + 1))
    A[:s, :s] = M[np.ix_(F, F)]
    A[:s, s] = 1.0
    A[s, :s] = 1.0
    A[s, s] = 0.0
    rhs = np.zeros(s + 1)
    rhs[s] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        x = sla.solve(A, rhs, assume_a="sym", check_finite=False)
    w = np.zeros(len(M))
    w[F] = x[:s]
    return w


def _active_set(M, tol, max_iter, free=None):
    """Block principal pivoting on the simplex-constrained problem.

    Every infeasible index (negative weight on the support, or potential
    below lambda off it) is swapped at once while the count of infeasible
    indices keeps falling; after three non-improving block swaps the
    method falls back to swapping a single index, which terminates for
    positive definite M.
    """
    n = len(M)
    free = np.ones(n, dtype=bool) if free is None else free.copy()
    best, budget = n + 1, 3
    w = None
    for it in range(1, max_iter + 1):
        w = _kkt_solve(M, free)
        g = M @ w
        lam = float(g[free].mean())
        scale = max(abs(lam), 1.0)
        neg = free & (w < 0)
        low = ~free & (g < lam - tol * scale)
        bad = np.flatnonzero(neg | low)
        if len(bad) == 0:
            return w, it
        if len(bad) < best:
            best, budget = len(bad), 3
            swap = bad
        elif budget > 0:
            budget -= 1
            swap = bad
        else:
            swap = bad[-1:]
        free[swap] = ~free[swap]
    raise SolverError("active set did not converge", None if w is None else np.clip(w, 0, None))


def _projected_gradient(M, tol, max_iter, w0=None):
    """Monotone projected gradient with Barzilai-Borwein steps and Armijo backtracking.

    Returns the iterate, iteration count and the sequence of energies
    (nonincreasing by construction).
    """
    n = len(M)
    w = np.full(n, 1.0 / n) if w0 is None else np.asarray(w0, float).copy()
    g = M @ w
    f = float(w @ g)
    step = 1.0 / max(np.abs(M).max(), 1e-300)
    energies = [f]
    for it in range(1, max_iter + 1):
        d = project_simplex(w - 2.0 * step * g) - w
        if np.abs(d).max() < 1e-15:
            return w, it, energies
        gd = 2.0 * float(g @ d)
        t = 1.0
        while True:
            wn = w + t * d
            gn = M @ wn
            fn = float(wn @ gn)
            if fn <= f + 1e-4 * t * gd or t < 1e-12:
                break
            t *= 0.5
        if fn > f:
            return w, it, energies
        s = wn - w
        y = 2.0 * (gn - g)
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else 2.0 * step
        w, g, f = wn, gn, fn
        energies.append(f)
        if kkt_residual(M, w) < tol:
            return w, it, energies
    return w, max_iter, energies


def _submesh(mesh, keep):
    return Mesh(mesh.dim, mesh.atoms[keep], mesh.weights[keep], mesh.cell_radius[keep],
                mesh.intrinsic_dim,
                None if mesh.extents is None else mesh.extents[keep],
                None if mesh.frames is None else mesh.frames[keep],
                mesh.part_index[keep])


def _result(M, w, spec, mesh, iterations, method):
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    supp = w > 0
    energy = discrete_energy(M[np.ix_(supp, supp)], w[supp])
    return EquilibriumResult(
        measure=DiscreteMeasure(mesh, w),
        energy=energy,
        capacity=capacity_from_energy(energy, spec),
        kkt_residual=kkt_residual(M, w),
        active_support_fraction=float(np.count_nonzero(w > 0) / len(w)),
        iterations=iterations,
        method=method,
        matrix=M,
    )


def solve_equilibrium(M, spec: KernelSpec, mesh: Mesh, opts: SolverOptions | None = None
                      ) -> EquilibriumResult:
    """Minimize w^T M w over the simplex.

    The active-set method falls back to projected gradient when a linear
    system is singular or it fails to converge; the gradient iterate is
    then polished by an active-set pass warm-started on its support.
    """
    opts = opts or SolverOptions()
    M = np.asarray(M, dtype=float)
    n = len(M)
    if M.shape != (n, n):
        raise ValueError("kernel matrix must be square")
    # point atoms carry an infinite self-energy and can hold no mass
    pinned = np.isposinf(np.diag(M))
    off = ~np.eye(n, dtype=bool)
    if not (np.all(np.isfinite(M[off])) and not np.isnan(np.diag(M)).any()):
        raise ValueError("kernel matrix entries must be finite off the diagonal")
    if pinned.all():
        raise ValueError("every atom has infinite self-energy")
    if pinned.any():
        keep = np.flatnonzero(~pinned)
        sub = solve_equilibrium(M[np.ix_(keep, keep)], spec, _submesh(mesh, keep), opts)
        w = np.zeros(n)
        w[keep] = sub.w
        res = _result(M, w, spec, mesh, sub.iterations, sub.method)
        return res
    if n == 1:
        return _result(M, np.ones(1), spec, mesh, 0, opts.method)
    if opts.method == "active_set":
        try:
            w, it = _active_set(M, opts.tol, opts.max_iter)
            return _result(M, w, spec, mesh, it, "active_set")
        except (sla.LinAlgError, sla.LinAlgWarning, SolverError):
            pass
    w, it, _ = _projected_gradient(M, opts.tol, max(opts.max_iter, 20000))
    method = "projected_gradient"
    if kkt_residual(M, w) > opts.tol:
        try:
            w2, it2 = _active_set(M, opts.tol, opts.max_iter, free=w > 1e-12)
            w, it, method = w2, it + it2, "projected_gradient+polish"
        except (sla.LinAlgError, sla.LinAlgWarning, SolverError):
            pass
    res = _result(M, w, spec, mesh, it, method)
    if res.kkt_residual > max(opts.tol, 1e-6):
        raise SolverError(f"solver stopped with KKT residual {res.kkt_residual:.3g}", res)
    return res


def potential(result: EquilibriumResult, spec: KernelSpec, x) -> float:
    """Equilibrium potential at ``x``; at an atom its own cell uses the self-energy."""
    x = np.asarray(x, dtype=float)
    return float(potential_many(result, spec, x[None, :])[0])


def potential_many(result: EquilibriumResult, spec: KernelSpec, X) -> np.ndarray:
    mesh = result.mesh
    X = np.atleast_2d(np.asarray(X, dtype=float))
    atoms = mesh.atoms
    if X.shape[1] > atoms.shape[1]:
        atoms = np.hstack([atoms, np.zeros((len(atoms), X.shape[1] - atoms.shape[1]))])
    out = np.empty(len(X))
    for start in range(0, len(X), 2048):
        block = X[start:start + 2048]
        D = np.linalg.norm(block[:, None, :] - atoms[None], axis=2)
        hit = D == 0
        D[hit] = 1.0
        K = spec.of_distance(D)
        if hit.any():
            rows, cols = np.nonzero(hit)
            if result.matrix is not None:
                d = result.matrix[cols, cols]
                K[rows, cols] = np.where(result.w[cols] > 0, d, 0.0)
            else:
                K[rows, cols] = [self_energy(spec, mesh.cell_radius[c], mesh.intrinsic_dim)
                                 for c in cols]
        out[start:start + len(block)] = K @ result.w
    return out


def frostman_check(result: EquilibriumResult, spec: KernelSpec, tolerance: float = 0.02,
                   probes=None) -> FrostmanReport:
    """Compare the potential with the energy on the atoms and optional probes.

    ``tolerance`` is relative to |energy| (absolute for log energies near 0).
    """
    w = result.w
    if result.matrix is not None:
        u = result.matrix @ w
    else:
        u = potential_many(result, spec, result.mesh.atoms)
    V = result.energy
    scale = max(abs(V), 1e-12) if not spec.is_log else max(abs(V), 1.0)
    supp = w > 0
    viol = max(0.0, float((u - V).max()))
    if probes is not None and len(probes):
        viol = max(viol, float((potential_many(result, spec, probes) - V).max()))
    return FrostmanReport(
        max_potential_on_support=float(u[supp].max()),
        min_potential_on_support=float(u[supp].min()),
        energy=V,
        max_violation=viol,
        regular_fraction=float(np.mean(np.abs(u - V) < tolerance * scale)),
    )


def solve_set(spec_set, kernel: KernelSpec, resolution: int, grading: str = "endpoint_refined",
              opts: SolverOptions | None = None) -> EquilibriumResult:
    """Mesh a set, assemble its kernel matrix and solve."""
    from .geometry import build_mesh
    from .kernels import kernel_matrix

    mesh = build_mesh(spec_set, resolution, grading)
    return solve_equilibrium(kernel_matrix(kernel, mesh), kernel, mesh, opts)
