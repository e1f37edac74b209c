"""Riesz and logarithmic kernels, cell self-energies and kernel matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ._cellquad import box_box, box_self_energy
from .geometry import Mesh

# Cell pairs closer than NEAR_FIELD_ETA times the larger cell extent use the
# exact box-box mean instead of the point value.  Point values overshoot
# badly for thin stacked cells and can make the matrix indefinite.
NEAR_FIELD_ETA = 1.5

# Surface meshes calibrate their diagonal on a patch of this many typical
# cell widths (see _calibrated_surface_diagonal).
PATCH_CELLS = 6.0

# Dense matrices beyond this size are out of scope.
MAX_DENSE = 8192


class KernelError(ValueError):
    """Invalid kernel parameters or a divergent self-interaction."""


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is "riesz" (needs 0 < p < dim_ambient) or "log"."""

    kind: str
    p: float = 0.0
    dim_ambient: int = 1

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind == "log":
            object.__setattr__(self, "p", 0.0)
        elif kind == "riesz":
            if not 0 < self.p < self.dim_ambient:
                raise KernelError(
                    f"Riesz exponent must satisfy 0 < p < {self.dim_ambient}, got {self.p}")
        else:
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.dim_ambient < 1:
            raise KernelError("ambient dimension must be at least 1")

    @classmethod
    def riesz(cls, p: float, dim_ambient: int) -> "KernelSpec":
        return cls("riesz", float(p), int(dim_ambient))

    @classmethod
    def log(cls, dim_ambient: int = 1) -> "KernelSpec":
        return cls("log", 0.0, int(dim_ambient))

    @property
    def is_log(self) -> bool:
        return self.kind == "log"

    @property
    def power(self):
        """Exponent for the cell quadrature routines (None for log)."""
        return None if self.is_log else self.p

    def of_distance(self, r):
        """Kernel as a function of distance; +inf at r = 0."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            if self.is_log:
                return -np.log(r)
            return r ** -self.p


def kernel_value(spec: KernelSpec, x, y) -> float:
    """k(|x - y|) with the Euclidean distance of the ambient space."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, float) - np.asarray(y, float))))
    if r == 0.0:
        return math.inf
    return float(spec.of_distance(r))


# ---------------------------------------------------------------------------
# ball-equivalent self-energy constants

def _lens_volume(d, t):
    """Volume of the intersection of two unit d-balls at centre distance t."""
    if d == 1:
        return 2.0 - t
    if d == 2:
        return 2.0 * math.acos(t / 2) - 0.5 * t * math.sqrt(max(0.0, 4 - t * t))
    if d == 3:
        return math.pi * (4 + t) * (2 - t) ** 2 / 12
    vol_m1 = math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2 + 1)
    val, _ = integrate.quad(lambda x: (1 - x * x) ** ((d - 1) / 2), t / 2, 1)
    return 2 * vol_m1 * val


@lru_cache(maxsize=None)
def self_energy_constant(p, d: int) -> float:
    """Mean kernel over two uniform points of the unit d-ball.

    For the Riesz kernel the mean over a ball of radius rho is
    ``c * rho**-p``; for the log kernel it is ``log(1/rho) + c``.
    ``p=None`` selects log.  The pair distance t has density
    S_{d-1} t^{d-1} A_d(t) / V_d^2 on [0, 2] with A_d the lens volume.
    """
    if p is not None and p >= d:
        raise KernelError(f"self-energy diverges for p={p} >= intrinsic dimension {d}")
    vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    surf = d * vol

    def dens(t):
        return surf * _lens_volume(d, t) / vol ** 2

    if p is None:
        val, _ = integrate.quad(lambda t: -math.log(t) * t ** (d - 1) * dens(t), 0, 2,
                                limit=200, epsabs=1e-14, epsrel=1e-13)
    else:
        # t^(d-1-p) is integrable; let quad handle the endpoint weight
        val, _ = integrate.quad(dens, 0, 2, weight="alg", wvar=(d - 1 - p, 0),
                                epsabs=1e-14, epsrel=1e-13)
    return val


def self_energy(spec: KernelSpec, cell_radius: float, intrinsic_dim: int) -> float:
    """Mean kernel over two independent points of one cell.

    A cell of radius rho is modelled as a ball of that radius in its own
    intrinsic dimension.  In one dimension this coincides with a segment of
    width h = 2 rho, for which the log value is log(1/h) + 3/2 exactly.
    """
    if not cell_radius > 0:
        raise KernelError("cell radius must be positive")
    c = self_energy_constant(spec.power, int(intrinsic_dim))
    if spec.is_log:
        return c - math.log(cell_radius)
    return c * cell_radius ** -spec.p


def monte_carlo_self_energy_constant(p, d: int, samples: int = 1_000_000, seed: int = 0):
    """Monte-Carlo estimate of ``self_energy_constant`` and its standard error."""
    rng = np.random.default_rng(seed)

    def ball_points(n):
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * rng.random((n, 1)) ** (1.0 / d)

    r = np.linalg.norm(ball_points(samples) - ball_points(samples), axis=1)
    vals = -np.log(r) if p is None else r ** -p
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------

def _box_self_energies(spec, extents):
    """Box self-energy per row of ``extents``, computed once per distinct shape."""
    key = np.round(extents, 12)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    vals = box_self_energy(uniq, spec.power)
    return vals[inv.ravel()]


def _near_field(spec, mesh, M, D):
    """Replace point values of close cell pairs by exact box-box means."""
    X, E, F = mesh.atoms, mesh.extents, mesh.frames
    size = E.max(axis=1)
    pairs = cKDTree(X).query_pairs(NEAR_FIELD_ETA * size.max(), output_type="ndarray")
    if len(pairs) == 0:
        return
    i, j = pairs[:, 0], pairs[:, 1]
    keep = D[i, j] < NEAR_FIELD_ETA * np.maximum(size[i], size[j])
    i, j = i[keep], j[keep]
    if len(i) == 0:
        return
    # offset of cell j expressed in cell i's frame; cell j is treated as
    # parallel to cell i, which holds up to O(cell size) rotations
    delta = np.einsum("nab,nb->na", F[i], X[j] - X[i])
    # mirror symmetry per axis lets us fold signs
    config = np.hstack([E[i], E[j], np.abs(delta)])
    scale = max(float(size.max()), 1e-300)
    key = np.round(config / scale, 9)
    uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    d = mesh.dim
    cfg = config[first]
    vals = np.empty(len(uniq))
    for chunk in np.array_split(np.arange(len(uniq)), max(1, len(uniq) // 20000)):
        vals[chunk] = box_box(cfg[chunk, 2 * d:], cfg[chunk, :d], cfg[chunk, d:2 * d],
                              spec.power)
    M[i, j] = vals[inv]
    M[j, i] = vals[inv]


def _radial_derivatives(spec, r, orders):
    """Derivatives k^(m)(r) of the radial kernel for each m in ``orders``."""
    out = []
    for m in orders:
        if spec.is_log:
            # (-log r)^(m) = (-1)^m (m - 1)! / r^m
            out.append((-1) ** m * math.factorial(m - 1) / r ** m)
        else:
            c = math.prod(-(spec.p + i) for i in range(m))
            out.append(c * r ** (-spec.p - m))
    return out


def _far_field_correction(spec, mesh, M, D, rows=512):
    """Add the Taylor correction of the box-box mean to point values.

    For independent uniform points of two boxes the offset s has covariance
    C = C_i + C_j with C_i = F_i^T diag(E_i^2 / 12) F_i, so the mean kernel is
    k(d) + tr(H C) / 2 + ..., where H is the Hessian of the radial kernel.
    In one dimension the fourth-order term is included as well.
    """
    X, E, F = mesh.atoms, mesh.extents, mesh.frames
    n, d = X.shape
    var = E ** 2 / 12.0
    tr = var.sum(axis=1)
    for start in range(0, n, rows):
        sl = slice(start, min(n, start + rows))
        diff = X[None, :, :] - X[sl, None, :]
        r = D[sl]
        u = diff / r[..., None]
        # u^T C_i u for row cells and u^T C_j u for column cells
        proj_i = np.einsum("akd,abd->abk", F[sl], u)
        proj_j = np.einsum("bkd,abd->abk", F, u)
        uCu = (var[sl, None, :] * proj_i ** 2).sum(-1) + (var[None, :, :] * proj_j ** 2).sum(-1)
        trC = tr[sl, None] + tr[None, :]
        k1, k2, k4 = _radial_derivatives(spec, r, (1, 2, 4))
        corr = 0.5 * (k2 * uCu + k1 / r * (trC - uCu))
        if d == 1:
            a2, b2 = E[sl, 0, None] ** 2, E[None, :, 0] ** 2
            s4 = (a2 ** 2 + b2 ** 2) / 80.0 + a2 * b2 / 24.0
            corr += k4 * s4 / 24.0
        idx = np.arange(sl.start, sl.stop)
        corr[idx - start, idx] = 0.0
        M[sl] += corr


def _bump(s):
    return np.where(s < 1.0, (1.0 - s * s) ** 4, 0.0)


@lru_cache(maxsize=None)
def _bump_integral(p, P):
    """int over the plane of bump(|y|/P) k(|y|) dy."""
    if p is None:
        f = lambda t: float(_bump(np.array(t / P))) * -math.log(t) * 2 * math.pi * t
        val, _ = integrate.quad(f, 0, P, limit=200)
    else:
        f = lambda t: float(_bump(np.array(t / P))) * 2 * math.pi
        val, _ = integrate.quad(f, 0, P, weight="alg", wvar=(1 - p, 0), limit=200)
    return val


def _calibrated_surface_diagonal(spec, mesh, M):
    """Diagonal making each row integrate a smooth bump exactly.

    For cell i the diagonal entry is chosen so that
    sum_j A_j bump(|x_j - x_i|/P) M_ij equals the continuum integral of
    bump * k over the surface.  On a sphere the area element in chordal
    distance t is exactly 2 pi t dt, so the plane integral applies; on
    other smooth surfaces it is correct to O((curvature * P)^2).  This
    absorbs the O(h) error of point values between neighbouring cells.
    Returns False when the mesh is too coarse for the patch.
    """
    X, A = mesh.atoms, mesh.weights
    tree = cKDTree(X)
    a = math.sqrt(float(np.median(A)))
    diag = np.empty(len(X))
    parts = mesh.part_index
    for k in np.unique(parts):
        idx = np.flatnonzero(parts == k)
        span = float(np.ptp(X[idx], axis=0).max())
        P = min(PATCH_CELLS * a, 0.25 * span)
        if P < 3.0 * a:
            return False
        total = _bump_integral(spec.power, round(P, 15))
        for i, nb in zip(idx, tree.query_ball_point(X[idx], P)):
            nb = np.asarray(nb)
            nb = nb[nb != i]
            t = np.linalg.norm(X[nb] - X[i], axis=1)
            diag[i] = (total - np.dot(A[nb] * _bump(t / P), M[i, nb])) / A[i]
    np.fill_diagonal(M, diag)
    return True


def kernel_matrix(spec: KernelSpec, mesh: Mesh, near_field: bool = True) -> np.ndarray:
    """Dense symmetric kernel matrix of a mesh.

    Off-diagonal entries are kernel values between atoms.  For meshes
    carrying cell boxes, the diagonal is the exact box self-energy, close
    pairs use the exact box-box mean and distant pairs a Taylor-corrected
    point value.  Surfaces in R^3 get a locally
    calibrated diagonal; other meshes use ``self_energy`` of each cell
    radius.
    """
    n = len(mesh)
    if n > MAX_DENSE:
        raise KernelError(f"dense kernel matrix limited to {MAX_DENSE} atoms, got {n}")
    if mesh.dim > spec.dim_ambient:
        raise KernelError("mesh dimension exceeds the kernel's ambient dimension")
    if not spec.is_log and spec.p >= mesh.intrinsic_dim:
        raise KernelError(
            f"self-energy diverges for p={spec.p} >= intrinsic dimension {mesh.intrinsic_dim}")
    D = cdist(mesh.atoms, mesh.atoms)
    np.fill_diagonal(D, 1.0)
    M = spec.of_distance(D)
    boxed = mesh.extents is not None and mesh.extents.shape[1] == mesh.intrinsic_dim
    if boxed:
        np.fill_diagonal(M, _box_self_energies(spec, mesh.extents))
        if near_field and mesh.intrinsic_dim == mesh.dim:
            _far_field_correction(spec, mesh, M, D)
            _near_field(spec, mesh, M, D)
    else:
        diag = [self_energy(spec, r, mesh.intrinsic_dim) for r in mesh.cell_radius]
        np.fill_diagonal(M, diag)
        if near_field and mesh.intrinsic_dim == 2 and mesh.dim == 3:
            _calibrated_surface_diagonal(spec, mesh, M)
    return M
