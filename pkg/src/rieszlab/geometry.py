"""Set descriptions and their discretization into cell meshes.

A mesh replaces a compact set by a finite family of cells.  Every cell has
an atom (a representative point), a measure (length, area, volume or
surface area), and a characteristic half-width.  Volumetric cells also
carry the side lengths and orientation of a local box approximating them,
which the kernel module uses for accurate near-field interactions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

# Fraction of the radius occupied by the boundary layer of endpoint_refined
# disk/ball meshes.
BOUNDARY_LAYER = 0.1


class GeometryError(ValueError):
    """Invalid set specification or meshing request."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    dim = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise GeometryError(f"interval needs a < b, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise GeometryError("sphere radius must be positive")

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Ellipsoid:
    """Solid ellipsoid, or only its boundary when ``surface`` is set."""

    center: tuple
    semi_axes: tuple
    surface: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(s) for s in self.semi_axes))
        if len(self.center) != len(self.semi_axes):
            raise GeometryError("ellipsoid center and semi-axes differ in length")
        if min(self.semi_axes) <= 0:
            raise GeometryError("ellipsoid semi-axes must be positive")

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Annulus:
    center: tuple
    r_inner: float
    r_outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 < self.r_inner < self.r_outer:
            raise GeometryError("annulus needs 0 < r_inner < r_outer")

    @property
    def dim(self):
        return len(self.center)


Primitive = Union[Interval, Ball, Sphere, Ellipsoid, Annulus]


@dataclass(frozen=True)
class SetSpec:
    dim: int
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if self.dim < 1:
            raise GeometryError("dimension must be at least 1")
        if not self.parts:
            raise GeometryError("a set needs at least one part")
        for part in self.parts:
            if part.dim != self.dim:
                raise GeometryError(
                    f"{type(part).__name__} has dimension {part.dim}, set has {self.dim}"
                )

    def scaled(self, s: float) -> "SetSpec":
        """Dilation by ``s`` about the origin."""
        return SetSpec(self.dim, [_scale_part(p, s) for p in self.parts])

    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the set."""
        return max(_part_circumradius(p) for p in self.parts)


def _scale_part(p, s):
    if isinstance(p, Interval):
        lo, hi = sorted((s * p.a, s * p.b))
        return Interval(lo, hi)
    c = tuple(s * x for x in p.center)
    if isinstance(p, Ball):
        return Ball(c, s * p.radius)
    if isinstance(p, Sphere):
        return Sphere(c, s * p.radius)
    if isinstance(p, Ellipsoid):
        return Ellipsoid(c, tuple(s * a for a in p.semi_axes), p.surface)
    return Annulus(c, s * p.r_inner, s * p.r_outer)


def _part_circumradius(p):
    if isinstance(p, Interval):
        return max(abs(p.a), abs(p.b))
    c = np.linalg.norm(p.center)
    if isinstance(p, (Ball, Sphere)):
        return c + p.radius
    if isinstance(p, Ellipsoid):
        return c + max(p.semi_axes)
    return c + p.r_outer


def _part_from_dict(d):
    kind = d.get("type", "").lower()
    try:
        if kind == "interval":
            return Interval(float(d["a"]), float(d["b"]))
        if kind == "ball":
            return Ball(d["center"], float(d["radius"]))
        if kind == "sphere":
            return Sphere(d["center"], float(d["radius"]))
        if kind == "ellipsoid":
            return Ellipsoid(d["center"], d["semi_axes"], bool(d.get("surface", False)))
        if kind == "annulus":
            return Annulus(d["center"], float(d["r_inner"]), float(d["r_outer"]))
    except KeyError as exc:
        raise GeometryError(f"{kind} part is missing field {exc}") from None
    raise GeometryError(f"unknown part type {d.get('type')!r}")


def setspec_from_dict(d: dict) -> SetSpec:
    if "dim" not in d or "parts" not in d:
        raise GeometryError("set config needs 'dim' and 'parts'")
    return SetSpec(int(d["dim"]), [_part_from_dict(p) for p in d["parts"]])


def setspec_to_dict(spec: SetSpec) -> dict:
    parts = []
    for p in spec.parts:
        if isinstance(p, Interval):
            parts.append({"type": "interval", "a": p.a, "b": p.b})
        elif isinstance(p, Ball):
            parts.append({"type": "ball", "center": list(p.center), "radius": p.radius})
        elif isinstance(p, Sphere):
            parts.append({"type": "sphere", "center": list(p.center), "radius": p.radius})
        elif isinstance(p, Ellipsoid):
            parts.append({"type": "ellipsoid", "center": list(p.center),
                          "semi_axes": list(p.semi_axes), "surface": p.surface})
        else:
            parts.append({"type": "annulus", "center": list(p.center),
                          "r_inner": p.r_inner, "r_outer": p.r_outer})
    return {"dim": spec.dim, "parts": parts}


def load_setspec(path) -> SetSpec:
    with open(Path(path)) as fh:
        return setspec_from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Cells of a discretized set.

    ``extents`` and ``frames`` are present only for cells that are well
    approximated by a local box: ``extents[i]`` holds the side lengths and
    ``frames[i]`` the unit axes (rows) of that box in ambient coordinates.
    """

    dim: int
    atoms: np.ndarray
    weights: np.ndarray
    cell_radius: np.ndarray
    intrinsic_dim: int
    extents: np.ndarray | None = None
    frames: np.ndarray | None = None
    part_index: np.ndarray | None = field(default=None)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "atoms", atoms)
        for name in ("weights", "cell_radius"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.part_index is None:
            object.__setattr__(self, "part_index", np.zeros(len(atoms), dtype=int))
        n = len(atoms)
        if len(self.weights) != n or len(self.cell_radius) != n:
            raise GeometryError("mesh arrays differ in length")
        for name in ("atoms", "weights", "cell_radius", "extents", "frames", "part_index"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.atoms)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def scaled(self, s: float) -> "Mesh":
        return Mesh(
            self.dim, s * self.atoms, s ** self.intrinsic_dim * self.weights,
            s * self.cell_radius, self.intrinsic_dim,
            None if self.extents is None else s * self.extents,
            self.frames, self.part_index,
        )

    def validate(self) -> None:
        """Check the documented invariants, raising GeometryError on failure."""
        if len(self) < 2:
            raise GeometryError("a mesh needs at least two atoms")
        if np.any(self.weights <= 0):
            raise GeometryError("cell weights must be positive")
        if np.any(self.cell_radius <= 0):
            raise GeometryError("cell radii must be positive")
        d, _ = cKDTree(self.atoms).query(self.atoms, k=2)
        if np.any(d[:, 1] <= 0):
            raise GeometryError("atoms must be pairwise distinct")
        if np.any(self.cell_radius > d[:, 1] * (1 + 1e-9)):
            raise GeometryError("cell radius exceeds nearest-neighbour distance")


def concat_meshes(meshes: Sequence[Mesh]) -> Mesh:
    meshes = list(meshes)
    if len({m.dim for m in meshes}) != 1:
        raise GeometryError("cannot join meshes of different ambient dimension")
    if len({m.intrinsic_dim for m in meshes}) != 1:
        raise GeometryError("cannot join meshes of different intrinsic dimension")
    boxed = all(m.extents is not None for m in meshes)
    offsets = np.cumsum([0] + [int(m.part_index.max()) + 1 for m in meshes[:-1]])
    return Mesh(
        meshes[0].dim,
        np.vstack([m.atoms for m in meshes]),
        np.concatenate([m.weights for m in meshes]),
        np.concatenate([m.cell_radius for m in meshes]),
        meshes[0].intrinsic_dim,
        np.vstack([m.extents for m in meshes]) if boxed else None,
        np.concatenate([m.frames for m in meshes]) if boxed else None,
        np.concatenate([m.part_index + o for m, o in zip(meshes, offsets)]),
    )


def nearest_neighbor_separation(mesh: Mesh) -> float:
    """Minimum pairwise distance between atoms."""
    if len(mesh) < 2:
        raise GeometryError("need at least two atoms")
    d, _ = cKDTree(mesh.atoms).query(mesh.atoms, k=2)
    return float(d[:, 1].min())


# ---------------------------------------------------------------------------
# 1-D

def _interval_mesh(a, b, n, grading):
    if grading == "uniform":
        edges = np.linspace(a, b, n + 1)
    else:
        # cell edges at Chebyshev points: equal arcsine mass per cell
        edges = a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * np.arange(n + 1) / n))
    h = np.diff(edges)
    x = 0.5 * (edges[:-1] + edges[1:])
    return Mesh(1, x[:, None], h, h / 2, 1, h[:, None], np.ones((n, 1, 1)))


# ---------------------------------------------------------------------------
# radial layouts shared by disks, balls and annuli

def _layer_edges(lo, hi, n, toward_hi):
    """``n`` shells on [lo, hi] clustered like Chebyshev nodes at one end."""
    t = np.sin(0.5 * np.pi * np.arange(n + 1) / n)
    if toward_hi:
        return lo + (hi - lo) * t
    return hi - (hi - lo) * t[::-1]


def _radial_layout(r_in, r_out, h, grading):
    """Shell edges and lateral cell sizes for a polar/spherical grid.

    ``h`` is the lateral cell size.  Uniform grading uses square-ish cells
    of size ``h`` throughout.  Endpoint refinement keeps size ``h`` inside
    and adds Chebyshev-clustered thin shells in the outer (and, for
    annuli, inner) ``BOUNDARY_LAYER`` fraction of the radius.
    """
    if grading == "uniform":
        k = max(1, int(round((r_out - r_in) / h)))
        edges = np.linspace(r_in, r_out, k + 1)
        return edges, np.full(k, (r_out - r_in) / k)

    width = BOUNDARY_LAYER * r_out
    if r_in > 0:
        width = min(width, 0.25 * (r_out - r_in))
    # thinnest shell about h/6, interior spacing 1.5 h
    nb = 2
    while width * (1 - math.cos(0.5 * math.pi / nb)) > h / 6 and nb < 12:
        nb += 1
    core_lo = r_in + width if r_in > 0 else 0.0
    core_hi = r_out - width
    kc = max(1, int(round((core_hi - core_lo) / (1.5 * h))))
    pieces = [np.linspace(core_lo, core_hi, kc + 1)]
    lateral = [np.full(kc, 1.5 * h)]
    outer = _layer_edges(core_hi, r_out, nb, True)
    pieces.append(outer[1:])
    lateral.append(np.maximum(np.diff(outer), h))
    if r_in > 0:
        inner = _layer_edges(r_in, core_lo, nb, False)
        pieces.insert(0, inner[:-1])
        lateral.insert(0, np.maximum(np.diff(inner), h))
    return np.concatenate(pieces), np.concatenate(lateral)


def _polar_cells(edges, lateral):
    atoms, weights, ext, frames = [], [], [], []
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        rm = 0.5 * (a + b)
        m = max(3, int(round(2 * math.pi * rm / lateral[k])))
        half = math.pi / m
        th = (np.arange(m) + 0.5 + 0.5 * (k % 2)) * 2 * half
        # centroid of an annular sector
        rc = (2.0 / 3.0) * (b ** 3 - a ** 3) / (b ** 2 - a ** 2) * math.sin(half) / half
        er = np.c_[np.cos(th), np.sin(th)]
        et = np.c_[-np.sin(th), np.cos(th)]
        atoms.append(rc * er)
        area = math.pi * (b * b - a * a) / m
        weights.append(np.full(m, area))
        if a == 0:
            side = math.sqrt(area)
            ext.append(np.tile([side, side], (m, 1)))
        else:
            ext.append(np.tile([b - a, rm * 2 * half], (m, 1)))
        frames.append(np.stack([er, et], 1))
    return np.vstack(atoms), np.concatenate(weights), np.vstack(ext), np.vstack(frames)


def _spherical_cells(edges, lateral):
    atoms, weights, ext, frames = [], [], [], []
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        rm = 0.5 * (a + b)
        rc = 0.75 * (b ** 4 - a ** 4) / (b ** 3 - a ** 3)
        nb = max(2, int(round(math.pi * rm / lateral[k])))
        th = np.linspace(0.0, math.pi, nb + 1)
        for j in range(nb):
            t0, t1 = th[j], th[j + 1]
            tm = 0.5 * (t0 + t1)
            st, ct = math.sin(tm), math.cos(tm)
            m = max(3, int(round(2 * math.pi * rm * st / lateral[k])))
            ph = (np.arange(m) + 0.5 + 0.5 * ((j + k) % 2)) * 2 * math.pi / m
            er = np.c_[st * np.cos(ph), st * np.sin(ph), np.full(m, ct)]
            et = np.c_[ct * np.cos(ph), ct * np.sin(ph), np.full(m, -st)]
            ep = np.c_[-np.sin(ph), np.cos(ph), np.zeros(m)]
            vol = (b ** 3 - a ** 3) / 3 * (math.cos(t0) - math.cos(t1)) * 2 * math.pi / m
            atoms.append(rc * er)
            weights.append(np.full(m, vol))
            if a == 0:
                side = vol ** (1 / 3)
                ext.append(np.tile([side, side, side], (m, 1)))
            else:
                ext.append(np.tile([b - a, rm * (t1 - t0), rm * st * 2 * math.pi / m], (m, 1)))
            frames.append(np.stack([er, et, ep], 1))
    return np.vstack(atoms), np.concatenate(weights), np.vstack(ext), np.vstack(frames)


def _solid_radial_mesh(dim, r_in, r_out, n, grading):
    """Disk/ball/annulus (centred at the origin) with roughly ``n`` atoms."""
    cells = _polar_cells if dim == 2 else _spherical_cells
    measure = (math.pi if dim == 2 else 4 * math.pi / 3) * (r_out ** dim - r_in ** dim)

    def build(h):
        return cells(*_radial_layout(r_in, r_out, h, grading))

    # counts fall as h grows; bracket then bisect on log h
    h = (measure / n) ** (1 / dim)
    lo, hi = h / 8, h * 8
    best = None
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        out = build(mid)
        count = len(out[0])
        if best is None or abs(count - n) < abs(len(best[0]) - n):
            best = out
        if count > n:
            lo = mid
        else:
            hi = mid
        if abs(count - n) <= max(2, 0.01 * n) or hi / lo < 1.0005:
            break
    x, w, e, f = best
    r = np.sqrt(e.prod(1) / math.pi) if dim == 2 else (0.75 * e.prod(1) / math.pi) ** (1 / 3)
    rad = np.minimum(0.5 * e.min(1), r)
    return Mesh(dim, x, w, rad, dim, e, f)


# ---------------------------------------------------------------------------
# curves and surfaces

def _circle_mesh(radius, n):
    th = (np.arange(n) + 0.5) * 2 * math.pi / n
    er = np.c_[np.cos(th), np.sin(th)]
    et = np.c_[-np.sin(th), np.cos(th)]
    arc = 2 * math.pi * radius / n
    return Mesh(2, radius * er, np.full(n, arc), np.full(n, arc / 2), 1,
                np.full((n, 1), arc), et[:, None, :])


# Minimum separation of the Fibonacci lattice in units of sqrt(4 pi / n);
# measured by brute-force pairwise scans for n from 500 to 4000.
FIBONACCI_SEPARATION = 0.872


def fibonacci_sphere(n: int) -> np.ndarray:
    """Unit vectors of the ``n``-point Fibonacci lattice."""
    k = np.arange(n)
    z = 1.0 - (2 * k + 1) / n
    r = np.sqrt(1.0 - z * z)
    phi = k * GOLDEN_ANGLE
    return np.c_[r * np.cos(phi), r * np.sin(phi), z]


def _sphere_mesh(radius, n):
    area = 4 * math.pi * radius ** 2 / n
    return Mesh(3, radius * fibonacci_sphere(n), np.full(n, area),
                np.full(n, math.sqrt(area / math.pi)), 2)


def _affine_surface(mesh, axes):
    """Map a unit circle/sphere mesh onto an ellipse/ellipsoid surface."""
    a = np.asarray(axes)
    unit = mesh.atoms
    # area (length) element of x -> A x restricted to the unit sphere
    stretch = np.prod(a) * np.linalg.norm(unit / a, axis=1)
    w = mesh.weights * stretch
    if mesh.intrinsic_dim == 1:
        return Mesh(mesh.dim, unit * a, w, w / 2, 1, w[:, None],
                    _unit(mesh.frames[:, 0, :] * a)[:, None, :])
    return Mesh(mesh.dim, unit * a, w, np.sqrt(w / math.pi), mesh.intrinsic_dim)


def _affine_solid(mesh, axes):
    a = np.asarray(axes)
    vol = np.prod(a)
    mapped = mesh.frames * a[None, None, :]
    stretch = np.linalg.norm(mapped, axis=2)
    frames = _orthonormalize(mapped)
    ext = mesh.extents * stretch
    r = mesh.cell_radius * vol ** (1 / mesh.dim) * np.minimum(1.0, stretch.min(1) / stretch.max(1)) ** 0
    rad = np.minimum(0.5 * ext.min(1), r)
    return Mesh(mesh.dim, mesh.atoms * a, mesh.weights * vol, rad, mesh.intrinsic_dim,
                ext, frames)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _orthonormalize(frames):
    out = np.empty_like(frames)
    for i in range(frames.shape[1]):
        v = frames[:, i, :].copy()
        for j in range(i):
            v -= np.sum(v * out[:, j, :], axis=1, keepdims=True) * out[:, j, :]
        out[:, i, :] = _unit(v)
    return out


# ---------------------------------------------------------------------------

def _measure(p):
    """Intrinsic measure of a primitive (length, area, volume, surface)."""
    if isinstance(p, Interval):
        return p.b - p.a
    n = p.dim
    unit_ball = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    if isinstance(p, Ball):
        return unit_ball * p.radius ** n
    if isinstance(p, Annulus):
        return unit_ball * (p.r_outer ** n - p.r_inner ** n)
    if isinstance(p, Sphere):
        return n * unit_ball * p.radius ** (n - 1)
    if p.surface:
        return _ellipsoid_surface(p.semi_axes)
    return unit_ball * float(np.prod(p.semi_axes))


def _ellipsoid_surface(axes):
    m = _affine_surface(_sphere_mesh(1.0, 20000) if len(axes) == 3 else _circle_mesh(1.0, 20000), axes)
    return m.total_weight


def _intrinsic_dim(p):
    if isinstance(p, Sphere) or (isinstance(p, Ellipsoid) and p.surface):
        return p.dim - 1
    return p.dim


def _mesh_part(p, n, grading):
    if isinstance(p, Interval):
        return _interval_mesh(p.a, p.b, n, grading)
    c = np.asarray(p.center)
    dim = p.dim
    if isinstance(p, Ball):
        if dim == 1:
            m = _interval_mesh(c[0] - p.radius, c[0] + p.radius, n, grading)
            return m
        m = _solid_radial_mesh(dim, 0.0, 1.0, n, grading).scaled(p.radius)
    elif isinstance(p, Annulus):
        if dim == 1:
            n1 = max(2, n // 2)
            return concat_meshes([
                _interval_mesh(c[0] - p.r_outer, c[0] - p.r_inner, n1, grading),
                _interval_mesh(c[0] + p.r_inner, c[0] + p.r_outer, n - n1 if n - n1 >= 2 else 2, grading),
            ])
        m = _solid_radial_mesh(dim, p.r_inner / p.r_outer, 1.0, n, grading).scaled(p.r_outer)
    elif isinstance(p, Sphere):
        if dim == 2:
            m = _circle_mesh(p.radius, n)
        elif dim == 3:
            m = _sphere_mesh(p.radius, n)
        else:
            raise GeometryError("spheres are supported in dimensions 2 and 3")
    else:
        if dim == 1:
            return _interval_mesh(c[0] - p.semi_axes[0], c[0] + p.semi_axes[0], n, grading)
        if p.surface:
            base = _circle_mesh(1.0, n) if dim == 2 else _sphere_mesh(1.0, n)
            m = _affine_surface(base, p.semi_axes)
        else:
            m = _affine_solid(_solid_radial_mesh(dim, 0.0, 1.0, n, grading), p.semi_axes)
    if dim > 3:
        raise GeometryError("meshing supports dimensions 1 to 3")
    return Mesh(m.dim, m.atoms + c, m.weights, m.cell_radius, m.intrinsic_dim,
                m.extents, m.frames)


def _interior_contains(p, x, rtol=1e-9):
    """Boolean mask of points strictly inside the interior of a solid part."""
    if isinstance(p, Interval):
        span = p.b - p.a
        return (x[:, 0] > p.a + rtol * span) & (x[:, 0] < p.b - rtol * span)
    if _intrinsic_dim(p) < p.dim:
        return np.zeros(len(x), dtype=bool)
    c = np.asarray(p.center)
    r = np.linalg.norm(x - c, axis=1)
    if isinstance(p, Ball):
        return r < p.radius * (1 - rtol)
    if isinstance(p, Annulus):
        return (r > p.r_inner * (1 + rtol)) & (r < p.r_outer * (1 - rtol))
    q = np.sum(((x - c) / np.asarray(p.semi_axes)) ** 2, axis=1)
    return q < 1 - rtol


def _check_overlaps(spec, meshes):
    parts = spec.parts
    for i, p in enumerate(parts):
        for j, other in enumerate(parts):
            if i == j:
                continue
            if _interior_contains(other, meshes[i].atoms).any():
                raise GeometryError(f"parts {i} and {j} overlap")
            if p == other:
                raise GeometryError(f"parts {i} and {j} coincide")


def build_mesh(spec: SetSpec, resolution: int, grading: str = "uniform") -> Mesh:
    """Discretize ``spec`` into roughly ``resolution`` cells.

    Intervals, circles and spheres get exactly their share of
    ``resolution`` atoms; solid disks, balls and annuli are tuned to land
    within about 1% of it.  Parts of a union share the budget in
    proportion to their measure.
    """
    if resolution < 2:
        raise GeometryError("resolution must be at least 2")
    if grading not in ("uniform", "endpoint_refined"):
        raise GeometryError(f"unknown grading {grading!r}")
    dims = {_intrinsic_dim(p) for p in spec.parts}
    if len(dims) > 1:
        raise GeometryError("all parts must share one intrinsic dimension")
    measures = np.array([_measure(p) for p in spec.parts])
    shares = measures / measures.sum()
    counts = np.maximum(2, np.round(shares * resolution).astype(int))
    meshes = [_mesh_part(p, int(k), grading) for p, k in zip(spec.parts, counts)]
    _check_overlaps(spec, meshes)
    mesh = concat_meshes(meshes) if len(meshes) > 1 else meshes[0]
    return mesh
