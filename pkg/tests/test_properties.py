import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from rieszlab import closedform as cf
from rieszlab.equilibrium import (DiscreteMeasure, _projected_gradient, project_simplex,
                                  solve_equilibrium)
from rieszlab.geometry import (Ball, Interval, Mesh, SetSpec, build_mesh, setspec_from_dict,
                               setspec_to_dict)
from rieszlab.kernels import KernelSpec, kernel_matrix, kernel_value
from rieszlab.moments import classify, log_moment, moment
from rieszlab.verify import series_verdicts

from conftest import solved

SETTINGS = settings(max_examples=60, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-5, 5, allow_nan=False)


@st.composite
def kernels(draw, dim=3):
    if draw(st.booleans()):
        return KernelSpec.log(dim)
    return KernelSpec.riesz(draw(st.floats(0.1, dim - 0.1)), dim)


@st.composite
def measures(draw):
    """Random discrete probability measures with atoms away from the origin."""
    k = draw(st.integers(1, 12))
    dim = draw(st.integers(1, 3))
    radii = np.array(draw(st.lists(st.floats(0.2, 3.0), min_size=k, max_size=k)))
    dirs = np.array(draw(st.lists(st.lists(st.floats(-1, 1), min_size=dim, max_size=dim),
                                  min_size=k, max_size=k)))
    norms = np.linalg.norm(dirs, axis=1)
    assume(np.all(norms > 1e-3))
    atoms = dirs / norms[:, None] * radii[:, None]
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    mesh = Mesh(dim, atoms, np.ones(k), np.full(k, 0.01), 0)
    return DiscreteMeasure(mesh, w / w.sum())


# kernels

@SETTINGS
@given(kernels(), st.lists(finite, min_size=3, max_size=3),
       st.lists(finite, min_size=3, max_size=3))
def test_kernel_symmetric(spec, x, y):
    assume(np.linalg.norm(np.subtract(x, y)) > 1e-6)
    assert kernel_value(spec, x, y) == kernel_value(spec, y, x)


@SETTINGS
@given(kernels(), st.floats(1e-3, 10), st.floats(1.001, 3))
def test_kernel_strictly_decreasing(spec, r, factor):
    a, b = spec.of_distance(np.array([r, r * factor]))
    assert a > b
    if not spec.is_log:
        assert b > 0


# simplex projection and solver

@SETTINGS
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.randoms())
def test_project_simplex(v, rnd):
    v = np.array(v)
    x = project_simplex(v)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(project_simplex(x), x, atol=1e-12)
    # no random simplex point is closer to v
    y = np.array([rnd.random() for _ in v]) + 1e-12
    y /= y.sum()
    assert np.linalg.norm(v - x) <= np.linalg.norm(v - y) + 1e-12


@SETTINGS
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True),
       st.integers(20, 60))
def test_pgd_energy_monotone_on_random_sets(ends, res):
    ends = sorted(ends)
    assume(min(np.diff(ends)) > 0.05)
    parts = [Interval(a, b) for a, b in zip(ends[::2], ends[1::2])]
    assume(parts)
    mesh = build_mesh(SetSpec(1, parts), res)
    M = kernel_matrix(KernelSpec.riesz(0.5, 1), mesh)
    _, _, energies = _projected_gradient(M, 1e-12, 100)
    assert np.all(np.diff(energies) <= 1e-13 * abs(energies[0]))


@settings(max_examples=12, deadline=None)
@given(st.floats(0.3, 3.0), st.sampled_from(["log", "riesz"]), st.integers(1, 2))
def test_capacity_scales_linearly(s, kind, dim):
    # the discrete problem itself is dilation covariant, so scaling is exact
    spec = SetSpec(dim, [Interval(-1, 1)] if dim == 1 else [Ball((0.0, 0.0), 1.0)])
    kernel = KernelSpec.log(2) if kind == "log" else KernelSpec.riesz(0.7, 3)
    mesh = build_mesh(spec, 120)
    a = solve_equilibrium(kernel_matrix(kernel, mesh), kernel, mesh)
    big = mesh.scaled(s)
    b = solve_equilibrium(kernel_matrix(kernel, big), kernel, big)
    assert b.capacity == pytest.approx(s * a.capacity, rel=1e-8)


# moments

@SETTINGS
@given(measures(), st.floats(0.1, 4), st.floats(0.1, 4))
def test_moment_log_convex(mu, q1, q2):
    mid = moment(mu, 0.5 * (q1 + q2))
    assert mid ** 2 <= moment(mu, q1) * moment(mu, q2) * (1 + 1e-12)


@SETTINGS
@given(measures())
def test_moment_limit_is_log_moment(mu):
    q = 1e-3
    L = log_moment(mu)
    r = np.linalg.norm(mu.mesh.atoms, axis=1)
    t = np.log(r)
    # (e^{qt} - 1)/q - t lies between 0 and (q/2) t^2 e^{q|t|}
    bound = 0.5 * q * float(np.dot(mu.w, t ** 2 * np.exp(q * np.abs(t))))
    diff = (moment(mu, q) - 1) / q - L
    assert -1e-9 <= diff <= bound + 1e-9


@SETTINGS
@given(measures())
def test_high_moment_bracketed_by_sup(mu):
    q = 64.0
    r = np.linalg.norm(mu.mesh.atoms, axis=1)
    root = moment(mu, q) ** (1 / q)
    k = np.argmax(r)
    assert mu.w[k] ** (1 / q) * r[k] * (1 - 1e-12) <= root <= r.max() * (1 + 1e-12)


@pytest.mark.parametrize("kind, shape, res", [("log", "interval", 2000),
                                              ("log", "two_intervals", 1000),
                                              ("riesz1", "disk", 3000),
                                              ("riesz1", "ball3", 3000)])
def test_limit_and_sup_on_equilibrium_measures(kind, shape, res):
    mu = solved(kind, shape, res)[0].measure
    L = log_moment(mu)
    q = 1e-3
    assert abs((moment(mu, q) - 1) / q - L) <= 1e-3 * abs(L) + 1e-6
    r = np.linalg.norm(mu.mesh.atoms[mu.w > 0], axis=1)
    assert moment(mu, 64.0) ** (1 / 64) == pytest.approx(r.max(), rel=0.05)


# closed forms

@SETTINGS
@given(st.sampled_from([(3, "newtonian", None), (2, "codim_one", None),
                        (1, "codim_one", None), (2, "log_disk", None),
                        (3, "sub_newtonian", 0.5)]),
       st.floats(1e-3, 1e3))
def test_matched_radius_round_trip(case, R):
    n, name, p = case
    assert cf.matched_ball_radius(cf.ball_capacity(n, name, R, p), n, name, p) == \
        pytest.approx(R, rel=1e-13)


@SETTINGS
@given(st.sampled_from([1, 2]), st.floats(0.05, 4), st.floats(0.1, 10), st.floats(1.01, 3))
def test_ball_moment_increasing_in_radius(n, q, R, f):
    assert cf.ball_moment(n, "codim_one", q, R) < cf.ball_moment(n, "codim_one", q, R * f)


# verdicts

gaps = st.floats(-10, 10, allow_nan=False)


@SETTINGS
@given(gaps, st.floats(0, 1), gaps, st.sampled_from([1, -1]))
def test_classify_sign_symmetry(g, e, o, s):
    assert classify(g, e, o, s) == classify(-g, e, -o, -s)
    assert classify(g, e, None, s) != "violated"


@SETTINGS
@given(st.lists(gaps, min_size=2, max_size=4), st.floats(1e-6, 1), st.sampled_from([1, -1]))
def test_series_violation_needs_every_resolution(gs, e, s):
    v = series_verdicts(gs, e, s)
    if "violated" in v:
        assert all(s * g < -3 * e for g in gs)
        assert set(v) == {"violated"}


# geometry

@SETTINGS
@given(st.floats(-50, 50), st.floats(1e-3, 50), st.integers(2, 400),
       st.sampled_from(["uniform", "endpoint_refined"]))
def test_interval_weights_telescope(a, width, res, grading):
    m = build_mesh(SetSpec(1, [Interval(a, a + width)]), res, grading)
    assert m.total_weight == pytest.approx(width, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.1, 5),
       st.integers(50, 600))
def test_ball_atoms_inside(center, radius, res):
    m = build_mesh(SetSpec(3, [Ball(center, radius)]), res)
    assert np.all(np.linalg.norm(m.atoms - np.array(center), axis=1) <= radius * (1 + 1e-12))


@SETTINGS
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 3)), min_size=1, max_size=4))
def test_setspec_round_trip(parts):
    spec = SetSpec(2, [Ball((c, 10.0 * k), r) for k, (c, r) in enumerate(parts)])
    d = setspec_to_dict(spec)
    assert setspec_to_dict(setspec_from_dict(d)) == d
