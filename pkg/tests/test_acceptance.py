"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL
line per criterion at the end of the run.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from rieszlab import closedform as cf
from rieszlab.equilibrium import solve_set
from rieszlab.geometry import Ball, Ellipsoid, Interval, SetSpec, Sphere
from rieszlab.kernels import KernelSpec
from rieszlab.startransform import LiftedPotential, commutation_check, spherical_mean
from rieszlab.verify import CampaignSpec, load_campaign, run_campaign

EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"


def detail(record, text):
    record("detail", text)


@pytest.fixture(scope="module")
def t2_report():
    # sets [-2,-1] u [1,2], [0,2] and [-1,-0.2] u [0.5,1.5] at 1000 and 2000 atoms,
    # with the 60 x 40 J grid and the q = 2 dual path
    spec = load_campaign(EXAMPLES / "t2_n1_sets.json")
    assert spec.resolutions == (1000, 2000)
    return run_campaign(spec)


@pytest.mark.criterion(1, "interval log capacity within 1% of 1/2, N = 2000, < 60 s")
def test_c1_interval_capacity(record_property):
    t0 = time.perf_counter()
    res = solve_set(SetSpec(1, [Interval(-1, 1)]), KernelSpec.log(2), 2000, "endpoint_refined")
    wall = time.perf_counter() - t0
    rel = abs(res.capacity - 0.5) / 0.5
    detail(record_property, f"cap={res.capacity:.6f} rel={rel:.2e} t={wall:.1f}s")
    assert rel < 0.01
    assert wall < 60


@pytest.mark.criterion(2, "disk codim-one capacity within 1.5% of 2/pi, N ~ 3000, < 5 min")
def test_c2_disk_capacity(record_property):
    t0 = time.perf_counter()
    res = solve_set(SetSpec(2, [Ball((0, 0), 1)]), KernelSpec.riesz(1, 3), 3000)
    wall = time.perf_counter() - t0
    exact = 2 / math.pi
    rel = abs(res.capacity - exact) / exact
    detail(record_property, f"N={len(res.mesh)} cap={res.capacity:.6f} rel={rel:.2e} "
                            f"t={wall:.1f}s")
    assert abs(len(res.mesh) - 3000) <= 0.05 * 3000
    assert rel < 0.015
    assert wall < 300


@pytest.mark.criterion(3, "solid-ball Newtonian capacity within 1.5% of 1, interior mass < 2%")
def test_c3_ball_capacity(record_property, ball3_newton):
    res, _ = ball3_newton
    r = np.linalg.norm(res.mesh.atoms, axis=1)
    interior = float(res.w[r < 0.9].sum())
    rel = abs(res.capacity - 1.0)
    detail(record_property, f"N={len(res.mesh)} cap={res.capacity:.6f} "
                            f"interior={interior:.2e}")
    assert abs(len(res.mesh) - 3000) <= 0.05 * 3000
    assert rel < 0.015
    assert interior < 0.02


@pytest.mark.criterion(4, "interval weights follow the arcsine law, sup CDF distance < 0.01")
def test_c4_arcsine_cdf(record_property, interval_log):
    res, _ = interval_log
    assert len(res.mesh) == 2000
    right = -1.0 + np.cumsum(res.mesh.weights)
    cdf = np.cumsum(res.w)
    exact = np.array([cf.codim_one_cdf_1d(x) for x in np.clip(right, -1, 1)])
    dist = float(np.abs(cdf - exact).max())
    detail(record_property, f"sup={dist:.2e}")
    assert dist < 0.01


@pytest.mark.criterion(5, "beta-ratio ball moments vs Gauss-Chebyshev quadrature < 1e-8")
def test_c5_moment_dual_path(record_property):
    worst = 0.0
    for n in (1, 2):
        for q in (0.5, 1.0, 2.0):
            exact = cf.ball_moment(n, "codim_one", q, 1.0)
            quad = cf.codim_one_moment_quadrature(n, q, 1.0)
            worst = max(worst, abs(exact - quad) / exact)
    detail(record_property, f"max rel={worst:.2e}")
    assert worst < 1e-8


@pytest.mark.criterion(6, "codim-one campaign n = 1: gaps >= 0, holds at both resolutions")
def test_c6_t2_campaign(record_property, t2_report):
    rep = t2_report
    assert not rep.failures
    assert len(rep.records) == 3 * 2 * 4
    assert all(r.gap >= 0 for r in rep.records)
    assert all(r.verdict in ("holds", "holds_with_margin") for r in rep.records)
    margin = {r.set_id for r in rep.records if r.verdict == "holds_with_margin"}
    detail(record_property, f"min gap={min(r.gap for r in rep.records):.2e} "
                            f"margin sets={sorted(margin)}")
    assert margin


@pytest.mark.criterion(7, "Newtonian campaign n = 3: q = 2 margin, q = -0.5 reversed, log")
def test_c7_t1_campaign(record_property):
    sets = [SetSpec(3, [Ellipsoid((0, 0, 0), (1, 1, 2), surface=True)]),
            SetSpec(3, [Sphere((-2, 0, 0), 1.0), Sphere((2, 0, 0), 1.0)])]
    spec = CampaignSpec("T1_newton", sets, 3, 1, (2.0, -0.5, "log"), (1500, 3000),
                        set_ids=("ellipsoid", "two_spheres"))
    rep = run_campaign(spec)
    assert not rep.failures
    for r in rep.records:
        if r.q == 2.0:
            assert r.gap > 0 and r.verdict == "holds_with_margin"
        elif r.q == -0.5:
            # reversed: the set's moment is the smaller one
            assert r.gap < 0 and r.verdict in ("holds", "holds_with_margin")
            assert "reversed" in r.note
        else:
            assert r.gap > 0 and r.verdict in ("holds", "holds_with_margin")
    detail(record_property, ", ".join(f"{r.set_id}/q={r.q}: {r.gap:+.4f} {r.verdict}"
                                      for r in rep.records if r.resolution == 3000))


@pytest.mark.criterion(8, "two-interval J(v - u) grid 60 x 40 on [0,6] x [0,4] >= -3 err")
def test_c8_jgrid(record_property, t2_report):
    g = t2_report.jgrids["two_intervals"]
    assert (g["nr"], g["nz"], g["r_max"], g["z_max"]) == (60, 40, 6.0, 4.0)
    detail(record_property, f"min={g['min_value']:.3e} err={g['error_estimate']:.2e}")
    assert g["min_value"] >= -3 * g["error_estimate"]


@pytest.mark.criterion(9, "spherical means: log(1/5) within 1%, 1/10 within 0.5%")
def test_c9_spherical_means(record_property, interval_log, disk_codim):
    a = spherical_mean(LiftedPotential(interval_log[0]), 5.0)
    b = spherical_mean(LiftedPotential(disk_codim[0]), 10.0)
    ra = abs(a - math.log(1 / 5)) / math.log(5)
    rb = abs(b - 0.1) / 0.1
    detail(record_property, f"interval rel={ra:.2e} disk rel={rb:.2e}")
    assert ra < 0.01
    assert rb < 0.005


@pytest.mark.criterion(10, "commutation defect decays with order >= 1.8")
def test_c10_commutation_order(record_property):
    sq = lambda x, z: (x ** 2).sum(axis=1) + z ** 2
    quart = lambda x, z: x[:, 0] ** 4 + z ** 2
    orders = {}
    # n = 2, u = |x|^2 + z^2, Delta u = 6
    d = [commutation_check(sq, lambda x, z: np.full(len(x), 6.0), 2, h=h) for h in (0.1, 0.05)]
    orders["n2"] = math.log2(d[0] / d[1])
    # n = 1, u = x^4 + z^2, Delta u = 12 x^2 + 2
    d = [commutation_check(quart, lambda x, z: 12 * x[:, 0] ** 2 + 2, 1, h=h)
         for h in (0.1, 0.05)]
    orders["n1_quartic"] = math.log2(d[0] / d[1])
    # n = 1, u = x^2 + z^2: J u is cubic in r, so centred differences are exact
    d1 = [commutation_check(sq, lambda x, z: np.full(len(x), 4.0), 1, h=h) for h in (0.1, 0.05)]
    detail(record_property, f"orders n2={orders['n2']:.2f} n1(x^4)={orders['n1_quartic']:.2f} "
                            f"n1(x^2) defect={max(d1):.1e}")
    assert min(orders.values()) >= 1.8
    assert max(d1) < 1e-10


@pytest.mark.criterion(11, "q = 2 dual path on two intervals: pairwise within 2%")
def test_c11_dual_path(record_property, t2_report):
    d = t2_report.dual_paths["two_intervals"]
    vals = (d["direct"], d["via_J"], d["via_ball_integral"])
    worst = max(abs(a - b) / abs(d["direct"]) for a in vals for b in vals)
    detail(record_property, f"direct={vals[0]:.6f} via_J={vals[1]:.6f} "
                            f"polar={vals[2]:.6f} worst={worst:.1e}")
    assert worst < 0.02


@pytest.mark.criterion(12, "threshold scan n = 3, p = 0.5: no margin followed by violated")
def test_c12_threshold_persistence(record_property):
    spec = load_campaign(EXAMPLES / "p4_n3.json")
    assert spec.q_values == (0.25, 0.5, 1.0, 2.0, 4.0)
    rep = run_campaign(spec)
    assert not rep.failures
    for res in spec.resolutions:
        seq = [r.verdict for r in rep.records if r.resolution == res]
        first = next((k for k, v in enumerate(seq) if v == "holds_with_margin"), len(seq))
        assert "violated" not in seq[first:]
    summary = rep.thresholds["two_balls"]
    detail(record_property, f"q*={summary['q_star']} verdicts={summary['verdicts']}")
    assert summary["persistent"]


@pytest.mark.criterion(13, "capacity(2K) / capacity(K) = 2 within 2 err, interval and disk")
def test_c13_scaling(record_property):
    cases = [
        (SetSpec(1, [Interval(-1, 1)]), KernelSpec.log(2), 1000),
        (SetSpec(1, [Interval(-1, 1)]), KernelSpec.riesz(0.5, 2), 1000),
        (SetSpec(2, [Ball((0, 0), 1)]), KernelSpec.log(2), 800),
        (SetSpec(2, [Ball((0, 0), 1)]), KernelSpec.riesz(1, 3), 800),
    ]
    worst = []
    for spec, kernel, n in cases:
        a = solve_set(spec, kernel, n)
        a2 = solve_set(spec, kernel, 2 * n)
        b = solve_set(spec.scaled(2.0), kernel, n)
        # error of the ratio from the doubling difference of capacity(K)
        err = 2 * abs(a.capacity - a2.capacity) / a.capacity
        dev = abs(b.capacity / a.capacity - 2.0)
        worst.append(dev)
        assert dev <= 2 * err + 1e-12
    detail(record_property, f"max |ratio - 2|={max(worst):.1e}")


@pytest.mark.criterion(14, "conjecture sweep n = 2, two disks: zero violated (exploratory)")
def test_c14_conjecture_sweep(record_property):
    base = load_campaign(EXAMPLES / "c3_n2.json")
    verdicts = []
    for p in (1.25, 1.5, 1.75):
        spec = CampaignSpec("C3_sweep", base.sets, 2, p, (0.5, 1.0, 2.0, 4.0),
                            base.resolutions, base.set_ids)
        rep = run_campaign(spec)
        assert not rep.failures
        verdicts += [r.verdict for r in rep.records]
    counts = {v: verdicts.count(v) for v in sorted(set(verdicts))}
    detail(record_property, f"verdicts={counts}")
    assert "violated" not in verdicts
