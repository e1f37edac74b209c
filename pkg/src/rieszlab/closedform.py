"""Closed-form capacities, densities and moments of balls.

These serve as oracles for the numerical solver.  The cases are

``newtonian``
    p = n - 2 in R^n (n >= 3).  The equilibrium measure of a ball is
    normalized surface measure.
``codim_one``
    p = n - 1 in R^n (n >= 2), or the log kernel for n = 1.  The
    equilibrium density is proportional to (1 - |x|^2)^(-1/2).
``log_disk``
    the log kernel on the disk (n = 2); as in the Newtonian case the
    equilibrium measure is normalized arc length on the boundary circle.
``sub_newtonian``
    0 < p < n - 2 (n >= 3).  The equilibrium measure is again surface
    measure on the sphere, whose Riesz energy is known in closed form.
"""

from __future__ import annotations

import math

import numpy as np

CASES = ("newtonian", "codim_one", "log_disk", "sub_newtonian")

# Lanczos coefficients for g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Gauss-Chebyshev nodes used for moment quadrature
CHEBYSHEV_NODES = 1 << 20


class ClosedFormError(ValueError):
    """Unsupported case or arguments outside a formula's domain."""


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0 by the Lanczos approximation."""
    if not x > 0:
        raise ClosedFormError("log_gamma needs a positive argument")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    a = _LANCZOS[0]
    t = x + _LANCZOS_G + 0.5
    for i, c in enumerate(_LANCZOS[1:], start=1):
        a += c / (x + i)
    return 0.5 * math.log(2 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(a)


def gamma(x: float) -> float:
    return math.exp(log_gamma(x))


def beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise ClosedFormError("beta needs positive arguments")
    return math.exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b))


def sphere_area(n: int) -> float:
    """|S^(n-1)|, the surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / gamma(n / 2)


def _check_case(n, case, p=None):
    if case not in CASES:
        raise ClosedFormError(f"unknown case {case!r}")
    if n < 1:
        raise ClosedFormError("dimension must be positive")
    if case == "newtonian" and n < 3:
        raise ClosedFormError("the Newtonian case needs n >= 3")
    if case == "log_disk" and n != 2:
        raise ClosedFormError("the log-disk case needs n = 2")
    if case == "sub_newtonian":
        if n < 3 or p is None or not 0 < p < n - 2:
            raise ClosedFormError("the sub-Newtonian case needs n >= 3 and 0 < p < n - 2")


def sphere_riesz_energy(n: int, p: float) -> float:
    """Riesz p-energy of normalized surface measure on the unit sphere in R^n.

    Valid for 0 < p < n - 1.  The distance between two uniform points
    has t^2 = 2(1 - cos theta), which leaves a beta integral.
    """
    if not 0 < p < n - 1:
        raise ClosedFormError("sphere energy needs 0 < p < n - 1")
    return 2.0 ** (n - 2 - p) * gamma(n / 2) * gamma((n - 1 - p) / 2) / (
        math.sqrt(math.pi) * gamma(n - 1 - p / 2))


def ball_capacity(n: int, case: str, R: float = 1.0, p: float | None = None) -> float:
    """Capacity of the closed ball of radius R in R^n for the given case."""
    if not R > 0:
        raise ClosedFormError("radius must be positive")
    _check_case(n, case, p)
    if case in ("newtonian", "log_disk"):
        unit = 1.0
    elif case == "sub_newtonian":
        unit = sphere_riesz_energy(n, p) ** (-1.0 / p)
    elif n == 1:
        unit = 0.5
    else:
        ratio = gamma(n / 2) / (gamma(0.5) * gamma((n + 1) / 2))
        unit = ratio ** (1.0 / (n - 1))
    return unit * R


def ball_density_codim_one(n: int, R: float, x) -> float:
    """Equilibrium density of the codimension-one case at ``x`` (|x| < R)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != n:
        raise ClosedFormError("point dimension differs from n")
    s = float(np.dot(x, x)) / R ** 2
    if s >= 1.0:
        raise ClosedFormError("density is defined only inside the ball")
    return 2.0 / (sphere_area(n) * beta(n / 2, 0.5)) / math.sqrt(1.0 - s) / R ** n


def codim_one_cdf_1d(x, R: float = 1.0):
    """Distribution function of the interval density on [-R, R]."""
    x = np.clip(np.asarray(x, dtype=float) / R, -1.0, 1.0)
    return 0.5 + np.arcsin(x) / math.pi


def _chebyshev_radial_mean(n, f, nodes=CHEBYSHEV_NODES):
    """Integral of f(|x|) against the codimension-one density on the unit ball.

    The radial law is (2/B) r^(n-1) (1 - r^2)^(-1/2) dr on [0, 1].  Its
    even extension to [-1, 1] carries exactly the Chebyshev weight, so
    the first-kind Gauss-Chebyshev rule applies with an even node count
    (no node at the origin).
    """
    k = np.arange(1, nodes + 1)
    x = np.abs(np.cos((2 * k - 1) * math.pi / (2 * nodes)))
    vals = x ** (n - 1) * f(x)
    return math.pi / nodes * float(np.sum(vals)) / beta(n / 2, 0.5)


def codim_one_moment_quadrature(n: int, q, R: float = 1.0, nodes: int = CHEBYSHEV_NODES) -> float:
    """Quadrature of the codimension-one density against |x|^q (or log|x|)."""
    if q == "log":
        return math.log(R) + _chebyshev_radial_mean(n, np.log, nodes)
    return R ** q * _chebyshev_radial_mean(n, lambda r: r ** q, nodes)


def ball_moment(n: int, case: str, q, R: float = 1.0, p: float | None = None) -> float:
    """Moment of the ball's equilibrium measure: int |x|^q d nu, or int log|x| d nu.

    ``q="log"`` gives the logarithmic moment.
    """
    if not R > 0:
        raise ClosedFormError("radius must be positive")
    _check_case(n, case, p)
    if case != "codim_one":
        return math.log(R) if q == "log" else R ** float(q)
    if q == "log":
        return codim_one_moment_quadrature(n, "log", R)
    q = float(q)
    if not q > -n:
        raise ClosedFormError(f"moment diverges for q <= -{n}")
    return R ** q * beta((n + q) / 2, 0.5) / beta(n / 2, 0.5)


def matched_ball_radius(cap_K: float, n: int, case: str, p: float | None = None) -> float:
    """Radius of the centred ball whose capacity equals ``cap_K``."""
    if not cap_K > 0:
        raise ClosedFormError("capacity must be positive")
    return cap_K / ball_capacity(n, case, 1.0, p)


def case_for(n: int, p) -> str:
    """Closed-form case matching dimension n and exponent p ("log" or a float)."""
    if p == "log" or p is None or p == 0:
        if n == 1:
            return "codim_one"
        if n == 2:
            return "log_disk"
        raise ClosedFormError(f"no closed form for the log kernel in dimension {n}")
    p = float(p)
    if n >= 3 and p == n - 2:
        return "newtonian"
    if n >= 2 and p == n - 1:
        return "codim_one"
    if n >= 3 and 0 < p < n - 2:
        return "sub_newtonian"
    raise ClosedFormError(f"no closed form for p={p} in dimension {n}")
