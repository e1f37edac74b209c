"""Mean kernel values over uniform boxes.

Two primitives are provided:

* ``box_self_energy``: mean of k(|x - y|) for x, y independent and uniform
  in one box.  The difference x - y has density 2^d prod(1 - |u_i|/L_i)
  on the box [-L, L], so the mean is 2^d int_{[0,1]^d} k(|L u|)
  prod(1 - u_i) du.  The unit cube is split into d pyramids with apex at
  the origin (Duffy); along each ray the integrand is a power (or log) of
  the ray parameter times a polynomial, which is integrated exactly.  The
  remaining (d-1)-dimensional integral is smooth and uses Gauss-Legendre.

* ``box_box``: mean of k(|x - y|) for x, y uniform in two parallel boxes.
  With G the fourth antiderivative per axis, the double integral collapses
  to a signed sum over the 4^d corner differences of
  Phi(u) = int_{[0,u]} k(|t|) prod(u_i - t_i) dt, each evaluated with the
  same pyramid rule.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _pyramid_rules(d: int, nodes: int):
    """Directions, weights and polynomial coefficients for each pyramid.

    Pyramid j contains the points whose largest coordinate is u_j; it is
    parametrized as u = s * v with v_j = 1, s in [0, 1], and Jacobian
    s^(d-1).  The coefficients represent prod_i (1 - s v_i) in powers of s.
    """
    g, gw = np.polynomial.legendre.leggauss(nodes)
    g = 0.5 * (g + 1.0)
    gw = 0.5 * gw
    m = d - 1
    if m:
        V = np.stack(np.meshgrid(*([g] * m), indexing="ij"), -1).reshape(-1, m)
        W = np.prod(np.stack(np.meshgrid(*([gw] * m), indexing="ij"), -1).reshape(-1, m), 1)
    else:
        V = np.zeros((1, 0))
        W = np.ones(1)
    rules = []
    for j in range(d):
        Vf = np.insert(V, j, 1.0, axis=1)
        coef = np.ones((len(V), 1))
        for i in range(d):
            nxt = np.zeros((len(V), coef.shape[1] + 1))
            nxt[:, :-1] += coef
            nxt[:, 1:] -= coef * Vf[:, i:i + 1]
            coef = nxt
        rules.append((Vf, W, coef))
    return tuple(rules)


def _unit_cube_mean(U, p, nodes):
    """int_{[0,1]^d} k(|U x|) prod(1 - x_i) dx for each row of U (all > 0).

    ``p=None`` selects the log kernel.
    """
    n, d = U.shape
    k = np.arange(d + 1)
    acc = np.zeros(n)
    for Vf, W, coef in _pyramid_rules(d, nodes):
        R = np.sqrt(((U[:, None, :] * Vf[None]) ** 2).sum(-1))
        if p is None:
            # int_0^1 s^(d-1+k) (-log(s R)) ds = 1/(d+k)^2 - log R/(d+k)
            q1 = coef @ (1.0 / (d + k) ** 2)
            q2 = coef @ (1.0 / (d + k))
            acc += ((q1[None] - np.log(R) * q2[None]) * W[None]).sum(1)
        else:
            q = coef @ (1.0 / (d - p + k))
            acc += (R ** -p * q[None] * W[None]).sum(1)
    return acc


def box_self_energy(L, p=None, nodes=16):
    """Mean kernel over two independent uniform points of a box.

    ``L`` is an array of side lengths, shape (d,) or (n, d).
    ``p=None`` selects log(1/r); otherwise r^-p with p < d.
    """
    L = np.asarray(L, dtype=float)
    single = L.ndim == 1
    L = np.atleast_2d(L)
    d = L.shape[1]
    if p is not None and p >= d:
        raise ValueError("box self-energy diverges for p >= d")
    out = 2.0 ** d * _unit_cube_mean(L, p, nodes)
    return out[0] if single else out


def phi(U, p=None, nodes=12):
    """Phi(u) = int_{[0,|u|]} k(|t|) prod(|u_i| - t_i) dt for rows of U.

    Vanishes when any coordinate is zero.
    """
    U = np.abs(np.atleast_2d(np.asarray(U, dtype=float)))
    out = np.zeros(len(U))
    pos = np.all(U > 0, axis=1)
    if pos.any():
        Up = U[pos]
        # t = u x  gives dt = prod u and (u_i - t_i) = u_i (1 - x_i)
        out[pos] = _unit_cube_mean(Up, p, nodes) * np.prod(Up, 1) ** 2
    return out


def box_box(delta, a, b, p=None, nodes=8):
    """Mean kernel between uniform boxes with parallel axes.

    Box A has centre 0 and sides ``a``; box B has centre ``delta`` and
    sides ``b``.  All arguments are (n, d) arrays (or (d,) for one pair).
    """
    delta, a, b = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (delta, a, b))
    n, d = delta.shape
    a0, a1 = -a / 2, a / 2
    b0, b1 = delta - b / 2, delta + b / 2
    # per axis the fourth mixed difference of G is
    # G(a1-b0) - G(a1-b1) - G(a0-b0) + G(a0-b1)
    terms = ((a1 - b0, 1.0), (a1 - b1, -1.0), (a0 - b0, -1.0), (a0 - b1, 1.0))
    total = np.zeros(n)
    for combo in itertools.product(range(4), repeat=d):
        U = np.stack([terms[c][0][:, i] for i, c in enumerate(combo)], 1)
        sign = np.prod([terms[c][1] for c in combo])
        total += sign * phi(U, p, nodes)
    return total / np.prod(a * b, axis=1)
