"""Exponential integrals and moments over rational polyhedra.

For a generalized simplex ``conv(a_0..a_{k-1}) + cone(r_1..r_j)`` and a
co-weight ``xi`` pairing positively with every ray,

    int e^{-<x, xi>} dx = J * exp[-<a_0,xi>, ..., -<a_{k-1},xi>] * prod_l 1/<r_l, xi>

where ``exp[...]`` is the divided difference of ``exp`` (Hermite-Genocchi)
and ``J`` the cell Jacobian.  First and second moments are obtained by
differentiating this closed form; derivatives of a divided difference with
respect to a node repeat that node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateInput, ReebViolation, UnboundedIntegral
from .polyhedra import Polyhedron, triangulate

# nodes closer than this (relative) count as confluent in the diagnostics
CONFLUENCE_RTOL = 1e-8
# ranges of nodes narrower than this are summed by the Taylor series
_TAYLOR_SPREAD = 1.0
_TAYLOR_TERMS = 32


def _taylor_dd(nodes: Sequence[float]) -> float:
    k = len(nodes) - 1
    c = math.fsum(nodes) / len(nodes)
    y = [x - c for x in nodes]
    # h[m] = complete homogeneous symmetric polynomial of degree m in y
    h = [1.0] + [0.0] * _TAYLOR_TERMS
    for yj in y:
        for m in range(1, _TAYLOR_TERMS + 1):
            h[m] = h[m] + yj * h[m - 1]
    terms = [h[m] / math.factorial(m + k) for m in range(_TAYLOR_TERMS + 1)]
    return math.exp(c) * math.fsum(terms)


def exp_divided_difference(nodes: Sequence[float]) -> float:
    """Divided difference ``exp[x_0, ..., x_k]`` of the exponential.

    Nodes may repeat (confluent case).  Clusters of nodes narrower than one
    unit are evaluated through the Taylor expansion
    ``sum_m h_m(x - c) / (m + k)!`` about their mean ``c``; wider ranges use
    the usual recursion, whose difference quotient then has a denominator of
    at least one unit.
    """
    x = sorted(float(v) for v in nodes)
    n = len(x)
    if n == 0:
        raise ValueError("need at least one node")
    memo: dict[tuple[int, int], float] = {}

    def dd(i: int, j: int) -> float:
        key = (i, j)
        if key in memo:
            return memo[key]
        if i == j:
            val = math.exp(x[i])
        elif x[j] - x[i] <= _TAYLOR_SPREAD:
            val = _taylor_dd(x[i : j + 1])
        else:
            val = (dd(i + 1, j) - dd(i, j - 1)) / (x[j] - x[i])
        memo[key] = val
        return val

    return dd(0, n - 1)


@dataclass(frozen=True)
class ExpIntegralResult:
    value: float
    cells_used: int
    confluent_cells: int


@dataclass(frozen=True)
class _Cell:
    apexes: np.ndarray  # (k, n)
    rays: np.ndarray  # (j, n)
    jacobian: float


@lru_cache(maxsize=512)
def _cells(P: Polyhedron) -> tuple[_Cell, ...]:
    if P.dim < P.ambient_dim:
        raise DegenerateInput("exponential integrals need a full-dimensional polyhedron")
    return tuple(
        _Cell(c.float_apexes(), c.float_rays(), float(c.jacobian)) for c in triangulate(P)
    )


def _check_reeb(P: Polyhedron, xi: np.ndarray) -> None:
    for r in P.rays:
        pairing = sum(float(c) * x for c, x in zip(r, xi))
        if pairing == 0:
            raise UnboundedIntegral(f"ray {tuple(int(c) for c in r)} pairs to 0 with xi")
        if pairing < 0:
            raise ReebViolation(f"ray {tuple(int(c) for c in r)} pairs negatively with xi")


def _as_float(v, n: int) -> np.ndarray:
    arr = np.asarray([float(c) for c in v], dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"expected a vector of length {n}")
    return arr


def _is_confluent(c: np.ndarray) -> bool:
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            if abs(c[i] - c[j]) < CONFLUENCE_RTOL * (1 + abs(c[i])):
                return True
    return False


def exp_integral(P: Polyhedron, xi) -> ExpIntegralResult:
    """``int_P exp(-<x, xi>) dx`` (Lebesgue measure, no ``n!`` factor)."""
    xi = _as_float(xi, P.ambient_dim)
    _check_reeb(P, xi)
    contributions = []
    confluent = 0
    cells = _cells(P)
    for cell in cells:
        c = cell.apexes @ xi
        if _is_confluent(c):
            confluent += 1
        val = cell.jacobian * exp_divided_difference(-c)
        if len(cell.rays):
            val /= np.prod(cell.rays @ xi)
        contributions.append(val)
    return ExpIntegralResult(math.fsum(contributions), len(cells), confluent)


def _cell_derivative_data(cell: _Cell, xi: np.ndarray, second: bool):
    x = list(-(cell.apexes @ xi))
    k = len(x)
    E = exp_divided_difference(x)
    Evec = np.array([exp_divided_difference(x + [x[i]]) for i in range(k)])
    Emat = None
    if second:
        Emat = np.empty((k, k))
        for i in range(k):
            Emat[i, i] = 2.0 * exp_divided_difference(x + [x[i], x[i]])
            for j in range(i + 1, k):
                Emat[i, j] = Emat[j, i] = exp_divided_difference(x + [x[i], x[j]])
    d = cell.rays @ xi if len(cell.rays) else np.zeros(0)
    R = float(np.prod(1.0 / d)) if len(d) else 1.0
    return E, Evec, Emat, d, R


def moments(P: Polyhedron, xi, second: bool = True):
    """Return ``(I, M1, M2)``: the exponential integral, first moment vector
    ``int x e^{-<x,xi>}`` and second moment matrix ``int x x^T e^{-<x,xi>}``.
    """
    n = P.ambient_dim
    xi = _as_float(xi, n)
    _check_reeb(P, xi)
    parts0 = []
    parts1 = []
    parts2 = []
    for cell in _cells(P):
        E, Evec, Emat, d, R = _cell_derivative_data(cell, xi, second)
        A = cell.apexes
        B = cell.rays
        jac = cell.jacobian
        parts0.append(jac * E * R)
        s = B.T @ (1.0 / d) if len(d) else np.zeros(n)
        dE = A.T @ Evec
        parts1.append(jac * R * (dE + E * s))
        if second:
            quad = B.T @ np.diag(1.0 / d**2) @ B if len(d) else np.zeros((n, n))
            h = A.T @ Emat @ A + np.outer(dE, s) + np.outer(s, dE) + E * (np.outer(s, s) + quad)
            parts2.append(jac * R * h)
    I = math.fsum(parts0)
    M1 = np.array([math.fsum(p[i] for p in parts1) for i in range(n)])
    M2 = None
    if second:
        M2 = np.array([[math.fsum(p[i, j] for p in parts2) for j in range(n)] for i in range(n)])
        M2 = 0.5 * (M2 + M2.T)
    return I, M1, M2


def exp_moment(P: Polyhedron, xi, eta) -> float:
    """``int_P <x, eta> exp(-<x, xi>) dx``."""
    eta = _as_float(eta, P.ambient_dim)
    _, M1, _ = moments(P, xi, second=False)
    return float(M1 @ eta)


def exp_hessian_entry(P: Polyhedron, xi, eta1, eta2) -> float:
    """``int_P <x, eta1> <x, eta2> exp(-<x, xi>) dx``."""
    n = P.ambient_dim
    e1 = _as_float(eta1, n)
    e2 = _as_float(eta2, n)
    _, _, M2 = moments(P, xi)
    # symmetrized product so that swapping the directions is bit-identical
    return float(0.5 * (e1 @ M2 @ e2 + e2 @ M2 @ e1))


def exp_hessian(P: Polyhedron, xi) -> np.ndarray:
    return moments(P, xi)[2]


INTEGRAND_KINDS = ("exp", "moment", "second_moment")


def _integrand(kind: str, pts: np.ndarray, xi, eta, eta2) -> np.ndarray:
    w = np.exp(-(pts @ xi))
    if kind == "exp":
        return w
    if kind == "moment":
        return (pts @ eta) * w
    if kind == "second_moment":
        return (pts @ eta) * (pts @ eta2) * w
    raise ValueError(f"unknown integrand kind {kind!r}; expected one of {INTEGRAND_KINDS}")


def mc_oracle(
    P: Polyhedron,
    xi,
    integrand_kind: str = "exp",
    samples: int = 100_000,
    seed: int = 0,
    eta=None,
    eta2=None,
) -> tuple[float, float]:
    """Monte-Carlo estimate and standard error of an exponential integral.

    Uses ``numpy.random.Philox`` keyed by the 64-bit ``seed``.  Bounded
    polyhedra are sampled by rejection from their bounding box (independent
    of the triangulation).  Unbounded ones are sampled cell by cell: uniform
    on the apex simplex, exponential with rate ``<r, xi>/2`` along each ray.
    """
    n = P.ambient_dim
    xi = _as_float(xi, n)
    _check_reeb(P, xi)
    eta = None if eta is None else _as_float(eta, n)
    eta2 = eta if eta2 is None else _as_float(eta2, n)
    rng = np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))
    if P.is_bounded:
        verts = P.float_vertices()
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        box_vol = float(np.prod(hi - lo))
        pts = lo + (hi - lo) * rng.random((samples, n))
        A = np.array([[float(c) for c in h.normal] for h in P.halfspaces])
        b = np.array([float(h.offset) for h in P.halfspaces])
        inside = np.all(pts @ A.T + b >= 0, axis=1)
        vals = np.where(inside, _integrand(integrand_kind, pts, xi, eta, eta2), 0.0) * box_vol
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))

    cells = _cells(P)
    per_cell = max(2, samples // len(cells))
    total = 0.0
    var = 0.0
    for cell in cells:
        k = len(cell.apexes)
        bary = rng.dirichlet(np.ones(k), size=per_cell) if k > 1 else np.ones((per_cell, 1))
        pts = bary @ cell.apexes
        weight = np.full(per_cell, cell.jacobian / math.factorial(k - 1))
        if len(cell.rays):
            rates = 0.5 * (cell.rays @ xi)
            u = rng.exponential(1.0 / rates, size=(per_cell, len(rates)))
            pts = pts + u @ cell.rays
            weight = weight / np.prod(rates * np.exp(-rates * u), axis=1)
        vals = weight * _integrand(integrand_kind, pts, xi, eta, eta2)
        total += vals.mean()
        var += vals.var(ddof=1) / per_cell
    return float(total), float(math.sqrt(var))
