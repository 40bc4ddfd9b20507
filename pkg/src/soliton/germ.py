"""Toric polarized log Fano fibration germs.

A germ is given by the facet data of its canonical moment polyhedron
``P = {alpha : <alpha, xi_F> + a_F >= 0}``.  The H-functional restricted to
the Reeb cone is

    H(xi) = log( n! * int_P exp(-<alpha, xi>) d alpha ),

which is smooth, strictly convex and proper on the open cone; its unique
minimizer is the soliton candidate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.stats import qmc

from . import expkernel
from .errors import (
    DegenerateInput,
    InfeasibleSystem,
    LinealitySpace,
    NoConvergence,
    ReebViolation,
    SpecInvalid,
)
from .polyhedra import (
    Halfspace,
    Polyhedron,
    dual_description,
    extreme_rays,
    integer_row,
    rational,
    rational_vector,
    volume,
)

ARMIJO = 1e-4
FEASIBILITY_MARGIN = 1e-9
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class GermSpec:
    """Facet normals and log discrepancies of a full-rank toric germ."""

    facets: tuple
    label: str = ""

    def __post_init__(self):
        facets = []
        for i, (normal, disc) in enumerate(self.facets):
            try:
                normal = tuple(int(c) for c in normal)
                disc = rational(disc)
            except (TypeError, ValueError) as exc:
                raise SpecInvalid(f"facet {i}: malformed data ({exc})", facet=i) from None
            facets.append((normal, disc))
        object.__setattr__(self, "facets", tuple(facets))
        self._validate()

    @property
    def dim_x(self) -> int:
        return len(self.facets[0][0])

    @property
    def rank(self) -> int:
        return self.dim_x

    def _validate(self) -> None:
        if not self.facets:
            raise SpecInvalid("a germ needs at least one facet")
        n = len(self.facets[0][0])
        for i, (normal, disc) in enumerate(self.facets):
            if len(normal) != n:
                raise SpecInvalid(f"facet {i}: normal has length {len(normal)}, expected {n}", facet=i)
            if not any(normal):
                raise SpecInvalid(f"facet {i}: zero normal", facet=i)
            if math.gcd(*normal) != 1:
                raise SpecInvalid(f"facet {i}: normal {normal} is not primitive", facet=i)
            if disc <= 0:
                raise SpecInvalid(
                    f"facet {i}: log discrepancy {disc} must be positive "
                    "(0 must lie in the interior of the moment polyhedron)",
                    facet=i,
                )
        P = self.polyhedron
        if P.dim < n:
            raise SpecInvalid("moment polyhedron is not full-dimensional")
        facet_rows = {h.homogeneous_row() for h in P.halfspaces}
        for i, (normal, disc) in enumerate(self.facets):
            row = integer_row(tuple(Fraction(c) for c in normal) + (disc,))
            if row not in facet_rows:
                raise SpecInvalid(f"facet {i}: inequality {normal}, {disc} is redundant", facet=i)

    @cached_property
    def polyhedron(self) -> Polyhedron:
        hs = [Halfspace(tuple(Fraction(c) for c in nrm), a) for nrm, a in self.facets]
        try:
            return dual_description(hs)
        except LinealitySpace:
            raise SpecInvalid("moment polyhedron contains a line (not pointed)") from None
        except InfeasibleSystem:  # pragma: no cover - a_F > 0 makes 0 feasible
            raise SpecInvalid("moment polyhedron is empty") from None


def moment_polyhedron(spec: GermSpec) -> Polyhedron:
    return spec.polyhedron


@dataclass(frozen=True)
class ReebCone:
    """``{xi : <r, xi> >= 0}`` over the recession rays ``r`` of ``P``.

    With no rays (bounded ``P``) this is the whole co-weight space.
    """

    dim: int
    rays: tuple = ()

    def pairings(self, xi) -> np.ndarray:
        if not self.rays:
            return np.zeros(0)
        return np.array([[float(c) for c in r] for r in self.rays]) @ np.asarray(xi, float)

    def contains(self, xi, strict: bool = True) -> bool:
        p = self.pairings(xi)
        return bool(np.all(p > 0) if strict else np.all(p >= 0))

    @cached_property
    def generators(self) -> tuple:
        """Extreme rays of the cone, or ``()`` when it has a lineality space."""
        if not self.rays:
            return ()
        try:
            return tuple(extreme_rays(sorted(set(self.rays)), self.dim))
        except LinealitySpace:
            return ()

    def interior_point(self) -> np.ndarray:
        """A point of the open cone: the sum of the primitive extreme rays of
        the cone when it is pointed, otherwise a max-margin LP solution."""
        if not self.rays:
            return np.zeros(self.dim)
        if self.generators:
            return np.sum(np.array(self.generators, dtype=float), axis=0)
        R = np.array([[float(c) for c in r] for r in self.rays])
        R = R / np.linalg.norm(R, axis=1, keepdims=True)
        # variables (xi, t): maximize t subject to R xi >= t, |xi_i| <= 1
        c = np.zeros(self.dim + 1)
        c[-1] = -1.0
        A = np.hstack([-R, np.ones((len(R), 1))])
        res = linprog(c, A_ub=A, b_ub=np.zeros(len(R)), bounds=[(-1, 1)] * self.dim + [(None, 1)])
        if not res.success or res.x[-1] <= 0:
            raise ReebViolation("Reeb cone has empty interior")
        return res.x[:-1]


def reeb_cone(spec: GermSpec) -> ReebCone:
    return ReebCone(spec.dim_x, spec.polyhedron.rays)


def _check_interior(spec: GermSpec, xi) -> np.ndarray:
    xi = np.asarray([float(c) for c in xi], dtype=float)
    if xi.shape != (spec.dim_x,):
        raise ValueError(f"expected a co-weight of length {spec.dim_x}")
    if not reeb_cone(spec).contains(xi, strict=True):
        raise ReebViolation(f"xi={xi.tolist()} is not in the open Reeb cone")
    return xi


def a_wt(spec: GermSpec, xi) -> Fraction:
    """Log discrepancy ``A(wt_xi) = -min_{alpha in P} <alpha, xi>`` (exact)."""
    P = spec.polyhedron
    xi_q = rational_vector(xi)
    for r in P.rays:
        if sum(a * b for a, b in zip(r, xi_q)) < 0:
            raise ReebViolation(f"xi={[str(c) for c in xi_q]} is outside the closed Reeb cone")
    return -min(sum(a * b for a, b in zip(v, xi_q)) for v in P.vertices)


def _a_wt_float(P: Polyhedron, xi: np.ndarray) -> float:
    return float(-(P.float_vertices() @ xi).min())


def h_eval(spec: GermSpec, xi) -> float:
    """``H(xi) = log(n! int_P e^{-<alpha, xi>} d alpha)``."""
    xi = _check_interior(spec, xi)
    val = expkernel.exp_integral(spec.polyhedron, xi).value
    return math.log(math.factorial(spec.dim_x)) + math.log(val)


def h_derivatives(spec: GermSpec, xi):
    """``(H, grad H, Hess H)`` at an interior point of the Reeb cone."""
    xi = _check_interior(spec, xi)
    I, M1, M2 = expkernel.moments(spec.polyhedron, xi)
    mean = M1 / I
    h = math.log(math.factorial(spec.dim_x)) + math.log(I)
    return h, -mean, M2 / I - np.outer(mean, mean)


def futaki(spec: GermSpec, xi0, eta) -> float:
    """Normalized Futaki invariant ``d/dt H(xi0 + t eta)`` at ``t = 0``."""
    xi0 = _check_interior(spec, xi0)
    I, M1, _ = expkernel.moments(spec.polyhedron, xi0, second=False)
    return float(-(M1 @ np.asarray(eta, float)) / I)


def futaki_unnormalized(spec: GermSpec, xi0, eta) -> float:
    """``-n! int_P <alpha, eta> e^{-<alpha, xi0>} d alpha``."""
    xi0 = _check_interior(spec, xi0)
    return -math.factorial(spec.dim_x) * expkernel.exp_moment(spec.polyhedron, xi0, eta)


@dataclass(frozen=True)
class SolitonCertificate:
    xi0: np.ndarray
    h_value: float
    gradient_norm: float
    hessian_min_eig: float
    newton_iters: int
    tolerance: float = 1e-8

    def as_dict(self) -> dict:
        return {
            "xi0": [float(c) for c in self.xi0],
            "h_value": self.h_value,
            "gradient_norm": self.gradient_norm,
            "hessian_min_eig": self.hessian_min_eig,
            "newton_iters": self.newton_iters,
            "tolerance": self.tolerance,
        }


def initial_point(spec: GermSpec) -> np.ndarray:
    if spec.polyhedron.is_bounded:
        return np.full(spec.dim_x, 1e-3)
    xi = reeb_cone(spec).interior_point()
    return xi / np.linalg.norm(xi)


def minimize_h(spec: GermSpec, tol: float = 1e-8, max_iters: int = 100, start=None) -> SolitonCertificate:
    """Damped Newton minimization of ``H`` over the open Reeb cone.

    Backtracking line search (Armijo constant 1e-4, halving) keeps trial
    points at least 1e-9 inside the cone.  A Hessian with condition number
    above 1e12 triggers a gradient step instead.
    """
    if not (1e-12 <= tol <= 1e-4):
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    cone = reeb_cone(spec)
    xi = initial_point(spec) if start is None else np.asarray(start, float).copy()
    if not cone.contains(xi):
        raise ReebViolation("starting point is outside the open Reeb cone")
    h, g, hess = h_derivatives(spec, xi)
    for it in range(max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            # one polishing step; Newton is quadratically convergent here
            step = np.linalg.solve(hess, -g)
            trial = xi + step
            if cone.contains(trial) and np.all(cone.pairings(trial) >= FEASIBILITY_MARGIN):
                h2, g2, hess2 = h_derivatives(spec, trial)
                if np.linalg.norm(g2) < gnorm:
                    xi, h, g, hess = trial, h2, g2, hess2
            eig = float(np.linalg.eigvalsh(hess).min())
            return SolitonCertificate(xi, h, float(np.linalg.norm(g)), eig, it, tol)
        if it == max_iters:
            break
        if np.linalg.cond(hess) > MAX_CONDITION:
            step = -g
        else:
            step = np.linalg.solve(hess, -g)
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -gnorm**2
        t = 1.0
        while True:
            trial = xi + t * step
            if np.all(cone.pairings(trial) >= FEASIBILITY_MARGIN) and (not cone.rays or cone.contains(trial)):
                h_trial = h_eval(spec, trial)
                if h_trial <= h + ARMIJO * t * slope:
                    break
            t *= 0.5
            if t < 1e-30:
                raise NoConvergence("line search failed", last_iterate=xi, iterations=it)
        xi = trial
        h, g, hess = h_derivatives(spec, xi)
    raise NoConvergence(f"no convergence in {max_iters} iterations", last_iterate=xi, iterations=max_iters)


def weighted_barycenter(spec: GermSpec, xi0) -> np.ndarray:
    """``int alpha e^{-<alpha,xi0>} / int e^{-<alpha,xi0>}`` over ``P``."""
    xi0 = _check_interior(spec, xi0)
    I, M1, _ = expkernel.moments(spec.polyhedron, xi0, second=False)
    return M1 / I


def s_invariant(spec: GermSpec, xi0, xi) -> float:
    """``S(xi0; wt_xi)``: the ``xi0``-weighted mean of ``<alpha, xi> + A(wt_xi)``."""
    a = float(a_wt(spec, xi))
    return a + float(weighted_barycenter(spec, xi0) @ np.asarray([float(c) for c in xi]))


def ding_invariant(spec: GermSpec, xi0, xi) -> float:
    """``D(wt_xi) = A(wt_xi) - S(xi0; wt_xi)`` (log canonical slope equals A)."""
    return float(a_wt(spec, xi)) - s_invariant(spec, xi0, xi)


@dataclass(frozen=True)
class DeltaResult:
    value: float
    argmin: np.ndarray
    starts: int
    tolerance: float = 1e-6


def delta_toric(spec: GermSpec, xi0, tol: float = 1e-6, starts: int = 20, seed: int = 0) -> DeltaResult:
    """Equivariant delta invariant ``inf_xi A(wt_xi) / S(xi0; wt_xi)``.

    The ratio is 0-homogeneous; it is minimized from ``starts`` quasi-random
    directions of the closed Reeb cone by Nelder-Mead and the best value found
    is returned.
    """
    P = spec.polyhedron
    n = spec.dim_x
    b = weighted_barycenter(spec, xi0)
    verts = P.float_vertices()
    cone = reeb_cone(spec)

    def ratio(y: np.ndarray) -> float:
        a = float(-(verts @ y).min())
        s = a + float(b @ y)
        return a / s

    def objective(y: np.ndarray) -> float:
        norm = np.linalg.norm(y)
        if norm < 1e-12:
            return 1e6
        y = y / norm
        p = cone.pairings(y)
        if len(p) and p.min() < 0:
            return 1e3 * (1.0 - p.min())
        return ratio(y)

    if n == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
        vals = [(objective(d), d) for d in dirs if cone.contains(d, strict=False)]
        best = min(vals, key=lambda t: t[0])
        return DeltaResult(best[0], best[1], len(vals), tol)

    sampler = qmc.Halton(d=n, scramble=True, seed=seed)
    u = sampler.random(max(starts, 20))
    gens = cone.generators
    if gens:
        G = np.array(gens, dtype=float)
        G = G / np.linalg.norm(G, axis=1, keepdims=True)
        weights = np.clip(u[:, : len(G)] if u.shape[1] >= len(G) else np.resize(u, (len(u), len(G))), 1e-3, None)
        pts = weights @ G
    else:
        from scipy.stats import norm as _norm

        pts = _norm.ppf(np.clip(u, 1e-9, 1 - 1e-9))
    best_val = math.inf
    best_dir = None
    for y0 in pts:
        if np.linalg.norm(y0) < 1e-9:
            continue
        y0 = y0 / np.linalg.norm(y0)
        res = minimize(objective, y0, method="Nelder-Mead", options={"xatol": tol, "fatol": tol * 1e-2, "maxiter": 4000})
        y = res.x / np.linalg.norm(res.x)
        val = objective(y)
        if val < best_val:
            best_val, best_dir = val, y
    if best_dir is None:
        raise NoConvergence("no admissible starting direction")
    return DeltaResult(best_val, best_dir, len(pts), tol)


def delta_gauge(spec: GermSpec, xi0) -> float:
    """Closed form of the delta invariant for bounded ``P``.

    ``sup_xi <b, xi> / h_{-P}(xi)`` is the gauge of ``-P`` at the weighted
    barycenter ``b``, so ``delta = 1 / (1 + gauge)``.
    """
    P = spec.polyhedron
    if not P.is_bounded:
        raise ValueError("closed form only for bounded moment polyhedra")
    b = weighted_barycenter(spec, xi0)
    # gauge of -P at b: min{lam : b in lam (-P)} = max over facets of
    # <b, xi_F> / a_F  since -P = {beta : <beta, xi_F> <= a_F}
    g = max(float(np.dot(b, [float(c) for c in h.normal]) / float(h.offset)) for h in P.halfspaces)
    return 1.0 / (1.0 + max(g, 0.0))


def dh_cdf(spec: GermSpec, xi, t) -> float:
    """``n! vol(P cap {<alpha, xi> + A(wt_xi) <= t})``: CDF of ``DH_{wt_xi}``."""
    _check_interior(spec, xi)
    xi_q = rational_vector(xi)
    t = rational(t)
    if t <= 0:
        return 0.0
    a = a_wt(spec, xi_q)
    cut = Halfspace(tuple(-c for c in xi_q), t - a)
    try:
        Q = spec.polyhedron.intersect([cut])
    except InfeasibleSystem:
        return 0.0
    if Q.dim < spec.dim_x:
        return 0.0
    return float(math.factorial(spec.dim_x) * volume(Q))


# -- standard fixtures ----------------------------------------------------------

def projective_line() -> GermSpec:
    return GermSpec((((1,), 1), ((-1,), 1)), label="P1")


def projective_plane() -> GermSpec:
    return GermSpec((((1, 0), 1), ((0, 1), 1), ((-1, -1), 1)), label="P2")


def hirzebruch_f1() -> GermSpec:
    return GermSpec((((1, 0), 1), ((0, 1), 1), ((-1, 1), 1), ((0, -1), 1)), label="F1")


def affine_space(n: int) -> GermSpec:
    """The local germ of ``A^n`` at the origin: ``P = (-1, ..., -1) + orthant``."""
    facets = tuple((tuple(int(i == k) for i in range(n)), 1) for k in range(n))
    return GermSpec(facets, label=f"A{n}")
