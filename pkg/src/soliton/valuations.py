"""Monomial valuations: Okounkov bodies, volume functions, weighted volumes,
Howald thresholds and log canonical slopes.

A monomial valuation ``v`` is a co-weight ``xi`` on a toric germ; on the
local germ of ``A^n`` it sends ``x^gamma`` to ``<gamma, xi>`` and has log
discrepancy ``sum(xi)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from . import expkernel
from .errors import InfeasibleSystem, NoConvergence, UnboundedLevel, ZeroIdeal
from .filtrations import GradedLevel, filtration_from_wt
from .germ import ARMIJO, GermSpec, a_wt, affine_space, reeb_cone
from .polyhedra import (
    Halfspace,
    Polyhedron,
    dual_description,
    from_generators,
    lattice_points,
    rational,
    rational_vector,
    volume,
)


@dataclass(frozen=True)
class MonomialValuation:
    """Co-weight ``weights`` on ``ambient`` (the ``A^n`` germ when ``None``)."""

    weights: tuple
    ambient: GermSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", rational_vector(self.weights))
        if self.ambient is None and any(w <= 0 for w in self.weights):
            raise ValueError("monomial valuations on A^n need positive weights")
        if self.ambient is not None and len(self.weights) != self.ambient.dim_x:
            raise ValueError("weight vector has the wrong length")

    @property
    def n(self) -> int:
        return len(self.weights)

    @cached_property
    def spec(self) -> GermSpec:
        return affine_space(self.n) if self.ambient is None else self.ambient

    @property
    def xi(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    @cached_property
    def a_exact(self) -> Fraction:
        return a_wt(self.spec, self.weights)

    @property
    def a_value(self) -> float:
        return float(self.a_exact)

    def rescale(self, a) -> "MonomialValuation":
        a = rational(a)
        return MonomialValuation(tuple(a * w for w in self.weights), self.ambient)


@dataclass(frozen=True)
class MonomialIdeal:
    generators: tuple

    def __post_init__(self):
        gens = tuple(sorted(set(tuple(int(c) for c in g) for g in self.generators)))
        if not gens:
            raise ZeroIdeal("the zero ideal has no log canonical threshold")
        if any(c < 0 for g in gens for c in g):
            raise ValueError("exponents must be nonnegative")
        object.__setattr__(self, "generators", gens)

    @property
    def n(self) -> int:
        return len(self.generators[0])

    @cached_property
    def newton(self) -> Polyhedron:
        """``conv(generators) + orthant``."""
        units = [tuple(int(i == k) for i in range(self.n)) for k in range(self.n)]
        return from_generators(self.generators, units)


@dataclass(frozen=True)
class OkounkovData:
    """Body ``O`` and the concave transform ``G(u) = <u, slope> + constant``."""

    body: Polyhedron
    slope: tuple
    constant: Fraction

    def transform(self, u) -> Fraction:
        return sum(a * b for a, b in zip(rational_vector(u), self.slope)) + self.constant


def okounkov_body(v: MonomialValuation) -> OkounkovData:
    """Moment polyhedron translated so its lexicographically first vertex is 0."""
    P = v.spec.polyhedron
    corner = min(P.vertices)
    body = P.translate(tuple(-c for c in corner))
    const = sum(a * b for a, b in zip(corner, v.weights)) + v.a_exact
    return OkounkovData(body, v.weights, const)


def _sublevel(v: MonomialValuation, t) -> Polyhedron | None:
    """``P cap {<alpha, xi> + A <= t}`` or ``None`` when empty."""
    xi = v.weights
    cut = Halfspace(tuple(-c for c in xi), rational(t) - v.a_exact)
    try:
        return v.spec.polyhedron.intersect([cut])
    except InfeasibleSystem:
        return None


def _check_limit_defined(v: MonomialValuation) -> None:
    P = v.spec.polyhedron
    if not P.is_bounded and not reeb_cone(v.spec).contains(v.xi):
        raise UnboundedLevel("sublevel sets are unbounded: xi is not Reeb-interior")


def vol_fn_discrete(v: MonomialValuation, t, m: int, level: GradedLevel | None = None) -> Fraction:
    """``(n!/m^n) * #{basis points with value < m t}``."""
    t = rational(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    unit = Fraction(math.factorial(v.n), m**v.n)
    if level is not None:
        if level.cutoff is not None and (level.xi_ref != v.weights or level.cutoff < t):
            raise UnboundedLevel("level truncation does not cover the requested range")
        F = filtration_from_wt(level, v.weights, v.a_exact)
        return unit * sum(1 for val in F.values if val < m * t)
    _check_limit_defined(v)
    Q = _sublevel(v, t)
    if Q is None:
        return Fraction(0)
    a = v.a_exact
    count = sum(
        1 for b in lattice_points(Q, m)
        if sum(c * x for c, x in zip(b, v.weights)) + m * a < m * t
    )
    return unit * count


def vol_fn_limit(v: MonomialValuation, t, exact: bool = False):
    """``n! vol(O \\ O^{(t)})``: the Lebesgue measure of the sublevel set."""
    t = rational(t)
    _check_limit_defined(v)
    val = Fraction(0)
    if t > 0:
        Q = _sublevel(v, t)
        if Q is not None and Q.dim == v.n:
            val = math.factorial(v.n) * volume(Q)
    return val if exact else float(val)


def vol_fn_derivative(v: MonomialValuation, t, exact: bool = False):
    """``d/dt vol(v; t)`` from the exact area of the level slice.

    The slice ``{<alpha, xi> = t - A}`` is projected to the coordinate
    hyperplane ``alpha_j = 0`` with the largest ``|xi_j|``; the derivative
    is ``n!`` times the projected area over ``|xi_j|``.
    """
    t = rational(t)
    _check_limit_defined(v)
    n = v.n
    xi = v.weights
    if t <= 0:
        return Fraction(0) if exact else 0.0
    j = max(range(n), key=lambda k: abs(xi[k]))
    level = t - v.a_exact
    P = v.spec.polyhedron
    if n == 1:
        inside = P.contains((level / xi[0],))
        val = Fraction(int(inside)) / abs(xi[0])
        return val if exact else float(val)
    # alpha_j = (level - sum_{k != j} xi_k alpha_k) / xi_j
    hs = []
    for h in P.halfspaces:
        nrm, off = h.normal, h.offset
        coef = [nrm[k] - nrm[j] * xi[k] / xi[j] for k in range(n) if k != j]
        hs.append(Halfspace(tuple(coef), off + nrm[j] * level / xi[j]))
    try:
        S = dual_description(hs)
    except InfeasibleSystem:
        return Fraction(0) if exact else 0.0
    area = volume(S) if S.dim == n - 1 else Fraction(0)
    val = math.factorial(n) * area / abs(xi[j])
    return val if exact else float(val)


@dataclass(frozen=True)
class DHLimit:
    """Limit DH measure ``n! G_* Lebesgue`` of a monomial valuation."""

    valuation: MonomialValuation

    def cdf(self, t) -> float:
        return vol_fn_limit(self.valuation, t)

    def density(self, t) -> float:
        return vol_fn_derivative(self.valuation, t)

    @property
    def total_mass(self) -> float:
        P = self.valuation.spec.polyhedron
        return float(math.factorial(self.valuation.n) * volume(P)) if P.is_bounded else math.inf

    def laplace(self, s: float = 1.0) -> float:
        """``int e^{-s x} DH(dx)`` through the exponential kernel."""
        v = self.valuation
        P = v.spec.polyhedron
        I = expkernel.exp_integral(P, s * v.xi).value
        return math.factorial(v.n) * math.exp(-s * v.a_value) * I

    def mean(self) -> float:
        """``int x e^{-x} DH / int e^{-x} DH``."""
        v = self.valuation
        I, M1, _ = expkernel.moments(v.spec.polyhedron, v.xi, second=False)
        return float(M1 @ v.xi) / I + v.a_value


def dh_limit(v: MonomialValuation) -> DHLimit:
    return DHLimit(v)


def weighted_vol(v: MonomialValuation) -> float:
    """``W(v) = int e^{A(v) - x} DH_v(dx) = n! int_P e^{-<alpha, xi>}``."""
    I = expkernel.exp_integral(v.spec.polyhedron, v.xi).value
    return math.factorial(v.n) * I


def normalize_scaling(v: MonomialValuation, tol: float = 1e-12, max_iters: int = 100):
    """Critical scaling ``a*`` of ``x -> log W(x v)`` and the rescaled valuation.

    ``d/dx log W(x v) = -<b(x xi), xi>`` with ``b`` the weighted barycenter,
    and the second derivative is the weighted variance of ``<alpha, xi>``.
    For a bounded polyhedron ``x`` ranges over the reals (so ``a*`` may be 0
    or negative), otherwise over ``x > 0``.
    """
    P = v.spec.polyhedron
    xi = v.xi
    if not any(v.weights):
        return Fraction(1), v
    bounded = P.is_bounded

    def derivs(x):
        I, M1, M2 = expkernel.moments(P, x * xi)
        mean = float(M1 @ xi) / I
        var = float(xi @ M2 @ xi) / I - mean**2
        return math.log(I), -mean, var

    def value(x):
        try:
            return math.log(expkernel.exp_integral(P, x * xi).value)
        except OverflowError:
            return math.inf

    x = 1.0
    for it in range(max_iters):
        f, g, h = derivs(x)
        if abs(g) <= tol * max(1.0, abs(x)):
            a = rational(x)
            return a, v.rescale(a)
        step = -g / h
        # damped Newton: log W is only asymptotically linear, so full steps can overshoot
        while True:
            nxt = x + step
            if not (bounded or nxt > 0):
                step *= 0.5
                continue
            # near the optimum the decrease is below float resolution; Newton is safe there
            if abs(step) <= 1e-6 * max(1.0, abs(x)) or value(nxt) <= f + ARMIJO * step * g:
                break
            step *= 0.5
            if abs(step) < 1e-300:
                raise NoConvergence("line search failed in scaling normalization",
                                    last_iterate=x, iterations=it)
        x = nxt
    raise NoConvergence("scaling normalization did not converge", last_iterate=x, iterations=max_iters)


# -- thresholds and slopes ------------------------------------------------------------

def lct_monomial(ideal: MonomialIdeal):
    """Howald: ``lct = 1 / min{s : s (1, ..., 1) in newton}``.

    ``s * 1`` lies in the Newton polyhedron iff ``s <F, 1> + b_F >= 0`` for
    every facet; only facets with ``b_F < 0`` constrain ``s``.  Returns
    ``math.inf`` for the unit ideal.
    """
    s_min = Fraction(0)
    for h in ideal.newton.halfspaces:
        if h.offset < 0:
            s_min = max(s_min, -h.offset / sum(h.normal))
    return math.inf if s_min == 0 else 1 / s_min


def base_ideal(v: MonomialValuation, m: int, t) -> MonomialIdeal:
    """Minimal monomial generators of ``{x^gamma : <gamma, xi> >= m t}`` on ``A^n``."""
    if v.ambient is not None:
        raise ValueError("base ideals are realized on the A^n germ only")
    xi = v.weights
    target = m * rational(t)
    n = v.n
    if target <= 0:
        return MonomialIdeal(((0,) * n,))
    ranges = [range(0, math.ceil(target / w) + 1) for w in xi[:-1]]
    cands = []
    for head in itertools.product(*ranges):
        rest = target - sum(a * w for a, w in zip(head, xi))
        last = max(0, math.ceil(rest / xi[-1]))
        cands.append(head + (last,))

    def in_ideal(g):
        return sum(a * w for a, w in zip(g, xi)) >= target

    minimal = [
        g for g in cands
        if all(g[k] == 0 or not in_ideal(g[:k] + (g[k] - 1,) + g[k + 1:]) for k in range(n))
    ]
    return MonomialIdeal(tuple(minimal))


@dataclass(frozen=True)
class SlopeResult:
    value: float
    per_m: dict
    tolerance: float


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    if not pred(lo):
        raise NoConvergence("predicate fails at the lower end of the bracket")
    if pred(hi):
        raise NoConvergence("predicate holds at the upper end of the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def lc_slope_monomial(v: MonomialValuation, m_max: int = 64, tol: float = 1e-6,
                      twist=None, method: str = "closure") -> SlopeResult:
    """Log canonical slope ``sup{t : m lct(I_{m,mt}) >= 1}`` of ``F_v``.

    ``twist`` adds ``<beta, zeta>`` to the level values, i.e. the filtration
    ``beta -> <gamma, xi + zeta> - m sum(zeta)`` in exponents ``gamma``.

    Howald turns ``m lct(I) >= 1`` into ``m (1, ..., 1) in newton(I)``.  With
    ``method="closure"`` that membership is read off directly: ``I_{m,mt}`` is
    a valuation ideal, hence integrally closed, so a lattice point lies in
    its Newton polyhedron iff its monomial lies in ``I``.  ``method="howald"``
    builds the minimal generators and calls ``lct_monomial`` (small ``m``).
    The bisection bracket is ``[0, A + 1]``; per-``m`` slopes are
    extrapolated assuming an ``O(1/m)`` error.
    """
    if v.ambient is not None:
        raise ValueError("log canonical slopes are realized on the A^n germ only")
    xi = v.weights
    zeta = rational_vector(twist) if twist is not None else (Fraction(0),) * v.n
    w = tuple(a + b for a, b in zip(xi, zeta))
    if any(c <= 0 for c in w):
        raise ValueError("twisted weights must stay positive")
    c = -sum(zeta)
    a = v.a_value

    def pred_for(m: int):
        def pred(t: float) -> bool:
            target = m * (rational(t) - c)
            if method == "closure":
                return m * sum(w) >= target
            ideal = base_ideal(MonomialValuation(w), m, target / m)
            return m * lct_monomial(ideal) >= 1
        return pred

    ms = [max(1, m_max // 4), max(1, m_max // 2), m_max]
    per_m = {m: _bisect(pred_for(m), 0.0, a + 1.0, tol / 4) for m in ms}
    m1, m2 = ms[1], ms[2]
    if m1 == m2:
        value = per_m[m2]
    else:
        value = (m2 * per_m[m2] - m1 * per_m[m1]) / (m2 - m1)
    return SlopeResult(value, per_m, tol)


def h_local(v: MonomialValuation, mu: float | None = None) -> float:
    """``H(v) = mu - S~(F_v)`` with ``S~ = -log int e^{-x} DH_v``."""
    if mu is None:
        mu = lc_slope_monomial(v).value
    s_tilde = -math.log(dh_limit(v).laplace(1.0))
    return mu - s_tilde


def normalized_h_local_argmin(n: int, starts: int = 10, seed: int = 0, tol: float = 1e-10):
    """Minimize ``h_local`` over normalized weights ``xi = n softmax(y)``.

    Returns the list of minimizers found from ``starts`` random starts.
    """
    rng = np.random.default_rng(seed)

    def f(y):
        z = np.exp(y - y.max())
        v = MonomialValuation(n * z / z.sum())
        return h_local(v, mu=v.a_value)

    out = []
    for _ in range(starts):
        res = minimize(f, rng.normal(size=n), method="BFGS", options={"gtol": tol})
        z = np.exp(res.x - res.x.max())
        out.append(n * z / z.sum())
    return out
