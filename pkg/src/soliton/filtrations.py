"""Finite-level filtrations of graded pieces and their DH measures.

A level ``R_m`` is spanned by the monomials of the lattice points of
``m P``.  A filtration of it is stored through an adapted basis: vectors
``b_i`` with jump values ``lambda_i`` such that ``F^lam`` is the span of the
``b_i`` with ``lambda_i >= lam``.  Monomial filtrations use the standard
basis.  All linear algebra is over exact rationals.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import expkernel
from .errors import (
    FiltrationAxiomError,
    InfeasibleSystem,
    NotEquivariant,
    UnboundedLevel,
)
from .germ import GermSpec, a_wt, reeb_cone
from .polyhedra import Halfspace, lattice_points, rank, rational, rational_vector


@dataclass(frozen=True)
class GradedLevel:
    """Degree ``m`` piece with one basis monomial per lattice point.

    For unbounded germs the level is truncated to the points whose
    ``wt_{xi_ref}`` value is below ``m * cutoff``.
    """

    m: int
    basis: tuple
    dim_x: int
    cutoff: Fraction | None = None
    xi_ref: tuple | None = None
    spec: GermSpec | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("degree must be positive")
        if len(set(self.basis)) != len(self.basis):
            raise ValueError("basis points must be distinct")

    def __len__(self) -> int:
        return len(self.basis)

    def weight_of(self, i: int) -> tuple:
        return tuple(Fraction(c, self.m) for c in self.basis[i])

    @cached_property
    def index(self) -> dict:
        return {b: i for i, b in enumerate(self.basis)}

    @property
    def mass_unit(self) -> Fraction:
        """``n! / m^n``: the DH mass of one basis vector."""
        return Fraction(math.factorial(self.dim_x), self.m**self.dim_x)


def level_from_germ(spec: GermSpec, m: int, cutoff=None, xi_ref=None) -> GradedLevel:
    P = spec.polyhedron
    if P.is_bounded:
        return GradedLevel(m, tuple(lattice_points(P, m)), spec.dim_x, spec=spec)
    if cutoff is None:
        raise UnboundedLevel("an unbounded germ needs a cutoff")
    cutoff = rational(cutoff)
    if xi_ref is None:
        xi_ref = reeb_cone(spec).interior_point()
    xi_ref = rational_vector(xi_ref)
    if not reeb_cone(spec).contains([float(c) for c in xi_ref]):
        raise UnboundedLevel("reference co-weight must be Reeb-interior")
    a = a_wt(spec, xi_ref)
    # <alpha, xi_ref> + a <= cutoff
    cut = Halfspace(tuple(-c for c in xi_ref), cutoff - a)
    try:
        Q = P.intersect([cut])
    except InfeasibleSystem:
        return GradedLevel(m, (), spec.dim_x, cutoff, xi_ref, spec)
    pts = [
        b for b in lattice_points(Q, m)
        if sum(c * x for c, x in zip(b, xi_ref)) + m * a < m * cutoff
    ]
    return GradedLevel(m, tuple(pts), spec.dim_x, cutoff, xi_ref, spec)


# -- exact echelon bookkeeping ----------------------------------------------------

class _Echelon:
    """Row echelon form where the pivot of a row is its first nonzero entry
    in a fixed column order."""

    def __init__(self, order: Sequence[int]):
        self.order = list(order)
        self.rows: dict[int, list[Fraction]] = {}

    def add(self, vec: Sequence[Fraction]):
        v = list(vec)
        for col in self.order:
            if v[col] == 0:
                continue
            row = self.rows.get(col)
            if row is None:
                self.rows[col] = v
                return col, v
            f = v[col] / row[col]
            v = [a - f * b for a, b in zip(v, row)]
        return None, v


def _unit(i: int, d: int) -> tuple:
    return tuple(Fraction(int(k == i)) for k in range(d))


class Filtration:
    """Common interface of monomial and flag filtrations."""

    level: GradedLevel
    values: tuple

    kind = "abstract"

    def basis_vectors(self) -> tuple:
        raise NotImplementedError

    def successive_minima(self) -> list[tuple[Fraction, int]]:
        counts: dict[Fraction, int] = {}
        for v in self.values:
            counts[v] = counts.get(v, 0) + 1
        return sorted(counts.items())

    def jump_table(self) -> list[tuple[Fraction, int]]:
        """``(lam, dim F^lam)`` at each jump value, ascending."""
        out = []
        remaining = len(self.values)
        for lam, mult in self.successive_minima():
            out.append((lam, remaining))
            remaining -= mult
        return out

    def _with_values(self, values) -> "Filtration":
        raise NotImplementedError

    def rescale(self, a) -> "Filtration":
        a = rational(a)
        if a <= 0:
            raise ValueError("rescaling factor must be positive")
        return self._with_values(tuple(a * v for v in self.values))

    def shift(self, b) -> "Filtration":
        b = rational(b)
        return self._with_values(tuple(v + b * self.level.m for v in self.values))


@dataclass(frozen=True, eq=True)
class MonomialFiltration(Filtration):
    level: GradedLevel
    values: tuple

    kind = "monomial"

    def __post_init__(self):
        if len(self.values) != len(self.level):
            raise FiltrationAxiomError("one value per basis point is required")
        object.__setattr__(self, "values", tuple(rational(v) for v in self.values))

    def basis_vectors(self) -> tuple:
        d = len(self.level)
        return tuple(_unit(i, d) for i in range(d))

    def _with_values(self, values):
        return MonomialFiltration(self.level, values)

    def value_of(self, beta) -> Fraction:
        return self.values[self.level.index[tuple(beta)]]


@dataclass(frozen=True, eq=True)
class FlagFiltration(Filtration):
    """Filtration given by an adapted basis ``rows`` with jump ``values``."""

    level: GradedLevel
    rows: tuple
    values: tuple

    kind = "flag"

    def __post_init__(self):
        d = len(self.level)
        rows = tuple(tuple(Fraction(c) for c in r) for r in self.rows)
        if len(rows) != d or len(self.values) != d or any(len(r) != d for r in rows):
            raise FiltrationAxiomError("an adapted basis needs exactly dim(level) vectors")
        if rank(rows) != d:
            raise FiltrationAxiomError("adapted basis vectors are linearly dependent")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "values", tuple(rational(v) for v in self.values))

    @classmethod
    def from_jumps(cls, level: GradedLevel, jumps: Iterable) -> "FlagFiltration":
        """Build from ``(lam, generators)`` pairs; ``generators`` span ``F^lam``.

        The smallest jump must span the whole level and the spans must
        strictly shrink as ``lam`` grows.
        """
        d = len(level)
        jumps = sorted(((rational(lam), [tuple(Fraction(c) for c in g) for g in gens])
                        for lam, gens in jumps), key=lambda j: j[0])
        if not jumps:
            raise FiltrationAxiomError("no jumps given")
        if len({lam for lam, _ in jumps}) != len(jumps):
            raise FiltrationAxiomError("jump values must be distinct")
        ranks = [rank(g) if g else 0 for _, g in jumps]
        if ranks[0] != d:
            raise FiltrationAxiomError("the lowest jump must span the whole level")
        for k in range(1, len(jumps)):
            if ranks[k] >= ranks[k - 1]:
                raise FiltrationAxiomError(f"rank does not drop at jump {jumps[k][0]}")
            if jumps[k][1] and rank(jumps[k - 1][1] + jumps[k][1]) != ranks[k - 1]:
                raise FiltrationAxiomError(f"F^{jumps[k][0]} is not contained in F^{jumps[k - 1][0]}")
        ech = _Echelon(range(d))
        rows, values = [], []
        for lam, gens in reversed(jumps):
            for g in gens:
                piv, _ = ech.add(g)
                if piv is not None:
                    rows.append(g)
                    values.append(lam)
        return cls(level, tuple(rows), tuple(values))

    def basis_vectors(self) -> tuple:
        return self.rows

    def _with_values(self, values):
        return FlagFiltration(self.level, self.rows, values)

    def subspace(self, lam) -> list:
        lam = rational(lam)
        return [r for r, v in zip(self.rows, self.values) if v >= lam]

    def as_monomial(self) -> MonomialFiltration | None:
        """The same filtration as a monomial one, if every ``F^lam`` is a
        coordinate subspace; otherwise ``None``."""
        d = len(self.level)
        values: list = [None] * d
        for lam, _ in reversed(self.successive_minima()):
            sub = self.subspace(lam)
            support = {j for r in sub for j in range(d) if r[j] != 0}
            if len(support) != len(sub):
                return None
            for j in support:
                if values[j] is None:
                    values[j] = lam
        return MonomialFiltration(self.level, tuple(values))


def trivial(level: GradedLevel) -> MonomialFiltration:
    return MonomialFiltration(level, (Fraction(0),) * len(level))


def filtration_from_wt(level: GradedLevel, xi, a_value=None) -> MonomialFiltration:
    """``wt_xi`` filtration: ``beta -> <beta, xi> + m A(wt_xi)``."""
    xi = rational_vector(xi)
    if a_value is None:
        if level.spec is None:
            raise ValueError("a level without a germ needs an explicit a_value")
        a_value = a_wt(level.spec, xi)
    a_value = rational(a_value)
    vals = tuple(sum(c * x for c, x in zip(b, xi)) + level.m * a_value for b in level.basis)
    if any(v < 0 for v in vals):
        raise FiltrationAxiomError("wt filtration takes a negative value on the level")
    return MonomialFiltration(level, vals)


def rescale(F: Filtration, a) -> Filtration:
    return F.rescale(a)


def shift(F: Filtration, b) -> Filtration:
    return F.shift(b)


def twist(F: Filtration, xi) -> MonomialFiltration:
    """``xi``-twist: add ``<beta, xi>`` to the value of each weight vector."""
    if isinstance(F, FlagFiltration):
        mono = F.as_monomial()
        if mono is None:
            raise NotEquivariant("flag filtration is not weight-homogeneous")
        F = mono
    xi = rational_vector(xi)
    vals = tuple(v + sum(c * x for c, x in zip(b, xi)) for v, b in zip(F.values, F.level.basis))
    return MonomialFiltration(F.level, vals)


def successive_minima(F: Filtration) -> list[tuple[Fraction, int]]:
    return F.successive_minima()


def check_multiplicativity(Fa: MonomialFiltration, Fb: MonomialFiltration, Fab: MonomialFiltration,
                           strict: bool = False) -> list:
    """Spot-check ``F_a^s F_b^t \\subset F_{a+b}^{s+t}`` on monomials.

    Returns the violating pairs; warns (or raises when ``strict``) if any.
    """
    bad = []
    for i, p in enumerate(Fa.level.basis):
        for j, q in enumerate(Fb.level.basis):
            s = tuple(x + y for x, y in zip(p, q))
            k = Fab.level.index.get(s)
            if k is not None and Fab.values[k] < Fa.values[i] + Fb.values[j]:
                bad.append((p, q))
    if bad:
        msg = f"multiplicativity fails on {len(bad)} monomial pairs, e.g. {bad[0]}"
        if strict:
            raise FiltrationAxiomError(msg)
        warnings.warn(msg, stacklevel=2)
    return bad


# -- measures ---------------------------------------------------------------------

@dataclass(frozen=True)
class AtomicMeasure:
    """Finite sum of point masses with exact rational masses."""

    atoms: tuple

    @classmethod
    def collect(cls, pairs: Iterable) -> "AtomicMeasure":
        acc: dict = {}
        for loc, mass in pairs:
            acc[loc] = acc.get(loc, Fraction(0)) + mass
        return cls(tuple(sorted((k, v) for k, v in acc.items() if v != 0)))

    @property
    def total_mass(self) -> Fraction:
        return sum((m for _, m in self.atoms), Fraction(0))

    def marginal(self, k: int) -> "AtomicMeasure":
        return AtomicMeasure.collect((loc[k], m) for loc, m in self.atoms)

    def pushforward(self, fn: Callable) -> "AtomicMeasure":
        return AtomicMeasure.collect((fn(loc), m) for loc, m in self.atoms)

    def integrate(self, fn: Callable):
        """Exact when ``fn`` returns rationals, float otherwise."""
        vals = [fn(loc) * m for loc, m in self.atoms]
        if all(isinstance(v, (int, Fraction)) for v in vals):
            return sum(vals, Fraction(0))
        return math.fsum(float(v) for v in vals)

    def cdf(self, t) -> float:
        return float(sum((m for loc, m in self.atoms if loc <= t), Fraction(0)))

    def support(self) -> tuple:
        return tuple(loc for loc, _ in self.atoms)


def dh_discrete(F: Filtration, m: int | None = None) -> AtomicMeasure:
    """Atoms at ``lam / m`` with mass ``mult * n! / m^n``."""
    level = F.level
    m = level.m if m is None else m
    unit = Fraction(math.factorial(level.dim_x), m**level.dim_x)
    return AtomicMeasure.collect((lam / m, k * unit) for lam, k in F.successive_minima())


def _inverse(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    d = len(rows)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(d)] for i, r in enumerate(rows)]
    for col in range(d):
        piv = next(i for i in range(col, d) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [c / p for c in aug[col]]
        for i in range(d):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [r[d:] for r in aug]


def compatible_basis(F0: Filtration, F1: Filtration) -> list[tuple[tuple, Fraction, Fraction]]:
    """A basis adapted to both filtrations: triples ``(vector, x, y)``.

    ``F0^mu cap F1^nu`` is spanned by the vectors with ``x >= mu`` and
    ``y >= nu``.  Work in ``F0``'s adapted coordinates, where ``F0`` is
    monomial; order columns by ``F0``-value (ties by lattice point) and
    insert ``F1``'s basis in decreasing value.  The first nonzero column of
    each new echelon row is its ``F0``-value; the insertion round is its
    ``F1``-value.
    """
    if F0.level != F1.level:
        raise ValueError("filtrations live on different levels")
    d = len(F0.level)
    if isinstance(F0, MonomialFiltration) and isinstance(F1, MonomialFiltration):
        # the monomial basis is adapted to both
        return [(_unit(i, d), x, y) for i, x, y in _monomial_pairs(F0, F1)]
    basis = F0.level.basis
    order =sorted(range(d), key=lambda i: (F0.values[i], basis[i]))
    B0 = F0.basis_vectors()
    if isinstance(F0, MonomialFiltration):
        to_coords = lambda v: list(v)  # noqa: E731
        from_coords = lambda c: tuple(c)  # noqa: E731
    else:
        inv = _inverse(B0)
        to_coords = lambda v: [sum((v[k] * inv[k][j] for k in range(d)), Fraction(0)) for j in range(d)]  # noqa: E731
        from_coords = lambda c: tuple(sum((c[k] * B0[k][j] for k in range(d)), Fraction(0)) for j in range(d))  # noqa: E731
    ech = _Echelon(order)
    out = []
    for idx in sorted(range(d), key=lambda i: F1.values[i], reverse=True):
        piv, vec = ech.add(to_coords(F1.basis_vectors()[idx]))
        if piv is None:  # pragma: no cover - adapted bases are independent
            raise FiltrationAxiomError("dependent adapted basis")
        out.append((from_coords(vec), F0.values[piv], F1.values[idx]))
    return out


def _monomial_pairs(F0: MonomialFiltration, F1: MonomialFiltration) -> list:
    return [(i, F0.values[i], F1.values[i])
            for i in sorted(range(len(F0.level)), key=lambda i: F1.values[i], reverse=True)]


def _compatible_pairs(F0: Filtration, F1: Filtration) -> list[tuple[Fraction, Fraction]]:
    """The ``(x, y)`` values of :func:`compatible_basis` without the vectors."""
    if isinstance(F0, MonomialFiltration) and isinstance(F1, MonomialFiltration):
        if F0.level != F1.level:
            raise ValueError("filtrations live on different levels")
        return [(x, y) for _, x, y in _monomial_pairs(F0, F1)]
    return [(x, y) for _, x, y in compatible_basis(F0, F1)]


def dh_bivariate(F0: Filtration, F1: Filtration, m: int | None = None) -> AtomicMeasure:
    """Joint atoms at ``(x/m, y/m)`` weighted by ``dim Gr^x_{F0} Gr^y_{F1}``."""
    level = F0.level
    m = level.m if m is None else m
    unit = Fraction(math.factorial(level.dim_x), m**level.dim_x)
    return AtomicMeasure.collect(((x / m, y / m), unit) for x, y in _compatible_pairs(F0, F1))


def geodesic(F0: Filtration, F1: Filtration, t) -> Filtration:
    """``F_t^lam = sum over (1-t) mu + t nu >= lam of F0^mu cap F1^nu``."""
    t = rational(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 0:
        return F0
    if t == 1:
        return F1
    if isinstance(F0, MonomialFiltration) and isinstance(F1, MonomialFiltration):
        return MonomialFiltration(F0.level, tuple((1 - t) * a + t * b for a, b in zip(F0.values, F1.values)))
    triples = compatible_basis(F0, F1)
    return FlagFiltration(F0.level, tuple(v for v, _, _ in triples),
                          tuple((1 - t) * x + t * y for _, x, y in triples))


def geodesic_dh_identity(F0: Filtration, F1: Filtration, m: int | None = None, t=Fraction(1, 2)):
    """Compare ``DH(F_t)`` with the pushforward of the joint DH measure.

    Returns ``(holds, deviation)`` where ``deviation`` is the largest exact
    difference of atom masses.
    """
    t = rational(t)
    lhs = dh_discrete(geodesic(F0, F1, t), m)
    rhs = dh_bivariate(F0, F1, m).pushforward(lambda p: (1 - t) * p[0] + t * p[1])
    a, b = dict(lhs.atoms), dict(rhs.atoms)
    dev = max((abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b)), default=Fraction(0))
    return dev == 0, Fraction(dev)


# -- invariants ---------------------------------------------------------------------

def _log_laplace(measure: AtomicMeasure) -> float:
    """``log sum e^{-x} mass`` computed stably."""
    xs = [float(x) for x, _ in measure.atoms]
    lo = min(xs)
    return -lo + math.log(math.fsum(math.exp(lo - x) * float(mass) for x, (_, mass) in zip(xs, measure.atoms)))


def s_tilde_m(F: Filtration, m: int | None = None) -> float:
    """``S~_m = -log sum e^{-x} DH_{F,m}(x)``."""
    return -_log_laplace(dh_discrete(F, m))


def h_m(F: Filtration, mu, m: int | None = None) -> float:
    """``H_m = mu - S~_m`` with the log canonical slope ``mu`` supplied."""
    return float(rational(mu)) - s_tilde_m(F, m)


def _weighted_mean(groups: dict, mu0: float) -> float:
    """``sum_x e^{mu0-x} c_x y_x / sum_x e^{mu0-x} c_x`` from exact per-x sums."""
    keys = sorted(groups)
    num = math.fsum(math.exp(mu0 - float(x)) * float(groups[x][0]) for x in keys)
    den = math.fsum(math.exp(mu0 - float(x)) * float(groups[x][1]) for x in keys)
    return num / den


def s_weighted_m(F0: MonomialFiltration, mu0, F: Filtration, m: int | None = None,
                 t_cut=None, route: str = "atoms") -> float:
    """``S_{m,mt}(v0; F)``: ``e^{mu0 - x}``-weighted mean of ``y`` over the
    joint measure restricted to ``x <= t_cut``.

    ``route="atoms"`` sums the bivariate DH atoms; ``route="basis"`` reads
    the order of the ``v0``-weighted basis-type divisor off a compatible
    basis.  Both group the exact sums by ``x`` first, so they agree bit for
    bit.
    """
    m = F0.level.m if m is None else m
    mu0 = float(rational(mu0))
    cut = None if t_cut is None else rational(t_cut)
    groups: dict = {}
    if route == "atoms":
        for (x, y), mass in dh_bivariate(F0, F, m).atoms:
            if cut is None or x <= cut:
                g = groups.setdefault(x, [Fraction(0), Fraction(0)])
                g[0] += y * mass
                g[1] += mass
    elif route == "basis":
        unit = Fraction(math.factorial(F0.level.dim_x), m**F0.level.dim_x)
        for x, y in _compatible_pairs(F0, F):
            x, y = x / m, y / m
            if cut is None or x <= cut:
                g = groups.setdefault(x, [Fraction(0), Fraction(0)])
                g[0] += y * unit
                g[1] += unit
    else:
        raise ValueError(f"unknown route {route!r}")
    if not groups:
        raise ValueError("no basis element below the cut")
    return _weighted_mean(groups, mu0)


def s_weighted_limit(spec: GermSpec, xi0, xi1, t) -> float:
    """Limit of ``S_{m,mt}(wt_xi0; wt_xi1)`` as ``m -> infinity``.

    The mean of ``<alpha, xi1> + A(xi1)`` against ``e^{-<alpha, xi0>}`` over
    ``P cap {<alpha, xi0> + A(xi0) <= t}``.
    """
    xi0_q = rational_vector(xi0)
    a0 = a_wt(spec, xi0_q)
    a1 = float(a_wt(spec, xi1))
    P = spec.polyhedron
    if any(xi0_q) or not P.is_bounded:
        P = P.intersect([Halfspace(tuple(-c for c in xi0_q), rational(t) - a0)])
    I, M1, _ = expkernel.moments(P, [float(c) for c in xi0_q], second=False)
    return a1 + float(M1 @ np.array([float(c) for c in xi1])) / I


def convexity_witness(F0: Filtration, mu0, F1: Filtration, mu1, ts: Sequence, m: int | None = None) -> list[float]:
    """``g(t) = log sum e^{(1-t)(mu0-x) + t(mu1-y)}`` over the joint DH atoms."""
    atoms = dh_bivariate(F0, F1, m).atoms
    mu0, mu1 = float(rational(mu0)), float(rational(mu1))
    out = []
    for t in ts:
        t = float(t)
        ex = [(1 - t) * (mu0 - float(x)) + t * (mu1 - float(y)) for (x, y), _ in atoms]
        top = max(ex)
        out.append(top + math.log(math.fsum(math.exp(e - top) * float(mass) for e, (_, mass) in zip(ex, atoms))))
    return out
