"""Exact rational polyhedral geometry.

Polyhedra are stored with both descriptions.  All combinatorial work
(vertex enumeration, facets, triangulation, volumes, lattice points) is
carried out in exact integer / :class:`fractions.Fraction` arithmetic; the
floating point world only starts in :mod:`soliton.expkernel`.

The dual description uses the incremental double-description method on
the homogenization ``{(x, s) : <a, x> + b s >= 0, s >= 0}``.  Triangulations
are placing triangulations of the same homogenized cone.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    InfeasibleSystem,
    LinealitySpace,
    UnboundedPolyhedron,
    UnsupportedDimension,
)

MAX_DIM = 6

RationalVector = tuple  # tuple[Fraction, ...]


def rational(x) -> Fraction:
    """Convert ints, Fractions, ``"p/q"`` strings or floats (exactly) to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coordinate {x!r}")
        return Fraction(float(x))
    return Fraction(x)


def rational_vector(seq: Iterable) -> RationalVector:
    vec = tuple(rational(c) for c in seq)
    if not vec:
        raise ValueError("vectors must have dimension >= 1")
    return vec


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), 0)


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b) if a and b else max(a, b)


def integer_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational row to a primitive integer row (positive multiple)."""
    den = reduce(_lcm, (Fraction(c).denominator for c in row), 1)
    ints = [int(Fraction(c) * den) for c in row]
    g = reduce(math.gcd, ints, 0)
    if g == 0:
        return tuple(ints)
    return tuple(c // g for c in ints)


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix given by rows."""
    mat = [[Fraction(c) for c in r] for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        pr = mat[r]
        for i in range(r + 1, len(mat)):
            f = mat[i][col]
            if f:
                f = f / pr[col]
                mat[i] = [a - f * b for a, b in zip(mat[i], pr)]
        r += 1
        if r == len(mat):
            break
    return r


def det(rows: Sequence[Sequence]) -> Fraction:
    """Exact determinant (Fraction Gaussian elimination)."""
    mat = [[Fraction(c) for c in r] for r in rows]
    n = len(mat)
    result = Fraction(1)
    for col in range(n):
        piv = next((i for i in range(col, n) if mat[i][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            mat[col], mat[piv] = mat[piv], mat[col]
            result = -result
        pr = mat[col]
        result *= pr[col]
        for i in range(col + 1, n):
            f = mat[i][col]
            if f:
                f = f / pr[col]
                mat[i] = [a - f * b for a, b in zip(mat[i], pr)]
    return result


def _solve_square(mat: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    n = len(mat)
    aug = [[Fraction(c) for c in row] + [Fraction(b)] for row, b in zip(mat, rhs)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pr = aug[col]
        inv = 1 / pr[col]
        aug[col] = pr = [c * inv for c in pr]
        for i in range(n):
            if i != col and aug[i][col]:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], pr)]
    return [row[-1] for row in aug]


@dataclass(frozen=True)
class Halfspace:
    """The closed halfspace ``{x : <x, normal> + offset >= 0}``."""

    normal: RationalVector
    offset: Fraction

    def __post_init__(self):
        object.__setattr__(self, "normal", rational_vector(self.normal))
        object.__setattr__(self, "offset", rational(self.offset))
        if all(c == 0 for c in self.normal):
            raise ValueError("halfspace normal must be nonzero")

    def value(self, x: Sequence) -> Fraction:
        return dot(self.normal, x) + self.offset

    def contains(self, x: Sequence) -> bool:
        return self.value(x) >= 0

    def homogeneous_row(self) -> tuple[int, ...]:
        return integer_row(self.normal + (self.offset,))


def _halfspace_from_row(row: Sequence[int]) -> Halfspace:
    return Halfspace(tuple(Fraction(c) for c in row[:-1]), Fraction(row[-1]))


def _primitive(vec: Sequence[int]) -> tuple[int, ...]:
    g = reduce(math.gcd, vec, 0)
    return tuple(c // g for c in vec) if g > 1 else tuple(vec)


def extreme_rays(rows: Sequence[Sequence[int]], d: int) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{y in R^d : <row, y> >= 0}``.

    Incremental double description; rows are processed in the given order
    after an initial basis of ``d`` independent rows.  Raises
    :class:`LinealitySpace` if the cone is not pointed.
    """
    rows = [tuple(int(c) for c in r) for r in rows]
    basis_idx: list[int] = []
    for i, r in enumerate(rows):
        if rank([rows[j] for j in basis_idx] + [r]) > len(basis_idx):
            basis_idx.append(i)
            if len(basis_idx) == d:
                break
    if len(basis_idx) < d:
        raise LinealitySpace("constraint system has a nontrivial lineality space")

    a0 = [[Fraction(c) for c in rows[j]] for j in basis_idx]
    rays: list[tuple[int, ...]] = []
    zeros: list[int] = []
    for k in range(d):
        e = [Fraction(int(i == k)) for i in range(d)]
        col = _solve_square(a0, e)
        rays.append(integer_row(col))
        mask = 0
        for pos, j in enumerate(basis_idx):
            if pos != k:
                mask |= 1 << j
        zeros.append(mask)

    in_basis = set(basis_idx)
    for i, a in enumerate(rows):
        if i in in_basis:
            continue
        s = [sum(x * y for x, y in zip(a, r)) for r in rays]
        plus = [k for k, v in enumerate(s) if v > 0]
        minus = [k for k, v in enumerate(s) if v < 0]
        zero = [k for k, v in enumerate(s) if v == 0]
        bit = 1 << i
        if not minus:
            for k in zero:
                zeros[k] |= bit
            continue
        new_rays = []
        new_zeros = []
        for p in plus:
            for q in minus:
                common = zeros[p] & zeros[q]
                if bin(common).count("1") < d - 2:
                    continue
                adjacent = True
                for k in range(len(rays)):
                    if k != p and k != q and (zeros[k] & common) == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                sp, sq = s[p], s[q]
                vec = tuple(sp * y - sq * x for x, y in zip(rays[p], rays[q]))
                new_rays.append(_primitive(vec))
                new_zeros.append(common | bit)
        keep = plus + zero
        rays_next = [rays[k] for k in keep] + new_rays
        zeros_next = [zeros[k] | (bit if k in zero else 0) for k in keep] + new_zeros
        rays, zeros = rays_next, zeros_next
    # deduplicate (can only happen through degenerate adjacency ties)
    seen = {}
    for r in rays:
        seen.setdefault(r, None)
    return list(seen)


def _vec_key(v):
    return tuple(v)


@dataclass(frozen=True)
class Polyhedron:
    """A rational polyhedron with both descriptions.

    ``halfspaces`` are irredundant facet inequalities for full-dimensional
    polyhedra (for lower-dimensional ones the deduplicated input system is
    kept).  ``vertices`` and ``rays`` are sorted lexicographically; rays are
    primitive integer vectors.
    """

    halfspaces: tuple
    vertices: tuple
    rays: tuple
    dim: int

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])

    @property
    def is_bounded(self) -> bool:
        return not self.rays

    @property
    def is_full_dimensional(self) -> bool:
        return self.dim == self.ambient_dim

    def contains(self, x: Sequence) -> bool:
        x = rational_vector(x)
        return all(h.contains(x) for h in self.halfspaces)

    def interior_contains(self, x: Sequence) -> bool:
        x = rational_vector(x)
        return all(h.value(x) > 0 for h in self.halfspaces)

    def translate(self, v: Sequence) -> "Polyhedron":
        v = rational_vector(v)
        hs = [Halfspace(h.normal, h.offset - dot(h.normal, v)) for h in self.halfspaces]
        verts = tuple(tuple(a + b for a, b in zip(p, v)) for p in self.vertices)
        return Polyhedron(tuple(hs), tuple(sorted(verts)), self.rays, self.dim)

    def dilate(self, m) -> "Polyhedron":
        m = rational(m)
        if m <= 0:
            raise ValueError("dilation factor must be positive")
        hs = [Halfspace(h.normal, h.offset * m) for h in self.halfspaces]
        verts = tuple(tuple(c * m for c in p) for p in self.vertices)
        return Polyhedron(tuple(hs), verts, self.rays, self.dim)

    def intersect(self, extra: Iterable[Halfspace]) -> "Polyhedron":
        return dual_description(list(self.halfspaces) + list(extra))

    def float_vertices(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices], dtype=float)

    def float_rays(self) -> np.ndarray:
        n = self.ambient_dim
        return np.array([[float(c) for c in r] for r in self.rays], dtype=float).reshape(-1, n)


def _affine_dim(vertices, rays) -> int:
    v0 = vertices[0]
    gens = [tuple(a - b for a, b in zip(v, v0)) for v in vertices[1:]] + list(rays)
    return rank(gens) if gens else 0


def dual_description(halfspaces: Sequence[Halfspace]) -> Polyhedron:
    """Compute vertices and rays of ``{x : <x, a_i> + b_i >= 0}``.

    Raises
    ------
    InfeasibleSystem
        If the intersection is empty.
    UnsupportedDimension
        If the ambient dimension exceeds 6.
    LinealitySpace
        If the polyhedron contains a line.
    """
    halfspaces = list(halfspaces)
    if not halfspaces:
        raise LinealitySpace("no halfspaces: the polyhedron is the whole space")
    n = len(halfspaces[0].normal)
    if n < 1:
        raise ValueError("ambient dimension must be >= 1")
    if n > MAX_DIM:
        raise UnsupportedDimension(f"ambient dimension {n} > {MAX_DIM}")
    if any(len(h.normal) != n for h in halfspaces):
        raise ValueError("halfspaces of mixed dimension")

    uniq: dict[tuple[int, ...], None] = {}
    for h in halfspaces:
        uniq.setdefault(h.homogeneous_row(), None)
    rows = sorted(uniq)
    s_row = tuple([0] * n + [1])
    all_rows = sorted(set(rows) | {s_row})
    d = n + 1
    cone_rays = extreme_rays(all_rows, d)

    vertices = []
    rays = []
    for r in cone_rays:
        s = r[-1]
        if s > 0:
            vertices.append(tuple(Fraction(c, s) for c in r[:-1]))
        elif s == 0:
            if any(r[:-1]):
                rays.append(tuple(r[:-1]))
    if not vertices:
        raise InfeasibleSystem("halfspaces have empty intersection")
    vertices = tuple(sorted(set(vertices)))
    rays = tuple(sorted(set(rays)))
    dim = _affine_dim(vertices, rays)

    gens_h = [tuple(v) + (Fraction(1),) for v in vertices] + [tuple(Fraction(c) for c in r) + (Fraction(0),) for r in rays]
    if dim == n:
        facets = []
        for row in rows:
            if not any(row[:-1]):
                continue
            tight = [g for g in gens_h if dot(row, g) == 0]
            if len(tight) >= n and rank(tight) == n:
                facets.append(row)
        hs = tuple(_halfspace_from_row(r) for r in facets)
    else:
        hs = tuple(_halfspace_from_row(r) for r in rows if any(r[:-1]))
    return Polyhedron(hs, vertices, rays, dim)


def from_generators(vertices: Sequence[Sequence], rays: Sequence[Sequence] = ()) -> Polyhedron:
    """Build a full-dimensional polyhedron ``conv(vertices) + cone(rays)``."""
    verts = [rational_vector(v) for v in vertices]
    if not verts:
        raise InfeasibleSystem("no vertices given")
    n = len(verts[0])
    if n > MAX_DIM:
        raise UnsupportedDimension(f"ambient dimension {n} > {MAX_DIM}")
    rays_q = [rational_vector(r) for r in rays]
    gens = sorted(
        {integer_row(v + (Fraction(1),)) for v in verts}
        | {integer_row(r + (Fraction(0),)) for r in rays_q if any(r)}
    )
    if rank(gens) < n + 1:
        raise DegenerateInput("generators do not span a full-dimensional polyhedron")
    normals = extreme_rays(gens, n + 1)
    hs = [_halfspace_from_row(r) for r in normals if any(r[:-1])]
    return dual_description(hs)


def recession_cone(P: Polyhedron) -> Polyhedron:
    """The recession cone of ``P`` as a polyhedron with apex 0."""
    n = P.ambient_dim
    zero = tuple(Fraction(0) for _ in range(n))
    hs = []
    seen = set()
    for h in P.halfspaces:
        key = integer_row(h.normal)
        if key not in seen:
            seen.add(key)
            hs.append(Halfspace(h.normal, 0))
    dim = rank(P.rays) if P.rays else 0
    return Polyhedron(tuple(hs), (zero,), P.rays, dim)


@dataclass(frozen=True)
class GeneralizedSimplex:
    """``conv(apexes) + cone(rays)`` with affinely independent apexes and
    linearly independent rays, ``len(apexes) + len(rays) == dim + 1``.

    ``jacobian`` is ``|det[a_1 - a_0, ..., a_{k-1} - a_0, r_1, ..., r_j]|``,
    the Jacobian of the parametrization from the standard simplex times the
    positive orthant.
    """

    apexes: tuple
    rays: tuple
    jacobian: Fraction

    @property
    def is_bounded(self) -> bool:
        return not self.rays

    def float_apexes(self) -> np.ndarray:
        return np.array([[float(c) for c in a] for a in self.apexes])

    def float_rays(self) -> np.ndarray:
        if not self.rays:
            return np.zeros((0, len(self.apexes[0])))
        return np.array([[float(c) for c in r] for r in self.rays])


def _normal_of(vectors: Sequence[Sequence[Fraction]], d: int) -> list[Fraction]:
    """A nonzero vector orthogonal to ``d - 1`` independent vectors (cofactors)."""
    out = []
    for j in range(d):
        minor = [[v[k] for k in range(d) if k != j] for v in vectors]
        out.append(((-1) ** j) * det(minor))
    return out


def triangulate(P: Polyhedron) -> list[GeneralizedSimplex]:
    """Placing triangulation of ``P`` into generalized simplices.

    Generators of the homogenized cone (vertices, then rays, each in
    lexicographic order) are placed one by one; a new generator is coned
    over every boundary facet it strictly sees.
    """
    n = P.ambient_dim
    if P.dim < n:
        raise DegenerateInput(f"polyhedron has dimension {P.dim} < {n}")
    d = n + 1
    gens = [tuple(v) + (Fraction(1),) for v in P.vertices] + [
        tuple(Fraction(c) for c in r) + (Fraction(0),) for r in P.rays
    ]

    first: list[int] = []
    for i, g in enumerate(gens):
        if rank([gens[j] for j in first] + [g]) > len(first):
            first.append(i)
            if len(first) == d:
                break
    cells: list[tuple[int, ...]] = [tuple(first)]
    # boundary facet -> inward normal
    boundary: dict[frozenset, list[Fraction]] = {}

    def add_cell_facets(cell):
        for drop in cell:
            facet = frozenset(i for i in cell if i != drop)
            if facet in boundary:
                del boundary[facet]
                continue
            normal = _normal_of([gens[i] for i in sorted(facet)], d)
            if dot(normal, gens[drop]) < 0:
                normal = [-c for c in normal]
            boundary[facet] = normal

    add_cell_facets(cells[0])
    placed = set(first)
    for i, g in enumerate(gens):
        if i in placed:
            continue
        visible = [f for f, nrm in boundary.items() if dot(nrm, g) < 0]
        placed.add(i)
        if not visible:
            continue
        visible.sort(key=lambda f: sorted(f))
        new_cells = [tuple(sorted(f)) + (i,) for f in visible]
        for cell in new_cells:
            cells.append(cell)
            add_cell_facets(cell)

    out = []
    for cell in cells:
        apexes = tuple(tuple(gens[i][:-1]) for i in cell if gens[i][-1] == 1)
        rays = tuple(tuple(gens[i][:-1]) for i in cell if gens[i][-1] == 0)
        jac = abs(det([gens[i] for i in cell]))
        out.append(GeneralizedSimplex(apexes, rays, jac))
    return out


def volume(P: Polyhedron) -> Fraction:
    """Exact Euclidean volume of a bounded full-dimensional polyhedron."""
    if P.rays:
        raise UnboundedPolyhedron("volume of an unbounded polyhedron")
    n = P.ambient_dim
    if P.dim < n:
        return Fraction(0)
    return sum((c.jacobian for c in triangulate(P)), Fraction(0)) / math.factorial(n)


def lattice_points(P: Polyhedron, m: int = 1) -> list[tuple[int, ...]]:
    """Integer points of ``m * P`` in lexicographic order."""
    if m < 1 or int(m) != m:
        raise ValueError("scale must be a positive integer")
    if P.rays:
        raise UnboundedPolyhedron("lattice points of an unbounded polyhedron")
    m = int(m)
    n = P.ambient_dim
    rows = np.array([integer_row(h.normal + (h.offset * m,)) for h in P.halfspaces], dtype=object)
    lo = [math.ceil(min(v[k] for v in P.vertices) * m) for k in range(n)]
    hi = [math.floor(max(v[k] for v in P.vertices) * m) for k in range(n)]
    if any(a > b for a, b in zip(lo, hi)):
        return []
    a_int = np.array([[int(c) for c in r[:-1]] for r in rows], dtype=np.int64).reshape(-1, n)
    b_int = np.array([int(r[-1]) for r in rows], dtype=np.int64)
    if a_int.size and (np.abs(a_int).max() * max(map(abs, lo + hi), default=1) * n > 2**60):
        return _lattice_points_slow(P, m, lo, hi)
    out: list[tuple[int, ...]] = []
    inner = [np.arange(lo[k], hi[k] + 1, dtype=np.int64) for k in range(1, n)]
    if inner:
        grid = np.stack(np.meshgrid(*inner, indexing="ij"), axis=-1).reshape(-1, n - 1)
    else:
        grid = np.zeros((1, 0), dtype=np.int64)
    for x0 in range(lo[0], hi[0] + 1):
        pts = np.concatenate([np.full((grid.shape[0], 1), x0, dtype=np.int64), grid], axis=1)
        ok = np.all(pts @ a_int.T + b_int >= 0, axis=1) if a_int.size else np.ones(len(pts), bool)
        out.extend(tuple(int(c) for c in p) for p in pts[ok])
    return out


def _lattice_points_slow(P, m, lo, hi):
    out = []
    for p in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        q = tuple(Fraction(c, m) for c in p)
        if P.contains(q):
            out.append(p)
    return out


def box(lower: Sequence, upper: Sequence) -> Polyhedron:
    """Axis-aligned box as a polyhedron."""
    n = len(lower)
    hs = []
    for k in range(n):
        e = [0] * n
        e[k] = 1
        hs.append(Halfspace(tuple(e), -rational(lower[k])))
        e = [0] * n
        e[k] = -1
        hs.append(Halfspace(tuple(e), rational(upper[k])))
    return dual_description(hs)
