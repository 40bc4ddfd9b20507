import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from soliton.errors import (
    DegenerateInput,
    InfeasibleSystem,
    LinealitySpace,
    UnboundedPolyhedron,
    UnsupportedDimension,
)
from soliton.polyhedra import (
    Halfspace,
    box,
    det,
    dual_description,
    from_generators,
    lattice_points,
    rank,
    rational,
    recession_cone,
    triangulate,
    volume,
)
from soliton.checks import random_polytope


def hs(*rows):
    return [Halfspace(tuple(r[:-1]), r[-1]) for r in rows]


def F(*xs):
    return tuple(Fraction(x) for x in xs)


def test_rational_conversions():
    assert rational("3/4") == Fraction(3, 4)
    assert rational(0.5) == Fraction(1, 2)
    assert rational(np.int64(3)) == 3
    with pytest.raises(ValueError):
        rational(float("nan"))


def test_exact_rank_and_det():
    assert rank([[1, 2], [2, 4]]) == 1
    assert det([[2, 1], [1, 1]]) == 1
    assert det([[Fraction(1, 2), 0], [0, 3]]) == Fraction(3, 2)


def test_unit_square():
    P = dual_description(hs((1, 0, 0), (0, 1, 0), (-1, 0, 1), (0, -1, 1)))
    assert P.vertices == (F(0, 0), F(0, 1), F(1, 0), F(1, 1))
    assert P.rays == ()
    assert volume(P) == 1
    assert len(triangulate(P)) == 2


def test_projective_plane_triangle():
    P = dual_description(hs((1, 0, 1), (0, 1, 1), (-1, -1, 1)))
    assert P.vertices == (F(-1, -1), F(-1, 2), F(2, -1))
    assert volume(P) == Fraction(9, 2)
    assert len(lattice_points(P)) == 10


def test_orthant_cell():
    P = dual_description(hs((1, 0, 1), (0, 1, 1)))
    assert P.vertices == (F(-1, -1),)
    assert set(P.rays) == {(1, 0), (0, 1)}
    cells = triangulate(P)
    assert len(cells) == 1 and cells[0].jacobian == 1
    with pytest.raises(UnboundedPolyhedron):
        volume(P)


def test_f1_polygon_and_recession():
    P = dual_description(hs((1, 0, 1), (0, 1, 1), (-1, 1, 1), (0, -1, 1)))
    assert P.vertices == (F(-1, -1), F(-1, 1), F(0, -1), F(2, 1))
    assert volume(P) == 4
    assert recession_cone(P).rays == ()


def test_recession_ray():
    P = dual_description(hs((1, 0, 1), (-1, 1, 1), (1, -1, 1)))
    assert recession_cone(P).rays == ((1, 1),)


def test_redundant_inequality_dropped():
    P = dual_description(hs((1, 0, 0), (0, 1, 0), (-1, 0, 1), (0, -1, 1), (-1, -1, 5)))
    assert len(P.halfspaces) == 4


def test_errors():
    with pytest.raises(InfeasibleSystem):
        dual_description(hs((1, 0), (-1, -1)))
    with pytest.raises(LinealitySpace):
        dual_description(hs((1, 0, 1)))
    with pytest.raises(UnsupportedDimension):
        dual_description([Halfspace(tuple([1] + [0] * 6), 1)])
    segment = dual_description(hs((1, 0, 0), (-1, 0, 1), (0, 1, 0), (0, -1, 0)))
    assert segment.dim == 1
    with pytest.raises(DegenerateInput):
        triangulate(segment)


def test_from_generators_round_trip():
    P = from_generators([(0, 0), (2, 0), (0, 3)])
    Q = dual_description(P.halfspaces)
    assert P.vertices == Q.vertices
    assert volume(P) == 3
    N = from_generators([(2, 0), (0, 3)], [(1, 0), (0, 1)])
    assert N.vertices == (F(0, 3), F(2, 0))


def test_dilate_and_translate():
    P = box((0, 0), (1, 2))
    assert volume(P.dilate(3)) == 18
    assert P.translate((1, 1)).vertices[0] == F(1, 1)


def _lattice_oracle(P, m):
    verts = np.array([[float(c) for c in v] for v in P.vertices]) * m
    lo, hi = np.floor(verts.min(0)).astype(int), np.ceil(verts.max(0)).astype(int)
    pts = []
    for p in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        if P.contains([Fraction(c, m) for c in p]):
            pts.append(p)
    return pts


@pytest.mark.parametrize("seed", range(8))
def test_random_polytopes_against_convex_hull(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 3)
    P = random_polytope(rng, n)
    hull = ConvexHull(P.float_vertices())
    assert float(volume(P)) == pytest.approx(hull.volume, rel=1e-12)
    # every vertex is the unique solution of n tight facets
    for v in P.vertices:
        tight = [h.normal for h in P.halfspaces if h.value(v) == 0]
        assert rank(tight) == n
    assert lattice_points(P, 2) == _lattice_oracle(P, 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=3, max_size=7))
def test_generator_hull_contains_its_points(points):
    try:
        P = from_generators(points)
    except DegenerateInput:
        return
    assert all(P.contains(p) for p in points)
    assert set(P.vertices) <= {F(*p) for p in points}
    total = sum(c.jacobian for c in triangulate(P)) / 2
    assert total == volume(P)
