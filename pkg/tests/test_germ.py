import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from soliton import germ, valuations as va
from soliton.checks import FIXTURES, random_germ
from soliton.errors import ReebViolation, SpecInvalid

import oracles

# Newton on adaptive-quadrature moments of the F1 polygon (oracles.f1_soliton)
F1_XI0 = np.array([0.0, 0.5276195198969601])
F1_H = 2.0351114346180803

# coth 1 - 1: the derivative of log(2 sinh x / x) at x = 1
P1_FUTAKI_AT_1 = 1 / math.tanh(1.0) - 1.0


def test_fixture_polyhedra():
    assert [tuple(map(int, v)) for v in germ.projective_line().polyhedron.vertices] == [(-1,), (1,)]
    assert [tuple(map(int, v)) for v in germ.projective_plane().polyhedron.vertices] == [(-1, -1), (-1, 2), (2, -1)]
    A2 = germ.affine_space(2).polyhedron
    assert A2.vertices == ((-1, -1),) and set(A2.rays) == {(1, 0), (0, 1)}


@pytest.mark.parametrize("facets, bad", [
    ((((1,), 1), ((-1,), 0)), 1),
    ((((2,), 1), ((-1,), 1)), 0),
    ((((1, 0), 1), ((0, 1), 1), ((-1, -1), 1), ((1, 1), 5)), 3),
])
def test_invalid_specs_name_the_facet(facets, bad):
    with pytest.raises(SpecInvalid) as err:
        germ.GermSpec(facets)
    assert err.value.facet == bad
    assert f"facet {bad}" in str(err.value)


def test_lineality_is_rejected():
    with pytest.raises(SpecInvalid):
        germ.GermSpec((((1, 0), 1), ((-1, 0), 1)))


def test_reeb_cones():
    assert germ.reeb_cone(germ.projective_line()).contains([-3.0])
    cone = germ.reeb_cone(germ.affine_space(2))
    assert cone.contains([1.0, 2.0])
    assert not cone.contains([1.0, 0.0])
    assert cone.contains([1.0, 0.0], strict=False)
    assert germ.reeb_cone(germ.hirzebruch_f1()).rays == ()
    np.testing.assert_array_equal(cone.interior_point(), [1.0, 1.0])


def test_a_wt_examples():
    assert germ.a_wt(germ.projective_line(), [1]) == 1
    assert germ.a_wt(germ.affine_space(2), [1, 1]) == 2
    assert germ.a_wt(germ.hirzebruch_f1(), [0, 0]) == 0
    with pytest.raises(ReebViolation):
        germ.a_wt(germ.affine_space(2), [1, -1])


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_facet_equality(name):
    spec = FIXTURES[name]()
    P = spec.polyhedron
    for normal, a in spec.facets:
        vals = [sum(Fraction(c) * x for c, x in zip(normal, v)) + a for v in P.vertices]
        assert min(vals) == 0
        assert germ.a_wt(spec, normal) == a


def test_h_eval_examples():
    assert math.exp(germ.h_eval(germ.projective_line(), [0.0])) == pytest.approx(2.0, rel=1e-14)
    assert math.exp(germ.h_eval(germ.projective_plane(), [0.0, 0.0])) == pytest.approx(9.0, rel=1e-14)
    assert math.exp(germ.h_eval(germ.affine_space(2), [1.0, 1.0])) == pytest.approx(2 * math.e**2, rel=1e-14)
    with pytest.raises(ReebViolation):
        germ.h_eval(germ.affine_space(2), [1.0, 0.0])


def test_h_eval_p1_closed_form():
    for x in (-2.0, -0.5, 0.3, 1.0, 4.0):
        assert germ.h_eval(germ.projective_line(), [x]) == pytest.approx(math.log(2 * math.sinh(x) / x), rel=1e-13)


def test_futaki_examples():
    assert germ.futaki(germ.projective_line(), [0.0], [1.0]) == pytest.approx(0.0, abs=1e-15)
    assert germ.futaki(germ.affine_space(2), [1.0, 1.0], [1.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
    assert germ.futaki(germ.projective_line(), [1.0], [1.0]) == pytest.approx(P1_FUTAKI_AT_1, rel=1e-13)
    assert germ.futaki_unnormalized(germ.projective_line(), [1.0], [1.0]) == pytest.approx(
        P1_FUTAKI_AT_1 * 2 * math.sinh(1.0), rel=1e-13)


def test_futaki_is_linear():
    spec = germ.hirzebruch_f1()
    xi0 = [0.2, -0.4]
    e1, e2 = np.array([1.0, 0.3]), np.array([-0.7, 2.0])
    lhs = germ.futaki(spec, xi0, 2 * e1 - 3 * e2)
    rhs = 2 * germ.futaki(spec, xi0, e1) - 3 * germ.futaki(spec, xi0, e2)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_f1_oracle_is_reproducible():
    xi, h = oracles.f1_soliton()
    assert np.allclose(xi, F1_XI0, atol=1e-10)
    assert h == pytest.approx(F1_H, rel=1e-12)


def test_minimize_fixtures():
    for spec, ref in [(germ.projective_line(), [0.0]), (germ.projective_plane(), [0.0, 0.0]),
                      (germ.hirzebruch_f1(), F1_XI0), (germ.affine_space(3), [1.0, 1.0, 1.0])]:
        cert = germ.minimize_h(spec)
        assert cert.gradient_norm <= 1e-8
        assert cert.hessian_min_eig > 0
        np.testing.assert_allclose(cert.xi0, ref, atol=1e-8)
    assert germ.minimize_h(germ.hirzebruch_f1()).h_value == pytest.approx(F1_H, rel=1e-12)


def test_minimize_restarts_agree():
    spec = germ.hirzebruch_f1()
    rng = np.random.default_rng(1)
    ref = germ.minimize_h(spec).xi0
    for _ in range(10):
        cert = germ.minimize_h(spec, start=rng.uniform(-2, 2, size=2))
        assert np.linalg.norm(cert.xi0 - ref) <= 1e-7
    for k in range(2):
        e = np.eye(2)[k]
        assert abs(germ.futaki(spec, ref, e)) <= 1e-8


def test_minimize_tolerance_range():
    with pytest.raises(ValueError):
        germ.minimize_h(germ.projective_line(), tol=1e-2)


def test_strict_convexity_on_segments():
    rng = random.Random(5)
    for _ in range(50):
        spec = rng.choice([germ.hirzebruch_f1(), germ.projective_plane(), germ.affine_space(2)])
        if spec.polyhedron.is_bounded:
            a, b = np.array([rng.uniform(-2, 2) for _ in range(2)]), np.array([rng.uniform(-2, 2) for _ in range(2)])
        else:
            a, b = np.array([rng.uniform(0.2, 3) for _ in range(2)]), np.array([rng.uniform(0.2, 3) for _ in range(2)])
        mid = germ.h_eval(spec, (a + b) / 2)
        assert mid < (germ.h_eval(spec, a) + germ.h_eval(spec, b)) / 2 - 1e-12 or np.allclose(a, b)


def _p1_ding_oracle(xi0, xi):
    num = integrate.quad(lambda a: (a * xi + 1) * math.exp(-a * xi0), -1, 1, epsabs=1e-14)[0]
    den = integrate.quad(lambda a: math.exp(-a * xi0), -1, 1, epsabs=1e-14)[0]
    return 1.0 - num / den


def test_ding_examples():
    p1 = germ.projective_line()
    assert germ.ding_invariant(p1, [0.0], [1.0]) == pytest.approx(0.0, abs=1e-15)
    assert germ.ding_invariant(p1, [1.0], [1.0]) == pytest.approx(_p1_ding_oracle(1.0, 1.0), rel=1e-12)
    assert germ.ding_invariant(germ.hirzebruch_f1(), [0.3, 0.1], [0.0, 0.0]) == 0


@pytest.mark.parametrize("spec", [germ.projective_line(), germ.projective_plane(), germ.hirzebruch_f1()])
def test_delta_at_soliton(spec):
    xi0 = germ.minimize_h(spec).xi0
    res = germ.delta_toric(spec, xi0)
    assert res.value == pytest.approx(1.0, abs=1e-4)
    assert res.starts >= 20 or spec.dim_x == 1
    assert germ.delta_gauge(spec, xi0) == pytest.approx(1.0, abs=1e-8)


def test_delta_scan_oracle_off_soliton():
    # 1-D scan of A / S over the unit circle, away from the soliton
    spec = germ.projective_plane()
    xi0 = np.array([0.4, -0.2])
    b = germ.weighted_barycenter(spec, xi0)
    verts = spec.polyhedron.float_vertices()
    th = np.linspace(0, 2 * np.pi, 20001)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    A = -(dirs @ verts.T).min(axis=1)
    scan = np.min(A / (A + dirs @ b))
    res = germ.delta_toric(spec, xi0)
    assert res.value == pytest.approx(scan, abs=1e-6)
    assert res.value == pytest.approx(germ.delta_gauge(spec, xi0), abs=1e-8)
    assert res.value < 1


def test_dh_cdf_examples():
    assert germ.dh_cdf(germ.affine_space(2), [1, 1], 1) == 1.0
    assert germ.dh_cdf(germ.projective_line(), [1], 0) == 0.0
    assert germ.dh_cdf(germ.projective_line(), [1], 50) == 2.0
    vals = [germ.dh_cdf(germ.hirzebruch_f1(), [1, 2], Fraction(k, 4)) for k in range(30)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 8.0


def test_h_equals_log_weighted_volume_on_random_germs():
    rng = random.Random(11)
    for _ in range(30):
        spec = random_germ(rng, rng.randint(1, 2))
        cone = germ.reeb_cone(spec)
        while True:
            xi = np.array([rng.uniform(-1, 1) for _ in range(spec.dim_x)])
            if cone.contains(xi):
                break
        w = va.weighted_vol(va.MonomialValuation(xi, spec))
        assert math.exp(germ.h_eval(spec, xi)) == pytest.approx(w, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.1, 4))
def test_a_wt_homogeneous_and_convex(x, y, s):
    spec = germ.hirzebruch_f1()
    a = germ.a_wt(spec, [x, y])
    assert germ.a_wt(spec, [s * x, s * y]) == pytest.approx(float(s * a), rel=1e-12)
    assert germ.a_wt(spec, [x + y, y + x]) <= germ.a_wt(spec, [x, y]) + germ.a_wt(spec, [y, x]) + Fraction(1, 10**12)


def test_properness_probe_a2():
    spec = germ.affine_space(2)
    vals = []
    for k in range(1, 25):
        eps = 2.0**-k
        vals.append(germ.h_eval(spec, [eps, 2 - eps]))
    assert all(b > a for a, b in zip(vals, vals[1:]))
