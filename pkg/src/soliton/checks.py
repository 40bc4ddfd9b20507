"""Property suites shared by ``soliton verify`` and the test-suite.

Each suite returns a list of :class:`Check` records with the worst observed
slack (positive means the property holds with room to spare).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expkernel, filtrations as fl, germ, valuations as va
from .errors import SpecInvalid
from .polyhedra import Halfspace, dual_description


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst_slack: float
    samples: int

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "worst_slack": float(self.worst_slack),
                "samples": int(self.samples)}


FIXTURES = {
    "P1": germ.projective_line,
    "P2": germ.projective_plane,
    "F1": germ.hirzebruch_f1,
    "A1": lambda: germ.affine_space(1),
    "A2": lambda: germ.affine_space(2),
    "A3": lambda: germ.affine_space(3),
}


# -- random instances ---------------------------------------------------------------

def random_polytope(rng: random.Random, n: int, bounded: bool = True):
    """Full-dimensional rational polyhedron in dimension ``n`` with small data."""
    while True:
        hs = []
        k = rng.randint(n + 1, n + 4)
        for _ in range(k):
            nrm = tuple(rng.randint(-2, 2) for _ in range(n))
            if not any(nrm):
                continue
            hs.append(Halfspace(nrm, Fraction(rng.randint(1, 6), rng.randint(1, 2))))
        if not bounded:
            hs = [Halfspace(tuple(int(i == j) for i in range(n)), Fraction(rng.randint(0, 3))) for j in range(n)]
            hs += [Halfspace(tuple(rng.randint(1, 2) for _ in range(n)), Fraction(rng.randint(1, 4)))]
        try:
            P = dual_description(hs)
        except Exception:
            continue
        if P.dim == n and P.is_bounded == bounded:
            return P


def random_reeb(rng: random.Random, P, n: int) -> np.ndarray:
    while True:
        xi = np.array([rng.uniform(-1.5, 1.5) for _ in range(n)])
        if P.is_bounded or all(float(np.dot([float(c) for c in r], xi)) > 0.2 for r in P.rays):
            return xi


def random_germ(rng: random.Random, n: int) -> germ.GermSpec:
    """Random toric germ with log discrepancies in ``(0, 1]``."""
    pool = [p for p in np.ndindex(*(5,) * n)]
    while True:
        facets = []
        for _ in range(rng.randint(n + 1, n + 3)):
            nrm = tuple(int(c) - 2 for c in rng.choice(pool))
            if not any(nrm) or math.gcd(*nrm) != 1:
                continue
            facets.append((nrm, Fraction(rng.choice([1, 1, 1, 2, 3]), rng.choice([1, 2, 3]))))
        facets = [(f, a if a <= 1 else Fraction(1)) for f, a in facets]
        if len({f for f, _ in facets}) != len(facets):
            continue
        try:
            spec = germ.GermSpec(tuple(facets), label="random")
        except SpecInvalid:
            continue
        return spec


def random_normalized_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    xi = rng.uniform(0.05, 3.0, size=n)
    return xi * (n / xi.sum())


# -- suites -----------------------------------------------------------------------------

def suite_gradients(quick: bool = False, seed: int = 0) -> list[Check]:
    """Moments of the kernel against central finite differences."""
    rng = random.Random(seed)
    count = 10 if quick else 50
    worst_g = worst_h = 0.0
    for _ in range(count):
        n = rng.randint(1, 3)
        P = random_polytope(rng, n, bounded=rng.random() < 0.6)
        xi = random_reeb(rng, P, n)
        I, M1, M2 = expkernel.moments(P, xi)
        h = 1e-5
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            fd_g = (expkernel.exp_integral(P, xi + e).value - expkernel.exp_integral(P, xi - e).value) / (2 * h)
            worst_g = max(worst_g, abs(fd_g + M1[k]) / max(abs(M1[k]), I))
            _, Mp, _ = expkernel.moments(P, xi + e, second=False)
            _, Mm, _ = expkernel.moments(P, xi - e, second=False)
            fd_h = -(Mp - Mm) / (2 * h)
            scale = max(np.abs(M2[k]).max(), I)
            worst_h = max(worst_h, float(np.abs(fd_h - M2[k]).max()) / scale)
    return [
        Check("gradient_vs_central_difference", worst_g <= 1e-6, 1e-6 - worst_g, count),
        Check("hessian_vs_central_difference", worst_h <= 1e-4, 1e-4 - worst_h, count),
    ]


def suite_oracle(quick: bool = False, seed: int = 0) -> list[Check]:
    """Closed-form integrals against the Monte-Carlo oracle (3 sigma)."""
    rng = random.Random(seed)
    count = 5 if quick else 20
    worst = math.inf
    for i in range(count):
        n = rng.randint(1, 3)
        P = random_polytope(rng, n, bounded=rng.random() < 0.6)
        xi = random_reeb(rng, P, n)
        exact = expkernel.exp_integral(P, xi).value
        est, se = expkernel.mc_oracle(P, xi, samples=20_000 if quick else 1_000_000, seed=seed + i)
        worst = min(worst, 3 * se - abs(est - exact))
    return [Check("exp_integral_vs_monte_carlo_3sigma", worst >= 0, worst, count)]


def _random_flag(rng: random.Random, level) -> fl.FlagFiltration:
    d = len(level)
    while True:
        rows = [[rng.randint(-2, 2) for _ in range(d)] for _ in range(d)]
        try:
            return fl.FlagFiltration(level, rows, [rng.randint(0, 4) for _ in range(d)])
        except Exception:
            continue


def suite_convexity(quick: bool = False, seed: int = 0) -> list[Check]:
    rng = random.Random(seed)
    pairs = 20 if quick else 100
    ts = [Fraction(k, 20) for k in range(21)]
    worst_conv = math.inf
    worst_dev = Fraction(0)
    worst_h = math.inf
    levels = [
        fl.level_from_germ(germ.projective_line(), 2),
        fl.level_from_germ(germ.projective_plane(), 1),
        fl.level_from_germ(germ.hirzebruch_f1(), 1),
        fl.level_from_germ(germ.affine_space(2), 2, cutoff=2, xi_ref=(1, 1)),
    ]
    for _ in range(pairs):
        level = rng.choice(levels)
        n = level.dim_x
        spec = level.spec
        xi0 = [Fraction(rng.randint(0, 3)) for _ in range(n)] if not spec.polyhedron.is_bounded else \
            [Fraction(rng.randint(-2, 2)) for _ in range(n)]
        F0 = fl.filtration_from_wt(level, xi0)
        mu0 = germ.a_wt(spec, xi0)
        if rng.random() < 0.5 or not spec.polyhedron.is_bounded:
            xi1 = [Fraction(rng.randint(0, 3)) for _ in range(n)] if not spec.polyhedron.is_bounded else \
                [Fraction(rng.randint(-2, 2)) for _ in range(n)]
            F1 = fl.filtration_from_wt(level, xi1)
            mu1 = germ.a_wt(spec, xi1)
        else:
            F1 = _random_flag(rng, level)
            mu1 = Fraction(rng.randint(0, 3))
        g = fl.convexity_witness(F0, mu0, F1, mu1, ts)
        for k in range(1, 20):
            worst_conv = min(worst_conv, g[k - 1] - 2 * g[k] + g[k + 1])
        t = rng.choice(ts)
        _, dev = fl.geodesic_dh_identity(F0, F1, t=t)
        worst_dev = max(worst_dev, dev)
        if isinstance(F1, fl.MonomialFiltration):
            # monomial case: mu(F_t) = A(wt_{(1-t) xi0 + t xi1}) <= (1-t) mu0 + t mu1
            for k, t in enumerate(ts):
                xit = [(1 - t) * a + t * b for a, b in zip(xi0, xi1)]
                mut = germ.a_wt(spec, xit)
                if mut <= (1 - t) * mu0 + t * mu1:
                    Ht = fl.h_m(fl.geodesic(F0, F1, t), mut)
                    worst_h = min(worst_h, g[k] - Ht)
    return [
        Check("geodesic_witness_second_difference", worst_conv >= -1e-10, worst_conv, pairs),
        Check("geodesic_dh_pushforward_deviation", worst_dev == 0, -float(worst_dev), pairs),
        Check("h_m_below_witness", worst_h >= -1e-10, worst_h, pairs),
    ]


def suite_monotonicity(quick: bool = False, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    count = 8 if quick else 30
    grid = np.geomspace(0.05, 6.0, 25 if quick else 100)
    worst_mono = worst_bm = worst_lmin = math.inf
    for _ in range(count):
        n = int(rng.integers(1, 4))
        xi = [Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 5))) for _ in range(n)]
        v = va.MonomialValuation(xi)
        ratios = [float(va.vol_fn_limit(v, Fraction(t), exact=True) / Fraction(t) ** n) for t in grid]
        worst_mono = min(worst_mono, min(a - b for a, b in zip(ratios, ratios[1:])))
        if n >= 2:
            d = [float(va.vol_fn_derivative(v, Fraction(t))) ** (1 / (n - 1)) for t in grid]
            # concavity on a non-uniform grid: slopes non-increasing
            slopes = [(d[k + 1] - d[k]) / (grid[k + 1] - grid[k]) for k in range(len(grid) - 1)]
            worst_bm = min(worst_bm, min(a - b for a, b in zip(slopes, slopes[1:])))
        worst_lmin = min(worst_lmin, va.vol_fn_limit(v, Fraction(1, 1000)))
    return [
        Check("vol_over_t_n_nonincreasing", worst_mono >= -1e-12, worst_mono, count),
        Check("brunn_minkowski_concavity", worst_bm >= -1e-10, worst_bm, count),
        Check("lambda_min_zero", worst_lmin > 0, worst_lmin, count),
    ]


def suite_bounds(quick: bool = False, seed: int = 0) -> list[Check]:
    """``W(X) = exp(min H) <= n! e^n`` over germs; ``A <= n`` after normalization."""
    rng = random.Random(seed)
    specs = [f() for f in FIXTURES.values()]
    specs += [random_germ(rng, rng.randint(1, 2)) for _ in range(3 if quick else 10)]
    worst_ratio = 0.0
    for spec in specs:
        n = spec.dim_x
        cert = germ.minimize_h(spec)
        worst_ratio = max(worst_ratio, math.exp(cert.h_value) / (math.factorial(n) * math.e**n))
    nrng = np.random.default_rng(seed)
    worst_a = -math.inf
    for _ in range(20 if quick else 200):
        n = int(nrng.integers(1, 5))
        xi = nrng.uniform(0.05, 3.0, size=n)
        _, w = va.normalize_scaling(va.MonomialValuation(xi))
        worst_a = max(worst_a, w.a_value - n)
    return [
        Check("germ_weighted_volume_over_n_factorial_e_n", worst_ratio <= 1 + 1e-9, 1 + 1e-9 - worst_ratio, len(specs)),
        Check("normalized_log_discrepancy_at_most_n", worst_a <= 1e-9, 1e-9 - worst_a, 20 if quick else 200),
    ]


SUITES = {
    "convexity": suite_convexity,
    "monotonicity": suite_monotonicity,
    "bounds": suite_bounds,
    "gradients": suite_gradients,
    "oracle": suite_oracle,
}
