"""Independent reference computations used to produce frozen test values.

Nothing here touches the triangulation or divided-difference code paths.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate


def f1_moments(xi):
    """Zeroth, first and second moments of ``e^{-<alpha, xi>}`` over the F1
    polygon ``{-1 <= y <= 1, -1 <= x <= y + 1}`` by adaptive quadrature in
    ``y`` with the ``x``-integrals done in closed form."""
    a, b = float(xi[0]), float(xi[1])

    def x_moments(y):
        # int_{-1}^{y+1} x^k e^{-a x} dx for k = 0, 1, 2
        lo, hi = -1.0, y + 1.0
        if abs(a) < 1e-12:
            return hi - lo, (hi**2 - lo**2) / 2, (hi**3 - lo**3) / 3
        def prim(x):
            e = math.exp(-a * x)
            return (-e / a,
                    -e * (x / a + 1 / a**2),
                    -e * (x * x / a + 2 * x / a**2 + 2 / a**3))
        p_hi, p_lo = prim(hi), prim(lo)
        return tuple(h - l for h, l in zip(p_hi, p_lo))

    def q(fn):
        return integrate.quad(fn, -1.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)[0]

    w = lambda y: math.exp(-b * y)  # noqa: E731
    I = q(lambda y: w(y) * x_moments(y)[0])
    mx = q(lambda y: w(y) * x_moments(y)[1])
    my = q(lambda y: w(y) * y * x_moments(y)[0])
    mxx = q(lambda y: w(y) * x_moments(y)[2])
    mxy = q(lambda y: w(y) * y * x_moments(y)[1])
    myy = q(lambda y: w(y) * y * y * x_moments(y)[0])
    return I, np.array([mx, my]), np.array([[mxx, mxy], [mxy, myy]])


def f1_soliton(tol=1e-13):
    """Newton iteration on the quadrature moments."""
    xi = np.zeros(2)
    for _ in range(50):
        I, M1, M2 = f1_moments(xi)
        g = -M1 / I
        H = M2 / I - np.outer(M1, M1) / I**2
        if np.linalg.norm(g) < tol:
            break
        xi = xi - np.linalg.solve(H, g)
    return xi, math.log(2 * f1_moments(xi)[0])


def exp_dd_contour(nodes, dps=40):
    """``exp[x_0..x_k]`` as ``(1/2 pi i) oint e^z / prod(z - x_j) dz``."""
    with mpmath.workdps(dps):
        xs = [mpmath.mpf(x) for x in nodes]
        c = sum(xs) / len(xs)
        r = max(abs(x - c) for x in xs) + 1

        def f(theta):
            z = c + r * mpmath.exp(1j * theta)
            den = mpmath.mpf(1)
            for x in xs:
                den *= z - x
            return mpmath.exp(z) / den * r * mpmath.exp(1j * theta)

        return float(mpmath.re(mpmath.quad(f, [0, mpmath.pi / 2, mpmath.pi, 3 * mpmath.pi / 2, 2 * mpmath.pi]) / (2 * mpmath.pi)))
