"""
local_valuations.py
-------------------
Monomial valuations on the affine germ: volume functions, weighted
volumes, scaling normalization and log canonical slopes.

Run with ``python3 demos/local_valuations.py``.
"""
import math
from fractions import Fraction

import numpy as np

from soliton import valuations as va


def main():
    v = va.MonomialValuation((1, 2))
    print("xi = (1, 2) on A^2")
    for t in (Fraction(1, 2), 1, 2, 4):
        print(f"  vol(t={t}) = {va.vol_fn_limit(v, t, exact=True)}"
              f"   discrete m=16: {va.vol_fn_discrete(v, t, 16)}")

    a, w = va.normalize_scaling(v)
    print(f"\nnormalized by a* = {float(a):.12f}: weights {np.round(w.xi, 12)}, A = {w.a_value:.12f}")
    bound = 2 * math.e**2
    print(f"W(v)  = {va.weighted_vol(w):.10f}")
    print(f"2! e^2 = {bound:.10f}  (W is smallest at xi = (1, 1))")

    mu = va.lc_slope_monomial(v)
    print(f"\nlog canonical slope: {mu.value:.8f}  (A = {v.a_value})")
    for m, val in mu.per_m.items():
        print(f"  m={m:3d}  slope {val:.8f}")

    ideal = va.base_ideal(va.MonomialValuation((2, 3)), 1, 6)
    print(f"\nbase ideal generators for xi=(2,3), m=1, t=6: {ideal.generators}")
    print(f"lct = {va.lct_monomial(ideal)}")

    print("\nminimizers of h_local over normalized weights on A^3:")
    for p in va.normalized_h_local_argmin(3, starts=5, seed=1):
        print("  ", np.round(p, 8))


if __name__ == "__main__":
    main()
