"""
soliton_candidates.py
---------------------
Minimize the H-functional on a few toric germs and look at what the
minimizer certifies: vanishing Futaki derivatives, delta = 1 and a
nonnegative Ding pairing in every direction.

Run with ``python3 demos/soliton_candidates.py``.
"""
import math

import numpy as np

from soliton import germ


def show(spec):
    cert = germ.minimize_h(spec)
    xi0 = cert.xi0
    print(f"\n{spec.label}: {len(spec.polyhedron.vertices)} vertices, {len(spec.polyhedron.rays)} rays")
    print(f"  xi0          = {np.array2string(xi0, precision=12)}")
    print(f"  H(xi0)       = {cert.h_value:.15f}   (W = {math.exp(cert.h_value):.10f})")
    print(f"  |grad H|     = {cert.gradient_norm:.2e} after {cert.newton_iters} Newton steps")
    print(f"  min eig Hess = {cert.hessian_min_eig:.4f}")
    futs = [germ.futaki(spec, xi0, e) for e in np.eye(spec.dim_x)]
    print(f"  Futaki on e_i: {', '.join(f'{f:+.1e}' for f in futs)}")
    if spec.polyhedron.is_bounded:
        print(f"  delta        = {germ.delta_toric(spec, xi0).value:.10f}")
    return cert


def main():
    for spec in (germ.projective_line(), germ.projective_plane(), germ.hirzebruch_f1(), germ.affine_space(3)):
        show(spec)

    # F1 is not symmetric, so its soliton vector is off the origin
    f1 = germ.hirzebruch_f1()
    xi0 = germ.minimize_h(f1).xi0
    rng = np.random.default_rng(0)
    ding = [germ.ding_invariant(f1, xi0, rng.normal(size=2)) for _ in range(200)]
    print(f"\nF1 Ding pairing over 200 random directions: min {min(ding):+.2e}")

    # moving off the soliton breaks delta = 1
    off = xi0 + np.array([0.3, -0.2])
    print(f"delta at xi0 + (0.3, -0.2): {germ.delta_toric(f1, off).value:.6f}"
          f"  (gauge formula {germ.delta_gauge(f1, off):.6f})")

    # H along a line through xi0 is strictly convex
    ts = np.linspace(-1.5, 1.5, 7)
    print("\nH(xi0 + t e2) on F1:")
    for t in ts:
        print(f"  t={t:+.2f}  H={germ.h_eval(f1, xi0 + t * np.array([0.0, 1.0])):.8f}")


if __name__ == "__main__":
    main()
