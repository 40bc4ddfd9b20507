"""
filtration_geodesics.py
-----------------------
Finite-level filtrations on the sections of the projective line and
plane: jump tables, DH measures, a geodesic between a weight filtration
and a random flag, and the convexity of the log-Laplace witness along it.

Run with ``python3 demos/filtration_geodesics.py``.
"""
import random
from fractions import Fraction

from soliton import filtrations as fl, germ
from soliton.polyhedra import rank


def fmt(q):
    return str(q) if isinstance(q, Fraction) else f"{q:.6f}"


def main():
    # degree 2 piece of P^1: five monomials of weights -2..2
    level = fl.level_from_germ(germ.projective_line(), 2)
    print(f"P1, m=2: basis {[b[0] for b in level.basis]}")

    F0 = fl.filtration_from_wt(level, [1])
    print("wt_1 successive minima:", [(fmt(lam), k) for lam, k in F0.successive_minima()])
    print("DH atoms:", [(fmt(x), fmt(m)) for x, m in fl.dh_discrete(F0).atoms])

    # a generic flag; its subspaces are not spanned by monomials
    rng = random.Random(1)
    while True:
        rows = [[rng.randint(-2, 2) for _ in range(5)] for _ in range(5)]
        if rank(rows) == 5:
            break
    F1 = fl.FlagFiltration(level, rows, [0, 1, 1, 3, 4])
    print("\nflag jump table (lam, dim F^lam):", [(fmt(a), b) for a, b in F1.jump_table()])

    joint = fl.dh_bivariate(F0, F1)
    print("joint DH atoms:")
    for (x, y), m in joint.atoms:
        print(f"  ({fmt(x)}, {fmt(y)})  mass {fmt(m)}")
    assert joint.marginal(0) == fl.dh_discrete(F0)

    for t in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        holds, dev = fl.geodesic_dh_identity(F0, F1, t=t)
        Ft = fl.geodesic(F0, F1, t)
        print(f"t={t}: minima {[(fmt(a), b) for a, b in Ft.successive_minima()]}  pushforward identity {holds}")

    ts = [Fraction(k, 10) for k in range(11)]
    g = fl.convexity_witness(F0, 1, F1, 2, ts)
    second = [g[k - 1] - 2 * g[k] + g[k + 1] for k in range(1, 10)]
    print(f"\nwitness second differences: min {min(second):.3e}")

    # S_{m,mt} approaches its limit on P^2
    spec = germ.projective_plane()
    xi0, xi1, t = [1, 0], [0, 1], 2
    limit = fl.s_weighted_limit(spec, xi0, xi1, t)
    print(f"\nP2 weighted S, limit {limit:.6f}")
    for m in (4, 8, 16, 32):
        L = fl.level_from_germ(spec, m)
        s = fl.s_weighted_m(fl.filtration_from_wt(L, xi0), germ.a_wt(spec, xi0),
                            fl.filtration_from_wt(L, xi1), t_cut=t)
        print(f"  m={m:2d}  S={s:.6f}  ratio {s / limit:.4f}")


if __name__ == "__main__":
    main()
