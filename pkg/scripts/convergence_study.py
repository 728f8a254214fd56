"""Scalar FEM eigenvalues against certified roots on a two-layer profile.

Prints the relative error per refinement level and the observed Richardson
order for each of the first k eigenvalues.
"""
import argparse

import numpy as np

from coaxwave.discrete_oracle import RadialGrid, richardson_order, scalar_spectrum
from coaxwave.dispersion import BcKind
from coaxwave.profile import FiberProfile
from coaxwave.rootfind import certified_roots


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--eps1", type=float, default=1.05)
    args = ap.parse_args()
    p = FiberProfile.two_layer(0.5, args.eps1, 1.0)
    levels = (40, 80, 160, 320)
    for bc in BcKind:
        ref = np.array([c.value for c in certified_roots(p, bc, args.m, args.k)]) ** 2
        vals = [scalar_spectrum(p, bc, args.m, RadialGrid.uniform(p, per, args.degree),
                                args.k, check=False).eigenvalues.real for per in levels]
        print(f"{bc.value}  m={args.m}  P{args.degree}")
        print("  n   nu^2 (root)      " + "".join(f"err h=1/{h:<5}" for h in levels) + "order")
        for i in range(args.k):
            errs = "".join(f"{abs(v[i] / ref[i] - 1):<12.2e}" for v in vals)
            order = richardson_order(vals[1][i], vals[2][i], vals[3][i])
            print(f"  {i + 1:<3} {ref[i]:<16.10f} {errs}{order:.3f}")


if __name__ == "__main__":
    main()
