"""Field momentum Pi_z of a charge beside a thin slab, quadrature vs thin-sheet closed form."""

import argparse
import math

import numpy as np

from dipole_phase import CONST, PointCharge, SlabFieldConfig, field_momentum


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-B", type=float, default=1.0, help="flux per unit length, Gauss cm")
    ap.add_argument("--y0", type=float, default=0.01, help="slab thickness, cm")
    ap.add_argument("--a", type=float, default=1.0, help="charge height above the slab, cm")
    ap.add_argument("--zmax", type=float, default=20.0, help="sweep Z over [-zmax, zmax] in units of a")
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--rel-tol", type=float, default=1e-6)
    args = ap.parse_args(argv)

    cfg = SlabFieldConfig.from_flux(args.n_B, args.y0)
    scale = CONST.e * cfg.n_B / (2 * CONST.c)
    print(f"{'Z/a':>8} {'Pi_z/scale':>12} {'sheet':>12} {'rel dev':>10} {'evals':>9}")
    for z in np.linspace(-args.zmax, args.zmax, args.points):
        Z = z * args.a
        fm = field_momentum(PointCharge(CONST.e, (0.0, args.a, Z)), cfg, rel_tol=args.rel_tol)
        sheet = (math.pi / 2 + math.atan(Z / args.a)) / math.pi
        got = fm.pi[2] / scale
        print(f"{z:8.2f} {got:12.6f} {sheet:12.6f} {abs(got - sheet) / sheet:10.2e} {fm.evaluations:9d}")


if __name__ == "__main__":
    main()
