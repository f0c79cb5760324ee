"""How close the endpoint phase comes to phi_g as the path grows from -L to +L."""

import argparse

import numpy as np

from dipole_phase import CONST, PointCharge, SlabFieldConfig, geometric_phase_endpoint, phi_g_sheet
from dipole_phase.phase import hydrogen_dipole


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-B", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--thin-sheet", action="store_true", help="use the zero-thickness closed form")
    ap.add_argument("--extents", type=float, nargs="+", default=[2, 5, 20, 100, 2000], help="L in units of a")
    args = ap.parse_args(argv)

    cfg = SlabFieldConfig.from_flux(args.n_B, args.a / 100, thin_sheet=args.thin_sheet)
    ch = PointCharge(CONST.e, (0.0, args.a, 0.0))
    d = hydrogen_dipole()
    ref = phi_g_sheet(cfg.n_B)
    print(f"phi_g = {ref:.6f} rad")
    print(f"{'L/a':>8} {'phi':>12} {'phi/phi_g':>10} {'err':>10}")
    for L in args.extents:
        z = L * args.a
        res = geometric_phase_endpoint(ch, d, cfg, (0, args.a, -z), (0, args.a, z))
        print(f"{L:8g} {res.phi:12.6f} {res.phi / ref:10.6f} {res.error_estimate:10.1e}")
    # the arctan closed form gives phi/phi_g = (2/pi) arctan(L) for the sheet
    print("sheet oracle at the same L:", " ".join(f"{2 / np.pi * np.arctan(L):.6f}" for L in args.extents))


if __name__ == "__main__":
    main()
