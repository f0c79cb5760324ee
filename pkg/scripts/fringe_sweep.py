"""Interferometer readout p_210 as the flux per length is swept."""

import argparse

import numpy as np

from dipole_phase import phi_g_sheet
from dipole_phase.interferometer import fringe


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-B-max", type=float, default=26.0, help="Gauss cm")
    ap.add_argument("--points", type=int, default=27)
    ap.add_argument("--csv", help="write the sweep to this file")
    args = ap.parse_args(argv)

    n_B = np.linspace(0.0, args.n_B_max, args.points)
    phis = np.array([phi_g_sheet(n) for n in n_B])
    fr = fringe(phis)
    rows = np.column_stack([n_B, phis, fr["p_200"], fr["p_210"]])
    if args.csv:
        np.savetxt(args.csv, rows, delimiter=",", header="n_B,phi_g,p_200,p_210", comments="")
    for n, phi, p0, p1 in rows:
        bar = "#" * int(round(40 * p1))
        print(f"{n:7.2f} {phi:8.4f} {p1:8.5f} {bar}")


if __name__ == "__main__":
    main()
