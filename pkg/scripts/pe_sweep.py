#!/usr/bin/env python3
"""Sweep the admissible (a, b) region and tabulate error probabilities.

Writes the standard CSV (a,b,pe_analytic,pe_exact,pe_mc,mc_stderr) over a
rectangular grid restricted to the reduced-basis domain, optionally with a
Monte Carlo column for spot validation.  Feed the CSV to any plotting tool
to reproduce the level-curve figure.
"""

import argparse
import sys

import numpy as np

from latcomm import ReducedBasis2D, analytic_pe, exact_pe_area, monte_carlo_pe
from latcomm.error_analysis import PE_CSV_HEADER, pe_csv_line


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a-grid", type=int, default=40)
    ap.add_argument("--b-grid", type=int, default=40)
    ap.add_argument("--b-max", type=float, default=2.5)
    ap.add_argument("--samples", type=int, default=0,
                    help="Monte Carlo samples per grid point (0 = skip)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    lines = [PE_CSV_HEADER]
    for a in np.linspace(0.0, 0.5, args.a_grid):
        for b in np.linspace(0.85, args.b_max, args.b_grid):
            try:
                rb = ReducedBasis2D(float(a), float(b))
            except ValueError:
                continue
            V = rb.matrix()
            pe_mc = mc_stderr = None
            if args.samples > 0:
                est = monte_carlo_pe(V, args.samples, seed=args.seed)
                pe_mc, mc_stderr = est.estimate, est.std_error
            lines.append(pe_csv_line(rb.a, rb.b, analytic_pe(rb.a, rb.b),
                                     exact_pe_area(V), pe_mc, mc_stderr))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
