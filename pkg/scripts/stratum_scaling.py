#!/usr/bin/env python3
"""Tabulate stratum counts over dyadic boxes and the fitted growth exponent.

For each rho the count of base points whose second-order locus has
dimension at least rho is expected to grow polynomially in the box size,
with exponent at most n - rho; the fitted slope makes that visible.
"""

import argparse

from linecount.counting import stratum_count
from linecount.fixtures import fermat_quintic


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ymax", type=int, default=32, help="largest box (dyadic sweep)")
    ap.add_argument("--rhos", type=int, nargs="+", default=[1, 2])
    args = ap.parse_args()

    form = fermat_quintic()
    for rho in args.rhos:
        report = stratum_count(form, args.ymax, rho)
        print(f"rho = {rho}: fitted exponent {report.fitted_exponent:.3f} "
              f"(bound n - rho = {form.nvars - rho})")
        for y_bound, count in report.dyadic_counts:
            print(f"    Y = {y_bound:>3}: {count}")


if __name__ == "__main__":
    main()
