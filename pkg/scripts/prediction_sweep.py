#!/usr/bin/env python3
"""Sweep the box size and compare predicted vs brute-force fiber counts.

The quadric in five variables is cheap enough to brute force well past
X = 20, so it makes a good end-to-end check that the density pipeline
lands in the right ballpark and tightens as X grows.
"""

import argparse
import time

from linecount.counting import count_fixed_y
from linecount.density import predict_fixed_y
from linecount.fixtures import diagonal_quadric


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--xmax", type=int, default=24, help="largest box size")
    ap.add_argument("--step", type=int, default=4)
    ap.add_argument("--window", type=int, default=16,
                    help="modulus / frequency cutoff")
    ap.add_argument("--samples", type=int, default=1 << 18)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    form = diagonal_quadric(5)
    y = (1, 0, 0, 0, 0)
    print(f"# quadric n=5, y={y}, W={args.window}, "
          f"samples={args.samples}, seed={args.seed}")
    print(f"{'X':>4} {'brute':>10} {'predicted':>12} {'ratio':>7} {'sec':>6}")
    for x_bound in range(args.step, args.xmax + 1, args.step):
        t0 = time.monotonic()
        brute = count_fixed_y(form, y, x_bound)
        predicted = float(predict_fixed_y(form, y, x_bound, args.window,
                                          args.samples,
                                          seed=args.seed).main_term)
        print(f"{x_bound:>4} {brute:>10} {predicted:>12.1f} "
              f"{predicted / brute:>7.3f} {time.monotonic() - t0:>6.1f}")


if __name__ == "__main__":
    main()
