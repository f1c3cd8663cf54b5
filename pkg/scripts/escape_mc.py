"""Monte Carlo first-return frequency of the Bernoulli walk against ``1 - |p - q|``.

Each walk stops at its first return to the origin, so the cost per sample is
short for strongly biased walks.
"""

import argparse
import time

from adtrw.dtrp_core import geometric
from adtrw.mc import mc_sample
from adtrw.walk import Direction, JumpDensity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.55, 0.6, 0.7, 0.8, 0.9])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--t-max", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    up, down = JumpDensity.unit(Direction.POSITIVE), JumpDensity.unit(Direction.NEGATIVE)
    print("p,exact,mc,never_returned,seconds")
    for p in args.p:
        start = time.perf_counter()
        ens = mc_sample(geometric(p, args.t_max), up, down, args.t_max, args.samples, seed=args.seed, stop_at_return=True)
        elapsed = time.perf_counter() - start
        exact = 1.0 - abs(2 * p - 1)
        print(f"{p},{exact:.6f},{ens.first_return_frequency():.6f},{ens.never_returned},{elapsed:.2f}")


if __name__ == "__main__":
    main()
