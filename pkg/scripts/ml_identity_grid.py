"""Compare the time-changed state polynomial with its Mittag-Leffler closed form.

For Bernoulli trials the series over clock states collapses to
``E_mu(-xi0 t^mu (1 - q b - p a))``; this prints the worst absolute gap over a
grid of ``(p, mu, t, a, b)``.
"""

import argparse
import itertools

import numpy as np

from adtrw.actrw import MLParams, pi_geometric_closed, pi_series
from adtrw.dtrp_core import geometric


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.2, 0.5, 0.8])
    ap.add_argument("--mu", type=float, nargs="+", default=[0.5, 0.7, 0.9, 1.0])
    ap.add_argument("--t", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    ap.add_argument("--pairs", type=int, default=20, help="random (a, b) points in [-1, 1]^2")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=int, default=256)
    args = ap.parse_args(argv)

    ab = np.random.default_rng(args.seed).uniform(-1, 1, size=(args.pairs, 2))
    print("p,mu,max_abs_gap")
    worst = 0.0
    for p, mu in itertools.product(args.p, args.mu):
        d, clock = geometric(p, args.horizon), MLParams(mu)
        gap = max(
            abs(pi_series(d, clock, a, b, t) - pi_geometric_closed(p, clock, a, b, t))
            for t in args.t
            for a, b in ab
        )
        worst = max(worst, gap)
        print(f"{p},{mu},{gap:.3e}")
    print(f"# worst gap {worst:.3e}")


if __name__ == "__main__":
    main()
