"""Tabulate the fat-tailed Sibuya curves to CSV files.

Writes one file per curve into ``--outdir``: the bias-free generating
function (``fig1.csv``), even-time return probabilities (``fig2.csv``), the
mean position (``fig3.csv``) and the expected sojourn time at the origin as a
function of ``beta`` (``est.csv``).
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from adtrw.sibuya import EST_BETA_MAX, sibuya_figures


def write(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", type=Path, default=Path("out/sibuya"))
    ap.add_argument("--beta", type=float, nargs="+", default=[0.1, 0.5, 0.9])
    ap.add_argument("--t-max", type=int, default=2048)
    ap.add_argument("--est-points", type=int, default=50)
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)

    columns = {"1": "lambda", "2": "return_probability", "3": "expected_position"}
    for fig, name in columns.items():
        rows = sibuya_figures(args.beta, fig, t_max=args.t_max)
        write(args.outdir / f"fig{fig}.csv", ["beta", "t", name], rows)
        print(f"fig{fig}: {len(rows)} rows")

    grid = np.linspace(0.02, EST_BETA_MAX, args.est_points).tolist()
    rows = sibuya_figures(grid, "est")
    write(args.outdir / "est.csv", ["beta", "est_origin"], rows)
    print(f"est: {len(rows)} rows, beta in [{grid[0]:.2f}, {grid[-1]:.2f}]")


if __name__ == "__main__":
    main()
