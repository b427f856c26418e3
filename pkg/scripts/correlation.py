"""beta_c against R over a hunted pool, written as CSV and SVG scatter.

Usage: python3 scripts/correlation.py --count 25 --out-dir out/
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from humplab.errors import HuntFailure
from humplab.hunter import HuntConfig, hunt
from humplab.plot import Series, render_svg
from humplab.resonance import find_beta_c, r_parameter
from humplab.twomode import find_beta_quarter


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=25)
    ap.add_argument("--min-gap", type=float, default=0.003)
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows, seed = [], 0
    while len(rows) < args.count:
        try:
            pair = hunt(seed, HuntConfig(min_gap=args.min_gap))
        except HuntFailure:
            seed += 1
            continue
        r = r_parameter(pair)
        bc = find_beta_c(pair)
        bq = find_beta_quarter(pair)
        rows.append((seed, r.R, bc.beta, bq.beta))
        print(f"seed {seed}: R={r.R:.4g} beta_c={bc.beta:.4g} beta_1/4={bq.beta:.4g}", flush=True)
        seed += 1

    with open(out / "correlation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "R", "beta_c", "beta_quarter"])
        w.writerows(rows)
    finite = [(r, b) for _, r, b, _ in rows if math.isfinite(r) and r > 0]
    x, y = np.array(finite).T
    print(f"Spearman {spearmanr(x, y)[0]:.3f} over {len(finite)} entries")
    # unconnected markers are not supported; sort so the line reads as a trend
    order = np.argsort(x)
    svg = render_svg([Series("beta_c", x[order], y[order])], x_label="R", y_label="beta_c")
    (out / "correlation.svg").write_text(svg)


if __name__ == "__main__":
    main()
