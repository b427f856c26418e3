"""Second moment of tuned and broken realizations at beta_1/4 for one seed.

Writes both traces and an SVG of m2(t).
"""

import argparse
from pathlib import Path

from humplab.hunter import HuntConfig, hunt
from humplab.io import write_trace
from humplab.plot import plot_traces
from humplab.resonance import compare_spreading, spreading_config
from humplab.twomode import find_beta_quarter


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--periods", type=float, default=10.0)
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    pair = hunt(args.seed, HuntConfig(min_gap=0.003))
    beta = find_beta_quarter(pair).beta
    runs = compare_spreading(pair, spreading_config(pair, beta, args.periods))
    write_trace(runs.double, out / "double.csv")
    write_trace(runs.broken, out / "broken.csv")
    plot_traces([("double", runs.double.columns()), ("broken", runs.broken.columns())], ["m2"], out / "spreading.svg")
    print(f"beta_1/4={beta:.4g}  m2 double={runs.double.m2[-1]:.2f}  broken={runs.broken.m2[-1]:.2f}")


if __name__ == "__main__":
    main()
