"""Fraction of seeds for which the hunt produces a double-humped pair."""

import argparse
import time

from humplab.errors import HuntFailure
from humplab.hunter import HuntConfig, hunt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--min-gap", type=float, default=0.0)
    args = ap.parse_args()
    cfg = HuntConfig(min_gap=args.min_gap)
    start, gaps = time.time(), []
    for seed in range(args.seeds):
        try:
            gaps.append(hunt(seed, cfg).gap)
        except HuntFailure:
            pass
    print(f"{len(gaps)}/{args.seeds} seeds succeeded in {time.time() - start:.0f} s")
    if gaps:
        print(f"gap range {min(gaps):.3g} .. {max(gaps):.3g}")


if __name__ == "__main__":
    main()
