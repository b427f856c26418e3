"""Band-center localization length from eigenstate envelopes."""

import argparse

from humplab.lattice import DEFAULT_SIZE, draw_realization, estimate_localization_length


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--size", type=int, default=DEFAULT_SIZE)
    ap.add_argument("--window", type=float, default=0.5, help="half-width of the energy window around 0")
    args = ap.parse_args()
    sample = [draw_realization(args.size, seed, 52, 77) for seed in range(args.realizations)]
    xi = estimate_localization_length(sample, (-args.window, args.window))
    print(f"xi = {xi:.3f} ({args.realizations} realizations, |E| <= {args.window})")


if __name__ == "__main__":
    main()
