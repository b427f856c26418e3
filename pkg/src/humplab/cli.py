"""Command-line front end: ``humplab hunt | evolve | analyze | plot``.

Exit codes: 0 success, 1 filesystem error, 2 bad arguments, 3 hunt
failure, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import ArgumentError, HuntFailure, NumericError
from .hunter import HuntConfig, break_realization, hunt
from .io import PoolEntry, PoolFile, dump_json, load_pool, read_trace, save_pool, write_trace
from .lattice import DEFAULT_SIZE
from .plot import plot_traces
from .propagator import PropagatorConfig, evolve
from .resonance import BETA_C_DT, analyze_pair

EXIT_OK, EXIT_IO, EXIT_ARGS, EXIT_HUNT, EXIT_NUMERIC = 0, 1, 2, 3, 4
REPORT_COLUMNS = (
    "index", "seed", "gap", "R", "R_divergent", "beta_quarter", "beta_quarter_flagged",
    "beta_c", "beta_c_below_grid", "usable", "m2_double_final", "m2_broken_final",
)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        n = flag
    elif os.environ.get("HUMPLAB_THREADS"):
        try:
            n = int(os.environ["HUMPLAB_THREADS"])
        except ValueError:
            raise ArgumentError(f"HUMPLAB_THREADS must be an integer, got {os.environ['HUMPLAB_THREADS']!r}")
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ArgumentError("thread count must be >= 1")
    return n


def _ordered_map(fn, items: Iterable, threads: int):
    """map() over a process pool, yielding results in input order."""
    if threads == 1:
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(max_workers=threads) as ex:
        yield from ex.map(fn, items)


# ---------------------------------------------------------------- hunt

def _hunt_one(job):
    seed, cfg, size = job
    try:
        return seed, hunt(seed, cfg, size), None
    except HuntFailure as exc:
        return seed, None, str(exc)


def cmd_hunt(args) -> int:
    cfg = HuntConfig(separation=args.separation, window=args.window, min_gap=args.min_gap)
    if args.count < 1:
        raise ArgumentError("--count must be >= 1")
    threads = resolve_threads(args.threads)
    entries: list[PoolEntry] = []
    failed = 0
    seed = args.seed
    stop = args.seed + args.max_seeds
    batch = max(threads, 1) * 2
    while len(entries) < args.count and seed < stop:
        jobs = [(s, cfg, args.size) for s in range(seed, min(seed + batch, stop))]
        seed = jobs[-1][0] + 1
        for s, pair, err in _ordered_map(_hunt_one, jobs, threads):
            if len(entries) >= args.count:
                break
            if pair is None:
                failed += 1
                _log(f"seed {s}: {err}")
            else:
                entries.append(PoolEntry.from_pair(pair))
                _log(f"seed {s}: pair with gap {pair.gap:.4g}")
    save_pool(PoolFile(entries), args.out)
    _log(f"{len(entries)} pair(s) from {len(entries) + failed} seed(s); wrote {args.out}")
    if len(entries) < args.count:
        _log(f"only {len(entries)} of {args.count} pairs found within {args.max_seeds} seeds")
        return EXIT_HUNT
    return EXIT_OK


# ---------------------------------------------------------------- evolve

def _entry(pool: PoolFile, index: int) -> PoolEntry:
    if not 0 <= index < len(pool.entries):
        raise ArgumentError(f"--index {index} out of range for a pool of {len(pool.entries)}")
    return pool.entries[index]


def cmd_evolve(args) -> int:
    entry = _entry(load_pool(args.pool), args.index)
    pair = entry.pair()
    beta = args.beta
    if beta is None:
        beta = entry.beta_quarter if entry.beta_quarter is not None else 0.0
    t_max = args.tmax if args.tmax is not None else 10.0 * pair.rabi_period
    stride = args.stride if args.stride is not None else max(1, int(pair.rabi_period / (200 * args.dt)))
    cfg = PropagatorConfig(dt=args.dt, t_max=t_max, sample_stride=stride, beta=beta)
    system = break_realization(pair) if args.broken else pair
    trace = evolve(pair.y_O.astype(complex), system, cfg, reference=pair)
    write_trace(trace, args.trace)
    _log(f"beta={beta:.6g} t_max={t_max:.6g} final m2={trace.m2[-1]:.6g}; wrote {args.trace}")
    return EXIT_OK


# ---------------------------------------------------------------- analyze

def _analyze_one(job):
    index, entry, periods, dt, beta_c_dt = job
    report, _ = analyze_pair(entry.pair(), str(entry.seed), periods, dt, beta_c_dt=beta_c_dt)
    return index, report


def _corr(x: list, y: list) -> dict:
    from scipy.stats import pearsonr, spearmanr

    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return {"n": len(x), "spearman": None, "pearson": None}
    return {"n": len(x), "spearman": float(spearmanr(x, y)[0]), "pearson": float(pearsonr(x, y)[0])}


def cmd_analyze(args) -> int:
    pool = load_pool(args.pool)
    if not pool.entries:
        raise ArgumentError("pool is empty")
    threads = resolve_threads(args.threads)
    jobs = [(i, e, args.spreading_periods, args.dt, args.beta_c_dt) for i, e in enumerate(pool.entries)]
    rows = []
    for i, rep in _ordered_map(_analyze_one, jobs, threads):
        e = pool.entries[i]
        e.beta_quarter, e.beta_c = rep.beta_quarter, rep.beta_c
        e.R = rep.R if math.isfinite(rep.R) and not rep.R_divergent else None
        rows.append(
            {
                "index": i, "seed": e.seed, "gap": rep.gap, "R": rep.R, "R_divergent": rep.R_divergent,
                "beta_quarter": rep.beta_quarter, "beta_quarter_flagged": rep.beta_quarter_flagged,
                "beta_c": rep.beta_c, "beta_c_below_grid": rep.beta_c_below_grid, "usable": rep.usable,
                "m2_double_final": rep.m2_double_final, "m2_broken_final": rep.m2_broken_final,
            }
        )
        _log(f"entry {i} (seed {e.seed}): R={rep.R:.4g} beta_1/4={rep.beta_quarter:.4g} beta_c={rep.beta_c:.4g}")

    finite = [r for r in rows if not r["R_divergent"] and math.isfinite(r["R"])]
    usable = [r["usable"] for r in rows]
    summary = {
        "entries": len(rows),
        "excluded_R": [r["index"] for r in rows if r not in finite],
        "correlation_beta_c_R": _corr([r["R"] for r in finite], [r["beta_c"] for r in finite]),
        "usable_fraction": float(np.mean(usable)),
        "unusable": [r["index"] for r in rows if not r["usable"]],
        "spreading_comparison_enabled": bool(np.mean(usable) >= 0.5),
    }
    spread = [r for r in rows if r["m2_double_final"] is not None]
    if spread and summary["spreading_comparison_enabled"]:
        faster = [r["m2_double_final"] > r["m2_broken_final"] for r in spread]
        summary["double_faster_fraction"] = float(np.mean(faster))
    else:
        summary["double_faster_fraction"] = None

    out = Path(args.out_report)
    csv_path, json_path = out.with_suffix(".csv"), out.with_suffix(".json")
    with csv_path.open("w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_csv_cell(r[c]) for c in REPORT_COLUMNS) + "\n")
    json_rows = [{k: (_json_safe(v)) for k, v in r.items()} for r in rows]
    json_path.write_text(dump_json({"summary": summary, "rows": json_rows}) + "\n")
    if args.fill_pool:
        save_pool(pool, args.fill_pool)
    c = summary["correlation_beta_c_R"]
    _log(f"spearman={c['spearman']} pearson={c['pearson']} usable={summary['usable_fraction']:.2f}")
    return EXIT_OK


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


# ---------------------------------------------------------------- plot

def cmd_plot(args) -> int:
    traces = []
    for spec in args.trace:
        label, _, path = spec.rpartition("=")
        label = label or Path(path).stem
        traces.append((label, read_trace(path)))
    columns = [c for c in args.columns.split(",") if c]
    plot_traces(traces, columns, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="humplab", description="Double-humped states in the disordered DNLS.")
    p.add_argument("--threads", type=int, default=None, help="worker processes (env HUMPLAB_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    h = sub.add_parser("hunt", help="collect a pool of tuned realizations")
    h.add_argument("--seed", type=int, default=0, help="first seed")
    h.add_argument("--count", type=int, default=25)
    h.add_argument("--size", type=int, default=DEFAULT_SIZE)
    h.add_argument("--separation", type=int, default=25)
    h.add_argument("--window", type=int, default=3)
    h.add_argument("--min-gap", type=float, default=0.0)
    h.add_argument("--max-seeds", type=int, default=1000)
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_hunt)

    e = sub.add_parser("evolve", help="propagate y_O on one pool entry")
    e.add_argument("--pool", required=True)
    e.add_argument("--index", type=int, default=0)
    e.add_argument("--beta", type=float, default=None, help="default: entry's beta_quarter, else 0")
    e.add_argument("--dt", type=float, default=0.02)
    e.add_argument("--tmax", type=float, default=None, help="default: 10 Rabi periods")
    e.add_argument("--stride", type=int, default=None, help="default: ~200 samples per Rabi period")
    e.add_argument("--broken", action="store_true", help="use the realization with eps_P = 0")
    e.add_argument("--trace", required=True)
    e.set_defaults(func=cmd_evolve)

    a = sub.add_parser("analyze", help="beta_1/4, beta_c and R for every pool entry")
    a.add_argument("--pool", required=True)
    a.add_argument("--out-report", required=True, help="path stem; .csv and .json are written")
    a.add_argument("--spreading-periods", type=float, default=10.0, help="0 skips the m2 comparison")
    a.add_argument("--dt", type=float, default=0.02, help="time step of the m2 runs")
    a.add_argument("--beta-c-dt", type=float, default=BETA_C_DT, help="lattice step of the beta_c comparison")
    a.add_argument("--fill-pool", default=None, help="write the pool with the computed values here")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("plot", help="SVG line plot of trace columns")
    g.add_argument("--trace", action="append", required=True, help="PATH or LABEL=PATH; repeatable")
    g.add_argument("--columns", default="m2")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_plot)
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ArgumentError as exc:
        _log(f"error: {exc}")
        return EXIT_ARGS
    except HuntFailure as exc:
        _log(f"hunt failed: {exc}")
        return EXIT_HUNT
    except NumericError as exc:
        _log(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _log(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
