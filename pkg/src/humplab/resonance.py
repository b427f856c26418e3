"""Diagnostics comparing the lattice NLSE with the two-mode reduction.

* ``rabi_transfer``: linear population transfer sin^2(dE t / 2).
* ``r_parameter``: resonance parameter R, the inverse of
  sum_i |V_i / (E_O - E_i)| over off-pair eigenstates, V_i = sum_n y_O^3 v_i.
* ``find_beta_c``: largest beta at which the two-mode imbalance tracks the
  lattice one with mean-square error below a threshold over one period.
* ``compare_spreading``: second moment of the tuned and broken runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ArgumentError, PeriodNotFound
from .hunter import DoubleHumpPair, break_realization
from .lattice import SpectralDecomposition, apply_hamiltonian, diagonalize
from .propagator import PropagatorConfig, TimeTrace, evolve
from .twomode import (
    PACKET_AT_O,
    STEPS_PER_RABI,
    compute_coefficients,
    find_beta_quarter,
    integrate_bloch,
    two_mode_metrics,
)

MSE_THRESHOLD = 1e-3
# Lattice step for the beta_c comparison. The linear part of each step is
# exact, so the splitting error is O(beta dt^2); at 0.1 the mismatch agrees
# with a 0.02 run to a few parts in 1e4 while costing a fifth.
BETA_C_DT = 0.1


def rabi_transfer(delta_e: float, t):
    if not delta_e > 0:
        raise ArgumentError(f"energy gap must be positive, got {delta_e}")
    return np.sin(0.5 * delta_e * np.asarray(t, dtype=float)) ** 2


class ResonanceParameter(NamedTuple):
    R: float  # inf for an empty sum, 0 when divergent
    inverse: float  # the sum itself (inf when divergent)
    divergent: bool


def r_parameter(
    pair: DoubleHumpPair,
    spec: Optional[SpectralDecomposition] = None,
    degeneracy: float = 1e-12,
) -> ResonanceParameter:
    if spec is None:
        spec = diagonalize(pair.realization)
    y = pair.y_O
    e_o = float(y @ apply_hamiltonian(pair.realization, y))
    keep = np.ones(spec.size, dtype=bool)
    keep[[pair.plus_index, pair.minus_index]] = False
    return resonance_from_terms(spec.vectors[keep] @ (y**3), e_o - spec.energies[keep], degeneracy)


def resonance_from_terms(overlaps, detunings, degeneracy: float = 1e-12) -> ResonanceParameter:
    """R from the cubic overlaps V_i and detunings E_O - E_i of the kept states."""
    v = np.asarray(overlaps, dtype=float)
    de = np.asarray(detunings, dtype=float)
    live = np.abs(v) > degeneracy
    if np.any(live & (np.abs(de) < degeneracy)):
        return ResonanceParameter(0.0, math.inf, True)
    inv = float(np.sum(np.abs(v[live] / de[live])))
    return ResonanceParameter(math.inf if inv == 0.0 else 1.0 / inv, inv, False)


def beta_grid(lo: float = 1e-3, hi: float = 10.0, points: int = 60) -> NDArray:
    return np.geomspace(lo, hi, points)


class Mismatch(NamedTuple):
    mse: float
    period: float
    times: NDArray
    s_two_mode: NDArray
    s_lattice: NDArray


Propagate = Callable[[NDArray, DoubleHumpPair, PropagatorConfig], TimeTrace]


def _default_propagate(psi0, pair, cfg):
    return evolve(psi0, pair, cfg)


def model_mismatch(
    pair: DoubleHumpPair,
    beta: float,
    dt: float = 0.02,
    steps_per_rabi: int = STEPS_PER_RABI,
    propagate: Optional[Propagate] = None,
) -> Mismatch:
    """(1/T) int_0^T (u_two_mode - s_lattice)^2 dt over one two-mode period.

    Both runs start from y_O. They share a sample grid of M + 1 points on
    [0, T]: the Bloch step is T/M (no coarser than the two-mode step
    ``time_scale/steps_per_rabi``) and the lattice step T/(M k), the
    largest such step not above ``dt``.
    """
    propagate = propagate or _default_propagate
    c = compute_coefficients(pair, beta)
    period = two_mode_metrics(c, steps_per_rabi).period
    m = max(8, math.ceil(period * steps_per_rabi / c.time_scale))
    h = period / m
    k = max(1, math.ceil(h / dt))
    bloch = integrate_bloch(PACKET_AT_O, c, h, period)
    cfg = PropagatorConfig(dt=h / k, t_max=period, sample_stride=k, beta=beta)
    trace = propagate(pair.y_O.astype(complex), pair, cfg)
    if len(trace) != len(bloch.times):
        raise ArgumentError("sample grids of the two models differ")
    diff2 = (bloch.u - trace.s) ** 2
    mse = float(np.trapezoid(diff2, bloch.times) / period)
    return Mismatch(mse, period, bloch.times, bloch.u, trace.s)


class BetaC(NamedTuple):
    beta: float  # 0.0 when below the grid
    below_grid: bool
    last_pass: Optional[float]  # grid point the refinement started from
    first_fail: Optional[float]  # next grid point above it, if any
    mse_at_beta: Optional[float]
    failures_below: int  # failing grid points below last_pass


def find_beta_c(
    pair: DoubleHumpPair,
    grid: Optional[NDArray] = None,
    dt: float = BETA_C_DT,
    threshold: float = MSE_THRESHOLD,
    refine_steps: int = 6,
    propagate: Optional[Propagate] = None,
    rule: str = "highest",
) -> BetaC:
    """Largest beta whose two-mode/lattice mismatch stays below ``threshold``.

    ``rule="highest"`` scans the whole grid and takes the highest passing
    point. The mismatch has a narrow spike where the two-mode orbit crosses
    its separatrix (the period diverges there); this rule steps over it.
    ``rule="first_violation"`` stops the scan at the first failing point.
    Either way the result is refined by geometric bisection between the
    chosen grid point and the next one.
    """
    if rule not in ("highest", "first_violation"):
        raise ArgumentError(f"unknown rule {rule!r}")
    grid = beta_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ArgumentError("beta grid must be non-empty, non-negative and ascending")

    def mse(b):
        try:
            return model_mismatch(pair, float(b), dt, propagate=propagate).mse
        except PeriodNotFound:
            return math.inf  # no two-mode period to compare over: counts as a failure

    errors = []
    for b in grid:
        errors.append(mse(b))
        if errors[-1] >= threshold and rule == "first_violation":
            break
    passed = np.array(errors) < threshold
    if not passed.any():
        return BetaC(0.0, True, None, float(grid[0]), None, 0)
    j = int(np.flatnonzero(passed)[-1])
    below = int(np.sum(~passed[:j]))
    last, last_mse = float(grid[j]), errors[j]
    if j + 1 >= grid.size:
        return BetaC(last, False, last, None, last_mse, below)
    fail = float(grid[j + 1])
    lo, hi = last, fail
    for _ in range(refine_steps):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        e = mse(mid)
        if e < threshold:
            lo, last_mse = mid, e
        else:
            hi = mid
    return BetaC(lo, False, last, fail, last_mse, below)


class Spreading(NamedTuple):
    double: TimeTrace
    broken: TimeTrace


def compare_spreading(pair: DoubleHumpPair, cfg: PropagatorConfig) -> Spreading:
    """Tuned and broken runs from the same packet y_O at ``cfg.beta``."""
    psi0 = pair.y_O.astype(complex)
    double = evolve(psi0, pair, cfg)
    broken = evolve(psi0, break_realization(pair), cfg, reference=pair)
    return Spreading(double, broken)


def spreading_config(pair: DoubleHumpPair, beta: float, periods: float = 10.0, dt: float = 0.02) -> PropagatorConfig:
    """t_max = ``periods`` Rabi periods, about 200 samples per period."""
    t_rabi = pair.rabi_period
    stride = max(1, int(t_rabi / (200 * dt)))
    return PropagatorConfig(dt=dt, t_max=periods * t_rabi, sample_stride=stride, beta=beta)


@dataclass
class RealizationReport:
    pair_id: str
    gap: float
    R: float
    R_divergent: bool
    beta_quarter: float
    beta_quarter_flagged: bool
    beta_c: float
    beta_c_below_grid: bool
    m2_double_final: Optional[float] = None
    m2_broken_final: Optional[float] = None
    traces: dict = field(default_factory=dict)

    @property
    def usable(self) -> bool:
        """The two-mode model is trusted up to beta_quarter."""
        return self.beta_c > self.beta_quarter

    @property
    def double_spreads_faster(self) -> Optional[bool]:
        if self.m2_double_final is None or self.m2_broken_final is None:
            return None
        return self.m2_double_final > self.m2_broken_final


def analyze_pair(
    pair: DoubleHumpPair,
    pair_id: str = "",
    spreading_periods: Optional[float] = None,
    dt: float = 0.02,
    beta_c_grid: Optional[NDArray] = None,
    beta_c_dt: float = BETA_C_DT,
) -> tuple[RealizationReport, Optional[Spreading]]:
    """beta_quarter, beta_c and R for one pair; optionally the m2 comparison."""
    spec = diagonalize(pair.realization)
    r = r_parameter(pair, spec)
    q = find_beta_quarter(pair)
    bc = find_beta_c(pair, beta_c_grid, beta_c_dt)
    report = RealizationReport(
        pair_id=pair_id,
        gap=pair.gap,
        R=r.R,
        R_divergent=r.divergent,
        beta_quarter=q.beta,
        beta_quarter_flagged=q.flagged,
        beta_c=bc.beta,
        beta_c_below_grid=bc.below_grid,
    )
    runs = None
    if spreading_periods:
        runs = compare_spreading(pair, spreading_config(pair, q.beta, spreading_periods, dt))
        report.m2_double_final = float(runs.double.m2[-1])
        report.m2_broken_final = float(runs.broken.m2[-1])
    return report, runs
