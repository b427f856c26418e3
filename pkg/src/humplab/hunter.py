"""Engineering realizations that host a far-separated double-humped pair.

The chain is cut at the bond midway between O and P. Levels of the O-side
half chain do not depend on eps_P; every level of the P-side half chain
rises monotonically with eps_P (its slope is the level's weight on site P),
so bisection on eps_P puts a P-side level exactly on a chosen O-side level.
The first-order coupling of the two is the hopping across the cut bond
times the two amplitudes next to it, which lets the hunt prefer O-levels
that will hybridize strongly. A final bisection on the full lattice moves
eps_P onto the true avoided crossing, where each member of the pair holds
half of each localized level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh_tridiagonal

from .errors import ArgumentError, HuntFailure
from .lattice import (
    DEFAULT_SIZE,
    DisorderRealization,
    SpectralDecomposition,
    apply_hamiltonian,
    diagonalize,
    draw_realization,
)

log = logging.getLogger(__name__)

SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True)
class HuntConfig:
    separation: int = 25
    window: int = 3
    mass_threshold: float = 0.25
    gap_tolerance: float = 1e-6
    max_bisection_steps: int = 60
    epsilon_bounds: tuple[float, float] = (-4.0, 4.0)
    min_gap: float = 0.0  # reject pairs with a smaller splitting

    def __post_init__(self):
        if self.window < 0 or self.separation < 2 * self.window + 1:
            raise ArgumentError(
                f"separation {self.separation} must be >= 2*window+1 (window={self.window})"
            )
        if not 0.0 < self.mass_threshold < 1.0:
            raise ArgumentError("mass_threshold must lie in (0, 1)")
        if not 0.0 < self.gap_tolerance < 1.0:
            raise ArgumentError("gap_tolerance must lie in (0, 1)")
        if not self.min_gap >= 0.0:
            raise ArgumentError("min_gap must be non-negative")
        if self.max_bisection_steps < 1:
            raise ArgumentError("max_bisection_steps must be positive")
        lo, hi = self.epsilon_bounds
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ArgumentError(f"bad epsilon_bounds {self.epsilon_bounds}")


def hump_sites(size: int, separation: int) -> tuple[int, int]:
    """Hump sites centered in the lattice, e.g. (52, 77) for N=128, L=25."""
    site_O = size // 2 - separation // 2
    site_P = site_O + separation
    if site_O < 0 or site_P >= size:
        raise ArgumentError(f"separation {separation} does not fit in {size} sites")
    return site_O, site_P


def _window(site: int, window: int, size: int) -> slice:
    return slice(max(site - window, 0), min(site + window + 1, size))


def window_mass(v: NDArray, site: int, window: int) -> NDArray:
    """Weight of ``v`` (or of each row of ``v``) within ``site +- window``."""
    v = np.asarray(v)
    sl = _window(site, window, v.shape[-1])
    return np.sum(np.abs(v[..., sl]) ** 2, axis=-1)


class Candidate(NamedTuple):
    index: int
    energy: float
    mass: float


def candidate_states(spec: SpectralDecomposition, site: int, window: int) -> Candidate:
    """Eigenstate with the largest weight in ``site +- window``.

    Ties resolve to the lower eigenvalue index.
    """
    if not 0 <= site < spec.size:
        raise ArgumentError(f"site {site} outside lattice of {spec.size} sites")
    masses = window_mass(spec.vectors, site, window)
    i = int(np.argmax(masses))
    return Candidate(i, float(spec.energies[i]), float(masses[i]))


def cut_bond(real: DisorderRealization) -> int:
    """Last site of the O-side half chain (bond midway between O and P)."""
    return (real.site_O + real.site_P) // 2


def _chain_eigh(eps: NDArray) -> tuple[NDArray, NDArray]:
    if eps.shape[0] == 1:
        return eps.copy(), np.ones((1, 1))
    energies, vecs = eigh_tridiagonal(eps, -np.ones(eps.shape[0] - 1), lapack_driver="stev")
    return energies, vecs.T


def p_side_spectrum(real: DisorderRealization, epsilon_P: float) -> tuple[NDArray, NDArray]:
    """Eigenpairs of the P-side half chain with site P set to ``epsilon_P``.

    Eigenvectors are rows indexed by half-chain site (site ``cut_bond+1``
    of the full lattice is row column 0).
    """
    m = cut_bond(real)
    eps = real.epsilon[m + 1 :].copy()
    eps[real.site_P - m - 1] = epsilon_P
    return _chain_eigh(eps)


class Resonance(NamedTuple):
    """An O-side level and the P-side level tuned into degeneracy with it."""

    o_state: int  # index in the O-side half-chain spectrum
    energy_O: float
    p_state: int  # index in the P-side half-chain spectrum
    epsilon_P: float
    residual: float  # |E_P - E_O| at epsilon_P
    steps: int
    converged: bool
    coupling: float  # first-order hopping matrix element across the cut bond
    slope: float  # dE_P/d(eps_P) = weight of the P-side level on site P
    mass_O: float
    mass_P: float


def resonate(real: DisorderRealization, cfg: HuntConfig, o_state: int) -> Resonance:
    """Tune eps_P until a P-side level meets O-side level ``o_state``.

    Every P-side eigenvalue is continuous and strictly increasing in eps_P,
    and exactly one of them can pass a given energy, so the crossing level
    is identified by counting at the bracket ends and located by bisection.
    """
    O, P, w = real.site_O, real.site_P, cfg.window
    m = cut_bond(real)
    e_left, v_left = _chain_eigh(real.epsilon[: m + 1].copy())
    target = float(e_left[o_state])
    mass_O = float(window_mass(v_left[o_state], O, w))

    lo, hi = cfg.epsilon_bounds
    n_lo = int(np.sum(p_side_spectrum(real, lo)[0] < target))
    n_hi = int(np.sum(p_side_spectrum(real, hi)[0] < target))
    if n_lo == n_hi:
        raise HuntFailure(
            f"seed {real.seed}: no P-side level reaches E_O={target:.6f} for eps_P in [{lo}, {hi}]"
        )
    k = n_hi

    def detuning(x: float) -> float:
        return float(p_side_spectrum(real, x)[0][k]) - target

    steps, converged = 0, False
    g = detuning(hi)
    x = hi
    for steps in range(1, cfg.max_bisection_steps + 1):
        x = 0.5 * (lo + hi)
        if x <= lo or x >= hi:
            break
        g = detuning(x)
        if abs(g) < cfg.gap_tolerance:
            converged = True
            break
        if g < 0.0:
            lo = x
        else:
            hi = x

    e_right, v_right = p_side_spectrum(real, x)
    p_local = P - m - 1
    mass_P = float(window_mass(v_right[k], p_local, w))
    if mass_P < cfg.mass_threshold:
        raise HuntFailure(
            f"seed {real.seed}: P-side level at resonance has window mass {mass_P:.3f} at P"
        )
    coupling = -float(v_left[o_state, m] * v_right[k, 0])
    return Resonance(
        o_state, target, k, float(x), abs(g), steps, converged,
        coupling, float(v_right[k, p_local] ** 2), mass_O, mass_P,
    )


def rank_o_states(real: DisorderRealization, cfg: HuntConfig) -> list[Resonance]:
    """O-side levels that can be brought into resonance, strongest coupling first.

    Only levels with at least ``mass_threshold`` in the O-window are tried.
    """
    m = cut_bond(real)
    _, v_left = _chain_eigh(real.epsilon[: m + 1].copy())
    masses = window_mass(v_left, real.site_O, cfg.window)
    found = []
    for o in np.flatnonzero(masses >= cfg.mass_threshold):
        try:
            found.append(resonate(real, cfg, int(o)))
        except HuntFailure:
            continue
    found.sort(key=lambda r: (-abs(r.coupling), r.o_state))
    return found


class TuneResult(NamedTuple):
    epsilon_P: float  # tuned value on the full lattice
    residual: float  # |E_P - E_O| of the half-chain bisection
    steps: int
    converged: bool
    resonance: Resonance
    imbalance: float  # |h| at the refined point, see _refine


def _diabats(real: DisorderRealization, res: Resonance, epsilon_P: float) -> tuple[NDArray, NDArray]:
    m = cut_bond(real)
    _, v_left = _chain_eigh(real.epsilon[: m + 1].copy())
    _, v_right = p_side_spectrum(real, epsilon_P)
    d_O = np.zeros(real.size)
    d_P = np.zeros(real.size)
    d_O[: m + 1] = v_left[res.o_state]
    d_P[m + 1 :] = v_right[res.p_state]
    return d_O, d_P


def _imbalance(real: DisorderRealization, res: Resonance, x: float) -> float:
    """O-diabat weight on the upper minus the lower member of the pair.

    Positive below the avoided crossing (O-level on top), negative above.
    """
    d_O, d_P = _diabats(real, res, x)
    spec = diagonalize(real.with_site_energy(real.site_P, x))
    w_O = (spec.vectors @ d_O) ** 2
    w_P = (spec.vectors @ d_P) ** 2
    i, j = sorted(np.argsort(-(w_O + w_P), kind="stable")[:2])
    return float(w_O[j] - w_O[i])


def _refine(real: DisorderRealization, cfg: HuntConfig, res: Resonance) -> tuple[float, float]:
    """Move eps_P onto the full-lattice avoided crossing.

    The half-chain resonance ignores level shifts caused by the cut bond;
    these are second order in the coupling but comparable to the splitting.
    """
    bounds = cfg.epsilon_bounds
    half = 8.0 * abs(res.coupling) / max(res.slope, 1e-12)
    for _ in range(10):
        lo = max(res.epsilon_P - half, bounds[0])
        hi = min(res.epsilon_P + half, bounds[1])
        h_lo, h_hi = _imbalance(real, res, lo), _imbalance(real, res, hi)
        if h_lo > 0.0 > h_hi:
            break
        half *= 2.0
    else:
        raise HuntFailure(f"seed {real.seed}: could not bracket the full-lattice avoided crossing")
    h = h_lo
    for _ in range(cfg.max_bisection_steps):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        h = _imbalance(real, res, mid)
        if h == 0.0:
            return mid, 0.0
        if h > 0.0:
            lo = mid
        else:
            hi = mid
    h_lo, h_hi = _imbalance(real, res, lo), _imbalance(real, res, hi)
    return (lo, abs(h_lo)) if abs(h_lo) <= abs(h_hi) else (hi, abs(h_hi))


def tune_site_energy(
    real: DisorderRealization,
    cfg: HuntConfig,
    resonance: Optional[Resonance] = None,
) -> TuneResult:
    """Tune eps_P so the chosen O-level and a P-level hybridize.

    Without an explicit ``resonance`` the O-level with the strongest
    coupling across the cut is used.
    """
    if resonance is None:
        ranked = rank_o_states(real, cfg)
        if not ranked:
            raise HuntFailure(f"seed {real.seed}: no O-level can be tuned into resonance")
        resonance = ranked[0]
    eps_P, imbalance = _refine(real, cfg, resonance)
    return TuneResult(
        eps_P, resonance.residual, resonance.steps, resonance.converged, resonance, imbalance
    )


@dataclass(frozen=True, eq=False)
class DoubleHumpPair:
    """A resonant eigenpair with humps at sites O and P.

    ``plus_state`` is the upper level. ``y_O = (phi+ + phi-)/sqrt2`` is the
    packet concentrated at O and ``y_P = (phi+ - phi-)/sqrt2`` the one at P;
    the sign of ``minus_state`` is chosen to make this so. ``phi1`` and
    ``phi2`` are the same two combinations used as two-mode basis vectors.
    """

    realization: DisorderRealization
    plus_index: int
    minus_index: int
    plus_state: NDArray
    minus_state: NDArray
    energy_plus: float
    energy_minus: float
    gap: float
    phi1: NDArray
    phi2: NDArray
    y_O: NDArray
    y_P: NDArray
    hump_mass_O: float
    hump_mass_P: float
    window: int = 3

    @property
    def site_O(self) -> int:
        return self.realization.site_O

    @property
    def site_P(self) -> int:
        return self.realization.site_P

    @property
    def mean_energy(self) -> float:
        return 0.5 * (self.energy_plus + self.energy_minus)

    @property
    def rabi_period(self) -> float:
        return 2.0 * np.pi / self.gap

    def subspace_hamiltonian(self) -> NDArray:
        """H0 restricted to span{y_O, y_P}, in that basis."""
        basis = np.array([self.y_O, self.y_P])
        hb = np.array([apply_hamiltonian(self.realization, b) for b in basis])
        return basis @ hb.T


def detect_double_hump(
    spec: SpectralDecomposition,
    cfg: HuntConfig,
    real: DisorderRealization,
) -> Optional[DoubleHumpPair]:
    """Return the double-humped pair at (O, P) of ``real``, or None.

    The two eigenstates scoring highest on min(O-window mass, P-window mass)
    are combined as (phi+ +- phi-)/sqrt2. The pair is accepted if each
    combination carries at least ``mass_threshold`` in its own window,
    each eigenstate carries at least half that in both windows, and at
    most one other level lies between the two.
    """
    O, P, w = real.site_O, real.site_P, cfg.window
    if spec.size != real.size:
        raise ArgumentError("spectrum does not match realization")
    m_O = window_mass(spec.vectors, O, w)
    m_P = window_mass(spec.vectors, P, w)
    score = np.minimum(m_O, m_P)
    top = np.argsort(-score, kind="stable")[:2]
    if score[top[1]] < 0.5 * cfg.mass_threshold:
        return None
    i_minus, i_plus = sorted(int(i) for i in top)  # energies ascend with index
    if i_plus - i_minus > 2:
        return None
    e_minus, e_plus = float(spec.energies[i_minus]), float(spec.energies[i_plus])
    gap = e_plus - e_minus
    if not gap > 0.0:
        return None
    plus = spec.vectors[i_plus].copy()
    minus = spec.vectors[i_minus].copy()
    a = SQRT_HALF * (plus + minus)
    b = SQRT_HALF * (plus - minus)
    if window_mass(a, O, w) < window_mass(b, O, w):
        minus = -minus
        a, b = b, a
    mass_O = float(window_mass(a, O, w))
    mass_P = float(window_mass(b, P, w))
    if mass_O < cfg.mass_threshold or mass_P < cfg.mass_threshold:
        return None
    return DoubleHumpPair(
        realization=real,
        plus_index=i_plus,
        minus_index=i_minus,
        plus_state=plus,
        minus_state=minus,
        energy_plus=e_plus,
        energy_minus=e_minus,
        gap=gap,
        phi1=a.copy(),
        phi2=b.copy(),
        y_O=a,
        y_P=b,
        hump_mass_O=mass_O,
        hump_mass_P=mass_P,
        window=w,
    )


def hunt(seed: int, cfg: HuntConfig = HuntConfig(), size: int = DEFAULT_SIZE) -> DoubleHumpPair:
    """Draw, tune and verify one realization; raises HuntFailure on failure.

    O-levels are tried in order of decreasing coupling until one yields an
    accepted pair that is adjacent in the spectrum, has gap >= ``cfg.min_gap``
    and whose broken control (eps_P = 0) no longer hosts a pair.
    """
    site_O, site_P = hump_sites(size, cfg.separation)
    base = draw_realization(size, seed, site_O, site_P)
    ranked = rank_o_states(base, cfg)
    if not ranked:
        raise HuntFailure(f"seed {seed}: no O-level can be tuned into resonance")
    reasons = []
    for res in ranked:
        try:
            tuned = tune_site_energy(base, cfg, res)
        except HuntFailure as exc:
            reasons.append(str(exc))
            continue
        real = base.with_site_energy(site_P, tuned.epsilon_P)
        pair = detect_double_hump(diagonalize(real), cfg, real)
        if pair is None:
            reasons.append(f"O-level {res.o_state}: no pair accepted at eps_P={tuned.epsilon_P:.6f}")
            continue
        if pair.plus_index - pair.minus_index != 1:
            # a third level inside the splitting: not a two-level resonance
            reasons.append(f"O-level {res.o_state}: another level lies between the pair energies")
            continue
        if pair.gap < cfg.min_gap:
            reasons.append(f"O-level {res.o_state}: gap {pair.gap:.2e} below {cfg.min_gap:.2e}")
            continue
        broken = break_realization(pair)
        if detect_double_hump(diagonalize(broken), cfg, broken) is not None:
            reasons.append(f"O-level {res.o_state}: pair survives eps_P=0")
            continue
        log.debug("seed %d: pair with gap %.3e at eps_P=%.6f", seed, pair.gap, tuned.epsilon_P)
        return pair
    raise HuntFailure(f"seed {seed}: " + "; ".join(reasons))


def pair_from_realization(real: DisorderRealization, cfg: HuntConfig = HuntConfig()) -> DoubleHumpPair:
    """Rebuild the pair of an already tuned realization (e.g. loaded from a pool)."""
    pair = detect_double_hump(diagonalize(real), cfg, real)
    if pair is None:
        raise HuntFailure(f"seed {real.seed}: stored realization has no double-humped pair")
    return pair


def break_realization(pair: DoubleHumpPair) -> DisorderRealization:
    """Control realization: the tuned one with eps_P set to zero."""
    real = pair.realization
    if real.epsilon[real.site_P] == 0.0:
        return real
    return real.with_site_energy(real.site_P, 0.0)
