"""Disordered tight-binding lattice: realizations, Hamiltonian, spectra.

The linear model is

    (H0 psi)_n = -psi_{n+1} - psi_{n-1} + eps_n psi_n

on an open chain of N sites (missing neighbours contribute zero).

Random stream layout (part of the pool-file contract): a numpy ``PCG64``
bit generator seeded with the 64-bit seed produces one double per site in
ascending site order via ``(next_uint64 >> 11) * 2**-53``, and the site
energy is ``disorder * (2 u - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ArgumentError, NumericError

DEFAULT_SIZE = 128
DEFAULT_DISORDER = 2.0  # eps_n uniform on [-2, 2]


def _frozen(a: ArrayLike, dtype=float) -> NDArray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """Site energies of one disorder realization plus the two hump sites."""

    size: int
    epsilon: NDArray[np.float64]
    seed: int
    site_O: int
    site_P: int

    def __post_init__(self):
        eps = _frozen(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if eps.ndim != 1 or eps.shape[0] != self.size:
            raise ArgumentError(f"epsilon has shape {eps.shape}, expected ({self.size},)")
        if not np.all(np.isfinite(eps)):
            raise ArgumentError("site energies must be finite")
        if not 0 <= self.site_O < self.site_P < self.size:
            raise ArgumentError(
                f"need 0 <= site_O < site_P < size, got O={self.site_O}, P={self.site_P}, N={self.size}"
            )

    def with_site_energy(self, site: int, value: float) -> "DisorderRealization":
        eps = self.epsilon.copy()
        eps[site] = value
        return DisorderRealization(self.size, eps, self.seed, self.site_O, self.site_P)

    def __eq__(self, other):
        if not isinstance(other, DisorderRealization):
            return NotImplemented
        return (
            (self.size, self.seed, self.site_O, self.site_P)
            == (other.size, other.seed, other.site_O, other.site_P)
            and np.array_equal(self.epsilon, other.epsilon)
        )

    __hash__ = None


def draw_realization(
    size: int,
    seed: int,
    site_O: int,
    site_P: int,
    disorder: float = DEFAULT_DISORDER,
) -> DisorderRealization:
    """Draw i.i.d. site energies uniform on ``[-disorder, disorder]``."""
    if size < 2:
        raise ArgumentError(f"size must be >= 2, got {size}")
    if not 0 <= seed < 2**64:
        raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if site_O == site_P:
        raise ArgumentError("site_O and site_P must differ")
    lo, hi = sorted((site_O, site_P))
    if lo < 0 or hi >= size:
        raise ArgumentError(f"site indices {site_O}, {site_P} outside lattice of {size} sites")
    rng = np.random.Generator(np.random.PCG64(seed))
    eps = disorder * (2.0 * rng.random(size) - 1.0)
    return DisorderRealization(size, eps, int(seed), lo, hi)


def apply_hamiltonian(real: DisorderRealization, psi: ArrayLike) -> NDArray:
    psi = np.asarray(psi)
    if psi.shape != (real.size,):
        raise ArgumentError(f"state has shape {psi.shape}, lattice has {real.size} sites")
    out = real.epsilon * psi
    out[:-1] -= psi[1:]
    out[1:] -= psi[:-1]
    return out


def hamiltonian_matrix(real: DisorderRealization) -> NDArray[np.float64]:
    """Dense H0, mainly for tests and small systems."""
    n = real.size
    h = np.diag(real.epsilon)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = -1.0
    h[idx + 1, idx] = -1.0
    return h


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of H0.

    ``vectors[i]`` is the eigenvector with energy ``energies[i]`` (ascending);
    its sign is fixed so the component at ``centers[i]`` is positive.
    """

    energies: NDArray[np.float64]
    vectors: NDArray[np.float64]
    centers: NDArray[np.intp] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen(self.energies))
        object.__setattr__(self, "vectors", _frozen(self.vectors))
        if self.centers is None:
            centers = np.argmax(np.abs(self.vectors), axis=1)
        else:
            centers = self.centers
        object.__setattr__(self, "centers", _frozen(centers, dtype=np.intp))

    @property
    def size(self) -> int:
        return self.energies.shape[0]


def localization_center(v: ArrayLike) -> int:
    """Site of maximal |v_n|; ties go to the lower index."""
    a = np.abs(np.asarray(v))
    if a.size == 0 or not np.any(a > 0):
        raise ArgumentError("localization center of a zero vector is undefined")
    return int(np.argmax(a))


def diagonalize(real: DisorderRealization) -> SpectralDecomposition:
    n = real.size
    if n < 2:
        raise ArgumentError("need at least two sites")
    try:
        energies, vecs = eigh_tridiagonal(real.epsilon, -np.ones(n - 1), lapack_driver="stev")
    except LinAlgError as exc:
        raise NumericError(f"tridiagonal eigensolver failed for N={n} sites: {exc}") from exc
    vecs = vecs.T.copy()
    centers = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(n), centers])
    vecs *= signs[:, None]
    return SpectralDecomposition(energies, vecs, centers)


def fit_localization_length(
    vectors: ArrayLike,
    centers: ArrayLike,
    edge: int = 10,
    floor: float = 1e-12,
) -> float:
    """Least-squares fit of log|v_n| against |n - center|; returns -1/slope.

    Sites within ``edge`` of either boundary and amplitudes at or below
    ``floor`` are dropped.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    centers = np.atleast_1d(np.asarray(centers))
    n_sites = vectors.shape[1]
    sites = np.arange(n_sites)
    keep_sites = (sites >= edge) & (sites < n_sites - edge)
    xs, ys = [], []
    for v, c in zip(vectors, centers):
        amp = np.abs(v)
        mask = keep_sites & (amp > floor)
        xs.append(np.abs(sites[mask] - c))
        ys.append(np.log(amp[mask]))
    x = np.concatenate(xs) if xs else np.empty(0)
    y = np.concatenate(ys) if ys else np.empty(0)
    if x.size < 2 or np.ptp(x) == 0:
        raise ArgumentError("not enough amplitude data to fit a decay length")
    slope, _ = np.polyfit(x, y, 1)
    if slope >= 0:
        raise NumericError(f"fitted envelope does not decay (slope={slope:.3g})")
    return -1.0 / slope


def estimate_localization_length(
    sample,
    energy_window: tuple[float, float],
    edge: int = 10,
    floor: float = 1e-12,
) -> float:
    """Localization length from eigenstates of many realizations.

    Eigenstates of every realization in ``sample`` whose energy lies in
    ``energy_window`` are pooled into a single exponential-envelope fit.
    """
    sample = list(sample)
    if len(sample) < 20:
        raise ArgumentError(f"need at least 20 realizations, got {len(sample)}")
    if any(r.size < 128 for r in sample):
        raise ArgumentError("realizations must have at least 128 sites")
    lo, hi = energy_window
    vecs, centers = [], []
    for real in sample:
        spec = diagonalize(real)
        sel = (spec.energies >= lo) & (spec.energies <= hi)
        vecs.extend(spec.vectors[sel])
        centers.extend(spec.centers[sel])
    if not vecs:
        raise ArgumentError(f"no eigenstates with energy in [{lo}, {hi}]")
    return fit_localization_length(np.array(vecs), np.array(centers), edge=edge, floor=floor)
