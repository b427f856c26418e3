"""Two-mode (double-well) reduction of a double-humped pair.

The lattice NLSE is projected onto phi1 = y_O and phi2 = y_P:

    i dpsi1/dt = (omega1 + Omega1 |psi1|^2) psi1 + K psi2
                 + 2 A1 psi2 + A1 psi1^2 psi2* + B psi2^2 psi1*
                 + A2 |psi2|^2 psi2 - 2 A1 |psi2|^2 psi2

and the mirror equation (1 <-> 2). The coefficients are matrix elements
of H0 and quartic lattice sums of phi1, phi2, entering with a positive
sign so that beta = 0 reproduces the exact linear dynamics of the pair.

Bloch variables: u = |psi1|^2 - |psi2|^2 (hump imbalance, +1 for a packet
at O), v = 2 Im(psi1* psi2), w = 2 Re(psi1 psi2*). With this labelling
drho/dt = rho x T holds with

    T1 = omega1 - omega2 + Omega1 (1+u)/2 - Omega2 (1-u)/2 + (A1 - A2) w
    T2 = -B v
    T3 = 2K + 2(A1 + A2) + B w - A1 (1-u) - A2 (1+u)

At beta = 0, T = (0, 0, 2K) with 2K = gap, so u(t) = cos(gap t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ArgumentError, PeriodNotFound, StepSizeError
from .hunter import DoubleHumpPair
from .lattice import apply_hamiltonian

STEPS_PER_RABI = 2000
QUARTER = 0.25


@dataclass(frozen=True)
class TwoModeCoefficients:
    """Fields may be floats or equal-shape arrays (one entry per beta)."""

    omega1: float
    omega2: float
    capK: float
    Omega1: float
    Omega2: float
    A1: float
    A2: float
    B: float

    def astuple(self) -> tuple:
        return (self.omega1, self.omega2, self.capK, self.Omega1, self.Omega2, self.A1, self.A2, self.B)

    @property
    def rabi_period(self) -> float:
        """Linear period 2 pi / (2|K|); K does not depend on beta."""
        return math.pi / abs(float(np.max(np.abs(self.capK))))

    @property
    def time_scale(self) -> float:
        """2 pi over an upper bound of |T| on the unit sphere.

        Equals the Rabi period at beta = 0; shrinks once the nonlinear
        terms dominate the precession rate.
        """
        rate = (
            np.abs(self.omega1 - self.omega2) + 2 * np.abs(self.capK)
            + np.abs(self.Omega1) + np.abs(self.Omega2)
            + 4 * (np.abs(self.A1) + np.abs(self.A2)) + 2 * np.abs(self.B)
        )
        return 2 * math.pi / float(np.max(rate))


class OverlapSums(NamedTuple):
    S40: float
    S04: float
    S31: float
    S13: float
    S22: float


def overlap_sums(phi1: NDArray, phi2: NDArray) -> OverlapSums:
    a2, b2 = phi1 * phi1, phi2 * phi2
    return OverlapSums(
        float(np.dot(a2, a2)),
        float(np.dot(b2, b2)),
        float(np.dot(a2 * phi1, phi2)),
        float(np.dot(phi1, b2 * phi2)),
        float(np.dot(a2, b2)),
    )


def compute_coefficients(pair: DoubleHumpPair, beta) -> TwoModeCoefficients:
    """Coefficients at nonlinearity ``beta`` (scalar or array)."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ArgumentError("beta must be non-negative")
    if beta.ndim == 0:
        beta = float(beta)
    phi1, phi2 = pair.phi1, pair.phi2
    h1 = apply_hamiltonian(pair.realization, phi1)
    h2 = apply_hamiltonian(pair.realization, phi2)
    e11, e22, e12 = float(phi1 @ h1), float(phi2 @ h2), float(phi1 @ h2)
    S = overlap_sums(phi1, phi2)
    return TwoModeCoefficients(
        omega1=e11 + 2 * beta * S.S22,
        omega2=e22 + 2 * beta * S.S22,
        capK=e12 + 0 * beta,
        Omega1=beta * (S.S40 - 2 * S.S22),
        Omega2=beta * (S.S04 - 2 * S.S22),
        A1=beta * S.S31,
        A2=beta * S.S13,
        B=beta * S.S22,
    )


class AmplitudePair(NamedTuple):
    psi1: complex
    psi2: complex


class BlochState(NamedTuple):
    u: float
    v: float
    w: float


PACKET_AT_O = BlochState(1.0, 0.0, 0.0)


def amplitude_derivative(a: AmplitudePair, c: TwoModeCoefficients) -> AmplitudePair:
    p1, p2 = a
    n1 = (p1 * np.conj(p1)).real
    n2 = (p2 * np.conj(p2)).real
    r1 = (
        (c.omega1 + c.Omega1 * n1) * p1 + c.capK * p2
        + 2 * c.A1 * p2 + c.A1 * p1 * p1 * np.conj(p2) + c.B * p2 * p2 * np.conj(p1)
        + c.A2 * n2 * p2 - 2 * c.A1 * n2 * p2
    )
    r2 = (
        (c.omega2 + c.Omega2 * n2) * p2 + c.capK * p1
        + 2 * c.A2 * p1 + c.A2 * p2 * p2 * np.conj(p1) + c.B * p1 * p1 * np.conj(p2)
        + c.A1 * n1 * p1 - 2 * c.A2 * n1 * p1
    )
    return AmplitudePair(-1j * r1, -1j * r2)


def bloch_from_amplitudes(a: AmplitudePair) -> BlochState:
    p1, p2 = a
    cross = np.conj(p1) * p2
    return BlochState(
        (p1 * np.conj(p1)).real - (p2 * np.conj(p2)).real,
        2.0 * cross.imag,
        2.0 * cross.real,
    )


def amplitudes_from_bloch(rho: BlochState) -> AmplitudePair:
    """One representative of the U(1) orbit: the larger amplitude is real."""
    u, v, w = rho
    cross = complex(0.5 * w, 0.5 * v)  # psi1* psi2
    if u >= 0:
        p1 = math.sqrt(0.5 * (1.0 + u))
        return AmplitudePair(complex(p1), cross / p1)
    p2 = math.sqrt(0.5 * (1.0 - u))
    return AmplitudePair(cross.conjugate() / p2, complex(p2))


def bloch_torque(rho: BlochState, c: TwoModeCoefficients) -> tuple:
    u, v, w = rho
    t1 = c.omega1 - c.omega2 + 0.5 * c.Omega1 * (1 + u) - 0.5 * c.Omega2 * (1 - u) + (c.A1 - c.A2) * w
    t2 = -c.B * v
    t3 = 2 * c.capK + 2 * (c.A1 + c.A2) + c.B * w - c.A1 * (1 - u) - c.A2 * (1 + u)
    return t1, t2, t3


def bloch_rhs(rho: BlochState, c: TwoModeCoefficients) -> tuple:
    u, v, w = rho
    t1, t2, t3 = bloch_torque(rho, c)
    return v * t3 - w * t2, w * t1 - u * t3, u * t2 - v * t1


class BlochTrajectory(NamedTuple):
    times: NDArray
    u: NDArray
    v: NDArray
    w: NDArray


def _rk4_bloch(u, v, w, coeffs, dt, n_steps, stride, on_sample):
    """Classic RK4 for drho/dt = rho x T with the torque inlined.

    Works on Python floats or on numpy arrays (a batch of coefficient sets).
    """
    o1, o2, K, W1, W2, A1, A2, B = coeffs
    dw = o1 - o2
    h = dt
    h2 = 0.5 * dt
    h6 = dt / 6.0

    def f(u, v, w):
        t1 = dw + 0.5 * W1 * (1 + u) - 0.5 * W2 * (1 - u) + (A1 - A2) * w
        t2 = -B * v
        t3 = 2 * K + 2 * (A1 + A2) + B * w - A1 * (1 - u) - A2 * (1 + u)
        return v * t3 - w * t2, w * t1 - u * t3, u * t2 - v * t1

    for k in range(1, n_steps + 1):
        a1, b1, c1 = f(u, v, w)
        a2, b2, c2 = f(u + h2 * a1, v + h2 * b1, w + h2 * c1)
        a3, b3, c3 = f(u + h2 * a2, v + h2 * b2, w + h2 * c2)
        a4, b4, c4 = f(u + h * a3, v + h * b3, w + h * c3)
        u = u + h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        v = v + h6 * (b1 + 2 * b2 + 2 * b3 + b4)
        w = w + h6 * (c1 + 2 * c2 + 2 * c3 + c4)
        if k % stride == 0 or k == n_steps:
            on_sample(k, u, v, w)
    return u, v, w


def _check_unit(u, v, w, t, tol=1e-6):
    drift = np.max(np.abs(np.sqrt(u * u + v * v + w * w) - 1.0))
    if drift > tol:
        raise StepSizeError(f"|rho| drifted by {drift:.2e} at t={t:g}; reduce dt")


def integrate_bloch(
    rho0: BlochState,
    c: TwoModeCoefficients,
    dt: float,
    t_max: float,
    stride: int = 1,
) -> BlochTrajectory:
    """RK4 trajectory sampled every ``stride`` steps (and at the last step).

    No renormalization is applied; |rho| drifting by more than 1e-6 raises
    StepSizeError.
    """
    if dt <= 0 or t_max <= 0:
        raise ArgumentError("dt and t_max must be positive")
    u0, v0, w0 = (float(x) for x in rho0)
    if abs(math.sqrt(u0 * u0 + v0 * v0 + w0 * w0) - 1.0) > 1e-8:
        raise ArgumentError("initial Bloch vector must have unit length")
    n_steps = max(1, int(round(t_max / dt)))
    coeffs = tuple(float(x) for x in c.astuple())
    ts, us, vs, ws = [0.0], [u0], [v0], [w0]

    def on_sample(k, u, v, w):
        if abs(math.sqrt(u * u + v * v + w * w) - 1.0) > 1e-6:
            _check_unit(u, v, w, k * dt)
        ts.append(k * dt)
        us.append(u)
        vs.append(v)
        ws.append(w)

    _rk4_bloch(u0, v0, w0, coeffs, dt, n_steps, stride, on_sample)
    return BlochTrajectory(np.array(ts), np.array(us), np.array(vs), np.array(ws))


class AmplitudeTrajectory(NamedTuple):
    times: NDArray
    psi1: NDArray
    psi2: NDArray


def integrate_amplitudes(
    a0: AmplitudePair,
    c: TwoModeCoefficients,
    dt: float,
    t_max: float,
    stride: int = 1,
) -> AmplitudeTrajectory:
    """RK4 on the complex amplitude equations.

    The equations are U(1) covariant, so the mean self-energy is removed
    before stepping (it would otherwise dominate the step error) and the
    phase exp(-i w t) is restored on output.
    """
    n_steps = max(1, int(round(t_max / dt)))
    y = np.array(a0, dtype=complex)
    shift = 0.5 * (c.omega1 + c.omega2)
    rot = TwoModeCoefficients(c.omega1 - shift, c.omega2 - shift, *c.astuple()[2:])

    def f(y):
        return np.array(amplitude_derivative(AmplitudePair(y[0], y[1]), rot))

    ts, out = [0.0], [y.copy()]
    for k in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % stride == 0 or k == n_steps:
            ts.append(k * dt)
            out.append(y.copy())
    ts = np.array(ts)
    arr = np.array(out) * np.exp(-1j * shift * ts)[:, None]
    return AmplitudeTrajectory(ts, arr[:, 0], arr[:, 1])


class OscillationMetrics(NamedTuple):
    period: float
    transfer: float  # peak population carried to P, max (1 - u)/2


def _quad_fit(t: NDArray, y: NDArray) -> NDArray:
    t0 = t[1]
    return np.polyfit(t - t0, y, 2), t0


def oscillation_metrics(traj: BlochTrajectory, tol: float = 1e-4) -> OscillationMetrics:
    """Period (first return to the start) and peak transfer of a trajectory.

    The return is detected as the first crossing, in the direction of the
    initial velocity, of the plane through rho(0) normal to that velocity
    at which the interpolated state lies within ``tol`` of rho(0). Crossing
    time and peak transfer are refined by three-point quadratic fits.
    """
    t = traj.times
    rho = np.column_stack([traj.u, traj.v, traj.w])
    if len(t) < 4:
        raise PeriodNotFound("trajectory too short")
    d = rho - rho[0]
    n = d[1] / np.linalg.norm(d[1])
    g = d @ n
    period = None
    for k in np.flatnonzero((g[1:-1] < 0.0) & (g[2:] >= 0.0)) + 2:
        lo = k - 1 if k + 1 < len(t) else k - 2
        idx = slice(lo, lo + 3)
        coef, t0 = _quad_fit(t[idx], g[idx])
        roots = np.roots(coef)
        roots = roots[np.isreal(roots)].real + t0
        roots = roots[(roots >= t[k - 1] - 1e-12) & (roots <= t[k] + 1e-12)]
        if roots.size == 0:
            continue
        tr = float(roots[0])
        at = np.array([np.polyval(_quad_fit(t[idx], rho[idx, j])[0], tr - t0) for j in range(3)])
        if np.linalg.norm(at - rho[0]) < tol:
            period = tr
            break
    if period is None:
        raise PeriodNotFound(f"no return to the initial state within t={t[-1]:g}")

    pop = 0.5 * (1.0 - traj.u)
    last = int(np.searchsorted(t, period, side="right"))
    last = min(last + 1, len(t))
    i = int(np.argmax(pop[:last]))
    transfer = float(pop[i])
    if 0 < i < len(t) - 1:
        coef, t0 = _quad_fit(t[i - 1 : i + 2], pop[i - 1 : i + 2])
        if coef[0] < 0:
            tv = -coef[1] / (2 * coef[0])
            if abs(tv) <= t[i + 1] - t[i]:
                transfer = float(max(transfer, np.polyval(coef, tv)))
    return OscillationMetrics(period, transfer)


def two_mode_metrics(
    c: TwoModeCoefficients,
    steps_per_rabi: int = STEPS_PER_RABI,
    initial_periods: float = 4.0,
    max_periods: float = 512.0,
) -> OscillationMetrics:
    """Metrics of the orbit started from a packet at O.

    The step is ``time_scale / steps_per_rabi`` (T_Rabi/2000 in the linear
    limit). The integration window starts at ``initial_periods`` time
    scales and is doubled until a return is found.
    """
    scale = c.time_scale
    dt = scale / steps_per_rabi
    span = initial_periods
    while True:
        traj = integrate_bloch(PACKET_AT_O, c, dt, span * scale)
        try:
            return oscillation_metrics(traj)
        except PeriodNotFound:
            if span >= max_periods:
                raise
            span *= 2.0


def transfer_scan(
    pair: DoubleHumpPair,
    betas: NDArray,
    periods: float = 10.0,
    steps_per_rabi: int = STEPS_PER_RABI,
) -> NDArray:
    """Peak transfer max (1-u)/2 over a fixed window, for many betas at once.

    Samples every step without refinement, so it is independent of the
    period detection in ``oscillation_metrics``.
    """
    betas = np.asarray(betas, dtype=float)
    c = compute_coefficients(pair, betas)
    coeffs = tuple(np.broadcast_to(x, betas.shape).astype(float) for x in c.astuple())
    t_rabi = pair.rabi_period
    dt = c.time_scale / steps_per_rabi
    n_steps = int(math.ceil(periods * t_rabi / dt))
    u0 = np.ones_like(betas)
    v0 = np.zeros_like(betas)
    best = np.zeros_like(betas)

    def on_sample(k, u, v, w):
        np.maximum(best, 0.5 * (1.0 - u), out=best)

    _rk4_bloch(u0, v0, v0.copy(), coeffs, dt, n_steps, 1, on_sample)
    return best


class QuarterResult(NamedTuple):
    beta: float
    transfer: float
    period: float
    flagged: bool  # transfer not monotone across the bracket; dense-scan value used


def transfer_fraction(pair: DoubleHumpPair, beta: float) -> OscillationMetrics:
    return two_mode_metrics(compute_coefficients(pair, beta))


def _auto_bracket(pair: DoubleHumpPair) -> tuple[float, float]:
    S = overlap_sums(pair.phi1, pair.phi2)
    scale = max(S.S40 - 2 * S.S22, S.S04 - 2 * S.S22, 1e-12)
    hi = 2.0 * pair.gap / scale  # self-trapping sets in near Omega ~ 2 gap
    for _ in range(40):
        if transfer_fraction(pair, hi).transfer < QUARTER:
            return 0.0, hi
        hi *= 2.0
    raise ArgumentError("could not find a beta with transfer below 1/4")


def find_beta_quarter(
    pair: DoubleHumpPair,
    bracket: Optional[tuple[float, float]] = None,
    tol: float = 1e-4,
    f_tol: float = 1e-3,
    coarse_points: int = 16,
) -> QuarterResult:
    """Largest beta whose two-mode orbit from O still carries 1/4 to P.

    Bisection on transfer(beta) - 1/4 until the bracket is narrower than
    ``tol`` and the transfer at the returned beta is within ``f_tol`` of
    1/4, or until the midpoint lands on the separatrix (no finite period),
    where the transfer jumps past 1/4. If a coarse scan shows more than one crossing, the result of a
    dense scan with step ``tol`` is returned and flagged.
    """
    if bracket is None:
        bracket = _auto_bracket(pair)
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi:
        raise ArgumentError(f"bad bracket {bracket}")
    m_lo = transfer_fraction(pair, lo)
    m_hi = transfer_fraction(pair, hi)
    if not (m_lo.transfer >= QUARTER > m_hi.transfer):
        raise ArgumentError(
            f"bracket [{lo:g}, {hi:g}] does not straddle 1/4 "
            f"(transfer {m_lo.transfer:.4f}, {m_hi.transfer:.4f})"
        )

    grid = np.linspace(lo, hi, coarse_points + 1)
    fs = [m_lo.transfer] + [transfer_fraction(pair, b).transfer for b in grid[1:-1]] + [m_hi.transfer]
    above = np.array(fs) >= QUARTER
    crossings = int(np.sum(above[:-1] != above[1:]))
    if crossings > 1:
        dense = np.arange(lo, hi + 0.5 * tol, tol)
        f_dense = transfer_scan(pair, dense)
        ok = np.flatnonzero(f_dense >= QUARTER)
        beta = float(dense[ok[-1]]) if ok.size else lo
        m = transfer_fraction(pair, beta)
        return QuarterResult(beta, m.transfer, m.period, True)

    j = int(np.flatnonzero(above[:-1] & ~above[1:])[0])
    lo, hi = float(grid[j]), float(grid[j + 1])
    best = transfer_fraction(pair, lo)
    for _ in range(200):
        if hi - lo <= tol and best.transfer - QUARTER <= f_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        try:
            m = transfer_fraction(pair, mid)
        except PeriodNotFound:
            # mid sits on the separatrix, where f jumps; lo is as close as it gets
            break
        if m.transfer >= QUARTER:
            lo, best = mid, m
        else:
            hi = mid
    return QuarterResult(lo, best.transfer, best.period, False)
