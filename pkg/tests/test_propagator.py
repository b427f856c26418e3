import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from humplab.errors import ArgumentError, NumericError
from humplab.hunter import break_realization
from humplab.lattice import DisorderRealization, SpectralDecomposition, diagonalize, draw_realization, hamiltonian_matrix
from humplab.propagator import (
    EigenStepper,
    PropagatorConfig,
    evolve,
    nlse_energy,
    second_moment,
    site_imbalance,
    split_step,
)
from humplab.resonance import rabi_transfer


def random_state(rng, n):
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=0.1, t_max=0.01), dict(sample_stride=0), dict(beta=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ArgumentError):
        PropagatorConfig(**kw)


def test_second_moment_examples():
    d = np.zeros(7)
    d[4] = 1
    assert second_moment(d) == 0.0
    assert second_moment(np.sqrt([0.5, 0, 0.5])) == pytest.approx(1.0)
    assert second_moment(np.full(4, 0.5)) == pytest.approx(1.25)


def test_site_imbalance_examples(pair):
    assert site_imbalance(pair.y_O, pair) == pytest.approx(1.0)
    assert site_imbalance((pair.y_O + 1j * pair.y_P) / np.sqrt(2), pair) == pytest.approx(0.0, abs=1e-14)
    spec = diagonalize(pair.realization)
    other = spec.vectors[(pair.plus_index + 5) % 128]
    assert site_imbalance(other, pair) == pytest.approx(0.0, abs=1e-14)


def test_energy_examples():
    real = draw_realization(10, 3, 2, 7)
    d = np.zeros(10, complex)
    d[4] = 1
    assert nlse_energy(d, real, 0.0) == pytest.approx(real.epsilon[4])
    assert nlse_energy(d, real, 2.0) == pytest.approx(real.epsilon[4] + 1)


@given(st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_energy_matches_dense_formula(seed, beta):
    real = draw_realization(16, seed, 2, 12)
    psi = random_state(np.random.default_rng(seed), 16)
    dens = np.abs(psi) ** 2
    expected = np.vdot(psi, hamiltonian_matrix(real) @ psi).real + 0.5 * beta * np.sum(dens**2)
    assert nlse_energy(psi, real, beta) == pytest.approx(expected, abs=1e-12)


@given(st.integers(0, 2**32))
def test_linear_step_is_exact(seed):
    real = draw_realization(32, seed, 3, 28)
    spec = diagonalize(real)
    psi = random_state(np.random.default_rng(seed), 32)
    cfg = PropagatorConfig(dt=0.37, beta=0.0)
    got = split_step(psi, real, spec, cfg)
    assert np.max(np.abs(got - expm(-1j * 0.37 * hamiltonian_matrix(real)) @ psi)) < 1e-13


@given(st.floats(-2, 2), st.floats(0, 3), st.floats(0.001, 0.5))
def test_single_site_phase(c, beta, dt):
    spec = SpectralDecomposition(np.array([c]), np.array([[1.0]]))
    stepper = EigenStepper(spec, dt, beta)
    n = 200
    x = stepper.advance(np.array([[1.0, 0.0]]), n)
    t = n * dt
    exact = np.exp(-1j * (c + beta) * t)
    assert abs(x[0, 0] + 1j * x[0, 1] - exact) < 1e-10 * max(t, 1.0)


def test_second_order_convergence():
    real = draw_realization(64, 11, 20, 45)
    spec = diagonalize(real)
    psi0 = np.zeros(64, complex)
    psi0[32] = 1.0

    def final(dt):
        return evolve(psi0, real, PropagatorConfig(dt=dt, t_max=20.0, sample_stride=10**6, beta=1.0), spec).final_state

    ref = final(0.1 / 16)
    e1 = np.linalg.norm(final(0.1) - ref)
    e2 = np.linalg.norm(final(0.05) - ref)
    assert 3.5 < e1 / e2 < 4.5


def test_eigenstate_is_stationary(pair):
    spec = diagonalize(pair.realization)
    v = spec.vectors[40].astype(complex)
    tr = evolve(v, pair.realization, PropagatorConfig(dt=0.02, t_max=50.0, sample_stride=50), spec)
    assert np.ptp(tr.m2) < 1e-9
    assert abs(abs(np.vdot(v, tr.final_state)) - 1) < 1e-10
    assert tr.s is None and tr.p_O is None


def test_trace_invariants(pair):
    cfg = PropagatorConfig(dt=0.02, t_max=200.0, sample_stride=25, beta=0.5)
    tr = evolve(pair.y_O, pair, cfg)
    n = len(tr)
    assert n == 401
    assert all(len(c) == n for c in tr.columns().values())
    assert np.max(np.abs(tr.norm - 1)) < 1e-10
    assert np.all(tr.p_O + tr.p_P <= 1 + 1e-10)
    assert np.all(np.abs(tr.s) <= 1 + 1e-10)
    assert np.allclose(tr.w_mode, tr.s, atol=1e-12)  # phi1 = y_O, phi2 = y_P
    assert tr.times[-1] == pytest.approx(200.0)


def test_sampling_includes_last_step(pair):
    tr = evolve(pair.y_O, pair, PropagatorConfig(dt=0.02, t_max=1.0, sample_stride=7))
    assert list(np.round(tr.times / 0.02).astype(int)) == [0, 7, 14, 21, 28, 35, 42, 49, 50]


def test_rabi_law(pairs):
    for p in pairs:
        cfg = PropagatorConfig(dt=0.02, t_max=2 * p.rabi_period, sample_stride=20)
        tr = evolve(p.y_O, p, cfg)
        assert np.max(np.abs(tr.p_P - rabi_transfer(p.gap, tr.times))) < 1e-4


def test_time_reversal(pair):
    cfg = PropagatorConfig(dt=0.02, t_max=40.0, sample_stride=10**6, beta=2.0)
    fwd = evolve(pair.y_O.astype(complex), pair, cfg).final_state
    back = evolve(np.conj(fwd), pair, cfg).final_state
    assert np.max(np.abs(np.conj(back) - pair.y_O)) < 1e-8


def test_broken_run_uses_reference(pair):
    cfg = PropagatorConfig(dt=0.02, t_max=1.0)
    tr = evolve(pair.y_O, break_realization(pair), cfg, reference=pair)
    assert tr.s[0] == pytest.approx(1.0)


def test_rejects_bad_states(pair):
    with pytest.raises(ArgumentError):
        evolve(2 * pair.y_O, pair, PropagatorConfig())
    with pytest.raises(ArgumentError):
        evolve(np.ones(5) / np.sqrt(5), pair, PropagatorConfig())


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_state_names_step(pair):
    cfg = PropagatorConfig(dt=0.02, t_max=1.0, sample_stride=10, beta=float("inf"))
    with pytest.raises(NumericError, match="step 10"):
        evolve(pair.y_O, pair, cfg)
    with pytest.raises(NumericError, match="step 3"):
        split_step(pair.y_O, pair.realization, diagonalize(pair.realization), cfg, step=3)
