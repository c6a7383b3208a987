import numpy as np
import pytest

from hamflow.dynamics import (
    ObservableSet,
    TimeGrid,
    evolve_schrodinger,
    nmr_zz,
    product_state,
    rabi_x,
    step_constant_hamiltonian,
    warp_time_grid,
)
from hamflow.dynamics.hamiltonians import NMR_B0_HZ, build_hamiltonian
from hamflow.errors import DomainError
from hamflow.fields import DrivingField, constant_field, uniform_grid


def test_constant_field_gives_uniform_durations():
    field = constant_field(2.0, dt=0.1, horizon=1.0)
    durations = warp_time_grid(field, b0=4.0, dt=0.1, n_steps=10)
    assert durations.shape == (10,)
    assert np.max(np.abs(durations - 0.05)) < 1e-15


def test_warped_constant_run_reproduces_modulated_run():
    """Evolving under B(t) for time T equals evolving under B0 for the warped
    durations, because the drive is the only term in the generator."""
    rng = np.random.default_rng(3)
    times = uniform_grid(0.1, 4.0)
    values = 1.5 + 0.8 * np.sin(1.3 * times) + 0.1 * rng.standard_normal(times.size)
    field = DrivingField(times, values)
    b0 = 1.5
    grid = TimeGrid(dt=0.1, n_steps=40)
    obs = ObservableSet.ring_default(1)
    psi0 = product_state([0.0, 0.0, 1.0])

    modulated = evolve_schrodinger(rabi_x(field), psi0, grid, obs)

    h0 = build_hamiltonian(rabi_x(b0), 0.0)
    durations = warp_time_grid(field, b0=b0, dt=0.1, n_steps=40)
    states = step_constant_hamiltonian(h0, psi0, durations)
    warped = np.stack([[np.vdot(s, m @ s).real for m in obs.matrices()] for s in states])
    assert np.max(np.abs(modulated.values - warped)) < 1e-8


def test_warp_equivalence_for_two_qubit_coupling():
    rng = np.random.default_rng(44)
    dt = 2e-4
    times = uniform_grid(dt, 0.05)
    values = NMR_B0_HZ * (1.0 + 0.3 * np.sin(90.0 * times))
    field = DrivingField(times, values)
    grid = TimeGrid(dt=dt, n_steps=times.size - 1)
    obs = ObservableSet.two_qubit_all()
    psi0 = product_state([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])

    modulated = evolve_schrodinger(nmr_zz(field), psi0, grid, obs)

    h0 = build_hamiltonian(nmr_zz(NMR_B0_HZ), 0.0)
    durations = warp_time_grid(field, b0=NMR_B0_HZ, dt=dt, n_steps=times.size - 1)
    states = step_constant_hamiltonian(h0, psi0, durations)
    warped = np.stack([[np.vdot(s, m @ s).real for m in obs.matrices()] for s in states])
    assert np.max(np.abs(modulated.values - warped)) < 1e-8


def test_negative_field_yields_negative_durations():
    field = constant_field(-1.0, dt=0.1, horizon=1.0)
    durations = warp_time_grid(field, b0=2.0, dt=0.1, n_steps=10)
    assert np.all(durations < 0)
    # stepping backwards is legal for a Hermitian generator
    h = build_hamiltonian(rabi_x(2.0), 0.0)
    states = step_constant_hamiltonian(h, product_state([0.0, 0.0, 1.0]), durations)
    assert np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)) < 1e-12


def test_zero_reference_amplitude_rejected():
    field = constant_field(1.0, dt=0.1, horizon=1.0)
    with pytest.raises(ValueError):
        warp_time_grid(field, b0=0.0, dt=0.1, n_steps=5)


def test_warp_beyond_field_domain_rejected():
    field = constant_field(1.0, dt=0.1, horizon=1.0)
    with pytest.raises(DomainError):
        warp_time_grid(field, b0=1.0, dt=0.1, n_steps=200)
