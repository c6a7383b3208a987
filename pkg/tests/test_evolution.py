import numpy as np
import pytest
import scipy.linalg

from hamflow.dynamics import (
    ObservableSet,
    TimeGrid,
    build_hamiltonian,
    evolve_schrodinger,
    product_state,
    rabi_x,
    schrodinger_batch,
    schrodinger_states,
    tfim_ring,
)
from hamflow.errors import DomainError, NumericalError
from hamflow.fields import GPParams, sample_gp, sample_gp_mixture


def test_rabi_oracle():
    """Constant X drive: <Z>(t) = cos(2Bt), <Y>(t) = -sin(2Bt)."""
    grid = TimeGrid(dt=0.05, n_steps=40)
    series = evolve_schrodinger(
        rabi_x(1.0), product_state([0.0, 0.0, 1.0]), grid, ObservableSet.ring_default(1)
    )
    t = grid.times
    assert np.max(np.abs(series.column("Z0") - np.cos(2 * t))) < 1e-9
    assert np.max(np.abs(series.column("Y0") + np.sin(2 * t))) < 1e-9
    assert np.max(np.abs(series.column("X0"))) < 1e-9


def test_tfim_eigenstate_stays_put():
    """With B = 0 the all-up state is an eigenstate: every observable is static."""
    grid = TimeGrid(dt=0.1, n_steps=30)
    psi0 = product_state([[0.0, 0.0, 1.0]] * 4)
    series = evolve_schrodinger(tfim_ring(0.0, n_qubits=4), psi0, grid, ObservableSet.ring_default(4))
    assert np.max(np.abs(series.values - series.values[0])) < 1e-10


def test_energy_conserved_for_constant_drive():
    rng = np.random.default_rng(2)
    spec = tfim_ring(1.3, n_qubits=4)
    h = build_hamiltonian(spec, 0.0)
    b = rng.standard_normal((4, 3))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    states = schrodinger_states(spec, product_state(b), TimeGrid(dt=0.1, n_steps=20))
    energies = np.einsum("ti,ij,tj->t", states.conj(), h, states).real
    assert np.max(np.abs(energies - energies[0])) < 1e-9


def test_stepping_matches_direct_exponential():
    """Brute-force equivalence against scipy's Pade expm for constant H."""
    rng = np.random.default_rng(9)
    b = rng.standard_normal((3, 3))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    psi0 = product_state(b)
    spec = tfim_ring(0.8, n_qubits=3)
    h = build_hamiltonian(spec, 0.0)
    grid = TimeGrid(dt=0.1, n_steps=20)
    states = schrodinger_states(spec, psi0, grid)
    for k in (5, 20):
        ref = scipy.linalg.expm(-1j * h * grid.times[k]) @ psi0
        assert np.linalg.norm(states[k] - ref) < 1e-8


def test_rk4_matches_direct_exponential():
    rng = np.random.default_rng(10)
    b = rng.standard_normal((3, 3))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    psi0 = product_state(b)
    spec = tfim_ring(0.8, n_qubits=3)
    h = build_hamiltonian(spec, 0.0)
    grid = TimeGrid(dt=0.1, n_steps=20, substeps=60)
    states = schrodinger_states(spec, psi0, grid, method="rk4")
    ref = scipy.linalg.expm(-1j * h * grid.times[-1]) @ psi0
    assert np.linalg.norm(states[-1] - ref) < 1e-8


def test_norm_conserved_on_random_gp_runs():
    rng = np.random.default_rng(21)
    for _ in range(10):
        field = sample_gp_mixture(rng, dt=0.1, horizon=5.0)
        b = rng.standard_normal(3)
        b /= np.linalg.norm(b)
        psi0 = product_state(np.tile(b, (5, 1)))
        states = schrodinger_states(tfim_ring(field, n_qubits=5), psi0, TimeGrid(dt=0.1, n_steps=50))
        drift = np.abs(np.linalg.norm(states, axis=1) - 1.0)
        assert drift.max() < 1e-9


def test_batch_route_matches_single_route():
    """The vectorized Taylor propagator must agree with per-record eigh stepping."""
    rng = np.random.default_rng(31)
    grid = TimeGrid(dt=0.1, n_steps=25)
    obs = ObservableSet.ring_default(4)
    specs, psis = [], []
    for _ in range(8):
        specs.append(tfim_ring(sample_gp_mixture(rng, dt=0.1, horizon=2.5), n_qubits=4))
        b = rng.standard_normal(3)
        b /= np.linalg.norm(b)
        psis.append(product_state(np.tile(b, (4, 1))))
    batch_vals, drift = schrodinger_batch(specs, np.stack(psis), grid, obs)
    assert drift.max() < 1e-9
    for r, (spec, psi) in enumerate(zip(specs, psis)):
        single = evolve_schrodinger(spec, psi, grid, obs)
        assert np.max(np.abs(batch_vals[r] - single.values)) < 1e-11


def test_observables_within_physical_range():
    rng = np.random.default_rng(4)
    field = sample_gp(GPParams(c0=4.0, sigma=1.0, horizon=5.0), rng)
    b = rng.standard_normal(3)
    b /= np.linalg.norm(b)
    series = evolve_schrodinger(
        tfim_ring(field, n_qubits=3),
        product_state(np.tile(b, (3, 1))),
        TimeGrid(dt=0.1, n_steps=50),
        ObservableSet.ring_default(3),
    )
    series.check_range(1e-9)


def test_coarse_rk4_raises_on_norm_drift():
    spec = tfim_ring(25.0, n_qubits=3)
    psi0 = product_state([[1.0, 0.0, 0.0]] * 3)
    with pytest.raises(NumericalError):
        schrodinger_states(spec, psi0, TimeGrid(dt=0.5, n_steps=4, substeps=1), method="rk4")


def test_field_domain_checked():
    field = sample_gp(GPParams(c0=1.0, sigma=2.0, horizon=2.0), np.random.default_rng(0))
    spec = tfim_ring(field, n_qubits=3)
    psi0 = product_state([[0.0, 0.0, 1.0]] * 3)
    with pytest.raises(DomainError):
        schrodinger_states(spec, psi0, TimeGrid(dt=0.1, n_steps=100))


def test_series_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(14)
    grid = TimeGrid(dt=0.1, n_steps=12)
    b = rng.standard_normal(3)
    b /= np.linalg.norm(b)
    series = evolve_schrodinger(
        tfim_ring(1.1, n_qubits=3),
        product_state(np.tile(b, (3, 1))),
        grid,
        ObservableSet.ring_default(3),
    )
    path = tmp_path / "series.csv"
    series.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "t," + ",".join(series.names)
    back = type(series).from_csv(path)
    assert back.names == series.names
    assert np.array_equal(back.values, series.values)
    assert np.array_equal(back.times, series.times)
