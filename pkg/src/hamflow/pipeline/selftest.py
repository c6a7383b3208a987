"""Fast physics and gradient oracles, runnable as one suite.

These are the checks that need no training: closed-form propagation laws,
integrator cross-validation, sampler statistics, finite-difference gradients,
and the exchange-oscillation frequency.  Each check returns a CheckResult; the
suite is deterministic and sized to finish in a few minutes on one core.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..dynamics import (
    NMR_B0_HZ,
    ObservableSet,
    TimeGrid,
    build_hamiltonian,
    density_from_state,
    evolve_lindblad,
    evolve_schrodinger,
    nmr_zz,
    product_state,
    rabi_x,
    schrodinger_states,
    short_time_expansion,
    step_constant_hamiltonian,
    tfim_ring,
    warp_time_grid,
)
from ..fields import (
    DrivingField,
    GPParams,
    constant_field,
    gp_correlation_matrix,
    sample_gp,
    sample_gp_mixture,
    uniform_grid,
)
from ..neural import ModelConfig, gradient_check, init_params, model_backward, model_forward, mse_grad, mse_loss
from .protocols import swap_frequency_check


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (limit {self.threshold:.3e}, {self.seconds:.1f}s)"


def _result(name, value, threshold, t0) -> CheckResult:
    return CheckResult(name, float(value), float(threshold), bool(value <= threshold), time.time() - t0)


def check_analytic_oracles() -> CheckResult:
    """Rabi rotation, conditional ZZ phase, and damped-channel decay vs closed forms."""
    t0 = time.time()
    worst = 0.0

    # Rabi: constant B -> <Z>(t) = cos(2Bt), <Y>(t) = -sin(2Bt) from |0>
    b = 0.8
    grid = TimeGrid(dt=0.05, n_steps=100)
    series = evolve_schrodinger(
        rabi_x(constant_field(b, 0.05, 5.0)),
        product_state([[0.0, 0.0, 1.0]]),
        grid,
        ObservableSet.from_names(1, ["X0", "Y0", "Z0"]),
    )
    worst = max(worst, float(np.abs(series.column("Z0") - np.cos(2 * b * grid.times)).max()))
    worst = max(worst, float(np.abs(series.column("Y0") + np.sin(2 * b * grid.times)).max()))

    # ZZ: constant B -> <X1>(t) = cos(pi B t) from |0+>
    b_hz = NMR_B0_HZ
    grid_zz = TimeGrid(dt=2e-4, n_steps=100)
    series_zz = evolve_schrodinger(
        nmr_zz(constant_field(b_hz, 2e-4, 0.02)),
        product_state([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
        grid_zz,
        ObservableSet.two_qubit_all(),
    )
    worst = max(worst, float(np.abs(series_zz.column("X1") - np.cos(np.pi * b_hz * grid_zz.times)).max()))

    # bit-flip channel at zero Hamiltonian: <Z>(t) = exp(-2 gamma t)
    gamma = 0.3
    grid_bf = TimeGrid(dt=0.05, n_steps=60)
    series_bf = evolve_lindblad(
        tfim_ring(constant_field(0.0, 0.05, 3.0), n_qubits=3, j_coupling=0.0),
        density_from_state(product_state([[0, 0, 1]] * 3)),
        grid_bf,
        gamma,
        ObservableSet.from_names(3, ["Z0", "Z1", "Z2"]),
    )
    decay = np.exp(-2 * gamma * grid_bf.times)
    for name in ("Z0", "Z1", "Z2"):
        worst = max(worst, float(np.abs(series_bf.column(name) - decay).max()))
    return _result("analytic_oracles", worst, 1e-8, t0)


def check_invariants() -> CheckResult:
    """Norm preservation over 100 random GP-driven runs at N=5."""
    t0 = time.time()
    worst = 0.0
    rng = np.random.default_rng(2024)
    grid = TimeGrid(dt=0.1, n_steps=50)
    for _ in range(100):
        field = sample_gp_mixture(rng, dt=0.1, horizon=5.0)
        z = rng.uniform(-1, 1)
        phi = rng.uniform(0, 2 * np.pi)
        s = np.sqrt(1 - z * z)
        bloch = [s * np.cos(phi), s * np.sin(phi), z]
        states = schrodinger_states(tfim_ring(field, n_qubits=5), product_state([bloch] * 5), grid)
        worst = max(worst, float(np.abs(np.linalg.norm(states, axis=1) - 1.0).max()))
    return _result("norm_invariants_100_runs", worst, 1e-9, t0)


def check_integrator_equivalence() -> CheckResult:
    """Eigendecomposition stepping vs 4th-order stepping at N=3.

    Both integrators walk the identical piecewise-constant Hamiltonian
    sequence, so the residual isolates the stepping rule itself.
    """
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst = 0.0
    grid = TimeGrid(dt=0.1, n_steps=15, substeps=300)
    for _ in range(5):
        field = sample_gp_mixture(rng, dt=0.1, horizon=1.5)
        spec = tfim_ring(field, n_qubits=3)
        psi0 = product_state([_sphere(rng) for _ in range(3)])
        sa = schrodinger_states(spec, psi0, grid, method="exact")
        sb = schrodinger_states(spec, psi0, grid, method="rk4")
        worst = max(worst, float(np.abs(sa - sb).max()))
    return _result("integrator_equivalence_n3", worst, 1e-8, t0)


def _sphere(rng) -> list:
    z = rng.uniform(-1, 1)
    phi = rng.uniform(0, 2 * np.pi)
    s = np.sqrt(1 - z * z)
    return [s * np.cos(phi), s * np.sin(phi), z]


def check_expansion_order() -> CheckResult:
    """Halving t must shrink the quadratic expansion's truncation gap ~8x.

    Value reported is the worst |ratio - 8| over 20 random 1-2 qubit
    instances; the [6, 10] window maps to a threshold of 2.
    """
    t0 = time.time()
    rng = np.random.default_rng(15)
    worst = 0.0
    count = 0
    while count < 20:
        n = int(rng.integers(1, 3))
        names = ["X0", "Y0", "Z0"] if n == 1 else ["X0X1", "Y0Y1", "Z0", "Z1", "X0"]
        ops = ObservableSet.from_names(n, names).matrices()
        weights = rng.uniform(-1.0, 1.0, size=len(names))
        rho0 = density_from_state(product_state([_sphere(rng) for _ in range(n)]))
        t_short = 0.02
        a_mat = np.tensordot(weights, ops, axes=1)
        w, v = np.linalg.eigh(a_mat)
        d = []
        for t in (t_short, t_short / 2):
            u = (v * np.exp(-1j * w * t)) @ v.conj().T
            exact = u @ rho0 @ u.conj().T
            approx = short_time_expansion(rho0, weights, ops, t)
            d.append(float(np.linalg.norm(exact - approx)))
        if d[0] < 1e-13:  # degenerate instance; ratio meaningless
            continue
        worst = max(worst, abs(d[0] / d[1] - 8.0))
        count += 1
    return _result("expansion_third_order", worst, 2.0, t0)


def check_warp_equivalence() -> CheckResult:
    """Warped constant-coupling stepping vs direct time-dependent evolution."""
    t0 = time.time()
    rng = np.random.default_rng(33)
    obs = ObservableSet.two_qubit_all()
    h0 = build_hamiltonian(nmr_zz(NMR_B0_HZ), 0.0)
    grid = TimeGrid(dt=2e-4, n_steps=60, substeps=20)
    worst = 0.0
    for _ in range(20):
        times = uniform_grid(2e-4, 0.012)
        wig = sample_gp(GPParams(c0=0.09, sigma=rng.uniform(0.002, 0.01), dt=2e-4, horizon=0.012), rng)
        field = DrivingField(times, NMR_B0_HZ * (1.0 + wig.values))
        psi0 = product_state([_sphere(rng), _sphere(rng)])
        direct = evolve_schrodinger(nmr_zz(field), psi0, grid, obs)
        durations = warp_time_grid(field, NMR_B0_HZ, 2e-4, 60)
        states = step_constant_hamiltonian(h0, psi0, durations)
        warped = np.einsum("ti,kij,tj->tk", states.conj(), obs.matrices(), states).real
        worst = max(worst, float(np.abs(direct.values - warped).max()))
    return _result("warp_equivalence", worst, 1e-8, t0)


def check_gp_statistics() -> CheckResult:
    """Sample covariance of 10,000 draws vs the target kernel at lags 0, 5, 10."""
    t0 = time.time()
    params = GPParams(c0=2.0, sigma=3.0, dt=0.1, horizon=5.0)
    rng = np.random.default_rng(99)
    draws = np.stack([sample_gp(params, rng).values for _ in range(10_000)])
    cov = (draws.T @ draws) / draws.shape[0]
    target = gp_correlation_matrix(params)
    worst = 0.0
    for lag in (0, 5, 10):
        est = np.diagonal(cov, offset=lag).mean()
        ref = np.diagonal(target, offset=lag).mean()
        worst = max(worst, abs(est - ref) / abs(ref))

    # degenerate cases must be exact
    zero_amp = sample_gp(GPParams(c0=0.0, sigma=3.0, dt=0.1, horizon=5.0), rng)
    if float(np.abs(zero_amp.values).max()) != 0.0:
        worst = max(worst, 1.0)
    return _result("gp_sampler_statistics", worst, 0.05, t0)


def check_gradients() -> CheckResult:
    """Finite-difference probe of the full BPTT stack, both io layouts."""
    t0 = time.time()
    rng = np.random.default_rng(5)
    worst = 0.0
    for in_w, out_w in ((2, 21), (22, 1)):
        cfg = ModelConfig(input_width=in_w, output_width=out_w, moment_width=3, hidden_size=6, n_layers=2, encoder_layers=2)
        params = init_params(cfg, rng)
        x = rng.normal(size=(3, 7, in_w))
        o0 = rng.normal(size=(3, 3))
        y = rng.normal(size=(3, 7, out_w))

        def objective(p):
            pred, cache = model_forward(p, cfg, x, o0)
            return mse_loss(pred, y), model_backward(p, cfg, cache, mse_grad(pred, y))

        worst = max(worst, gradient_check(objective, params, rng, n_probes=100))
    return _result("gradient_check", worst, 1e-5, t0)


def check_swap_frequency() -> CheckResult:
    """Zero-detuning exchange oscillation at 25.5 MHz within 1%."""
    t0 = time.time()
    f = swap_frequency_check()
    return _result("swap_frequency", abs(f - 25.5) / 25.5, 0.01, t0)


SELFTEST_CHECKS = (
    check_analytic_oracles,
    check_invariants,
    check_integrator_equivalence,
    check_expansion_order,
    check_warp_equivalence,
    check_gp_statistics,
    check_gradients,
    check_swap_frequency,
)


def run_selftest(verbose: bool = True) -> list:
    results = []
    for fn in SELFTEST_CHECKS:
        res = fn()
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    return results
