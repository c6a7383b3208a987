"""Batched propagation of many trajectories that share one grid.

Dataset generation evolves thousands of few-qubit trajectories; doing them
one eigendecomposition at a time is LAPACK-overhead bound.  These routines
vectorize across trajectories:

* pure states advance through a truncated Taylor expansion of exp(-i h H),
  split so the phase bound per application stays below ``TAYLOR_MAX_PHASE``
  and the remainder below ~1e-14, i.e. numerically equivalent to the exact
  single-trajectory route (a test pins the two together);
* density matrices advance through the same Strang-split channel as the
  single-trajectory route, with the per-substep eigendecompositions batched.

Everything here is an internal fast path; the public contract lives in
``evolve``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NumericalError
from .evolve import (
    NORM_FATAL,
    TAYLOR_MAX_PHASE,
    TAYLOR_TERMS,
    TimeGrid,
    _bitflip_perms,
)
from .hamiltonians import HamiltonianSpec, hamiltonian_terms
from .paulis import IMAG_FATAL, ObservableSet


def _shared_terms(specs):
    first = specs[0]
    for spec in specs[1:]:
        if (
            spec.kind != first.kind
            or spec.n_qubits != first.n_qubits
            or spec.static != first.static
        ):
            raise ValueError("batched trajectories must share kind, size, and statics")
    return hamiltonian_terms(first)


def _drive_matrix(specs, name, mids) -> np.ndarray:
    return np.stack([np.asarray(spec.drive_at(name, mids), dtype=float) for spec in specs])


def _phase_bound(h_static, terms, drive_mats, h_sub) -> float:
    bound = np.linalg.norm(h_static, 1)
    for (_, term), mat in zip(terms, drive_mats):
        bound += np.abs(mat).max() * np.linalg.norm(term, 1)
    return float(bound * h_sub)


def _expectations_batch(psi: np.ndarray, mats: np.ndarray) -> np.ndarray:
    vals = np.einsum("ri,kij,rj->rk", psi.conj(), mats, psi, optimize=True)
    if np.max(np.abs(vals.imag)) > IMAG_FATAL:
        raise NumericalError("expectation has imaginary part above tolerance")
    return vals.real


def schrodinger_batch(
    specs, psi0: np.ndarray, grid: TimeGrid, observables: ObservableSet
):
    """Evolve a stack of pure states; returns (values (R, T+1, K), max norm drift (R,))."""
    h_static, terms = _shared_terms(specs)
    mids = grid.midpoint_times()
    drive_mats = [_drive_matrix(specs, name, mids) for name, _ in terms]
    h_sub = grid.dt / grid.substeps

    n_inner = max(1, math.ceil(_phase_bound(h_static, terms, drive_mats, h_sub) / TAYLOR_MAX_PHASE))
    h_inner = h_sub / n_inner

    psi = np.array(psi0, dtype=complex)
    static_t = np.ascontiguousarray(h_static.T)
    term_ts = [np.ascontiguousarray(term.T) for _, term in terms]
    mats = observables.matrices()

    values = np.empty((psi.shape[0], grid.n_steps + 1, len(observables)))
    values[:, 0] = _expectations_batch(psi, mats)
    drift = np.zeros(psi.shape[0])

    idx = 0
    for j in range(grid.n_steps):
        for _ in range(grid.substeps):
            coeffs = [mat[:, idx, None] for mat in drive_mats]
            for _ in range(n_inner):
                v = psi
                acc = psi.copy()
                for m in range(1, TAYLOR_TERMS + 1):
                    hv = v @ static_t
                    for coeff, term_t in zip(coeffs, term_ts):
                        hv += coeff * (v @ term_t)
                    v = (-1j * h_inner / m) * hv
                    acc += v
                psi = acc
            idx += 1
        step_drift = np.abs(np.linalg.norm(psi, axis=1) - 1.0)
        if step_drift.max() > NORM_FATAL:
            raise NumericalError(f"batch norm drift {step_drift.max():.3e} at step {j + 1}")
        drift = np.maximum(drift, step_drift)
        values[:, j + 1] = _expectations_batch(psi, mats)
    return values, drift


def lindblad_batch(
    specs, rho0: np.ndarray, grid: TimeGrid, gamma: float, observables: ObservableSet
):
    """Evolve a stack of density matrices; returns (values, max trace drift (R,))."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    h_static, terms = _shared_terms(specs)
    n_qubits = specs[0].n_qubits
    mids = grid.midpoint_times()
    drive_mats = [_drive_matrix(specs, name, mids) for name, _ in terms]
    h_sub = grid.dt / grid.substeps
    perms = _bitflip_perms(n_qubits)
    q = 0.5 * (1.0 - np.exp(-2.0 * gamma * 0.5 * h_sub))

    rho = np.array(rho0, dtype=complex)
    mats = observables.matrices()
    values = np.empty((rho.shape[0], grid.n_steps + 1, len(observables)))
    values[:, 0] = _rho_expectations_batch(rho, mats)
    drift = np.zeros(rho.shape[0])

    def half_channel(r):
        if q == 0.0:
            return r
        for perm in perms:
            r = (1.0 - q) * r + q * r[:, perm][:, :, perm]
        return r

    idx = 0
    for j in range(grid.n_steps):
        for _ in range(grid.substeps):
            h_batch = np.broadcast_to(h_static, (rho.shape[0],) + h_static.shape).copy()
            for (_, term), mat in zip(terms, drive_mats):
                h_batch += mat[:, idx, None, None] * term
            rho = half_channel(rho)
            w, v = np.linalg.eigh(h_batch)
            u = (v * np.exp(-1j * h_sub * w)[:, None, :]) @ v.conj().transpose(0, 2, 1)
            rho = u @ rho @ u.conj().transpose(0, 2, 1)
            rho = half_channel(rho)
            idx += 1
        step_drift = np.abs(np.einsum("rii->r", rho) - 1.0)
        if step_drift.max() > NORM_FATAL:
            raise NumericalError(f"batch trace drift {step_drift.max():.3e} at step {j + 1}")
        drift = np.maximum(drift, step_drift)
        values[:, j + 1] = _rho_expectations_batch(rho, mats)
    return values, drift


def _rho_expectations_batch(rho: np.ndarray, mats: np.ndarray) -> np.ndarray:
    vals = np.einsum("kij,rji->rk", mats, rho, optimize=True)
    if np.max(np.abs(vals.imag)) > IMAG_FATAL:
        raise NumericalError("expectation has imaginary part above tolerance")
    return vals.real
