"""Hamiltonian families for driven spin systems.

Every Hamiltonian here decomposes as H(t) = H_static + sum_k d_k(t) * H_k
with scalar drives d_k.  ``hamiltonian_terms`` returns that decomposition
once; integrators then assemble H(t) per substep from cached dense terms.

Unit conventions (hbar = 1, Hamiltonians in angular frequency):

* ``RABI_X``      one qubit, H = B(t) sigma^x; B and t dimensionless.
* ``TFIM_RING``   H = -sum_i [J sigma^z_i sigma^z_{i+1} + B(t) sigma^x_i]
                  on a periodic ring, site N wrapping to 0; J and B share
                  the dimensionless energy unit, N >= 3.
* ``NMR_ZZ``      H = (pi/2) B(t) sigma^z_0 sigma^z_1 with B in Hz and t in
                  seconds, so a constant B gives <sigma^x_1> = cos(pi B t).
* ``SC_SWAP_DETUNED``  H = 2 pi [ (B0/2)(sigma^x sigma^x + sigma^y sigma^y)
                  + D1(t) sigma^z_0 + D2(t) sigma^z_1 ] with B0 and the
                  detunings in MHz and t in microseconds.  The 2 pi converts
                  the quoted ordinary frequencies to angular ones, which is
                  what puts the zero-detuning SWAP oscillation at 2 B0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..fields import DrivingField
from .paulis import PauliString, kron_all, PAULI

KINDS = ("RABI_X", "TFIM_RING", "NMR_ZZ", "SC_SWAP_DETUNED")

NMR_B0_HZ = 697.4
SC_B0_MHZ = 12.75


@dataclass
class HamiltonianSpec:
    """A Hamiltonian family plus its static couplings and named drives.

    ``drives`` maps drive names to a ``DrivingField`` or to a plain float for
    a constant drive.  Which names are required depends on the kind: "B" for
    RABI_X / TFIM_RING / NMR_ZZ, "delta1" and "delta2" for SC_SWAP_DETUNED.
    """

    kind: str
    n_qubits: int
    static: dict = dc_field(default_factory=dict)
    drives: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        required = {
            "RABI_X": ("B",),
            "TFIM_RING": ("B",),
            "NMR_ZZ": ("B",),
            "SC_SWAP_DETUNED": ("delta1", "delta2"),
        }[self.kind]
        missing = [name for name in required if name not in self.drives]
        if missing:
            raise ValueError(f"{self.kind} needs drives {missing}")
        if self.kind == "RABI_X" and self.n_qubits != 1:
            raise ValueError("RABI_X is a single-qubit system")
        if self.kind == "TFIM_RING" and self.n_qubits < 3:
            raise ValueError("TFIM_RING needs at least 3 sites")
        if self.kind in ("NMR_ZZ", "SC_SWAP_DETUNED") and self.n_qubits != 2:
            raise ValueError(f"{self.kind} is a two-qubit system")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def drive_at(self, name: str, t) -> np.ndarray:
        drive = self.drives[name]
        if isinstance(drive, DrivingField):
            return drive.at(t)
        return np.full(np.shape(t), float(drive)) if np.ndim(t) else float(drive)


def _site_op(n: int, site: int, axis: str) -> np.ndarray:
    return PauliString(n, ((site, axis),)).matrix()


def hamiltonian_terms(spec: HamiltonianSpec):
    """Decompose the Hamiltonian as (H_static, [(drive_name, H_k), ...])."""
    n = spec.n_qubits
    if spec.kind == "RABI_X":
        return np.zeros((2, 2), dtype=complex), [("B", PAULI["X"].copy())]
    if spec.kind == "TFIM_RING":
        j_coupling = float(spec.static.get("J", 1.0))
        h_static = np.zeros((spec.dim, spec.dim), dtype=complex)
        for i in range(n):
            h_static -= j_coupling * (_site_op(n, i, "Z") @ _site_op(n, (i + 1) % n, "Z"))
        h_drive = np.zeros_like(h_static)
        for i in range(n):
            h_drive -= _site_op(n, i, "X")
        return h_static, [("B", h_drive)]
    if spec.kind == "NMR_ZZ":
        zz = kron_all([PAULI["Z"], PAULI["Z"]])
        return np.zeros((4, 4), dtype=complex), [("B", (np.pi / 2.0) * zz)]
    # SC_SWAP_DETUNED
    b0 = float(spec.static.get("B0", SC_B0_MHZ))
    xx = kron_all([PAULI["X"], PAULI["X"]])
    yy = kron_all([PAULI["Y"], PAULI["Y"]])
    h_static = 2.0 * np.pi * (b0 / 2.0) * (xx + yy)
    z0 = 2.0 * np.pi * _site_op(2, 0, "Z")
    z1 = 2.0 * np.pi * _site_op(2, 1, "Z")
    return h_static, [("delta1", z0), ("delta2", z1)]


def build_hamiltonian(spec: HamiltonianSpec, t: float) -> np.ndarray:
    """Dense H(t) with every drive evaluated at time t."""
    h_static, drive_terms = hamiltonian_terms(spec)
    h = h_static.copy()
    for name, term in drive_terms:
        h += float(spec.drive_at(name, t)) * term
    return h


def tfim_ring(field, n_qubits: int = 5, j_coupling: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec("TFIM_RING", n_qubits, {"J": j_coupling}, {"B": field})


def rabi_x(field) -> HamiltonianSpec:
    return HamiltonianSpec("RABI_X", 1, {}, {"B": field})


def nmr_zz(field) -> HamiltonianSpec:
    return HamiltonianSpec("NMR_ZZ", 2, {}, {"B": field})


def sc_swap(delta1, delta2, b0: float = SC_B0_MHZ) -> HamiltonianSpec:
    return HamiltonianSpec(
        "SC_SWAP_DETUNED", 2, {"B0": b0}, {"delta1": delta1, "delta2": delta2}
    )
