"""Pauli algebra on small spin registers.

Operators are dense 2^N x 2^N complex matrices built as Kronecker products in
the computational basis, with qubit 0 the most significant tensor factor.
Dense is the fastest honest representation at the register sizes this package
simulates (N <= 11).

States are plain complex numpy arrays: a vector of length 2^N for a pure
state, a (2^N, 2^N) matrix for a density matrix.  ``check_state`` and
``check_density`` enforce the invariants tests rely on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError

AXES = "XYZ"

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# imaginary residue of a Pauli expectation: discarded below, fatal above
IMAG_DISCARD = 1e-10
IMAG_FATAL = 1e-8

_NAME_RE = re.compile(r"([XYZ])(\d+)")


def kron_all(mats):
    """Kronecker product of a sequence of matrices, first factor most significant."""
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class PauliString:
    """A product of single-site Pauli operators on an N-qubit register.

    ``factors`` maps distinct sites to axes, e.g. ((0, "X"), (2, "Y")) is
    sigma_0^x sigma_2^y.  The name of that string is "X0Y2".
    """

    n_qubits: int
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        seen = set()
        for site, axis in self.factors:
            if axis not in AXES:
                raise ValueError(f"invalid Pauli axis {axis!r}")
            if not 0 <= site < self.n_qubits:
                raise ValueError(f"site {site} outside register of {self.n_qubits}")
            if site in seen:
                raise ValueError(f"site {site} appears twice")
            seen.add(site)
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @property
    def name(self) -> str:
        return "".join(f"{axis}{site}" for site, axis in self.factors) or "I"

    @classmethod
    def from_name(cls, n_qubits: int, name: str) -> "PauliString":
        if name == "I":
            return cls(n_qubits, ())
        pos = 0
        factors = []
        for m in _NAME_RE.finditer(name):
            if m.start() != pos:
                raise ValueError(f"cannot parse observable name {name!r}")
            factors.append((int(m.group(2)), m.group(1)))
            pos = m.end()
        if pos != len(name) or not factors:
            raise ValueError(f"cannot parse observable name {name!r}")
        return cls(n_qubits, tuple(factors))

    def matrix(self) -> np.ndarray:
        by_site = dict(self.factors)
        return kron_all([PAULI[by_site.get(q, "I")] for q in range(self.n_qubits)])


class ObservableSet:
    """An ordered collection of Pauli strings measured together.

    The order fixes the column layout of every series, CSV, and network
    output derived from the set.
    """

    def __init__(self, strings):
        strings = list(strings)
        if not strings:
            raise ValueError("observable set is empty")
        n = strings[0].n_qubits
        if any(s.n_qubits != n for s in strings):
            raise ValueError("observables act on registers of different sizes")
        names = [s.name for s in strings]
        if len(set(names)) != len(names):
            raise ValueError("duplicate observable in set")
        self.strings = strings
        self.names = names
        self.n_qubits = n
        self._matrices = None

    def __len__(self):
        return len(self.strings)

    @classmethod
    def ring_default(cls, n_qubits: int) -> "ObservableSet":
        """Site-0 singles plus site-(0, l) pairs out to the ring midpoint.

        For a translationally invariant ring the correlators at separation l
        are captured once, giving 3 + 9*floor(N/2) observables.
        """
        strings = [PauliString(n_qubits, ((0, ax),)) for ax in AXES]
        for l in range(1, n_qubits // 2 + 1):
            for ax_a in AXES:
                for ax_b in AXES:
                    strings.append(PauliString(n_qubits, ((0, ax_a), (l, ax_b))))
        return cls(strings)

    @classmethod
    def two_qubit_all(cls) -> "ObservableSet":
        """All 15 non-identity Pauli strings on two qubits."""
        strings = []
        for ax in AXES:
            strings.append(PauliString(2, ((0, ax),)))
            strings.append(PauliString(2, ((1, ax),)))
        for ax_a in AXES:
            for ax_b in AXES:
                strings.append(PauliString(2, ((0, ax_a), (1, ax_b))))
        return cls(strings)

    @classmethod
    def from_names(cls, n_qubits: int, names) -> "ObservableSet":
        return cls([PauliString.from_name(n_qubits, n) for n in names])

    def matrices(self) -> np.ndarray:
        """Dense operator stack of shape (n_obs, 2^N, 2^N), cached."""
        if self._matrices is None:
            self._matrices = np.stack([s.matrix() for s in self.strings])
        return self._matrices


def check_state(psi: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size & (psi.size - 1):
        raise ValueError("state vector length must be a power of two")
    if abs(np.linalg.norm(psi) - 1.0) > atol:
        raise NumericalError(f"state norm deviates by {abs(np.linalg.norm(psi) - 1.0):.3e}")
    return psi


def check_density(rho: np.ndarray, atol: float = 1e-8, psd_slack: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise NumericalError(f"trace deviates from 1 by {abs(np.trace(rho) - 1.0):.3e}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise NumericalError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -psd_slack:
        raise NumericalError(f"density matrix has eigenvalue {w.min():.3e}")
    return rho


def product_state(blochs) -> np.ndarray:
    """Pure product state from one Bloch vector per qubit.

    A single vector of shape (3,) gives a one-qubit state, shape (n, 3) an
    n-qubit register.  The global phase is fixed by making each qubit's |0>
    amplitude real and nonnegative (the |1> amplitude is real when the |0>
    amplitude vanishes), so equal Bloch input always yields bit-identical
    amplitudes.
    """
    blochs = np.atleast_2d(np.asarray(blochs, dtype=float))
    if blochs.shape[1] != 3:
        raise ValueError("Bloch vectors must have three components")
    qubits = []
    for b in blochs:
        r = np.linalg.norm(b)
        if abs(r - 1.0) > 1e-9:
            raise ValueError(f"Bloch vector norm {r} is not 1")
        bx, by, bz = b / r
        a0 = np.sqrt(max((1.0 + bz) / 2.0, 0.0))
        if a0 > 1e-12:
            a1 = (bx + 1j * by) / (2.0 * a0)
        else:
            a0, a1 = 0.0, 1.0
        qubits.append(np.array([a0, a1], dtype=complex))
    psi = qubits[0]
    for q in qubits[1:]:
        psi = np.kron(psi, q)
    return psi


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def _real_expectation(value: complex) -> float:
    if abs(value.imag) > IMAG_FATAL:
        raise NumericalError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def expectation(state: np.ndarray, obs) -> float:
    """Expectation value of a Pauli string (or dense Hermitian matrix).

    Accepts a state vector or a density matrix; the imaginary residue is
    discarded when below 1e-10 and fatal above 1e-8.
    """
    mat = obs.matrix() if isinstance(obs, PauliString) else np.asarray(obs)
    state = np.asarray(state)
    if state.ndim == 1:
        return _real_expectation(np.vdot(state, mat @ state))
    return _real_expectation(np.einsum("ij,ji->", state, mat))


def expectations(state: np.ndarray, obs_set: ObservableSet) -> np.ndarray:
    """Expectation of every observable in the set, in set order."""
    mats = obs_set.matrices()
    state = np.asarray(state)
    if state.ndim == 1:
        vals = np.einsum("i,kij,j->k", state.conj(), mats, state)
    else:
        vals = np.einsum("kij,ji->k", mats, state)
    bad = np.max(np.abs(vals.imag))
    if bad > IMAG_FATAL:
        raise NumericalError(f"expectation has imaginary part {bad:.3e}")
    return vals.real


def first_moments(state: np.ndarray, sites) -> np.ndarray:
    """Concatenated (<X_i>, <Y_i>, <Z_i>) over the given sites."""
    n = int(np.log2(np.asarray(state).shape[0]))
    out = []
    for site in sites:
        for ax in AXES:
            out.append(expectation(state, PauliString(n, ((site, ax),))))
    return np.array(out)
