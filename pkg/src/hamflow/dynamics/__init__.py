"""Spin registers, Hamiltonian families, and exact time evolution."""

from .paulis import (
    AXES,
    PAULI,
    ObservableSet,
    PauliString,
    check_density,
    check_state,
    density_from_state,
    expectation,
    expectations,
    first_moments,
    kron_all,
    product_state,
)
from .hamiltonians import (
    KINDS,
    NMR_B0_HZ,
    SC_B0_MHZ,
    HamiltonianSpec,
    build_hamiltonian,
    hamiltonian_terms,
    nmr_zz,
    rabi_x,
    sc_swap,
    tfim_ring,
)
from .evolve import (
    ObservableSeries,
    TimeGrid,
    evolve_lindblad,
    evolve_schrodinger,
    lindblad_states,
    schrodinger_states,
    short_time_expansion,
    step_constant_hamiltonian,
    warp_time_grid,
)
from .batch import lindblad_batch, schrodinger_batch

__all__ = [
    "AXES",
    "PAULI",
    "KINDS",
    "NMR_B0_HZ",
    "SC_B0_MHZ",
    "HamiltonianSpec",
    "ObservableSeries",
    "ObservableSet",
    "PauliString",
    "TimeGrid",
    "build_hamiltonian",
    "check_density",
    "check_state",
    "density_from_state",
    "evolve_lindblad",
    "evolve_schrodinger",
    "expectation",
    "expectations",
    "first_moments",
    "hamiltonian_terms",
    "kron_all",
    "lindblad_batch",
    "lindblad_states",
    "nmr_zz",
    "product_state",
    "rabi_x",
    "sc_swap",
    "schrodinger_batch",
    "schrodinger_states",
    "short_time_expansion",
    "step_constant_hamiltonian",
    "tfim_ring",
    "warp_time_grid",
]
