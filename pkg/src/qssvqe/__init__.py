"""Qumode subspace VQE toolkit: Fock-space gates, SNAP-displacement synthesis,
photon-counting Pauli readout and weighted subspace eigensolvers."""

__version__ = "0.1.0"

from .fock import (
    FockSpace,
    SnapDispCircuit,
    annihilation_matrix,
    apply_circuit,
    circuit_matrix,
    displacement_gate,
    fock_state,
    photon_distribution,
    snap_gate,
)
from .pauli import QubitHamiltonian, exact_spectrum, hamiltonian_matrix, pauli_matrix
from .boson_map import BosonPolynomial, displaced_qho_hamiltonian, truncated_boson_to_qubit
from .optimize import OptimizerConfig
from .synthesis import RotationLibrary, build_rotation_library, synthesize
from .measurement import hamiltonian_expectation
from .vqe import AnsatzSpec, SubspaceObjective, qss_vqe, qubit_ssvqe
