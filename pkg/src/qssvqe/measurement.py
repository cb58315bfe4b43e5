"""Pauli and Hamiltonian expectation values from photon-number readout.

X and Y factors are rotated into Z by applying the precompiled ``H_j`` /
``W_j`` circuits (ascending ``j``) before reading the photon distribution;
diagonal words are then signed sums over Fock indices.
"""

from dataclasses import dataclass

import numpy as np

from .fock import apply_circuit, circuit_matrix, photon_distribution
from .pauli import check_word, hamiltonian_matrix, index_to_bits, is_diagonal, pauli_matrix

MODES = ("exact", "rotation", "sampled")


@dataclass(frozen=True)
class MeasurementDistribution:
    probabilities: np.ndarray
    shots: int | None = None

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1 within 1e-9")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)


def parity_signs(word):
    """``(-1)^(sum of bits at Z positions)`` for every Fock index."""
    nq = len(word)
    zpos = [k for k, c in enumerate(word) if c == "Z"]
    return np.array(
        [(-1) ** sum(index_to_bits(n, nq)[k] for k in zpos) for n in range(2**nq)],
        dtype=float,
    )


def parity_expectation(dist, word):
    check_word(word)
    if not is_diagonal(word):
        raise ValueError(f"parity readout needs an I/Z word, got {word!r}")
    p = dist.probabilities if isinstance(dist, MeasurementDistribution) else np.asarray(dist)
    if p.shape != (2 ** len(word),):
        raise ValueError(f"distribution length {p.shape[0]} does not match word {word!r}")
    return float(parity_signs(word) @ p)


def diagonal_skeleton(word):
    return "".join("I" if c == "I" else "Z" for c in word)


def _rotations(word, library):
    out = []
    for k, c in enumerate(word):
        if c == "X":
            out.append(library.circuit(k + 1, "H"))
        elif c == "Y":
            out.append(library.circuit(k + 1, "W"))
    return out


def _check_state(state, word):
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (2 ** len(word),):
        raise ValueError(f"state of length {psi.shape} does not match word {word!r}")
    return psi


def pauli_expectation_exact(state, word):
    check_word(word)
    psi = _check_state(state, word)
    val = np.vdot(psi, pauli_matrix(word) @ psi)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation of {word!r} has imaginary part {val.imag:.3g}")
    return float(val.real)


def rotated_state(state, word, library):
    if library is None:
        raise ValueError("rotation readout requires a RotationLibrary")
    if library.num_qubits != len(word):
        raise ValueError(
            f"library built for {library.num_qubits} qubits, word has {len(word)}"
        )
    psi = state
    for circuit in _rotations(word, library):
        psi = apply_circuit(circuit, psi)
    return psi


def pauli_expectation_via_rotation(state, word, library, shots=None, seed=None):
    check_word(word)
    psi = _check_state(state, word)
    if set(word) == {"I"}:
        return 1.0
    psi = rotated_state(psi, word, library)
    probs = photon_distribution(psi, shots=shots, seed=seed)
    probs = probs / probs.sum()
    return parity_expectation(probs, diagonal_skeleton(word))


def hamiltonian_expectation(state, H, library=None, mode="exact", shots=None, seed=None):
    """``sum_j g_j <P_j>``; identity terms are added without measurement.

    In ``sampled`` mode each term gets ``shots`` draws from the stream
    ``default_rng([seed, term_index])``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "sampled" and shots is None:
        raise ValueError("sampled mode requires shots")
    if not H.is_hermitian():
        raise ValueError("expectation values need a Hamiltonian with real coefficients")
    total = 0.0
    for idx, (g, word) in enumerate(H):
        if set(word) == {"I"}:
            total += g.real
            continue
        if mode == "exact":
            val = pauli_expectation_exact(state, word)
        elif mode == "rotation":
            val = pauli_expectation_via_rotation(state, word, library)
        else:
            rng = np.random.default_rng(None if seed is None else [int(seed), idx])
            val = pauli_expectation_via_rotation(state, word, library, shots=shots, seed=rng)
        total += g.real * val
    return float(total)


def measured_operator(word, library):
    """Hermitian matrix whose quadratic form reproduces rotation readout of ``word``.

    Equals ``R^dag Z_skel R`` with ``R`` the product of the realized rotation
    circuits; it matches ``pauli_matrix(word)`` up to the synthesis error.
    """
    check_word(word)
    signs = parity_signs(diagonal_skeleton(word))
    R = np.eye(2 ** len(word), dtype=complex)
    for circuit in _rotations(word, library):
        R = circuit_matrix(circuit) @ R
    return R.conj().T @ (signs[:, None] * R)


def measured_hamiltonian_matrix(H, library=None, mode="exact"):
    """Dense operator evaluated by ``mode``; the variational drivers optimize against it."""
    if mode == "exact":
        return hamiltonian_matrix(H)
    if mode != "rotation":
        raise ValueError(f"only exact/rotation operators can be formed, got {mode!r}")
    if library is None:
        raise ValueError("rotation mode requires a RotationLibrary")
    dim = 2**H.num_qubits
    M = np.zeros((dim, dim), dtype=complex)
    for g, word in H:
        if set(word) == {"I"}:
            M += g.real * np.eye(dim)
        else:
            M += g.real * measured_operator(word, library)
    return M
