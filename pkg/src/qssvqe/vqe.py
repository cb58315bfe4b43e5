"""Weighted subspace eigensolvers on a single qumode and on a qubit register.

All trial states share one unitary applied to orthonormal basis inputs, so
orthonormality holds by construction and only the weighted energy sum
``F = sum_n w_n <n|U^dag H U|n>`` is optimized.
"""

from dataclasses import dataclass, field
from functools import reduce
import logging

import numpy as np

from .boson_map import displaced_qho_hamiltonian
from .fock import (
    SnapDispCircuit,
    circuit_gradient,
    circuit_matrix,
    displacement_fast,
    displacement_gate,
)
from .measurement import hamiltonian_expectation, measured_hamiltonian_matrix
from .optimize import OptimizerConfig, multistart_minimize
from .pauli import exact_spectrum, hamiltonian_matrix
from .synthesis import _sample_snap_params

log = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (1.0, 0.9, 0.8)
ANSATZ_VARIANTS = ("snap_displacement", "single_displacement", "qubit_two_local")


def default_weights(num_states):
    if num_states == len(DEFAULT_WEIGHTS):
        return DEFAULT_WEIGHTS
    if num_states > 10:
        raise ValueError("pass explicit weights for more than 10 states")
    return tuple(1.0 - 0.1 * n for n in range(num_states))


@dataclass(frozen=True)
class SubspaceObjective:
    hamiltonian: object
    num_states: int = 3
    weights: tuple = None
    initial_states: tuple = None

    def __post_init__(self):
        L = 2**self.hamiltonian.num_qubits
        if not 1 <= self.num_states <= L:
            raise ValueError(f"num_states must lie in 1..{L}, got {self.num_states}")
        w = tuple(float(x) for x in (self.weights or default_weights(self.num_states)))
        if len(w) != self.num_states or min(w) <= 0:
            raise ValueError(f"need {self.num_states} strictly positive weights, got {w}")
        states = tuple(int(n) for n in (self.initial_states or range(self.num_states)))
        if len(states) != self.num_states or len(set(states)) != len(states):
            raise ValueError("initial states must be distinct, one per weight")
        if min(states) < 0 or max(states) >= L:
            raise ValueError(f"initial Fock indices must lie in [0, {L})")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "initial_states", states)

    @property
    def cutoff(self):
        return 2**self.hamiltonian.num_qubits

    def weight_projector(self):
        P = np.zeros(self.cutoff)
        P[list(self.initial_states)] = self.weights
        return P


@dataclass(frozen=True)
class AnsatzSpec:
    variant: str = "snap_displacement"
    depth: int = 4
    layers: int = 1
    entangler: str = "linear"

    def __post_init__(self):
        if self.variant not in ANSATZ_VARIANTS:
            raise ValueError(f"unknown ansatz variant {self.variant!r}")
        if self.depth < 1 or self.layers < 1:
            raise ValueError("depth and layers must be >= 1")
        if self.entangler != "linear":
            raise ValueError("only the linear CX-chain entangler is implemented")

    @classmethod
    def snap_displacement(cls, depth):
        return cls("snap_displacement", depth=depth)

    @classmethod
    def single_displacement(cls):
        return cls("single_displacement", depth=1)

    @classmethod
    def two_local(cls, layers=1):
        return cls("qubit_two_local", layers=layers)

    def num_params(self, num_qubits):
        L = 2**num_qubits
        if self.variant == "snap_displacement":
            return self.depth * (L + 1)
        if self.variant == "single_displacement":
            return 1
        return 2 * num_qubits * (self.layers + 1)

    def describe(self):
        d = {"variant": self.variant}
        if self.variant == "snap_displacement":
            d["depth"] = self.depth
        elif self.variant == "qubit_two_local":
            d.update(layers=self.layers, rotations="ry,rx", entangler="linear CX chain",
                     final_rotation_stage=True)
        return d


@dataclass
class RunResult:
    energies: np.ndarray
    objective: float
    params: np.ndarray
    weights: tuple
    initial_states: tuple
    exact: np.ndarray = None
    delta: float = None
    subspace_eigenvalues: np.ndarray = None
    trace: list = field(default_factory=list)
    converged: bool = True
    restarts_used: int = 0
    metadata: dict = field(default_factory=dict)

    def sorted_energies(self):
        return np.sort(self.energies)


def delta_metric(exact, computed, k=3):
    """Mean absolute error over the first ``k`` entries of two ascending lists."""
    exact = np.asarray(exact, dtype=float)
    computed = np.asarray(computed, dtype=float)
    if k < 1 or exact.size < k or computed.size < k:
        raise ValueError(
            f"need at least k={k} energies, got {exact.size} exact and {computed.size} computed"
        )
    return float(np.mean(np.abs(exact[:k] - computed[:k])))


# --- qubit TwoLocal circuit -------------------------------------------------

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


def _rot(P, angle):
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * P


def _cx_chain(num_qubits):
    dim = 2**num_qubits
    U = np.eye(dim, dtype=complex)
    for c in range(num_qubits - 1):
        t = c + 1
        perm = np.arange(dim)
        for n in range(dim):
            if (n >> (num_qubits - 1 - c)) & 1:
                perm[n] = n ^ (1 << (num_qubits - 1 - t))
        U = np.eye(dim)[perm] @ U
    return U


def two_local_unitary(params, num_qubits, layers):
    """Ry-then-Rx rotation stage on every qubit, CX chain, repeated; final rotation stage."""
    params = np.asarray(params, dtype=float).reshape(layers + 1, num_qubits, 2)
    ent = _cx_chain(num_qubits)
    U = np.eye(2**num_qubits, dtype=complex)
    for stage in range(layers + 1):
        R = reduce(np.kron, [_rot(_X, rx) @ _rot(_Y, ry) for ry, rx in params[stage]])
        U = R @ U
        if stage < layers:
            U = ent @ U
    return U


# --- shared evaluation ------------------------------------------------------


def ansatz_unitary(ansatz, params, num_qubits):
    L = 2**num_qubits
    if ansatz.variant == "snap_displacement":
        return circuit_matrix(SnapDispCircuit.from_vector(params, L))
    if ansatz.variant == "single_displacement":
        return displacement_fast(float(params[0]), L)
    return two_local_unitary(params, num_qubits, ansatz.layers)


def _weighted_sum(U, M, P):
    # F = tr(P U^dag M U) with P the diagonal weight vector
    return float(np.real(np.einsum("in,ij,jn,n->", U.conj(), M, U, P)))


def _objective_function(objective, ansatz, M):
    nq = objective.hamiltonian.num_qubits
    L = 2**nq
    P = objective.weight_projector()

    if ansatz.variant in ("snap_displacement", "single_displacement"):

        def fun_and_grad(x):
            if ansatz.variant == "single_displacement":
                c = SnapDispCircuit(np.asarray(x, dtype=float)[:1], np.zeros((1, L)))
            else:
                c = SnapDispCircuit.from_vector(x, L)
            U = circuit_matrix(c)
            gamma = (M @ U) * P[None, :]
            g = circuit_gradient(c, gamma)
            if ansatz.variant == "single_displacement":
                g = g[:1]
            return _weighted_sum(U, M, P), g

        return fun_and_grad

    def f(x):
        return _weighted_sum(two_local_unitary(x, nq, ansatz.layers), M, P)

    def fun_and_grad(x):
        # each angle enters one exp(-i t P/2) gate, so the shift rule is exact
        g = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = np.pi / 2
            g[k] = 0.5 * (f(x + e) - f(x - e))
        return f(x), g

    return fun_and_grad


def _sampler(ansatz, num_qubits):
    L = 2**num_qubits
    if ansatz.variant == "snap_displacement":
        return lambda rng: _sample_snap_params(rng, ansatz.depth, L)
    if ansatz.variant == "single_displacement":
        return lambda rng: rng.uniform(-1.0, 1.0, size=1)
    n = ansatz.num_params(num_qubits)
    return lambda rng: rng.uniform(-np.pi, np.pi, size=n)


def trial_states(objective, ansatz, params):
    U = ansatz_unitary(ansatz, params, objective.hamiltonian.num_qubits)
    return U[:, list(objective.initial_states)]


def evaluate(objective, ansatz, params, library=None, mode="exact"):
    """Per-state energies of the parameterized trial states in the given readout mode."""
    states = trial_states(objective, ansatz, params)
    H = objective.hamiltonian
    return np.array(
        [hamiltonian_expectation(states[:, k], H, library, mode) for k in range(states.shape[1])]
    )


def _run(objective, ansatz, optimizer, library, mode):
    H = objective.hamiltonian
    nq = H.num_qubits
    M = measured_hamiltonian_matrix(H, library, mode)
    fun_and_grad = _objective_function(objective, ansatz, M)
    res = multistart_minimize(fun_and_grad, _sampler(ansatz, nq), optimizer)
    params = np.asarray(res.x, dtype=float)

    states = trial_states(objective, ansatz, params)
    energies = evaluate(objective, ansatz, params, library, mode)
    Hm = hamiltonian_matrix(H)
    exact = exact_spectrum(H)
    k = objective.num_states
    projected = np.linalg.eigvalsh(states.conj().T @ Hm @ states)
    return RunResult(
        energies=energies,
        objective=float(np.dot(objective.weights, energies)),
        params=params,
        weights=objective.weights,
        initial_states=objective.initial_states,
        exact=exact,
        delta=delta_metric(exact, np.sort(energies), k),
        subspace_eigenvalues=projected,
        trace=res.best.trace,
        converged=res.best.success,
        restarts_used=res.restarts_used,
        metadata={"ansatz": ansatz.describe(), "optimizer": optimizer.to_dict(), "mode": mode},
    )


def default_vqe_config(**changes):
    return OptimizerConfig(tol=1e-10, max_iter=5000, restarts=10).replace(**changes)


def qss_vqe(objective, ansatz, library=None, optimizer=None, mode="exact"):
    """Qumode subspace VQE with a SNAP-displacement or single-displacement ansatz.

    ``mode="rotation"`` optimizes the energies the photon-counting protocol
    would report with the given library, rather than the ideal ones.
    """
    if ansatz.variant == "qubit_two_local":
        raise ValueError("use qubit_ssvqe for the qubit TwoLocal baseline")
    if mode not in ("exact", "rotation"):
        raise ValueError(f"qss_vqe mode must be 'exact' or 'rotation', got {mode!r}")
    if mode == "rotation" and library is None:
        raise ValueError("rotation mode requires a RotationLibrary")
    return _run(objective, ansatz, optimizer or default_vqe_config(), library, mode)


def qubit_ssvqe(objective, ansatz=None, optimizer=None):
    """Subspace VQE on a simulated qubit register with a TwoLocal circuit."""
    ansatz = ansatz or AnsatzSpec.two_local(1)
    if ansatz.variant != "qubit_two_local":
        raise ValueError("qubit_ssvqe needs a qubit_two_local ansatz")
    return _run(objective, ansatz, optimizer or default_vqe_config(), None, "exact")


def displaced_ansatz_energies(H, alpha, states):
    """``<n| D(alpha)^dag H D(alpha) |n>`` for each Fock index ``n``."""
    M = hamiltonian_matrix(H)
    L = M.shape[0]
    D = displacement_gate(alpha, L)
    out = []
    for n in states:
        if not 0 <= n < L:
            raise ValueError(f"Fock index {n} outside [0, {L})")
        out.append(float(np.real(np.vdot(D[:, n], M @ D[:, n]))))
    return out


def displaced_scan(alphas, num_qubits, states=(0, 1, 2)):
    """Rows of ``(alpha, n, energy, exact, rel_error)`` for the displaced oscillator.

    The energy gap to the ``n``-th eigenvalue is accumulated in the eigenbasis,
    ``sum_k |<v_k|psi>|^2 (lam_k - lam_n)``, which avoids the cancellation of
    subtracting two nearly equal energies.
    """
    rows = []
    for alpha in alphas:
        H = displaced_qho_hamiltonian(alpha, num_qubits)
        lam, vecs = exact_spectrum(H, return_vectors=True)
        D = displacement_gate(alpha, 2**num_qubits)
        for n in states:
            weights = np.abs(vecs.conj().T @ D[:, n]) ** 2
            gap = float(np.dot(weights, lam - lam[n]))
            rows.append(
                {
                    "alpha": float(alpha),
                    "n": int(n),
                    "energy": float(lam[n] + gap),
                    "exact": float(lam[n]),
                    "rel_error": float(abs(gap) / abs(lam[n])),
                }
            )
    return rows
