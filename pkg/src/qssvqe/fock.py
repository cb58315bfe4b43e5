"""Truncated single-mode Fock space: ladder operators, displacement and SNAP
gates, and SNAP-displacement circuits acting on dense statevectors.

Conventions
-----------
A circuit layer is ``S(theta) @ D(alpha)``: the displacement acts first.
Layers are applied in list order, so the realized matrix of a depth-``d``
circuit is ``L_d @ ... @ L_1``.  Displacement amplitudes are real.
"""

from dataclasses import dataclass
from functools import lru_cache
import warnings

import numpy as np

from .linalg import expm


class TruncationWarning(UserWarning):
    """Coherent-state support extends past the Fock cutoff."""


@dataclass(frozen=True)
class FockSpace:
    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"Fock cutoff must be an integer >= 2, got {self.cutoff}")

    @classmethod
    def for_qubits(cls, num_qubits):
        if num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        return cls(2**num_qubits)

    @property
    def is_qubit_encoding(self):
        return self.cutoff & (self.cutoff - 1) == 0

    @property
    def num_qubits(self):
        if not self.is_qubit_encoding:
            raise ValueError(f"cutoff {self.cutoff} is not a power of two")
        return self.cutoff.bit_length() - 1


def as_space(space):
    """Accept a FockSpace or a bare integer cutoff."""
    if isinstance(space, FockSpace):
        return space
    return FockSpace(int(space))


@dataclass(frozen=True)
class BosonicOperator:
    matrix: np.ndarray
    label: str = "custom"

    @property
    def cutoff(self):
        return self.matrix.shape[0]

    def dag(self):
        labels = {"annihilate": "create", "create": "annihilate"}
        return BosonicOperator(self.matrix.conj().T, labels.get(self.label, self.label))


def annihilation_matrix(space):
    """Truncated annihilation operator with ``sqrt(n)`` at ``(n-1, n)``."""
    L = as_space(space).cutoff
    a = np.diag(np.sqrt(np.arange(1, L, dtype=float)), k=1).astype(complex)
    return BosonicOperator(a, "annihilate")


def creation_matrix(space):
    return annihilation_matrix(space).dag()


def number_matrix(space):
    L = as_space(space).cutoff
    return BosonicOperator(np.diag(np.arange(L, dtype=float)).astype(complex), "number")


def position_matrix(space):
    a = annihilation_matrix(space).matrix
    return BosonicOperator((a.conj().T + a) / np.sqrt(2.0), "position")


def momentum_matrix(space):
    a = annihilation_matrix(space).matrix
    return BosonicOperator(1j * (a.conj().T - a) / np.sqrt(2.0), "momentum")


def _check_alpha(alpha):
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError(f"displacement amplitude must be finite, got {alpha}")
    return alpha


def displacement_gate(alpha, space):
    """``exp(alpha (a^dag - a))`` on the truncated space, via Pade expm."""
    alpha = _check_alpha(alpha)
    L = as_space(space).cutoff
    if alpha * alpha > L / 4:
        warnings.warn(
            f"|alpha|^2 = {alpha * alpha:.3g} exceeds L/4 = {L / 4:.3g}; "
            "coherent-state support leaks past the cutoff",
            TruncationWarning,
            stacklevel=2,
        )
    a = annihilation_matrix(L).matrix
    return expm(alpha * (a.conj().T - a))


@lru_cache(maxsize=None)
def _generator_eig(L):
    # K = i (a^dag - a) is Hermitian, so exp(alpha (a^dag - a)) = V exp(-i alpha lam) V^dag
    a = np.diag(np.sqrt(np.arange(1, L, dtype=float)), k=1)
    G = a.T - a
    lam, V = np.linalg.eigh(1j * G)
    lam.setflags(write=False)
    V.setflags(write=False)
    G.setflags(write=False)
    return lam, V, G


def displacement_fast(alpha, L):
    """Spectral evaluation of the truncated displacement; used in inner loops."""
    lam, V, _ = _generator_eig(L)
    return (V * np.exp(-1j * alpha * lam)) @ V.conj().T


def snap_gate(thetas, space):
    """Diagonal SNAP gate ``diag(exp(i theta_n))``."""
    L = as_space(space).cutoff
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (L,):
        raise ValueError(f"SNAP needs {L} phases, got shape {thetas.shape}")
    return np.diag(np.exp(1j * thetas))


@dataclass(frozen=True)
class SnapDispCircuit:
    """Ordered SNAP-displacement layers; ``thetas`` has shape ``(depth, L)``."""

    alphas: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        if np.iscomplexobj(self.alphas):
            raise ValueError("displacement amplitudes must be real")
        alphas = np.array(self.alphas, dtype=float).reshape(-1)
        thetas = np.array(self.thetas, dtype=float)
        if thetas.ndim != 2 or thetas.shape[0] != alphas.shape[0]:
            raise ValueError(
                f"thetas must have shape (depth, L) with depth={alphas.shape[0]}, "
                f"got {thetas.shape}"
            )
        alphas.setflags(write=False)
        thetas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "thetas", thetas)

    @classmethod
    def identity(cls, cutoff, depth=0):
        return cls(np.zeros(depth), np.zeros((depth, cutoff)))

    @classmethod
    def from_vector(cls, params, cutoff):
        """Unpack ``[alpha_1, theta_1..., alpha_2, theta_2..., ...]``."""
        params = np.asarray(params, dtype=float)
        width = cutoff + 1
        if params.size % width:
            raise ValueError(f"parameter count {params.size} not a multiple of {width}")
        block = params.reshape(-1, width)
        return cls(block[:, 0], block[:, 1:])

    def to_vector(self):
        return np.concatenate([self.alphas[:, None], self.thetas], axis=1).reshape(-1)

    @property
    def depth(self):
        return self.alphas.shape[0]

    @property
    def cutoff(self):
        return self.thetas.shape[1]

    @property
    def num_params(self):
        return self.depth * (self.cutoff + 1)

    def __eq__(self, other):
        if not isinstance(other, SnapDispCircuit):
            return NotImplemented
        return (
            self.thetas.shape == other.thetas.shape
            and np.array_equal(self.alphas, other.alphas)
            and np.array_equal(self.thetas, other.thetas)
        )

    __hash__ = None


def _layer_matrices(circuit):
    L = circuit.cutoff
    return [
        np.exp(1j * th)[:, None] * displacement_fast(al, L)
        for al, th in zip(circuit.alphas, circuit.thetas)
    ]


def circuit_matrix(circuit):
    """Realized unitary ``U_SD(alpha_d, theta_d) ... U_SD(alpha_1, theta_1)``."""
    U = np.eye(circuit.cutoff, dtype=complex)
    for layer in _layer_matrices(circuit):
        U = layer @ U
    return U


def apply_circuit(circuit, state):
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (circuit.cutoff,):
        raise ValueError(
            f"state of shape {psi.shape} does not match circuit cutoff {circuit.cutoff}"
        )
    L = circuit.cutoff
    for al, th in zip(circuit.alphas, circuit.thetas):
        psi = np.exp(1j * th) * (displacement_fast(al, L) @ psi)
    return psi


def circuit_gradient(circuit, gamma):
    """Gradient of a real loss ``f(U)`` with respect to the packed circuit
    parameters, given ``gamma = df / d conj(U)`` evaluated at the realized
    matrix ``U``.

    Uses ``df = 2 Re tr(gamma^dag dU)`` with prefix/suffix layer products.
    """
    L = circuit.cutoff
    layers = _layer_matrices(circuit)
    d = len(layers)
    _, _, G = _generator_eig(L)
    # suffix[k] = L_d ... L_{k+1}, prefix[k] = L_{k-1} ... L_1
    prefix = [np.eye(L, dtype=complex)]
    for layer in layers[:-1]:
        prefix.append(layer @ prefix[-1])
    suffix = [None] * d
    acc = np.eye(L, dtype=complex)
    for k in range(d - 1, -1, -1):
        suffix[k] = acc
        acc = acc @ layers[k]
    gamma_h = np.asarray(gamma).conj().T
    grad = np.empty((d, L + 1))
    for k in range(d):
        M = prefix[k] @ gamma_h @ suffix[k]
        snap = np.exp(1j * circuit.thetas[k])
        disp = displacement_fast(circuit.alphas[k], L)
        # d/dtheta_n: i (D M S)_{nn};  d/dalpha: tr(M S G D)
        DMS_diag = np.einsum("ij,ji->i", disp, M) * snap
        grad[k, 1:] = -2.0 * DMS_diag.imag
        MS = M * snap[None, :]
        grad[k, 0] = 2.0 * np.real(np.einsum("ij,ji->", MS, G @ disp))
    return grad.reshape(-1)


def circuit_jacobian(circuit):
    """Realized matrix ``U`` and ``dU/dp`` for every packed parameter.

    The derivative array has shape ``(L, L, num_params)`` in the
    :meth:`SnapDispCircuit.to_vector` order.  A SNAP phase derivative is the
    outer product ``i A[:, n] (L_k B)[n, :]`` with ``A``/``B`` the suffix and
    prefix products around layer ``k``.
    """
    L = circuit.cutoff
    layers = _layer_matrices(circuit)
    d = len(layers)
    _, _, G = _generator_eig(L)
    prefix = [np.eye(L, dtype=complex)]
    for layer in layers:
        prefix.append(layer @ prefix[-1])
    J = np.empty((L, L, d, L + 1), dtype=complex)
    acc = np.eye(L, dtype=complex)
    for k in range(d - 1, -1, -1):
        snap = np.exp(1j * circuit.thetas[k])
        disp = displacement_fast(circuit.alphas[k], L)
        J[:, :, k, 0] = acc @ (snap[:, None] * (G @ disp)) @ prefix[k]
        J[:, :, k, 1:] = 1j * np.einsum("in,nj->ijn", acc, prefix[k + 1])
        acc = acc @ layers[k]
    return prefix[-1], J.reshape(L, L, d * (L + 1))


def fock_state(n, space):
    L = as_space(space).cutoff
    if not 0 <= n < L:
        raise ValueError(f"Fock index {n} outside [0, {L})")
    psi = np.zeros(L, dtype=complex)
    psi[n] = 1.0
    return psi


def photon_distribution(state, shots=None, seed=None):
    """Photon-number probabilities, exact or from ``shots`` categorical draws."""
    probs = np.abs(np.asarray(state)) ** 2
    if shots is None:
        return probs
    if int(shots) != shots or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots}")
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), probs)
    return counts / float(shots)
