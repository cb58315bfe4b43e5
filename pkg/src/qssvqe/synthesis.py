"""Compile unitaries into SNAP-displacement circuits.

The loss is the mean squared element-wise deviation between the realized
circuit matrix and the target, sensitive to global phase.  The basis-change
rotations used for Pauli readout (``H_j`` for X, ``W_j = H_j S_j^dag`` for Y)
are precompiled into a :class:`RotationLibrary`.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np

from .fock import SnapDispCircuit, circuit_gradient, circuit_jacobian, circuit_matrix
from .optimize import OptimizerConfig, multistart_minimize
from .pauli import index_to_bits

log = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.diag([1, 1j])
ROTATION_GATES = {"H": HADAMARD, "W": HADAMARD @ PHASE.conj().T}
ROTATION_KINDS = ("H", "W")

#: stop a restart once the loss is this small; well below any library tolerance
DEFAULT_TARGET_LOSS = 1e-20


def _is_unitary(U, tol):
    U = np.asarray(U)
    return np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) < tol


@dataclass(frozen=True)
class SynthesisTarget:
    unitary: np.ndarray
    label: str = ""

    def __post_init__(self):
        V = np.array(self.unitary, dtype=complex)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError(f"target must be square, got shape {V.shape}")
        if not _is_unitary(V, 1e-10):
            raise ValueError(f"target {self.label!r} is not unitary within 1e-10")
        V.setflags(write=False)
        object.__setattr__(self, "unitary", V)

    @property
    def cutoff(self):
        return self.unitary.shape[0]


@dataclass
class SynthesisResult:
    circuit: SnapDispCircuit
    final_loss: float
    restarts_used: int
    iterations: int
    converged: bool
    label: str = ""


def embed_single_qubit_gate(gate, j, num_qubits):
    """Act with ``gate`` on qubit ``j`` (1-based) of the Fock-encoded register."""
    if not 1 <= j <= num_qubits:
        raise ValueError(f"qubit index {j} outside 1..{num_qubits}")
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError(f"single-qubit gate must be 2x2, got {gate.shape}")
    L = 2**num_qubits
    bits = [index_to_bits(n, num_qubits) for n in range(L)]
    k = j - 1
    U = np.zeros((L, L), dtype=complex)
    for n in range(L):
        for m in range(L):
            bn, bm = bits[n], bits[m]
            if all(bn[i] == bm[i] for i in range(num_qubits) if i != k):
                U[n, m] = gate[bn[k], bm[k]]
    return U


def rotation_target(kind, j, num_qubits):
    if kind not in ROTATION_GATES:
        raise ValueError(f"rotation kind must be one of {ROTATION_KINDS}, got {kind!r}")
    V = embed_single_qubit_gate(ROTATION_GATES[kind], j, num_qubits)
    return SynthesisTarget(V, f"{kind}_{j} of {num_qubits} qubits")


def _block_loss_and_gamma(U, V):
    L = V.shape[0]
    R = U[:L, :L] - V
    gamma = np.zeros_like(U)
    gamma[:L, :L] = R / L**2
    return float(np.sum(np.abs(R) ** 2) / L**2), gamma


def synthesis_loss(circuit, target):
    V = target.unitary if isinstance(target, SynthesisTarget) else np.asarray(target)
    if circuit.cutoff != V.shape[0]:
        raise ValueError(
            f"circuit cutoff {circuit.cutoff} does not match target dimension {V.shape[0]}"
        )
    return _block_loss_and_gamma(circuit_matrix(circuit), V)[0]


def _sample_snap_params(rng, depth, cutoff):
    alphas = rng.uniform(-1.0, 1.0, size=(depth, 1))
    thetas = rng.uniform(-np.pi, np.pi, size=(depth, cutoff))
    return np.concatenate([alphas, thetas], axis=1).reshape(-1)


def default_synthesis_config(**changes):
    """Levenberg-Marquardt on the zero-residual least-squares form of the loss."""
    return OptimizerConfig(
        method="LM", tol=1e-15, max_iter=3000, restarts=10, target=DEFAULT_TARGET_LOSS
    ).replace(**changes)


def _block_residuals(circuit, V):
    # real residual vector whose squared norm is the loss, with its Jacobian
    L = V.shape[0]
    U, J = circuit_jacobian(circuit)
    R = (U[:L, :L] - V).reshape(-1) / L
    Jb = J[:L, :L].reshape(L * L, -1) / L
    return np.concatenate([R.real, R.imag]), np.vstack([Jb.real, Jb.imag])


def synthesize(target, depth, optimizer=None, restarts=None, seed=None, working_cutoff=None):
    """Best-of-restarts SNAP-displacement approximation of ``target``.

    ``working_cutoff`` (default: the target dimension) lets the circuit act
    on a larger truncated space; the loss then compares only the leading
    ``L x L`` block.  Failure to reach ``optimizer.target`` is reported via
    ``converged=False`` rather than raised.
    """
    if depth < 1:
        raise ValueError("synthesis depth must be >= 1")
    if not isinstance(target, SynthesisTarget):
        target = SynthesisTarget(target)
    opt = optimizer or default_synthesis_config()
    if restarts is not None:
        opt = opt.replace(restarts=restarts)
    if seed is not None:
        opt = opt.replace(seed=seed)
    V = target.unitary
    Lw = working_cutoff or target.cutoff
    if Lw < target.cutoff:
        raise ValueError("working cutoff cannot be below the target dimension")

    def fun_and_grad(x):
        c = SnapDispCircuit.from_vector(x, Lw)
        loss, gamma = _block_loss_and_gamma(circuit_matrix(c), V)
        return loss, circuit_gradient(c, gamma)

    def residuals(x):
        return _block_residuals(SnapDispCircuit.from_vector(x, Lw), V)

    res = multistart_minimize(
        fun_and_grad, lambda rng: _sample_snap_params(rng, depth, Lw), opt, residuals=residuals
    )
    circuit = SnapDispCircuit.from_vector(res.x, Lw)
    loss = fun_and_grad(res.x)[0]
    converged = res.best.success if opt.target is None else loss < opt.target
    return SynthesisResult(circuit, loss, res.restarts_used, res.iterations, converged, target.label)


@dataclass
class LibraryEntry:
    circuit: SnapDispCircuit
    loss: float
    ok: bool
    restarts_used: int = 0


@dataclass
class RotationLibrary:
    """Precompiled ``H_j``/``W_j`` circuits for one register size.

    Entries are keyed by ``(j, kind)``.  ``errors`` holds per-entry problems
    found while loading from disk; such entries are absent from ``entries``.
    """

    num_qubits: int
    depth: int
    tolerance: float = 1e-10
    entries: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def cutoff(self):
        return 2**self.num_qubits

    def circuit(self, j, kind):
        try:
            return self.entries[j, kind].circuit
        except KeyError:
            reason = self.errors.get((j, kind), "not in library")
            raise MissingRotationError(f"no usable {kind}_{j} rotation: {reason}") from None

    def losses(self):
        return {f"{kind}{j}": e.loss for (j, kind), e in sorted(self.entries.items())}

    @property
    def failed(self):
        bad = [key for key, e in self.entries.items() if not e.ok]
        return sorted(bad) + list(self.errors)

    @property
    def complete(self):
        want = {(j, k) for j in range(1, self.num_qubits + 1) for k in ROTATION_KINDS}
        return want <= set(self.entries) and not self.failed


class MissingRotationError(KeyError):
    pass


def _synthesize_entry(args):
    kind, j, num_qubits, depth, tolerance, optimizer, seed, max_attempts = args
    target = rotation_target(kind, j, num_qubits)
    restarts = optimizer.restarts
    best = None
    for attempt in range(max_attempts):
        # distinct stream per (target, attempt) keeps entries schedule-independent
        entry_seed = int(
            np.random.SeedSequence([seed, j, ROTATION_KINDS.index(kind), attempt]).generate_state(1)[0]
        )
        res = synthesize(target, depth, optimizer, restarts=restarts, seed=entry_seed)
        if best is None or res.final_loss < best.final_loss:
            best = res
        if best.final_loss < tolerance:
            break
        log.info("%s_%d: loss %.2e above %.0e, retrying", kind, j, best.final_loss, tolerance)
        restarts *= 2
    ok = best.final_loss < tolerance
    return (j, kind), LibraryEntry(best.circuit, best.final_loss, ok, best.restarts_used)


def build_rotation_library(
    num_qubits, depth=None, tolerance=1e-10, optimizer=None, seed=0, max_attempts=3, n_jobs=1
):
    """Synthesize ``H_j`` and ``W_j`` for every qubit; depth defaults to ``2**num_qubits``.

    Each entry retries with doubled restarts until its loss is below
    ``tolerance`` or ``max_attempts`` is exhausted; failures are flagged on
    the entry (``ok=False``) instead of raising.
    """
    depth = depth or 2**num_qubits
    optimizer = optimizer or default_synthesis_config()
    jobs = [
        (kind, j, num_qubits, depth, tolerance, optimizer, seed, max_attempts)
        for j in range(1, num_qubits + 1)
        for kind in ROTATION_KINDS
    ]
    if n_jobs == 1:
        done = [_synthesize_entry(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            done = list(pool.map(_synthesize_entry, jobs))
    return RotationLibrary(num_qubits, depth, tolerance, dict(done))
