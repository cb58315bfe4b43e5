"""Pauli words, qubit operators and the binary/Fock index encoding.

Words are plain strings over ``IXYZ``; character 0 is qubit 1, the leftmost
tensor factor and the most significant bit of the encoded Fock index.
"""

from functools import reduce
from itertools import product
import numbers

import numpy as np

DROP_TOL = 1e-14

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a, b) -> (phase, c) with a @ b = phase * c
_PRODUCT = {}
for _a, _b in product("IXYZ", repeat=2):
    _m = _SINGLE[_a] @ _SINGLE[_b]
    for _c in "IXYZ":
        _ph = np.trace(_SINGLE[_c].conj().T @ _m) / 2
        if abs(_ph) > 0.5:
            _PRODUCT[_a, _b] = (complex(np.round(_ph.real) + 1j * np.round(_ph.imag)), _c)
            break


class NonHermitianError(ValueError):
    pass


def check_word(word, num_qubits=None):
    if not isinstance(word, str) or not word:
        raise ValueError(f"Pauli word must be a nonempty string, got {word!r}")
    bad = set(word) - set("IXYZ")
    if bad:
        raise ValueError(f"invalid Pauli letter(s) {sorted(bad)} in {word!r}")
    if num_qubits is not None and len(word) != num_qubits:
        raise ValueError(f"word {word!r} has length {len(word)}, expected {num_qubits}")
    return word


def multiply_words(a, b):
    """Return ``(phase, word)`` with ``P_a P_b = phase * P_word``."""
    if len(a) != len(b):
        raise ValueError(f"cannot multiply words of lengths {len(a)} and {len(b)}")
    phase = 1.0 + 0j
    letters = []
    for x, y in zip(a, b):
        ph, c = _PRODUCT[x, y]
        phase *= ph
        letters.append(c)
    return phase, "".join(letters)


def pauli_matrix(word):
    check_word(word)
    return reduce(np.kron, (_SINGLE[c] for c in word))


def is_diagonal(word):
    return set(word) <= {"I", "Z"}


class QubitHamiltonian:
    """Weighted sum of Pauli words in canonical form.

    Duplicate words are merged, coefficients with magnitude below
    ``DROP_TOL`` are dropped and terms are kept in lexicographic word order,
    so two operators are equal exactly when their term lists are.
    """

    __slots__ = ("_terms", "num_qubits", "metadata")

    def __init__(self, terms=(), num_qubits=None, metadata=None):
        if isinstance(terms, dict):
            terms = [(c, w) for w, c in terms.items()]
        merged = {}
        for coeff, word in terms:
            check_word(word)
            if num_qubits is None:
                num_qubits = len(word)
            elif len(word) != num_qubits:
                raise ValueError(
                    f"mixed word lengths: {word!r} in a {num_qubits}-qubit operator"
                )
            merged[word] = merged.get(word, 0.0) + complex(coeff)
        if num_qubits is None:
            raise ValueError("num_qubits is required for an empty operator")
        self.num_qubits = int(num_qubits)
        self._terms = tuple(
            (merged[w], w) for w in sorted(merged) if abs(merged[w]) >= DROP_TOL
        )
        self.metadata = dict(metadata or {})

    @classmethod
    def identity(cls, num_qubits, coeff=1.0):
        return cls([(coeff, "I" * num_qubits)], num_qubits)

    @classmethod
    def zero(cls, num_qubits):
        return cls([], num_qubits)

    @property
    def terms(self):
        return list(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def coefficient(self, word):
        for c, w in self._terms:
            if w == word:
                return c
        return 0.0

    def is_hermitian(self, tol=1e-12):
        return all(abs(c.imag) <= tol for c, _ in self._terms)

    def real(self, tol=1e-12):
        """Copy with real coefficients; raises if any imaginary part exceeds ``tol``."""
        if not self.is_hermitian(tol):
            worst = max(abs(c.imag) for c, _ in self._terms)
            raise NonHermitianError(f"imaginary coefficient of magnitude {worst:.3g}")
        return QubitHamiltonian(
            [(c.real, w) for c, w in self._terms], self.num_qubits, self.metadata
        )

    def _coerce(self, other):
        if isinstance(other, QubitHamiltonian):
            if other.num_qubits != self.num_qubits:
                raise ValueError(
                    f"qubit count mismatch: {self.num_qubits} vs {other.num_qubits}"
                )
            return other
        if isinstance(other, numbers.Number):
            return QubitHamiltonian.identity(self.num_qubits, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return QubitHamiltonian(self.terms + other.terms, self.num_qubits)

    __radd__ = __add__

    def __neg__(self):
        return QubitHamiltonian([(-c, w) for c, w in self._terms], self.num_qubits)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return QubitHamiltonian([(other * c, w) for c, w in self._terms], self.num_qubits)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = []
        for c1, w1 in self._terms:
            for c2, w2 in other._terms:
                ph, w = multiply_words(w1, w2)
                out.append((ph * c1 * c2, w))
        return QubitHamiltonian(out, self.num_qubits)

    def __rmul__(self, other):
        if isinstance(other, numbers.Number):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __eq__(self, other):
        if not isinstance(other, QubitHamiltonian):
            return NotImplemented
        return self.num_qubits == other.num_qubits and self._terms == other._terms

    __hash__ = None

    def allclose(self, other, atol=1e-12):
        diff = self - other
        return all(abs(c) <= atol for c, _ in diff)

    def __repr__(self):
        body = " + ".join(f"({c:.6g})*{w}" for c, w in self._terms) or "0"
        return f"QubitHamiltonian[{self.num_qubits}]({body})"


def hamiltonian_matrix(H):
    dim = 2**H.num_qubits
    M = np.zeros((dim, dim), dtype=complex)
    for c, w in H:
        M += c * pauli_matrix(w)
    return M


def exact_spectrum(H, return_vectors=False, tol=1e-12):
    """Ascending eigenvalues of a Hermitian qubit Hamiltonian."""
    if isinstance(H, QubitHamiltonian):
        if not H.is_hermitian(tol):
            raise NonHermitianError("exact_spectrum requires real Pauli coefficients")
        M = hamiltonian_matrix(H)
    else:
        M = np.asarray(H)
        if np.max(np.abs(M - M.conj().T), initial=0.0) > tol:
            raise NonHermitianError("matrix is not Hermitian")
    if return_vectors:
        return np.linalg.eigh(M)
    return np.linalg.eigvalsh(M)


def jordan_wigner(p, num_orbitals, kind):
    """Qubit image of the fermionic ladder operator on orbital ``p`` (1-based)."""
    if not 1 <= p <= num_orbitals:
        raise ValueError(f"orbital {p} outside 1..{num_orbitals}")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    sign = -1 if kind == "create" else 1
    head = "Z" * (p - 1)
    tail = "I" * (num_orbitals - p)
    return QubitHamiltonian(
        [(0.5, head + "X" + tail), (0.5j * sign, head + "Y" + tail)], num_orbitals
    )


def index_to_bits(n, num_qubits):
    if not 0 <= n < 2**num_qubits:
        raise ValueError(f"index {n} outside [0, 2^{num_qubits})")
    return tuple((n >> (num_qubits - 1 - k)) & 1 for k in range(num_qubits))


def bits_to_index(bits):
    n = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0/1, got {bits!r}")
        n = (n << 1) | b
    return n


def pauli_decompose(M, tol=DROP_TOL):
    """Pauli coefficients of a ``2^N x 2^N`` matrix via ``tr(P M) / 2^N``."""
    M = np.asarray(M)
    dim = M.shape[0]
    nq = dim.bit_length() - 1
    if 2**nq != dim or M.shape != (dim, dim):
        raise ValueError(f"matrix shape {M.shape} is not 2^N square")
    terms = []
    for letters in product("IXYZ", repeat=nq):
        w = "".join(letters)
        c = np.trace(pauli_matrix(w) @ M) / dim
        if abs(c) >= tol:
            terms.append((c, w))
    return QubitHamiltonian(terms, nq)
