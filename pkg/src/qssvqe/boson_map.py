"""Map polynomials in truncated bosonic ladder operators onto qubit operators.

Each Fock projector ``|n><m|`` at cutoff ``L = 2^N`` factorizes over the
binary digits of ``n`` and ``m`` into single-qubit projectors::

    |0><0| = (I + Z)/2    |1><1| = (I - Z)/2
    |0><1| = (X + iY)/2   |1><0| = (X - iY)/2

Multiplying these out and merging gives the Pauli expansion of the
truncated ladder operators; polynomials are then assembled with the
operator algebra of :class:`~qssvqe.pauli.QubitHamiltonian`.
"""

import numbers

import numpy as np

from .fock import annihilation_matrix
from .pauli import QubitHamiltonian, index_to_bits

_LOCAL = {
    (0, 0): [(0.5, "I"), (0.5, "Z")],
    (1, 1): [(0.5, "I"), (-0.5, "Z")],
    (0, 1): [(0.5, "X"), (0.5j, "Y")],
    (1, 0): [(0.5, "X"), (-0.5j, "Y")],
}


class BosonPolynomial:
    """Noncommutative polynomial in ``a`` and ``a^dag``.

    Monomials are tuples of ``"a"``/``"c"`` symbols read left to right as an
    operator product; the empty tuple is the identity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for mono, c in (terms or {}).items():
            if c != 0:
                self.terms[tuple(mono)] = self.terms.get(tuple(mono), 0) + c

    @classmethod
    def identity(cls, coeff=1.0):
        return cls({(): coeff})

    @classmethod
    def annihilate(cls):
        return cls({("a",): 1.0})

    @classmethod
    def create(cls):
        return cls({("c",): 1.0})

    @classmethod
    def position(cls):
        return (cls.create() + cls.annihilate()) * (1 / np.sqrt(2))

    @classmethod
    def momentum(cls):
        return (cls.create() - cls.annihilate()) * (1j / np.sqrt(2))

    def _coerce(self, other):
        if isinstance(other, BosonPolynomial):
            return other
        if isinstance(other, numbers.Number):
            return BosonPolynomial.identity(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, 0) + c
        return BosonPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return BosonPolynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[m1 + m2] = out.get(m1 + m2, 0) + c1 * c2
        return BosonPolynomial(out)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = BosonPolynomial.identity()
        for _ in range(int(k)):
            out = out * self
        return out

    def matrix(self, cutoff):
        """Product of truncated matrices; the direct reference realization."""
        a = annihilation_matrix(cutoff).matrix
        ops = {"a": a, "c": a.conj().T}
        M = np.zeros((cutoff, cutoff), dtype=complex)
        for mono, c in self.terms.items():
            P = np.eye(cutoff, dtype=complex)
            for s in mono:
                P = P @ ops[s]
            M += c * P
        return M


def projector_to_qubit(n, m, num_qubits):
    """Pauli expansion of ``|n><m|`` under the binary encoding."""
    bn = index_to_bits(n, num_qubits)
    bm = index_to_bits(m, num_qubits)
    out = QubitHamiltonian.identity(num_qubits)
    for k, (x, y) in enumerate(zip(bn, bm)):
        pad_l, pad_r = "I" * k, "I" * (num_qubits - k - 1)
        factor = QubitHamiltonian(
            [(c, pad_l + p + pad_r) for c, p in _LOCAL[x, y]], num_qubits
        )
        out = out * factor
    return out


def ladder_to_qubit(kind, num_qubits):
    """Qubit image of the truncated ``a`` (``kind="a"``) or ``a^dag`` (``"c"``)."""
    L = 2**num_qubits
    out = QubitHamiltonian.zero(num_qubits)
    for n in range(1, L):
        if kind == "a":
            out = out + np.sqrt(n) * projector_to_qubit(n - 1, n, num_qubits)
        elif kind == "c":
            out = out + np.sqrt(n) * projector_to_qubit(n, n - 1, num_qubits)
        else:
            raise ValueError(f"unknown ladder symbol {kind!r}")
    return out


def truncated_boson_to_qubit(expr, num_qubits):
    """Expand ``expr`` at cutoff ``2**num_qubits`` into a canonical qubit operator."""
    if isinstance(num_qubits, bool) or int(num_qubits) != num_qubits or num_qubits < 1:
        raise ValueError(f"cutoff must be 2^N with N >= 1, got N={num_qubits}")
    num_qubits = int(num_qubits)
    images = {s: ladder_to_qubit(s, num_qubits) for s in "ac"}
    out = QubitHamiltonian.zero(num_qubits)
    for mono, c in expr.terms.items():
        term = QubitHamiltonian.identity(num_qubits)
        for s in mono:
            term = term * images[s]
        out = out + c * term
    return out


def cutoff_to_num_qubits(cutoff):
    if cutoff < 2 or cutoff & (cutoff - 1):
        raise ValueError(f"cutoff {cutoff} is not a power of two >= 2")
    return cutoff.bit_length() - 1


def displaced_qho_polynomial(alpha):
    x = BosonPolynomial.position()
    p = BosonPolynomial.momentum()
    shifted = x - np.sqrt(2.0) * float(alpha)
    return 0.5 * p * p + 0.5 * shifted * shifted


def displaced_qho_hamiltonian(alpha, num_qubits):
    """Qubit form of ``p^2/2 + (x - sqrt(2) alpha)^2 / 2`` at cutoff ``2^N``."""
    H = truncated_boson_to_qubit(displaced_qho_polynomial(alpha), num_qubits).real()
    H.metadata.update({"model": "displaced_qho", "alpha": float(alpha), "units": "oscillator"})
    return H
