"""Line-oriented JSON formats for Hamiltonians and rotation libraries.

Hamiltonian file::

    {"format": "qubit-hamiltonian", "version": 1, "num_qubits": 2, "metadata": {...}}
    {"word": "II", "coeff": -1.05}
    {"word": "ZZ", "coeff": -0.011}

Rotation library file::

    {"format": "rotation-library", "version": 1, "num_qubits": 2, "depth": 4, "tolerance": 1e-10}
    {"num_qubits": 2, "j": 1, "kind": "H", "depth": 4, "loss": 1e-28, "ok": true,
     "alphas": [...], "thetas": [[...], ...]}

Floats are written with ``repr`` precision, so save/load is bit-exact.
"""

import json
import math
import os
from pathlib import Path
import tempfile

import numpy as np

from .fock import SnapDispCircuit
from .pauli import QubitHamiltonian, check_word
from .synthesis import ROTATION_KINDS, LibraryEntry, RotationLibrary, rotation_target, synthesis_loss

HAMILTONIAN_FORMAT = "qubit-hamiltonian"
LIBRARY_FORMAT = "rotation-library"
FORMAT_VERSION = 1
LOSS_RECHECK_TOL = 1e-12


class IngestionError(ValueError):
    def __init__(self, message, path=None, line=None, field=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.path, self.line, self.field = path, line, field


def atomic_write_text(path, text):
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json_lines(path):
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read file ({exc.strerror})", path) from exc
    records = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise IngestionError(f"invalid JSON ({exc.msg})", path, lineno) from exc
    if not records:
        raise IngestionError("file is empty; expected a header line", path)
    return records


def _check_header(path, lineno, header, fmt):
    if not isinstance(header, dict) or header.get("format") != fmt:
        raise IngestionError(f"first record must be a {fmt!r} header", path, lineno, "format")
    if header.get("version") != FORMAT_VERSION:
        raise IngestionError(
            f"unsupported version {header.get('version')!r} (expected {FORMAT_VERSION})",
            path, lineno, "version",
        )
    nq = header.get("num_qubits")
    if not isinstance(nq, int) or isinstance(nq, bool) or nq < 1:
        raise IngestionError("num_qubits must be a positive integer", path, lineno, "num_qubits")
    return nq


def load_hamiltonian(path):
    records = _read_json_lines(path)
    lineno, header = records[0]
    nq = _check_header(path, lineno, header, HAMILTONIAN_FORMAT)
    metadata = header.get("metadata", {})
    if not isinstance(metadata, dict):
        raise IngestionError("metadata must be an object", path, lineno, "metadata")
    terms = []
    for lineno, rec in records[1:]:
        if not isinstance(rec, dict):
            raise IngestionError("term record must be an object", path, lineno)
        for key in ("word", "coeff"):
            if key not in rec:
                raise IngestionError("missing field", path, lineno, key)
        word, coeff = rec["word"], rec["coeff"]
        try:
            check_word(word, nq)
        except ValueError as exc:
            raise IngestionError(str(exc), path, lineno, "word") from exc
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)) or not math.isfinite(coeff):
            raise IngestionError(f"coefficient must be a finite real, got {coeff!r}", path, lineno, "coeff")
        terms.append((float(coeff), word))
    return QubitHamiltonian(terms, nq, metadata).real()


def dumps_hamiltonian(H, metadata=None):
    H = H.real()
    meta = dict(H.metadata)
    meta.update(metadata or {})
    lines = [json.dumps({"format": HAMILTONIAN_FORMAT, "version": FORMAT_VERSION,
                         "num_qubits": H.num_qubits, "metadata": meta})]
    lines += [json.dumps({"word": w, "coeff": c.real}) for c, w in H]
    return "\n".join(lines) + "\n"


def save_hamiltonian(H, path, metadata=None):
    atomic_write_text(path, dumps_hamiltonian(H, metadata))


def dumps_library(library):
    lines = [json.dumps({"format": LIBRARY_FORMAT, "version": FORMAT_VERSION,
                         "num_qubits": library.num_qubits, "depth": library.depth,
                         "tolerance": library.tolerance})]
    for (j, kind), e in sorted(library.entries.items()):
        lines.append(json.dumps({
            "num_qubits": library.num_qubits, "j": j, "kind": kind, "depth": e.circuit.depth,
            "loss": e.loss, "ok": e.ok, "restarts_used": e.restarts_used,
            "alphas": e.circuit.alphas.tolist(), "thetas": e.circuit.thetas.tolist(),
        }))
    return "\n".join(lines) + "\n"


def save_library(library, path):
    atomic_write_text(path, dumps_library(library))


def _parse_entry(rec, nq, tolerance):
    if not isinstance(rec, dict):
        raise ValueError("entry must be an object")
    j, kind = rec.get("j"), rec.get("kind")
    if rec.get("num_qubits") != nq:
        raise ValueError(f"entry is for {rec.get('num_qubits')} qubits, library for {nq}")
    L = 2**nq
    try:
        alphas = np.array(rec["alphas"], dtype=float)
        thetas = np.array(rec["thetas"], dtype=float)
    except ValueError as exc:
        raise ValueError("alphas/thetas must be numeric arrays with rectangular thetas shape") from exc
    if thetas.ndim != 2 or thetas.shape[1] != L or thetas.shape[0] != alphas.size:
        raise ValueError(f"thetas shape {thetas.shape} inconsistent with depth {alphas.size}, L={L}")
    if not (np.all(np.isfinite(alphas)) and np.all(np.isfinite(thetas))):
        raise ValueError("non-finite circuit parameter")
    circuit = SnapDispCircuit(alphas, thetas)
    stored = float(rec["loss"])
    recomputed = synthesis_loss(circuit, rotation_target(kind, j, nq))
    if abs(recomputed - stored) > LOSS_RECHECK_TOL:
        raise ValueError(f"stored loss {stored:.3e} but circuit gives {recomputed:.3e}")
    return LibraryEntry(circuit, stored, stored < tolerance, int(rec.get("restarts_used", 0)))


def load_library(path):
    """Load a rotation library; bad entries land in ``library.errors`` instead of raising."""
    records = _read_json_lines(path)
    lineno, header = records[0]
    nq = _check_header(path, lineno, header, LIBRARY_FORMAT)
    lib = RotationLibrary(nq, int(header.get("depth", 0)), float(header.get("tolerance", 1e-10)))
    for lineno, rec in records[1:]:
        key = (rec.get("j"), rec.get("kind")) if isinstance(rec, dict) else (None, None)
        if key[1] not in ROTATION_KINDS or not isinstance(key[0], int) or not 1 <= key[0] <= nq:
            lib.errors[("?", lineno)] = f"line {lineno}: unrecognized entry key {key!r}"
            continue
        try:
            lib.entries[key] = _parse_entry(rec, nq, lib.tolerance)
        except (KeyError, TypeError, ValueError) as exc:
            lib.errors[key] = f"line {lineno}: {exc}"
    return lib
