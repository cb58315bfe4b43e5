"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (also repeated in the
pytest terminal summary).  Run on its own with::

    pytest tests/test_acceptance.py -v -s
"""

import csv
import itertools
import json
from pathlib import Path
import subprocess
import sys
import time

import numpy as np
import pytest

from qssvqe.boson_map import displaced_qho_hamiltonian, displaced_qho_polynomial
from qssvqe.cli import main, manifest_path
from qssvqe.measurement import pauli_expectation_exact, pauli_expectation_via_rotation
from qssvqe.pauli import hamiltonian_matrix
from qssvqe.synthesis import build_rotation_library
from qssvqe.vqe import AnsatzSpec, SubspaceObjective, default_vqe_config, qss_vqe, qubit_ssvqe

from conftest import random_state
from test_boson_map import closed_form_nq2, closed_form_nq3

RESULTS = {}


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    RESULTS[number] = line
    assert ok, line


def max_coefficient_gap(H, ref):
    words = {w for _, w in H} | {w for _, w in ref}
    return max(abs(H.coefficient(w) - ref.coefficient(w)) for w in words)


def test_criterion_1_mapper_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    coeff_gap = dense_gap = 0.0
    for alpha in rng.uniform(-1, 1, size=5):
        for n, ref in ((2, closed_form_nq2), (3, closed_form_nq3)):
            H = displaced_qho_hamiltonian(alpha, n)
            coeff_gap = max(coeff_gap, max_coefficient_gap(H, ref(alpha)))
            direct = displaced_qho_polynomial(alpha).matrix(2**n)
            dense_gap = max(dense_gap, np.max(np.abs(hamiltonian_matrix(H) - direct)))
    elapsed = time.perf_counter() - start
    ok = coeff_gap < 1e-12 and dense_gap < 1e-12 and elapsed < 1.0
    report(1, ok, f"max coefficient gap {coeff_gap:.1e}, max dense gap {dense_gap:.1e}, {elapsed:.2f}s (< 1s)")


def _library_check(number, num_qubits, depth, budget):
    start = time.perf_counter()
    lib = build_rotation_library(num_qubits, depth=depth, tolerance=1e-10, seed=0)
    elapsed = time.perf_counter() - start
    losses = lib.losses()
    expected = {f"{k}{j}" for j in range(1, num_qubits + 1) for k in "HW"}
    worst = max(losses.values())
    ok = set(losses) == expected and worst <= 1e-10 and lib.complete and elapsed < budget
    detail = ", ".join(f"{k}={v:.1e}" for k, v in losses.items())
    report(number, ok, f"N_Q={num_qubits} d={depth}: {detail}; {elapsed:.1f}s (< {budget:.0f}s)")


@pytest.mark.slow
def test_criterion_2_four_qubit_library():
    # budget "minutes on a laptop"; ten minutes allowed here
    _library_check(2, 4, 16, 600.0)


def test_criterion_3_two_qubit_library():
    _library_check(3, 2, 4, 30.0)


def test_criterion_4_measurement_protocol():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    libs = {1: build_rotation_library(1, depth=4, seed=0),
            2: build_rotation_library(2, depth=4, seed=0),
            3: build_rotation_library(3, depth=8, seed=0)}
    worst = {}
    for n in (1, 2):
        words = ["".join(w) for w in itertools.product("IXYZ", repeat=n)][1:]
        gap = 0.0
        for _ in range(100):
            psi = random_state(rng, 2**n)
            for w in words:
                gap = max(gap, abs(pauli_expectation_via_rotation(psi, w, libs[n]) - pauli_expectation_exact(psi, w)))
        worst[n] = gap
    words3 = ["".join(w) for w in itertools.product("IXYZ", repeat=3)][1:]
    gap = 0.0
    for _ in range(200):
        psi = random_state(rng, 8)
        w = words3[rng.integers(len(words3))]
        gap = max(gap, abs(pauli_expectation_via_rotation(psi, w, libs[3]) - pauli_expectation_exact(psi, w)))
    worst[3] = gap
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-5 and elapsed < 60
    detail = ", ".join(f"N_Q={n} max gap {g:.1e}" for n, g in worst.items())
    report(4, ok, f"{detail}; {elapsed:.1f}s (< 60s)")


def test_criterion_5_qss_vqe_spectrum():
    start = time.perf_counter()
    deltas = {}
    for alpha in (0.0, 0.2, 0.4):
        obj = SubspaceObjective(displaced_qho_hamiltonian(alpha, 2), weights=(1.0, 0.9, 0.8))
        res = qss_vqe(obj, AnsatzSpec.snap_displacement(4), optimizer=default_vqe_config(restarts=10))
        deltas[alpha] = res.delta
    elapsed = time.perf_counter() - start
    ok = max(deltas.values()) < 1.6e-3 and deltas[0.0] < 1e-6 and elapsed < 120
    detail = ", ".join(f"alpha={a}: delta={d:.1e}" for a, d in deltas.items())
    report(5, ok, f"{detail}; {elapsed:.1f}s (< 120s)")


def test_criterion_6_displaced_scan(tmp_path):
    start = time.perf_counter()
    out = tmp_path / "scan.csv"
    code = main(["displaced-scan", "--num-qubits", "3", "--alphas", "0.05:1.0:0.05", "--out", str(out)])
    elapsed = time.perf_counter() - start
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    small = [float(r["rel_error"]) for r in rows if float(r["alpha"]) <= 0.4 + 1e-12]
    ground = [float(r["rel_error"]) for r in rows if r["n"] == "0"]
    monotone = all(b >= a for a, b in zip(ground, ground[1:]))
    ok = code == 0 and len(rows) == 60 and max(small) < 1e-3 and monotone and elapsed < 10
    report(6, ok, f"max rel error (alpha<=0.4) {max(small):.1e}, n=0 non-decreasing: {monotone}, "
                  f"n=0 at alpha=1.0: {ground[-1]:.1e}; {elapsed:.2f}s (< 10s)")


def test_criterion_7_single_displacement_beats_two_local():
    start = time.perf_counter()
    opt = default_vqe_config(restarts=20)
    pairs = {}
    for alpha in (0.2, 0.4):
        obj = SubspaceObjective(displaced_qho_hamiltonian(alpha, 3))
        qumode = qss_vqe(obj, AnsatzSpec.single_displacement(), optimizer=opt).delta
        qubit = qubit_ssvqe(obj, AnsatzSpec.two_local(1), opt).delta
        pairs[alpha] = (qumode, qubit)
    elapsed = time.perf_counter() - start
    ok = all(q < b for q, b in pairs.values()) and elapsed < 300
    detail = ", ".join(f"alpha={a}: single {q:.1e} vs TwoLocal {b:.1e}" for a, (q, b) in pairs.items())
    report(7, ok, f"{detail}; {elapsed:.1f}s (< 300s)")


def test_criterion_8_h2_end_to_end(tmp_path, h2_file):
    out = tmp_path / "h2.csv"
    code = main(["qss-vqe", "--hamiltonian", str(h2_file), "--weights", "1.0,0.9,0.8", "--depth", "4",
                 "--out", str(out)])
    manifest = json.loads(manifest_path(out).read_text()) if out.exists() else {}
    delta = manifest.get("summary", {}).get("delta", float("inf"))
    ok = code == 0 and delta < 1.6e-3
    report(8, ok, f"H2 R=0.735 file: exit {code}, delta={delta:.1e} (< 1.6e-3)")


def test_criterion_9_property_suites():
    tests_dir = Path(__file__).parent
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(tests_dir),
         "--ignore", str(Path(__file__))],
        capture_output=True, text=True, cwd=tests_dir.parent,
    )
    elapsed = time.perf_counter() - start
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 120
    report(9, ok, f"module property suites: {summary}; {elapsed:.1f}s (< 120s)")
