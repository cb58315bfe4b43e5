"""Command-line front end.

Every task writes a CSV (``--out``) and a sibling ``*.manifest.json`` with the
resolved configuration, seed, library losses, wall time and package version.
Files are written by temp-file rename, so a failed run leaves no partial CSV.

Exit codes: 0 success, 1 internal error, 2 configuration error,
3 ingestion error, 4 tolerance failure (outputs are still written).
"""

import argparse
import csv
import io as _io
import json
import logging
import os
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__
from .boson_map import displaced_qho_hamiltonian
from .config import ConfigError, ExperimentConfig, merge, read_config_file
from .io import IngestionError, atomic_write_text, load_hamiltonian, load_library, save_library
from .measurement import MODES, hamiltonian_expectation
from .optimize import OptimizerConfig
from .pauli import exact_spectrum
from .synthesis import (
    build_rotation_library,
    default_synthesis_config,
    rotation_target,
    synthesize,
)
from .vqe import (
    AnsatzSpec,
    SubspaceObjective,
    default_vqe_config,
    displaced_scan,
    qss_vqe,
    qubit_ssvqe,
    trial_states,
)

log = logging.getLogger("qssvqe")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_TOLERANCE = 4

LIBRARY_DIR_ENV = "QSSVQE_LIBRARY_DIR"


class ToleranceError(RuntimeError):
    pass


class TaskOutput:
    def __init__(self, columns, rows, summary=None, status=EXIT_OK):
        self.columns = columns
        self.rows = rows
        self.summary = summary or {}
        self.status = status


# --- config resolution --------------------------------------------------------


def parse_grid(text):
    """``"a,b,c"`` or inclusive ``"start:stop:step"``."""
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            n = int(round((stop - start) / step))
            return [round(start + k * step, 12) for k in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def _int_list(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}") from exc


def args_to_overrides(args):
    g = lambda name: getattr(args, name, None)
    ham = {"file": g("hamiltonian"), "builtin": g("builtin"), "alpha": g("alpha"),
           "num_qubits": g("num_qubits")}
    ansatz = {"variant": g("ansatz"), "depth": g("depth") if args.command in ("qss-vqe", "sweep") else None,
              "layers": g("layers")}
    optimizer = {"restarts": g("restarts"), "max_iter": g("max_iter"), "gradient": g("gradient"),
                 "tol": g("tol")}
    synthesis = {}
    if args.command in ("synthesize", "build-library"):
        synthesis = {"kind": g("kind"), "qubit": g("qubit"), "num_qubits": g("num_qubits"),
                     "depth": g("depth"), "tolerance": g("tolerance"), "jobs": g("jobs")}
    sweep = {"inner": g("inner"), "files": g("files"), "alphas": parse_grid(g("alphas")),
             "param": g("param")}
    weights = parse_grid(g("weights")) if g("weights") else None
    return {
        "task": args.command, "hamiltonian": ham, "ansatz": ansatz, "optimizer": optimizer,
        "synthesis": synthesis, "sweep": sweep, "weights": weights, "num_states": g("num_states"),
        "states": _int_list(g("states")), "mode": g("mode"), "shots": g("shots"), "seed": g("seed"),
        "output": g("out"), "library": g("library"),
    }


def resolve_config(args):
    base = read_config_file(args.config) if getattr(args, "config", None) else {}
    if "task" in base and base["task"] != args.command:
        raise ConfigError(f"config file task {base['task']!r} does not match subcommand {args.command!r}")
    data = merge(base, args_to_overrides(args))
    data["output"] = data.get("output") or f"{args.command}.csv"
    return ExperimentConfig.from_dict(data)


def optimizer_from(cfg, defaults):
    try:
        return defaults.replace(**cfg.optimizer, seed=cfg.seed)
    except TypeError as exc:
        raise ConfigError(f"bad optimizer block: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def hamiltonian_from(spec):
    if spec.get("file"):
        return load_hamiltonian(spec["file"])
    builtin = spec.get("builtin")
    if builtin == "displaced_qho":
        nq = spec.get("num_qubits")
        if nq is None:
            raise ConfigError("builtin displaced_qho needs num_qubits")
        return displaced_qho_hamiltonian(float(spec.get("alpha", 0.0)), int(nq))
    if builtin is None:
        raise ConfigError("no Hamiltonian given: use --hamiltonian FILE or --builtin displaced_qho")
    raise ConfigError(f"unknown builtin Hamiltonian {builtin!r}")


def default_library_path(num_qubits, depth):
    root = Path(os.environ.get(LIBRARY_DIR_ENV, "libraries"))
    return root / f"rotations_nq{num_qubits}_d{depth}.json"


class LibraryCache:
    """Loads or builds rotation libraries on demand and records what was used."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.used = {}

    def get(self, num_qubits):
        if num_qubits in self.used:
            return self.used[num_qubits][0]
        syn = self.cfg.synthesis
        depth = int(syn.get("depth") or 2**num_qubits)
        tolerance = float(syn.get("tolerance", 1e-10))
        path = Path(self.cfg.library) if self.cfg.library else default_library_path(num_qubits, depth)
        built = False
        if path.exists():
            lib = load_library(path)
            if lib.num_qubits != num_qubits:
                raise ConfigError(f"library {path} is for {lib.num_qubits} qubits, need {num_qubits}")
        else:
            log.info("building %d-qubit rotation library at depth %d", num_qubits, depth)
            opt = default_synthesis_config(seed=self.cfg.seed)
            lib = build_rotation_library(num_qubits, depth, tolerance, opt, seed=self.cfg.seed,
                                         n_jobs=int(syn.get("jobs") or 1))
            save_library(lib, path)
            built = True
        if not lib.complete:
            raise ToleranceError(f"rotation library {path} has failed entries: {lib.failed}")
        self.used[num_qubits] = (lib, str(path), built)
        return lib

    def manifest(self):
        return {
            str(nq): {"path": p, "built": b, "depth": lib.depth, "losses": lib.losses()}
            for nq, (lib, p, b) in self.used.items()
        }


# --- tasks --------------------------------------------------------------------


def task_spectrum(cfg, libs):
    H = hamiltonian_from(cfg.hamiltonian)
    ev = exact_spectrum(H)
    rows = [{"index": k, "energy": float(e)} for k, e in enumerate(ev)]
    return TaskOutput(["index", "energy"], rows, {"num_qubits": H.num_qubits, "num_terms": len(H)})


def task_synthesize(cfg, libs):
    syn = cfg.synthesis
    missing = [k for k in ("kind", "qubit", "num_qubits") if syn.get(k) is None]
    if missing:
        raise ConfigError(f"synthesize needs {', '.join(missing)}")
    nq, j, kind = int(syn["num_qubits"]), int(syn["qubit"]), syn["kind"]
    depth = int(syn.get("depth") or 2**nq)
    tolerance = float(syn.get("tolerance", 1e-10))
    try:
        target = rotation_target(kind, j, nq)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = synthesize(target, depth, optimizer_from(cfg, default_synthesis_config()))
    ok = res.final_loss < tolerance
    row = {"kind": kind, "qubit": j, "num_qubits": nq, "depth": depth, "loss": res.final_loss,
           "ok": ok, "restarts_used": res.restarts_used, "iterations": res.iterations}
    summary = {"alphas": res.circuit.alphas.tolist(), "thetas": res.circuit.thetas.tolist(), **row}
    return TaskOutput(list(row), [row], summary, EXIT_OK if ok else EXIT_TOLERANCE)


def task_build_library(cfg, libs):
    syn = cfg.synthesis
    if syn.get("num_qubits") is None:
        raise ConfigError("build-library needs num_qubits")
    nq = int(syn["num_qubits"])
    depth = int(syn.get("depth") or 2**nq)
    tolerance = float(syn.get("tolerance", 1e-10))
    lib = build_rotation_library(nq, depth, tolerance, optimizer_from(cfg, default_synthesis_config()),
                                 seed=cfg.seed, n_jobs=int(syn.get("jobs") or 1))
    path = Path(cfg.library) if cfg.library else default_library_path(nq, depth)
    save_library(lib, path)
    rows = [{"kind": kind, "qubit": j, "num_qubits": nq, "depth": depth, "loss": e.loss,
             "ok": e.ok, "restarts_used": e.restarts_used}
            for (j, kind), e in sorted(lib.entries.items())]
    libs.used[nq] = (lib, str(path), True)
    status = EXIT_OK if lib.complete else EXIT_TOLERANCE
    return TaskOutput(list(rows[0]), rows, {"library": str(path)}, status)


def _vqe_on(H, cfg, libs, qubit):
    try:
        objective = SubspaceObjective(H, int(cfg.num_states), cfg.weights, cfg.states)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    a = cfg.ansatz
    if qubit:
        ansatz = AnsatzSpec.two_local(int(a.get("layers") or 1))
        return objective, ansatz, qubit_ssvqe(objective, ansatz, optimizer_from(cfg, default_vqe_config())), None
    variant = a.get("variant") or "snap_displacement"
    try:
        ansatz = AnsatzSpec(variant, depth=int(a.get("depth") or 4))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    library = libs.get(H.num_qubits) if cfg.mode in ("rotation", "sampled") else None
    opt_mode = "exact" if cfg.mode == "exact" else "rotation"
    res = qss_vqe(objective, ansatz, library, optimizer_from(cfg, default_vqe_config()), opt_mode)
    return objective, ansatz, res, library


def _vqe_rows(cfg, objective, ansatz, res, library):
    rows = []
    sampled = None
    if cfg.mode == "sampled":
        states = trial_states(objective, ansatz, res.params)
        sampled = [hamiltonian_expectation(states[:, k], objective.hamiltonian, library, "sampled",
                                           cfg.shots, cfg.seed + k) for k in range(states.shape[1])]
    for k, (n, w, e) in enumerate(zip(objective.initial_states, objective.weights, res.energies)):
        row = {"state": k, "fock_index": n, "weight": w, "energy": float(e),
               "exact": float(res.exact[k]), "subspace_eigenvalue": float(res.subspace_eigenvalues[k])}
        if sampled is not None:
            row["energy_sampled"] = sampled[k]
        rows.append(row)
    return rows


def _vqe_summary(res):
    return {"objective": res.objective, "delta": res.delta, "converged": res.converged,
            "restarts_used": res.restarts_used, "params": res.params.tolist(),
            "metadata": res.metadata}


def task_vqe(cfg, libs, qubit=False):
    H = hamiltonian_from(cfg.hamiltonian)
    objective, ansatz, res, library = _vqe_on(H, cfg, libs, qubit)
    rows = _vqe_rows(cfg, objective, ansatz, res, library)
    return TaskOutput(list(rows[0]), rows, _vqe_summary(res))


def _scan_alphas(cfg):
    alphas = cfg.sweep.get("alphas")
    if alphas is None and cfg.hamiltonian.get("alpha") is not None:
        alphas = [float(cfg.hamiltonian["alpha"])]
    if not alphas:
        raise ConfigError("displaced-scan needs --alphas (list or start:stop:step)")
    return [float(a) for a in alphas]


def task_displaced_scan(cfg, libs):
    nq = cfg.hamiltonian.get("num_qubits")
    if nq is None:
        raise ConfigError("displaced-scan needs --num-qubits")
    rows = displaced_scan(_scan_alphas(cfg), int(nq), tuple(cfg.states or (0, 1, 2)))
    return TaskOutput(["alpha", "n", "energy", "exact", "rel_error"], rows)


def _point_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0] % (2**31))


def task_sweep(cfg, libs):
    sw = cfg.sweep
    inner = sw.get("inner") or "qss-vqe"
    if inner == "displaced-scan":
        return task_displaced_scan(cfg, libs)
    if inner not in ("qss-vqe", "qubit-ssvqe", "spectrum"):
        raise ConfigError(f"sweep inner task must be qss-vqe, qubit-ssvqe, spectrum or displaced-scan")
    param = sw.get("param") or ("alpha" if sw.get("alphas") else "R")
    points = []
    if sw.get("files"):
        for k, f in enumerate(sw["files"]):
            H = load_hamiltonian(f)
            points.append((H.metadata.get(param, k), H))
    elif sw.get("alphas"):
        nq = cfg.hamiltonian.get("num_qubits")
        if nq is None:
            raise ConfigError("alpha sweep needs --num-qubits")
        points = [(a, displaced_qho_hamiltonian(a, int(nq))) for a in sw["alphas"]]
    else:
        raise ConfigError("sweep needs --files or --alphas")

    rows = []
    deltas = {}
    for idx, (value, H) in enumerate(points):
        if inner == "spectrum":
            for k, e in enumerate(exact_spectrum(H)):
                rows.append({param: value, "index": k, "energy": float(e)})
            continue
        point_cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "seed": _point_seed(cfg.seed, idx)})
        _, _, res, _ = _vqe_on(H, point_cfg, libs, inner == "qubit-ssvqe")
        row = {param: value}
        row.update({f"E{k}": float(e) for k, e in enumerate(np.sort(res.energies))})
        row["delta"] = res.delta
        rows.append(row)
        deltas[str(value)] = res.delta
    columns = list(rows[0]) if rows else [param]
    return TaskOutput(columns, rows, {"inner": inner, "param": param, "deltas": deltas})


def task_validate(cfg, libs):
    rows = []
    status = EXIT_OK
    files = list(cfg.sweep.get("files") or [])
    if cfg.hamiltonian.get("file"):
        files.insert(0, cfg.hamiltonian["file"])
    for f in files:
        try:
            H = load_hamiltonian(f)
        except IngestionError as exc:
            rows.append({"target": f, "check": "hamiltonian", "status": "fail", "detail": str(exc)})
            status = max(status, EXIT_INGEST)
            continue
        ev = exact_spectrum(H)
        rows.append({"target": f, "check": "hamiltonian", "status": "ok",
                     "detail": f"{H.num_qubits} qubits, {len(H)} terms, ground {ev[0]:.12g}"})
    if cfg.library:
        try:
            lib = load_library(cfg.library)
        except IngestionError as exc:
            rows.append({"target": cfg.library, "check": "library", "status": "fail", "detail": str(exc)})
            status = max(status, EXIT_INGEST)
        else:
            for (j, kind), e in sorted(lib.entries.items()):
                rows.append({"target": cfg.library, "check": f"{kind}{j}",
                             "status": "ok" if e.ok else "fail", "detail": f"loss {e.loss:.3e}"})
            for key, msg in lib.errors.items():
                rows.append({"target": cfg.library, "check": str(key), "status": "fail", "detail": msg})
            if not lib.complete:
                status = max(status, EXIT_TOLERANCE)
    if not rows:
        raise ConfigError("validate needs --hamiltonian FILE, --files or --library")
    return TaskOutput(["target", "check", "status", "detail"], rows, status=status)


TASK_HANDLERS = {
    "spectrum": task_spectrum,
    "synthesize": task_synthesize,
    "build-library": task_build_library,
    "qss-vqe": task_vqe,
    "qubit-ssvqe": lambda cfg, libs: task_vqe(cfg, libs, qubit=True),
    "displaced-scan": task_displaced_scan,
    "sweep": task_sweep,
    "validate": task_validate,
}


# --- output -------------------------------------------------------------------


def _cell(value):
    # repr keeps full float precision; numpy scalars are unwrapped first
    if isinstance(value, np.generic):
        value = value.item()
    return repr(value) if isinstance(value, float) else value


def _csv_text(columns, rows):
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})
    return buf.getvalue()


def manifest_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _report_error(exc, code):
    err = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(err), file=sys.stderr)
    return code


def run(cfg):
    """Execute one resolved experiment; returns the process exit code."""
    libs = LibraryCache(cfg)
    start = time.perf_counter()
    try:
        out = TASK_HANDLERS[cfg.task](cfg, libs)
    except ConfigError as exc:
        return _report_error(exc, EXIT_CONFIG)
    except IngestionError as exc:
        return _report_error(exc, EXIT_INGEST)
    except ToleranceError as exc:
        return _report_error(exc, EXIT_TOLERANCE)
    wall = time.perf_counter() - start
    manifest = {
        "artifact": "qssvqe",
        "version": __version__,
        "task": cfg.task,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "libraries": libs.manifest(),
        "wall_time_s": wall,
        "exit_code": out.status,
        "csv": str(cfg.output),
        "summary": out.summary,
    }
    atomic_write_text(cfg.output, _csv_text(out.columns, out.rows))
    atomic_write_text(manifest_path(cfg.output), json.dumps(manifest, indent=2, default=_jsonable) + "\n")
    log.info("wrote %s (%d rows) in %.2fs", cfg.output, len(out.rows), wall)
    return out.status


# --- argument parsing ---------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output CSV path (manifest is written alongside)")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--shots", type=int)
    common.add_argument("--library", help=f"rotation library file (default: ${LIBRARY_DIR_ENV}/...)")
    common.add_argument("-v", "--verbose", action="store_true")

    ham = argparse.ArgumentParser(add_help=False)
    ham.add_argument("--hamiltonian", metavar="FILE", help="line-oriented JSON Hamiltonian")
    ham.add_argument("--builtin", choices=["displaced_qho"])
    ham.add_argument("--alpha", type=float)
    ham.add_argument("--num-qubits", type=int)

    vqe = argparse.ArgumentParser(add_help=False)
    vqe.add_argument("--weights", help="comma-separated weights, e.g. 1.0,0.9,0.8")
    vqe.add_argument("--num-states", type=int)
    vqe.add_argument("--states", help="comma-separated initial Fock indices")
    vqe.add_argument("--restarts", type=int)
    vqe.add_argument("--max-iter", type=int)
    vqe.add_argument("--tol", type=float)
    vqe.add_argument("--gradient", choices=["analytic", "central"])

    parser = argparse.ArgumentParser(prog="qssvqe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", parents=[common, vqe], help="compile one H_j/W_j rotation")
    p.add_argument("--kind", choices=["H", "W"])
    p.add_argument("--qubit", type=int)
    p.add_argument("--num-qubits", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("build-library", parents=[common, vqe], help="compile all rotations for N qubits")
    p.add_argument("--num-qubits", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--jobs", type=int)

    sub.add_parser("spectrum", parents=[common, ham], help="exact diagonalization")

    p = sub.add_parser("qss-vqe", parents=[common, ham, vqe], help="qumode subspace VQE")
    p.add_argument("--ansatz", choices=["snap_displacement", "single_displacement"])
    p.add_argument("--depth", type=int)

    p = sub.add_parser("qubit-ssvqe", parents=[common, ham, vqe], help="qubit TwoLocal baseline")
    p.add_argument("--layers", type=int)

    p = sub.add_parser("displaced-scan", parents=[common, ham], help="D(alpha)|n> trial energies")
    p.add_argument("--alphas", help="list a,b,c or start:stop:step")
    p.add_argument("--states", help="comma-separated Fock indices (default 0,1,2)")

    p = sub.add_parser("sweep", parents=[common, ham, vqe], help="repeat a task over files or alphas")
    p.add_argument("--inner", choices=["qss-vqe", "qubit-ssvqe", "spectrum", "displaced-scan"])
    p.add_argument("--files", nargs="+", metavar="FILE")
    p.add_argument("--alphas")
    p.add_argument("--param", help="metadata key naming the sweep variable (default R)")
    p.add_argument("--ansatz", choices=["snap_displacement", "single_displacement"])
    p.add_argument("--depth", type=int)
    p.add_argument("--layers", type=int)

    p = sub.add_parser("validate", parents=[common, ham], help="check Hamiltonian/library files")
    p.add_argument("--files", nargs="+", metavar="FILE")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _report_error(exc, EXIT_CONFIG)
    try:
        return run(cfg)
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        log.debug("internal error", exc_info=True)
        return _report_error(exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
