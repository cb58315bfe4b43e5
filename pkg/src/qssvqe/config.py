"""Experiment configuration shared by the CLI and config files (YAML or JSON)."""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

TASKS = (
    "synthesize",
    "build-library",
    "spectrum",
    "qss-vqe",
    "qubit-ssvqe",
    "displaced-scan",
    "sweep",
    "validate",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    task: str = "spectrum"
    hamiltonian: dict = field(default_factory=dict)
    ansatz: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    synthesis: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    weights: list | None = None
    num_states: int = 3
    states: list | None = None
    mode: str = "exact"
    shots: int | None = None
    seed: int = 0
    output: str | None = None
    library: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.mode not in ("exact", "rotation", "sampled"):
            raise ConfigError(f"mode must be exact, rotation or sampled, got {self.mode!r}")
        if self.mode == "sampled" and not self.shots:
            raise ConfigError("sampled mode needs a positive shots count")
        if self.shots is not None and (not isinstance(self.shots, int) or self.shots < 1):
            raise ConfigError(f"shots must be a positive integer, got {self.shots!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        for name in ("hamiltonian", "ansatz", "optimizer", "synthesis", "sweep"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"{name} block must be a mapping")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)


def read_config_file(path):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return data or {}


def merge(base, override):
    """Recursive dict merge; ``None`` values in ``override`` leave ``base`` untouched."""
    out = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        elif isinstance(value, dict):
            out[key] = {k: v for k, v in value.items() if v is not None}
        else:
            out[key] = value
    return out
