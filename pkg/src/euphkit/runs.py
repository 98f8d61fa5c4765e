"""Run configuration, directory layout, manifest, and locking.

A run directory is the unit of persistence:

    runs/<run-id>/
      backend/         persisted scoring backend state
      classifiers/     coarse + fine classifier state
      rankings/        candidate ranking, filter decisions, review contexts
      distributions/   one json line per identified word
      reports/         evaluation reports
      promotions/      versioned keyword lists produced by the review loop
      manifest.json    stage ledger (timestamps live here only)

Under the count-oracle backend every artifact except the manifest is a pure
function of (config, seed).
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError

RUN_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

BACKEND_KINDS = ("count-oracle", "contextual-mlm")
CORPUS_FORMATS = ("plain-lines", "json-lines")
DEFAULT_K_VALUES = (10, 20, 30, 40, 50, 60, 80, 100)


@dataclass(frozen=True)
class RunConfig:
    corpus_path: str
    keyword_list_path: str
    run_id: str
    ground_truth_path: str | None = None
    backend: str = "count-oracle"
    t: int = 5
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    seed: int = 0
    runs_root: str = "runs"
    corpus_format: str = "plain-lines"
    # count-oracle parameters
    window: int = 1
    smoothing: float = 0.01
    # contextual-mlm parameters
    base_model: str = "bert-base-uncased"
    epochs: int = 3
    batch_size: int = 16
    learning_rate: float = 5e-5
    # review support
    review_top: int = 50
    review_contexts: int = 10

    def validate(self) -> "RunConfig":
        if not RUN_ID_RE.match(self.run_id):
            raise ConfigError(f"run id {self.run_id!r} is not filesystem-safe")
        if self.backend not in BACKEND_KINDS:
            raise ConfigError(f"backend must be one of {BACKEND_KINDS}")
        if self.corpus_format not in CORPUS_FORMATS:
            raise ConfigError(f"corpus format must be one of {CORPUS_FORMATS}")
        if self.t < 1:
            raise ConfigError("t must be >= 1")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if not self.k_values:
            raise ConfigError("k_values must be non-empty")
        if not Path(self.corpus_path).is_file():
            raise ConfigError(f"corpus file not found: {self.corpus_path}")
        if not Path(self.keyword_list_path).is_file():
            raise ConfigError(f"keyword file not found: {self.keyword_list_path}")
        if self.ground_truth_path and not Path(self.ground_truth_path).is_file():
            raise ConfigError(f"ground truth file not found: {self.ground_truth_path}")
        if tuple(sorted(self.k_values)) != tuple(self.k_values):
            return replace(self, k_values=tuple(sorted(self.k_values)))
        return self

    @property
    def run_dir(self) -> Path:
        return Path(self.runs_root) / self.run_id

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["k_values"] = list(self.k_values)
        return payload


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` pairs; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_CONFIG_KEYS = {
    "corpus": ("corpus_path", str),
    "keywords": ("keyword_list_path", str),
    "truth": ("ground_truth_path", str),
    "backend": ("backend", str),
    "t": ("t", int),
    "seed": ("seed", int),
    "run_id": ("run_id", str),
    "runs_root": ("runs_root", str),
    "format": ("corpus_format", str),
    "window": ("window", int),
    "smoothing": ("smoothing", float),
    "base_model": ("base_model", str),
    "epochs": ("epochs", int),
    "batch_size": ("batch_size", int),
    "learning_rate": ("learning_rate", float),
    "review_top": ("review_top", int),
    "review_contexts": ("review_contexts", int),
}


def build_config(file_values: dict | None, overrides: dict) -> RunConfig:
    """Merge config-file values with CLI overrides (overrides win)."""
    merged: dict = {}
    for source in (file_values or {}, overrides):
        for key, value in source.items():
            if value is None:
                continue
            if key == "k":
                if isinstance(value, str):
                    value = [int(part) for part in value.split(",") if part.strip()]
                merged["k_values"] = tuple(value)
            elif key in _CONFIG_KEYS:
                field_name, cast = _CONFIG_KEYS[key]
                merged[field_name] = cast(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for required in ("corpus_path", "keyword_list_path", "run_id"):
        if required not in merged:
            raise ConfigError(f"missing required config value: {required}")
    return RunConfig(**merged).validate()


class RunManifest:
    """Stage ledger persisted alongside the run artifacts."""

    def __init__(self, run_dir: Path, payload: dict) -> None:
        self.run_dir = run_dir
        self.payload = payload

    @classmethod
    def create(cls, config: RunConfig) -> "RunManifest":
        run_dir = config.run_dir
        run_dir.mkdir(parents=True, exist_ok=True)
        manifest = cls(run_dir, {"run_id": config.run_id, "config": config.to_dict(), "stages": {}})
        manifest.save()
        return manifest

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunManifest":
        run_dir = Path(run_dir)
        path = run_dir / "manifest.json"
        if not path.is_file():
            raise ConfigError(f"no manifest under {run_dir}")
        return cls(run_dir, json.loads(path.read_text(encoding="utf-8")))

    @property
    def path(self) -> Path:
        return self.run_dir / "manifest.json"

    def save(self) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.run_dir, prefix=".manifest-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def start_stage(self, name: str) -> None:
        self.payload["stages"][name] = {
            "status": "running",
            "started": datetime.now(timezone.utc).isoformat(),
            "artifacts": {},
            "error": None,
        }
        self.save()

    def finish_stage(self, name: str, artifacts: dict[str, Path] | None = None) -> None:
        stage = self.payload["stages"][name]
        recorded = {}
        for key, artifact_path in (artifacts or {}).items():
            artifact_path = Path(artifact_path)
            if not artifact_path.exists():
                raise ConfigError(f"stage {name} artifact missing: {artifact_path}")
            recorded[key] = str(artifact_path.relative_to(self.run_dir))
        stage["artifacts"] = recorded
        stage["status"] = "complete"
        stage["finished"] = datetime.now(timezone.utc).isoformat()
        self.save()

    def fail_stage(self, name: str, error: str) -> None:
        stage = self.payload["stages"].setdefault(name, {"artifacts": {}})
        stage["status"] = "failed"
        stage["error"] = error
        stage["finished"] = datetime.now(timezone.utc).isoformat()
        self.save()

    def stage_status(self, name: str) -> str | None:
        stage = self.payload["stages"].get(name)
        return stage["status"] if stage else None

    def artifact(self, stage: str, key: str) -> Path:
        rel = self.payload["stages"][stage]["artifacts"][key]
        return self.run_dir / rel


@contextmanager
def run_lock(run_dir: Path):
    """Single-writer lock on a run directory."""
    run_dir.mkdir(parents=True, exist_ok=True)
    lock_path = run_dir / ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"run {run_dir.name} is locked by another writer") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        if lock_path.exists():
            lock_path.unlink()
