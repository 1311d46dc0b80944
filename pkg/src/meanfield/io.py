"""Dataset ingestion and result serialization.

Datasets are JSON objects mapping names to numbers, flat arrays, or
row-major arrays-of-arrays; integer-valued entries keep integer type.
Results are written as two CSV files (posterior samples and the
optimization trace) plus a JSON manifest that echoes everything needed to
reproduce the run. Floats are printed with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .engine import ElboTrace, PosteriorDraws
from .errors import ConfigurationError, ShapeError
from .model import Dataset

__all__ = ["load_dataset", "RunManifest", "write_samples_csv",
           "write_diagnostics_csv", "write_manifest", "write_outputs"]


def _check_scalar(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ShapeError(
            f"dataset entry {name!r}: element {v!r} is not a number")
    return v


def _normalize_entry(name: str, value):
    if isinstance(value, list):
        if not value:
            return []
        if all(isinstance(row, list) for row in value):
            width = len(value[0])
            for row in value:
                if len(row) != width:
                    raise ShapeError(
                        f"dataset entry {name!r}: ragged rows "
                        f"({len(row)} vs {width})")
                for v in row:
                    _check_scalar(name, v)
            if all(isinstance(v, int) and not isinstance(v, bool)
                   for row in value for v in row):
                return [[int(v) for v in row] for row in value]
            return [[float(v) for v in row] for row in value]
        if any(isinstance(row, list) for row in value):
            raise ShapeError(
                f"dataset entry {name!r}: mixes scalars and rows")
        for v in value:
            _check_scalar(name, v)
        if all(isinstance(v, int) and not isinstance(v, bool)
               for v in value):
            return [int(v) for v in value]
        return [float(v) for v in value]
    return _check_scalar(name, value)


def load_dataset(path) -> Dataset:
    """Read a JSON dataset, validating shapes and preserving int typing."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ShapeError(f"{path}: top level must be a JSON object")
    entries = {name: _normalize_entry(name, value)
               for name, value in raw.items()}
    return Dataset(entries)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_samples_csv(draws: PosteriorDraws, path) -> None:
    """One header row of flattened constrained names, one row per draw."""
    lines = [",".join(draws.column_names())]
    flat = draws.flattened()
    for s in range(draws.size):
        lines.append(",".join(_fmt(v) for v in flat[s]))
    _write_text(path, "\n".join(lines) + "\n")


def write_diagnostics_csv(trace: ElboTrace, path) -> None:
    lines = ["iteration,elapsed_ms,elbo"]
    for iteration, elapsed_ms, elbo in trace:
        lines.append(f"{iteration},{_fmt(elapsed_ms)},{_fmt(elbo)}")
    _write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run, plus its wall-clock timings."""

    model: str
    hyperparams: dict
    config: dict
    seed: int
    input_paths: dict
    output_paths: dict
    timings: dict
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def write_manifest(manifest: RunManifest, path) -> None:
    _write_text(path, manifest.to_json() + "\n")


def write_outputs(draws: PosteriorDraws, trace: ElboTrace,
                  manifest: RunManifest, samples_path, diagnostics_path,
                  manifest_path) -> None:
    write_samples_csv(draws, samples_path)
    write_diagnostics_csv(trace, diagnostics_path)
    write_manifest(manifest, manifest_path)


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc
