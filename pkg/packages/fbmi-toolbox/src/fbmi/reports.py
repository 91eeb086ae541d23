"""JSON and CSV reports plus the per-run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from . import __version__
from .constants import SCHEMA_VERSION

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping
    from pathlib import Path

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """numpy scalars and arrays as JSON-native values."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    return value


def write_report(path: Path, kind: str, payload: Mapping[str, Any]) -> Path:
    """One JSON object per file, tagged with ``schema_version`` and ``kind``."""
    document = {"schema_version": SCHEMA_VERSION, "kind": kind, **_plain(dict(payload))}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    logger.debug("Wrote %s report to %s", kind, path)
    return path


def read_report(path: Path) -> dict[str, Any]:
    data: dict[str, Any] = json.loads(path.read_text())
    return data


def write_csv(path: Path, rows: Iterable[Mapping[str, Any]]) -> Path:
    rows = [dict(_plain(dict(row))) for row in rows]
    fieldnames = list(rows[0]) if rows else []
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: json.dumps(v) if isinstance(v, list | dict) else v for k, v in row.items()}
            )
    return path


def write_vector(path: Path, values: np.ndarray, *, header: str | None = None) -> Path:
    """Per-vertex values, one ``index value`` line each, 17 significant digits."""
    lines = [f"# {header}"] if header else []
    lines.extend(f"{i} {float(v):.17g}" for i, v in enumerate(np.ravel(values)))
    path.write_text("\n".join(lines) + "\n")
    return path


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce one command: inputs, parameters, outputs."""

    command: str
    parameters: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path: Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def lap(self, name: str) -> None:
        """Record the seconds since the manifest was created under ``name``."""
        self.timings[name] = time.perf_counter() - self._started

    def to_payload(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings": self.timings,
            "version": self.version,
        }

    def write(self, directory: Path) -> Path:
        self.lap("total")
        path = directory / "manifest.json"
        self.outputs.append(str(path))
        return write_report(path, "manifest", self.to_payload())
