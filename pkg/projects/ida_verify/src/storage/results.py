import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import polars as pl
from loguru import logger
from pydantic import BaseModel

from projects.ida_verify.src.core.errors import ConfigError
from projects.ida_verify.src.simulation.integrate import Trajectory

# leading trajectory columns after the state
TRAJECTORY_MONITORS = ("y_norm",)


class StoreResult:
    """Ledger of files written by one run"""

    def __init__(self):
        self.written: List[Path] = []
        self.failed: List[Tuple[Path, str]] = []  # (path, error_message)


def to_jsonable(value: Any) -> Any:
    """Convert pydantic models, numpy values and paths into plain JSON types."""
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def trajectory_frame(trajectory: Trajectory, n: int) -> pl.DataFrame:
    """Columns t, q_i, p_i, x_v_i, the energy named in the metadata, y_norm, margin, others."""
    columns: Dict[str, Any] = {"t": trajectory.times}
    for block, prefix in enumerate(("q", "p", "x_v")):
        for i in range(n):
            columns[f"{prefix}{i + 1}"] = trajectory.states[:, block * n + i]
    energy_name = trajectory.metadata.get("energy")
    ordered = [energy_name, *TRAJECTORY_MONITORS] if energy_name else list(TRAJECTORY_MONITORS)
    for name in ordered:
        if name in trajectory.channels:
            columns[name] = trajectory.channels[name]
    if trajectory.margins is not None:
        columns["margin"] = trajectory.margins
    for name in sorted(trajectory.channels):
        if name not in columns:
            columns[name] = trajectory.channels[name]
    return pl.DataFrame(columns)


class ResultStore:
    """CSV, JSON and Markdown outputs of a run, all inside one directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.result = StoreResult()

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def exists(self, name: str) -> bool:
        return self.path(name).exists()

    def _write(self, name: str, writer) -> Path:
        path = self.path(name)
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            writer(path)
        except OSError as e:
            self.result.failed.append((path, str(e)))
            logger.error(f"Failed to write {path}: {e}")
            raise ConfigError(f"Cannot write {path}: {e}")
        self.result.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_rows(self, name: str, rows: List[Dict[str, Any]]) -> Path:
        return self.write_frame(name, pl.DataFrame(rows))

    def write_frame(self, name: str, frame: pl.DataFrame) -> Path:
        return self._write(name, frame.write_csv)

    def write_json(self, name: str, payload: Any) -> Path:
        def writer(path: Path) -> None:
            with open(path, "w") as f:
                json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
                f.write("\n")

        return self._write(name, writer)

    def write_markdown(self, name: str, text: str) -> Path:
        return self._write(name, lambda path: path.write_text(text))

    def write_trajectory(self, stem: str, trajectory: Trajectory, n: int) -> Tuple[Path, Path]:
        """Trajectory CSV plus a JSON metadata sidecar."""
        csv_path = self.write_frame(f"{stem}.csv", trajectory_frame(trajectory, n))
        json_path = self.write_json(f"{stem}.json", trajectory.metadata)
        return csv_path, json_path

    def read_json(self, name: str) -> Optional[Dict[str, Any]]:
        """Parsed JSON file, or None when it was never written."""
        path = self.path(name)
        if not path.exists():
            return None
        try:
            with open(path) as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Unreadable result file {path}: {e}")

    def digests(self) -> Dict[str, str]:
        return {path.name: sha256_of(path) for path in self.result.written if path.exists()}
