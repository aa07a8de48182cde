"""Reproducible run directories: CSV emission and the run manifest.

CSV convention: UTF-8, comma separators, one header row, LF line endings,
floats printed with 9 significant digits.  Every command writes into its
own ``<out>/<command>-<seed>/`` directory containing ``manifest.json``
plus the data files; the manifest is written before any data row and
updated with per-file checksums once the command finishes.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

__all__ = ["format_value", "write_csv", "RunManifest"]


def format_value(value) -> str:
    """CSV cell formatting: floats at 9 significant digits, ints verbatim."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.9g}"
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Config echo, code version, seed, timestamps, per-output checksums."""

    command: str
    seed: int
    config: dict
    version: str
    started: str = ""
    finished: str = ""
    checksums: dict[str, str] = field(default_factory=dict)

    PATH_NAME = "manifest.json"

    def begin(self, run_dir: Path) -> None:
        """Write the manifest before the first data row."""
        self.started = datetime.now(timezone.utc).isoformat()
        self._dump(run_dir)

    def finish(self, run_dir: Path) -> None:
        """Checksum every emitted file and rewrite the manifest."""
        self.finished = datetime.now(timezone.utc).isoformat()
        self.checksums = {
            p.name: _sha256(p)
            for p in sorted(run_dir.iterdir())
            if p.is_file() and p.name != self.PATH_NAME
        }
        self._dump(run_dir)

    def _dump(self, run_dir: Path) -> None:
        payload = {
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "checksums": self.checksums,
        }
        path = run_dir / self.PATH_NAME
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8", newline="\n")

    @staticmethod
    def verify(run_dir: Path) -> bool:
        """True when every checksum in the manifest matches the file on disk."""
        data = json.loads((run_dir / RunManifest.PATH_NAME).read_text(encoding="utf-8"))
        for name, digest in data["checksums"].items():
            target = run_dir / name
            if not target.is_file() or _sha256(target) != digest:
                return False
        return True
