"""Provenance manifest written next to every emitted embedding file."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class AdapterManifest:
    model_selector: str
    model_name: str
    model_revision: str
    input_path: str
    output_path: str
    dim: int
    rows: int
    device: str
    wall_clock_s: float
    created_unix: float = field(default_factory=time.time)
    skipped: list[dict] = field(default_factory=list)
    tool: str = "promptknn-adapters 0.1.0"

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "model": {
                "selector": self.model_selector,
                "name": self.model_name,
                "revision": self.model_revision,
            },
            "input": self.input_path,
            "output": self.output_path,
            "dim": self.dim,
            "rows": self.rows,
            "device": self.device,
            "wall_clock_s": round(self.wall_clock_s, 3),
            "created_unix": round(self.created_unix, 3),
            "skipped": self.skipped,
        }

    def write(self, destination: str | Path) -> None:
        with open(destination, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
