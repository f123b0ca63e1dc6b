"""Per-run output directory: CSVs, plots, summary checks, and a manifest.

CSV payloads are written with repr-exact float formatting, so identical
scenarios with identical seeds reproduce byte-identical files.  The
manifest records the scenario hash, package version, input digests, and
the output file list; its timestamp is the only non-reproducible field.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenario import Scenario

ARTIFACT_VERSION = "0.1.0"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Check:
    name: str
    value: float
    lo: float
    hi: float

    @property
    def passed(self) -> bool:
        return self.lo <= self.value <= self.hi

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "window": [self.lo, self.hi],
            "pass": self.passed,
        }


@dataclass
class RunWriter:
    outdir: Path
    scenario: Scenario
    outputs: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.outdir = Path(self.outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.outdir / name

    def write_csv(self, name: str, columns: dict[str, np.ndarray]) -> Path:
        cols = list(columns)
        arrays = [np.asarray(columns[c], dtype=float) for c in cols]
        n = len(arrays[0])
        lines = [",".join(cols)]
        for i in range(n):
            lines.append(",".join(f"{a[i]:.17g}" for a in arrays))
        p = self.path(name)
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.outputs.append(name)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        self.outputs.append(name)
        return p

    def register(self, name: str) -> Path:
        """Track a file produced by other writers (e.g. the SVG emitter)."""
        self.outputs.append(name)
        return self.path(name)

    def check(self, name: str, value: float, lo: float, hi: float) -> bool:
        c = Check(name=name, value=float(value), lo=float(lo), hi=float(hi))
        self.checks.append(c)
        return c.passed

    def read_csv(self, name: str) -> dict[str, np.ndarray]:
        """Read back one of this run's CSVs; summary checks run on these."""
        lines = self.path(name).read_text().strip().splitlines()
        header = lines[0].split(",")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        if data.size == 0:
            data = data.reshape(0, len(header))
        return {h: data[:, i] for i, h in enumerate(header)}

    def finish(self, input_files: dict[str, Path] | None = None) -> bool:
        """Write summary.json and manifest.json; True when all checks pass."""
        all_pass = all(c.passed for c in self.checks)
        summary = {
            "scenario": self.scenario.name,
            "kind": self.scenario.kind,
            "seed": self.scenario.seed,
            "info": self.info,
            "checks": [c.as_dict() for c in self.checks],
            "pass": all_pass,
        }
        self.path("summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        self.outputs.append("summary.json")
        manifest = {
            "scenario_sha256": self.scenario.digest(),
            "artifact_version": ARTIFACT_VERSION,
            "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "inputs": {
                name: _sha256(Path(p)) for name, p in (input_files or {}).items()
            },
            "outputs": {
                name: _sha256(self.path(name)) for name in sorted(set(self.outputs))
            },
        }
        self.path("manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return all_pass
