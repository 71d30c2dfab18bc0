"""Experiment reports: deterministic JSON and per-series CSV files."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..mgf import write_series_csv


def _clean(obj):
    """Convert numpy scalars and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass
class ExperimentReport:
    """Rows, fitted constants and series of one experiment run."""

    experiment: str
    config: dict
    rows: list[dict]
    fits: list[dict]
    series: list[dict]
    passed: bool
    notes: list[str] = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _clean(
            {
                "experiment": self.experiment,
                "config": self.config,
                "rows": self.rows,
                "fits": self.fits,
                "series": self.series,
                "pass": self.passed,
                "notes": self.notes,
                "environment": self.environment,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json())

    def write_csv(self, directory: str | os.PathLike) -> list[Path]:
        """One CSV per series, named ``<experiment>_<series>.csv``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for s in self.series:
            p = d / f"{self.experiment}_{s['name']}.csv"
            write_series_csv(s["rows"], s["columns"], p)
            paths.append(p)
        return paths


def merge_reports(reports: list[dict]) -> dict:
    """Combine report dicts; the merged run passes only if every input passes."""
    merged = {
        "experiment": "merged",
        "reports": sorted(reports, key=lambda r: (r.get("experiment", ""), json.dumps(r.get("config", {}), sort_keys=True))),
    }
    merged["pass"] = all(bool(r.get("pass")) for r in reports)
    merged["summary"] = [{"experiment": r.get("experiment"), "pass": bool(r.get("pass"))} for r in merged["reports"]]
    return _clean(merged)
