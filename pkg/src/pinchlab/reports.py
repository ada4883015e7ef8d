"""Deterministic delimited output, plus the run-metadata quarantine.

Report bodies must be reproducible byte for byte across reruns with the
same configuration, so every float is rendered with repr (shortest
round-trip form) and nothing time- or host-dependent enters a table.
Timestamps and environment facts go to a separate metadata file.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    """Canonical cell rendering: round-trip floats, bare ints, true/false."""
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def write_run_meta(path: Path, extra: dict | None = None) -> None:
    """Everything non-reproducible about a run, kept out of the tables."""
    from . import __version__

    meta = {
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "package_version": __version__,
    }
    if extra:
        meta.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def measure_rows(measure):
    """Atom or CDF-node rows of a fiber measure for a snapshot table."""
    if measure.kind == "atoms":
        return [("atom", i, p, w) for i, (p, w) in
                enumerate(zip(measure.positions.tolist(), measure.weights.tolist()))]
    xs = np.linspace(0.0, 1.0, 257)
    return [("cdf", i, float(x), float(measure.cdf_right(float(x)) if x < 1.0 else 1.0))
            for i, x in enumerate(xs)]


def circle_map_rows(m):
    """(breakpoint, lift value) pairs of a piecewise-linear circle map."""
    return list(zip(m.breakpoints.tolist(), m.values.tolist()))
