"""Run-directory writers: delimited results, metadata, entropy maps.

results.csv is byte-stable for a fixed config and seed: rows are sorted by
their (chi, rep) key and floats are written with ``repr``.  Anything
time-dependent (wall time, timestamp) lives in meta.json only.
"""

from __future__ import annotations

import csv
import datetime
import json
import platform
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .circuits import EntropyMap
from .experiments import RunRecord
from .sampling import Histogram


def _version_info() -> dict:
    from . import __version__

    return {
        "chisim": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def write_rows(path: Path, rows: list[tuple[str, object, int, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["experiment", "chi", "rep", "value"])
        for experiment, chi, rep, value in rows:
            writer.writerow([experiment, chi, rep, repr(float(value))])


def write_rows_json(path: Path, rows: list[tuple[str, object, int, float]]) -> None:
    payload = [
        {"experiment": e, "chi": chi, "rep": rep, "value": value}
        for e, chi, rep, value in rows
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_record(out_dir: str | Path, record: RunRecord, fmt: str = "csv",
                 extras: dict | None = None) -> Path:
    """Write results.(csv|json) plus meta.json; returns the run directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = record.rows()
    if fmt == "csv":
        write_rows(out / "results.csv", rows)
    elif fmt == "json":
        write_rows_json(out / "results.json", rows)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    meta = {
        "experiment": record.experiment,
        "config": asdict(record.config),
        "seed": record.config.seed,
        "versions": _version_info(),
        "wall_time_s": record.wall_time,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "summary": {str(chi): {"mean": mean, "std": std}
                    for chi, (mean, std) in record.summary().items()},
        "discarded_weight": {
            "max": max(record.discarded.values(), default=0.0),
            "mean": float(np.mean(list(record.discarded.values())))
            if record.discarded else 0.0,
        },
    }
    if extras:
        meta.update(extras)
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def write_entropy_map(out_dir: str | Path, emap: EntropyMap,
                      name: str = "entropy_map.csv") -> Path:
    """Long-format CSV with columns layer,bond,entropy."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["layer", "bond", "entropy"])
        for snap in emap.snapshots:
            for bond, value in enumerate(snap.entropies):
                writer.writerow([snap.layer_index, bond, repr(float(value))])
    return path


def write_histogram(out_dir: str | Path, hist: Histogram,
                    name: str = "histogram.csv") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as fh:
        fh.write(hist.to_csv())
    return path


def write_meta(out_dir: str | Path, payload: dict) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = dict(payload)
    payload.setdefault("versions", _version_info())
    payload.setdefault(
        "timestamp", datetime.datetime.now(datetime.timezone.utc).isoformat())
    path = out / "meta.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
