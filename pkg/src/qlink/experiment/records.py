"""Result records and their CSV / JSON serialization.

JSON stores complex matrices row-major as interleaved [re, im, re, im, ...]
lists together with their shape; floats are written with repr precision so
a round trip is bit-exact.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ResultRecord:
    experiment_id: str
    config_hash: str
    metrics: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)  # name -> list of flat dict rows
    matrices: dict = field(default_factory=dict)  # name -> complex ndarray
    duration: float = 0.0
    config: dict = field(default_factory=dict)


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    inter = np.empty(m.size * 2)
    inter[0::2] = m.real.reshape(-1)
    inter[1::2] = m.imag.reshape(-1)
    return {"shape": list(m.shape), "data": inter.tolist()}


def decode_matrix(obj):
    data = np.asarray(obj["data"], dtype=float)
    return (data[0::2] + 1j * data[1::2]).reshape(obj["shape"])


def record_to_json(rec: ResultRecord) -> str:
    payload = {
        "experiment_id": rec.experiment_id,
        "config_hash": rec.config_hash,
        "duration_s": rec.duration,
        "metrics": _plain(rec.metrics),
        "series": _plain(rec.series),
        "matrices": {k: encode_matrix(v) for k, v in rec.matrices.items()},
        "config": _plain(rec.config),
    }
    return json.dumps(payload, sort_keys=True, indent=1)


def record_from_json(text: str) -> ResultRecord:
    d = json.loads(text)
    return ResultRecord(d["experiment_id"], d["config_hash"], d["metrics"], d["series"],
                        {k: decode_matrix(v) for k, v in d["matrices"].items()},
                        d.get("duration_s", 0.0), d.get("config", {}))


def rows_to_csv(rows, columns=None) -> str:
    """CSV text; an empty row list still produces the header when columns are known."""
    rows = [_plain(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r.get(c, "")) if isinstance(r.get(c), float) else r.get(c, "") for c in columns])
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(rec: ResultRecord, out_dir, formats=("csv", "json"), columns: dict | None = None) -> list:
    """Write the record; returns the written paths."""
    out = Path(out_dir)
    paths = []
    if "csv" in formats:
        metrics = [{"name": k, "value": v} for k, v in sorted(rec.metrics.items())]
        p = out / f"{rec.experiment_id}_metrics.csv"
        _atomic_write(p, rows_to_csv(metrics, ["name", "value"]))
        paths.append(p)
        for name, rows in rec.series.items():
            p = out / f"{rec.experiment_id}_{name}.csv"
            _atomic_write(p, rows_to_csv(rows, (columns or {}).get(name)))
            paths.append(p)
    if "json" in formats:
        p = out / f"{rec.experiment_id}.json"
        _atomic_write(p, record_to_json(rec))
        paths.append(p)
    return paths


class PartialWriter:
    """Append rows to ``<id>.partial.csv`` as a long sweep progresses."""

    def __init__(self, out_dir, experiment_id):
        self.path = Path(out_dir) / f"{experiment_id}.partial.csv"
        self.columns = None

    def add(self, row):
        row = _plain(row)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = self.columns is None
        if new:
            self.columns = list(row)
        with open(self.path, "a" if not new else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(self.columns)
            w.writerow([row.get(c, "") for c in self.columns])

    def close(self):
        if self.path.exists():
            self.path.unlink()
