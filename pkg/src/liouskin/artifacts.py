"""Plain-text outputs: CSV traces, spectra and grids, JSON summaries, hashed manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .liouvillian import VEC_CONVENTION


def _num(x) -> str:
    return format(float(x), ".17g")


class ArtifactWriter:
    """Writes into one directory and remembers every file for the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def rows(self, name: str, header, rows, comment: str | None = None):
        with self._path(name).open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, (int, np.integer, str)) else _num(v) for v in row])

    def trace(self, name: str, trace, stderr: bool = False, d2_field: str = "d2"):
        header = ["t", "n_cm", "d2"]
        cols = [trace.times, trace.n_cm, getattr(trace, d2_field)]
        if stderr:
            header += ["stderr_n_cm", "stderr_d2"]
            cols += [trace.stderr_n_cm, trace.stderr_d2]
        self.rows(name, header, zip(*cols))

    def snapshots(self, name: str, times, populations, value: str = "population"):
        populations = np.asarray(populations)
        L = populations.shape[1]
        self.rows(name, ["t", "site", value],
                  ((t, n + 1, populations[i, n]) for i, t in enumerate(times) for n in range(L)))

    def spectrum(self, name: str, eigenvalues):
        self.rows(name, ["alpha", "re_lambda", "im_lambda"],
                  ((a + 1, lam.real, lam.imag) for a, lam in enumerate(eigenvalues)))

    def grid(self, name: str, values, label: str):
        values = np.asarray(values, dtype=float)
        with self._path(name).open("w") as fh:
            fh.write(f"# {label}; rows n=1..L, columns m=1..L; {VEC_CONVENTION}\n")
            for row in values:
                fh.write(",".join(_num(v) for v in row) + "\n")

    def json(self, name: str, data):
        with self._path(name).open("w") as fh:
            json.dump(to_jsonable(data), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def manifest(self, name: str = "manifest.json", extra: dict | None = None) -> dict:
        entries = []
        for f in sorted(set(self.files)):
            data = (self.root / f).read_bytes()
            entries.append({"path": f, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        doc = {"files": entries, **(extra or {})}
        with (self.root / name).open("w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return doc


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays keyed by header name."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {h: body[:, i] for i, h in enumerate(header)}
