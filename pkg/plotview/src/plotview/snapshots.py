"""Discovery and parsing of simulation output directories.

Field snapshot format (one CSV per field per output time):

    # field=n kind=scalar nx=.. ny=.. lx=.. ly=.. bc=..
    # t=0.125
    row-major values, one line per x index

CTRW lattice densities use ``kind=lattice`` with two columns (x, density).
``monitor.csv`` and ``msd.csv`` are plain single-header CSVs.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np


class MissingFile(FileNotFoundError):
    pass


class BadHeader(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


@dataclass
class Snapshot:
    path: str
    name: str
    kind: str
    t: float
    values: np.ndarray
    meta: dict

    @property
    def extent(self):
        if self.kind != "scalar":
            raise ValueError("extent is defined for scalar grids only")
        return (0.0, float(self.meta["lx"]), 0.0, float(self.meta["ly"]))


def load_snapshot(path) -> Snapshot:
    if not os.path.exists(path):
        raise MissingFile(f"no such snapshot: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        time_line = fh.readline()
        if not header.startswith("# field=") or not time_line.startswith("# t="):
            raise BadHeader(f"{path}: expected the 2-line snapshot header")
        meta = dict(item.split("=", 1) for item in header[2:].split())
        try:
            t = float(time_line[4:])
        except ValueError as exc:
            raise BadHeader(f"{path}: malformed time line {time_line!r}") from exc
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    kind = meta.get("kind", "scalar")
    if kind == "scalar":
        expected = (int(meta["nx"]), int(meta["ny"]))
        if values.shape != expected:
            raise BadHeader(f"{path}: value block {values.shape} != header grid {expected}")
    return Snapshot(path=str(path), name=meta["field"], kind=kind, t=t,
                    values=values, meta=meta)


_SNAP_RE = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_(\d{6})\.csv$")


@dataclass
class SnapshotSet:
    """An output directory's contents, grouped per output step."""

    directory: str
    by_step: dict = field(default_factory=dict)   # step -> {field: path}
    monitor_path: str | None = None
    msd_path: str | None = None
    extra: list = field(default_factory=list)

    @classmethod
    def discover(cls, directory) -> "SnapshotSet":
        if not os.path.isdir(directory):
            raise MissingFile(f"no such directory: {directory}")
        out = cls(directory=str(directory))
        for name in sorted(os.listdir(directory)):
            full = os.path.join(directory, name)
            m = _SNAP_RE.match(name)
            if m:
                out.by_step.setdefault(int(m.group(2)), {})[m.group(1)] = full
            elif name == "monitor.csv":
                out.monitor_path = full
            elif name == "msd.csv":
                out.msd_path = full
            elif name.endswith(".csv"):
                out.extra.append(full)
        return out

    def steps(self):
        return sorted(self.by_step)

    def consistent_grids(self) -> bool:
        """All scalar snapshots in the set share one grid header."""
        key = None
        for step in self.steps():
            for path in self.by_step[step].values():
                snap = load_snapshot(path)
                if snap.kind != "scalar":
                    continue
                this = tuple(snap.meta[k] for k in ("nx", "ny", "lx", "ly"))
                if key is None:
                    key = this
                elif this != key:
                    return False
        return True


def load_series(path, expected_header: str):
    """Single-header CSV (monitor or MSD) as a dict of float columns."""
    if not os.path.exists(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header or header.split(",")[0] != expected_header.split(",")[0]:
            raise BadHeader(f"{path}: expected a '{expected_header}' style header")
        cols = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise TooFewPoints(f"{path}: no data rows")
    return {name: data[:, i] for i, name in enumerate(cols)}
