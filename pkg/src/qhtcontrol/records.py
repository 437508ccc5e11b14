"""Persistence: CSV tables, the JSON run record and its metadata sidecar.

Everything written here is a pure function of the configuration and seed.
Wall-clock times and timestamps go to a separate ``meta.json`` so that two
runs of the same configuration produce byte-identical result files.
"""

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .optimize import OptimizationResult

RECORD_VERSION = 1
PULSE_HEADER = ("slice", "t_start", "u_x", "u_y")
SWEEP_HEADER = ("value", "pe_helstrom", "pe_fixed", "controls_file")
TRAJECTORY_HEADER = ("t", "x", "y", "z")


def tool_version():
    return __version__


def format_float(x):
    """17 significant digits (round-trips a double); ``-0`` prints as ``0``."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return format(x, ".17g")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_csv(path, header, rows):
    """RFC-4180 CSV (CRLF line ends) with floats at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Header and rows (as strings) of a CSV written by :func:`write_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_pulse(path, controls, dt):
    u = np.asarray(controls, dtype=float)
    if u.shape[0] != 2:
        raise ValueError("pulse files hold exactly two channels (u_x, u_y)")
    rows = [(n, n * dt, u[0, n], u[1, n]) for n in range(u.shape[1])]
    return write_csv(path, PULSE_HEADER, rows)


def read_pulse(path):
    """Control array ``(2, N)`` and slice width from a pulse file."""
    header, rows = read_csv(path)
    if tuple(header) != PULSE_HEADER:
        raise ValueError(f"{path}: expected header {','.join(PULSE_HEADER)}")
    if not rows:
        raise ValueError(f"{path}: no slices")
    data = np.array([[float(c) for c in r] for r in rows])
    dt = data[1, 1] - data[0, 1] if len(data) > 1 else None
    return data[:, 2:].T.copy(), dt


def write_trajectory(path, times, bloch):
    rows = [(t, *r) for t, r in zip(times, bloch)]
    return write_csv(path, TRAJECTORY_HEADER, rows)


def write_trace(path, trace):
    return write_csv(path, ("iteration", "objective"), enumerate(trace))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_meta(out_dir, started, wall_seconds, **extra):
    """Timestamps and timings, kept apart from the reproducible outputs."""
    meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
            "wall_seconds": wall_seconds, "tool_version": tool_version(), **extra}
    return write_json(Path(out_dir) / "meta.json", meta)


def result_to_dict(res):
    """JSON-ready form of an :class:`OptimizationResult` without wall time."""
    d = asdict(res)
    d.pop("wall_seconds")
    d["controls"] = np.asarray(res.controls).tolist()
    d["trace"] = np.asarray(res.trace).tolist()
    for k in ("objective", "pe_helstrom", "pe_fixed"):
        d[k] = float(d[k])
    d["n_iter"], d["n_evals"] = int(res.n_iter), int(res.n_evals)
    d["converged"] = bool(res.converged)
    d["seed"] = None if res.seed is None else int(res.seed)
    return d


def result_from_dict(d):
    d = dict(d)
    d["controls"] = np.asarray(d["controls"], dtype=float)
    d["trace"] = np.asarray(d["trace"], dtype=float)
    return OptimizationResult(**d)


@dataclass(eq=False)
class RunRecord:
    """What a command did: its configuration, optimizer result and outputs."""

    command: str
    config: dict
    result: OptimizationResult = None
    outputs: dict = field(default_factory=dict)
    tool_version: str = field(default_factory=tool_version)
    record_version: int = RECORD_VERSION

    def to_dict(self):
        return {"record_version": self.record_version, "tool_version": self.tool_version,
                "command": self.command, "config": self.config,
                "result": None if self.result is None else result_to_dict(self.result),
                "outputs": self.outputs}

    @classmethod
    def from_dict(cls, d):
        res = d.get("result")
        return cls(command=d["command"], config=d["config"],
                   result=None if res is None else result_from_dict(res),
                   outputs=d.get("outputs", {}), tool_version=d["tool_version"],
                   record_version=d["record_version"])

    def save(self, path):
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (self.command, self.config, self.outputs, self.tool_version,
                self.record_version, self.result) == \
            (other.command, other.config, other.outputs, other.tool_version,
             other.record_version, other.result)
