"""Trajectory CSV and report JSON serialization.

Trajectories go to long-format CSV with header ``t,shell,re,im`` (one row
per time per shell, shortest exact decimal via %.17g, '.' decimal point
regardless of locale).  Reports go to a single JSON document.  All writes
are atomic: a temporary file in the target directory is renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .integrate import TimeGrid, Trajectory

__all__ = [
    "OutputBundle",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_report_json",
]


@dataclass(frozen=True)
class OutputBundle:
    """Paths written by a run plus the fully resolved configuration echo."""

    trajectory_path: str | None
    report_path: str
    config_echo: dict


def _atomic_write(path: str, data: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(f"failed writing {path}: {e}") from e


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_trajectory_csv(path: str, traj: Trajectory):
    """Write every grid state, one row per (time, shell), full precision."""
    times = traj.times
    lines = ["t,shell,re,im"]
    for i, t in enumerate(times):
        row = traj.states[i]
        ts = _fmt(t)
        for n in range(traj.n_shells):
            lines.append(f"{ts},{n + 1},{_fmt(row[n].real)},{_fmt(row[n].imag)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path: str) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory_csv`.

    Values round-trip exactly (17 significant digits reproduce the double).
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,shell,re,im":
            raise ValueError(f"{path}: unexpected CSV header {header!r}")
        times = []
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t_s, shell_s, re_s, im_s = line.split(",")
            t = float(t_s)
            shell = int(shell_s)
            if not times or t != times[-1]:
                times.append(t)
                rows.append([])
            if shell != len(rows[-1]) + 1:
                raise ValueError(f"{path}: shell indices out of order at t={t_s}")
            rows[-1].append(complex(float(re_s), float(im_s)))
    states = np.array(rows, np.complex128)
    if len(times) < 2:
        raise ValueError(f"{path}: need at least two grid times")
    dt = times[1] - times[0]
    grid = TimeGrid(t_end=times[-1], dt=dt)
    if grid.n_steps != len(times) - 1:
        raise ValueError(f"{path}: grid times are not uniform")
    return Trajectory(grid=grid, states=states)


def _jsonable(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_report_json(path: str, report: dict):
    """Write the run report as canonical (sorted-key) indented JSON."""
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
