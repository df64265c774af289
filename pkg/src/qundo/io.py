"""Atomic file output and the CSV / JSON layouts used by the CLI."""

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("t_us", "p_plus2", "p_plus1", "p_0", "p_minus1", "p_minus2", "purity")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, data):
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def trajectory_rows(traj):
    pops = traj.populations
    pur = traj.purity
    for t, p, q in zip(traj.times, pops, pur):
        yield (t * 1e6, *p, q)


def write_trajectory_csv(path, traj):
    atomic_write_text(path, csv_text(TRAJECTORY_COLUMNS, trajectory_rows(traj)))


def read_trajectory_csv(path):
    """Trajectory CSV as a float array, one row per recorded time."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def gnuplot_text(comment, header, rows):
    """Whitespace-separated columns with a commented header line."""
    lines = [f"# {comment}", "# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join(_gnuplot_field(v) for v in row))
    return "\n".join(lines) + "\n"


def _gnuplot_field(v):
    if v is None:
        return "nan"
    if isinstance(v, str):
        return f'"{v}"'
    return repr(float(v))


def state_to_dict(rho):
    rho = np.asarray(rho, dtype=complex)
    return {"re": rho.real.tolist(), "im": rho.imag.tolist()}


def state_from_dict(data):
    return np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
