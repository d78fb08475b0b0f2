"""CSV time series and generated plot scripts."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .integrator import Trajectory
from .model import COMPARTMENTS

HEADER = ("t",) + COMPARTMENTS


def _fmt(x: float) -> str:
    # repr round-trips binary64 exactly
    return repr(float(x))


def format_csv(traj: Trajectory) -> str:
    if traj.y.shape[1] != len(COMPARTMENTS):
        raise ValueError(f"expected {len(COMPARTMENTS)} state columns, got {traj.y.shape[1]}")
    header = HEADER + (("u",) if traj.u is not None else ())
    lines = [",".join(header)]
    for k in range(len(traj)):
        row = [traj.t[k], *traj.y[k]]
        if traj.u is not None:
            row.append(traj.u[k])
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, traj: Trajectory) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(traj))


def parse_csv(text: str) -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    header = tuple(rows[0])
    if header not in (HEADER, HEADER + ("u",)):
        raise ValueError(f"unexpected CSV header {','.join(header)!r}")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    if data.size == 0:
        raise ValueError("CSV has no data rows")
    u = data[:, 6] if len(header) == 7 else None
    return Trajectory(data[:, 0], data[:, 1:6], u)


def read_csv(path) -> Trajectory:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


_PLOT_TEMPLATE = '''\
"""Plot infected humans (and the control, when present) from vectorial CSV output."""
import csv
import sys

import matplotlib.pyplot as plt

FILES = {files!r}
TITLE = {title!r}


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {{k: [float(r[k]) for r in rows] for k in rows[0]}}
    return cols


def main(out=None):
    data = {{label: load(path) for label, path in FILES.items()}}
    has_u = any("u" in cols for cols in data.values())
    fig, axes = plt.subplots(2 if has_u else 1, 1, sharex=True, squeeze=False, figsize=(7, 6 if has_u else 4))
    ax = axes[0][0]
    for label, cols in data.items():
        ax.plot(cols["t"], [i / {n_h!r} for i in cols["I_h"]], label=label)
    ax.set_ylabel("I_h / N_h")
    ax.set_title(TITLE)
    ax.legend()
    if has_u:
        ax_u = axes[1][0]
        for label, cols in data.items():
            if "u" in cols:
                ax_u.plot(cols["t"], cols["u"], label=label)
        ax_u.set_ylabel("u")
        ax_u.set_ylim(-0.05, 1.05)
    axes[-1][0].set_xlabel("t (days)")
    fig.tight_layout()
    if out:
        fig.savefig(out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
'''


def plot_script(files: dict, title: str = "Infected humans", n_h: float = 112000.0) -> str:
    """Source of a standalone matplotlib script plotting the given ``{label: csv_path}``."""
    return _PLOT_TEMPLATE.format(files={k: str(v) for k, v in files.items()}, title=title, n_h=float(n_h))


def write_plot_script(path, files: dict, title: str = "Infected humans", n_h: float = 112000.0) -> None:
    Path(path).write_text(plot_script(files, title, n_h), encoding="utf-8")
