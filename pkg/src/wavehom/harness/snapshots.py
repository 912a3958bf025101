"""CSV snapshot output: one file per snapshot, an index file, and run metadata.

Floats are written with 17 significant digits so that round-trips are exact
and identical runs produce bitwise-identical payloads.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..core_types import GridField
from ..hetero_fdm import RunResult


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_snapshot(path: Path, field: GridField) -> None:
    n = field.dimension
    header = ",".join(f"x{d + 1}" for d in range(n)) + ",value"
    axes = [field.axis(d) for d in range(n)]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for idx in np.ndindex(field.shape):
            coords = ",".join(_fmt(axes[d][idx[d]]) for d in range(n))
            fh.write(f"{coords},{_fmt(float(field.values[idx]))}\n")


def read_snapshot(path: Path) -> GridField:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    n = len(names) - 1
    axes = [np.unique(data[names[d]]) for d in range(n)]
    shape = tuple(len(ax) for ax in axes)
    values = np.asarray(data["value"]).reshape(shape)
    spacing = tuple(float(ax[1] - ax[0]) for ax in axes)
    origin = tuple(float(ax[0]) for ax in axes)
    return GridField(values, spacing, origin)


def write_run(outdir: Path, result: RunResult, tag: str = "snap") -> list[Path]:
    """Write every snapshot of a run plus index.csv and meta.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    index_lines = ["snapshot,step,time,file"]
    for i, (t, field) in enumerate(zip(result.times, result.fields)):
        name = f"{tag}_{i:05d}.csv"
        write_snapshot(outdir / name, field)
        written.append(outdir / name)
        step = int(round(t / result.dt))
        index_lines.append(f"{i},{step},{_fmt(t)},{name}")
    (outdir / "index.csv").write_text("\n".join(index_lines) + "\n")
    meta = dict(result.params)
    meta["wall_clock"] = result.wall_clock
    meta["snapshots"] = len(result.fields)
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written += [outdir / "index.csv", outdir / "meta.json"]
    return written


def write_table(path: Path, header: list[str], rows: list[list[float]]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")
