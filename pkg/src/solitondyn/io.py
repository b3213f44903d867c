"""File formats: field files (ground states and checkpoints) and CSV tables.

Field file::

    # solitondyn-field 1
    # key=value            (one header line per key)
    <value>                (one line per grid point, C order)

Real fields store one number per line, complex fields ``re,im``. Floats are
written with ``repr`` so a read-write cycle is exact and byte-stable.

Trajectory CSV: a ``# solitondyn-trajectory <version>`` line followed by a
header row whose columns are listed by :func:`trajectory_columns`.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError
from .grid import Grid

FIELD_MAGIC = "# solitondyn-field 1"
TRAJECTORY_MAGIC = "# solitondyn-trajectory"
TRAJECTORY_VERSION = 1


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class FieldFile:
    grid: Grid
    values: NDArray
    meta: dict[str, str]

    def float_meta(self, key: str) -> float:
        return float(self.meta[key])


def write_field(path, grid: Grid, values: NDArray, **meta) -> None:
    """Write a real or complex field with its grid and free-form metadata."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError("values do not match the grid")
    is_complex = np.iscomplexobj(values)
    lines = [FIELD_MAGIC,
             f"# dim={grid.dim}",
             f"# extent={_fmt(grid.extent)}",
             f"# points={_fmt(grid.points)}",
             f"# kind={'complex' if is_complex else 'real'}"]
    for k in sorted(meta):
        if k in ("dim", "extent", "points", "kind"):
            raise ValueError(f"reserved metadata key {k!r}")
        lines.append(f"# {k}={_fmt(meta[k])}")
    flat = values.ravel()
    if is_complex:
        lines.extend(f"{float(z.real)!r},{float(z.imag)!r}" for z in flat)
    else:
        lines.extend(repr(float(x)) for x in flat)
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_field(path) -> FieldFile:
    meta: dict[str, str] = {}
    body: list[str] = []
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != FIELD_MAGIC:
            raise ConfigError(f"{path}: not a field file")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line:
                body.append(line)
    try:
        extent = tuple(float(x) for x in meta.pop("extent").split(","))
        points = tuple(int(x) for x in meta.pop("points").split(","))
        dim = int(meta.pop("dim"))
        kind = meta.pop("kind")
    except KeyError as exc:
        raise ConfigError(f"{path}: missing header key {exc}") from None
    grid = Grid(extent, points)
    if grid.dim != dim or len(body) != grid.size:
        raise ConfigError(f"{path}: header and payload disagree")
    if kind == "complex":
        pairs = np.array([[float(a) for a in ln.split(",")] for ln in body])
        values = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(grid.shape)
    else:
        values = np.array([float(ln) for ln in body]).reshape(grid.shape)
    return FieldFile(grid, values, meta)


# ------------------------------------------------------------------ CSV


def vector_columns(name: str, dim: int) -> list[str]:
    return [f"{name}_{j}" for j in range(dim)]


def trajectory_columns(dim: int) -> list[str]:
    """Fixed column order of the trajectory CSV (version 1)."""
    cols = ["step", "t"]
    for name in ("q", "qdot", "qddot", "H", "H_position", "H_averaging"):
        cols += vector_columns(name, dim)
    cols += ["charge", "E", "J", "G"]
    cols += vector_columns("q_hat", dim)
    cols += ["conc_fraction", "boundary_mass", "potential_moment",
             "potential_moment_alpha", "potential_moment_gamma"]
    cols += vector_columns("newton_q", dim) + vector_columns("newton_p", dim)
    return cols


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], magic: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        if magic:
            fh.write(magic + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def read_table(path) -> tuple[list[str], list[list[str]], str | None]:
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    magic = None
    if lines and lines[0].startswith("#"):
        magic = lines.pop(0)
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader], magic


def read_trajectory(path) -> dict[str, NDArray]:
    """Columns of a trajectory CSV as float arrays."""
    header, rows, magic = read_table(path)
    if magic is None or not magic.startswith(TRAJECTORY_MAGIC):
        raise ConfigError(f"{path}: missing trajectory header line")
    version = int(magic.split()[-1])
    if version != TRAJECTORY_VERSION:
        raise ConfigError(f"{path}: unsupported trajectory version {version}")
    data = np.array([[float(x) for x in r] for r in rows]) if rows else np.zeros((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


def stack_vector(columns: dict[str, NDArray], name: str) -> NDArray:
    """Gather ``name_0, name_1, ...`` into a ``(samples, dim)`` array."""
    parts = []
    j = 0
    while f"{name}_{j}" in columns:
        parts.append(columns[f"{name}_{j}"])
        j += 1
    if not parts:
        raise KeyError(name)
    return np.stack(parts, axis=1)
