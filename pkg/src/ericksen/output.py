"""File formats: legacy VTK frames, the energy CSV, nodal state files."""
from __future__ import annotations

import csv
import json

import numpy as np

from .errors import ConfigurationError
from .mesh import Mesh

VTK_CELL_TYPES = {2: 5, 3: 10}  # VTK_TRIANGLE, VTK_TETRA

CSV_HEADER = ("step", "e1", "e2", "total", "e1_tilde", "c1", "min_s", "decrement")


def _num(x) -> str:
    return format(float(x), ".17g")


def vtk_string(mesh: Mesh, s: np.ndarray, n: np.ndarray, title: str = "ericksen") -> str:
    """Legacy ASCII unstructured grid with point data ``s`` and ``n``.

    2D points and vectors are padded with a zero z component.
    """
    N, d = mesh.num_nodes, mesh.dim
    pts = np.zeros((N, 3))
    pts[:, :d] = mesh.vertices
    vec = np.zeros((N, 3))
    vec[:, :d] = n
    nc, nloc = mesh.cells.shape
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {N} double"]
    lines += [" ".join(_num(v) for v in p) for p in pts]
    lines.append(f"CELLS {nc} {nc * (nloc + 1)}")
    lines += [f"{nloc} " + " ".join(str(int(v)) for v in c) for c in mesh.cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(VTK_CELL_TYPES[d])] * nc
    lines += [f"POINT_DATA {N}", "SCALARS s double 1", "LOOKUP_TABLE default"]
    lines += [_num(v) for v in s]
    lines.append("VECTORS n double")
    lines += [" ".join(_num(v) for v in p) for p in vec]
    return "\n".join(lines) + "\n"


def write_vtk(path, mesh, s, n, title="ericksen"):
    with open(path, "w") as fh:
        fh.write(vtk_string(mesh, s, n, title))


def read_vtk(path):
    """Parse a file written by :func:`write_vtk`.

    Returns ``(points, cells, cell_types, s, n)``; points and vectors are 3D.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    if not tokens[0].startswith("# vtk DataFile") or tokens[2].strip() != "ASCII":
        raise ValueError("not a legacy ASCII VTK file")
    body = " ".join(tokens[3:]).split()
    pos = 0

    def take(k):
        nonlocal pos
        out = body[pos:pos + k]
        pos += k
        return out

    def expect(word):
        got = take(1)[0]
        if got != word:
            raise ValueError(f"expected {word}, got {got}")

    expect("DATASET"), expect("UNSTRUCTURED_GRID"), expect("POINTS")
    npts = int(take(1)[0])
    take(1)
    points = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
    expect("CELLS")
    ncells, size = int(take(1)[0]), int(take(1)[0])
    flat = np.array(take(size), dtype=np.int64)
    nloc = flat[0]
    cells = flat.reshape(ncells, nloc + 1)[:, 1:]
    expect("CELL_TYPES")
    take(1)
    types = np.array(take(ncells), dtype=int)
    expect("POINT_DATA")
    take(1)
    expect("SCALARS"), take(3), expect("LOOKUP_TABLE"), take(1)
    s = np.array(take(npts), dtype=float)
    expect("VECTORS"), take(2)
    n = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
    return points, cells, types, s, n


class EnergyLog:
    """Append-only CSV energy log with 17 significant digits per value."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(CSV_HEADER)

    def append(self, record):
        row = [str(record.step)] + [_num(getattr(record, k)) for k in CSV_HEADER[1:]]
        self._writer.writerow(row)
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_energy_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in CSV_HEADER}


def write_state(path, s, n):
    """Nodal state: ``dim``, ``N`` header lines then one ``s n_1 .. n_d`` row per node."""
    s = np.asarray(s)
    n = np.asarray(n)
    with open(path, "w") as fh:
        fh.write(f"dim {n.shape[1]}\nN {len(s)}\n")
        for si, ni in zip(s, n):
            fh.write(" ".join(_num(v) for v in (si, *ni)) + "\n")


def read_state(path):
    try:
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        if lines[0][0] != "dim" or lines[1][0] != "N":
            raise ValueError("missing dim/N header")
        dim, N = int(lines[0][1]), int(lines[1][1])
        data = np.array(lines[2:], dtype=float)
        if data.shape != (N, dim + 1):
            raise ValueError(f"expected {N} rows of {dim + 1} values, got {data.shape}")
    except (IndexError, ValueError) as exc:
        raise ConfigurationError(f"malformed state file {path}: {exc}") from exc
    return data[:, 0].copy(), data[:, 1:].copy()


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
