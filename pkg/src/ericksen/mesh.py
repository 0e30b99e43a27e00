"""Structured simplicial meshes of rectangles and boxes.

Rectangles are split into right triangles along one diagonal, boxes into
the six Kuhn (path) tetrahedra around the main diagonal of every cell.
Both subdivisions are conforming and, for the cell shapes used here,
give non-negative off-diagonal stiffness couplings.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError

FACE_TOL = 1e-12

FACE_NAMES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial mesh.

    Attributes
    ----------
    dim : int
        Spatial dimension (2 or 3).
    vertices : ndarray, shape (N, dim)
    cells : ndarray of int, shape (ncells, dim + 1)
        Vertex indices, positively oriented.
    box : ndarray, shape (dim, 2)
        Bounding box the mesh was generated on.
    boundary_tags : dict
        Tag name -> sorted array of node indices. Generators tag the
        individual box faces (``xmin``, ``xmax``, ...).
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    box: np.ndarray
    boundary_tags: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def cell_volumes(self) -> np.ndarray:
        """Signed volumes of all cells."""
        x = self.vertices[self.cells]
        edges = x[:, 1:, :] - x[:, :1, :]
        return np.linalg.det(edges) / math.factorial(self.dim)

    def node_star(self, i: int) -> np.ndarray:
        """Indices of the cells containing node ``i`` (the patch of its hat function)."""
        return np.nonzero((self.cells == i).any(axis=1))[0]

    def facets(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unique facets (sorted vertex tuples) and the number of cells sharing each."""
        d = self.dim
        faces = []
        for drop in range(d + 1):
            keep = [a for a in range(d + 1) if a != drop]
            faces.append(self.cells[:, keep])
        faces = np.sort(np.concatenate(faces), axis=1)
        uniq, counts = np.unique(faces, axis=0, return_counts=True)
        return uniq, counts


def _check_box(box, dim):
    box = np.asarray(box, dtype=float)
    if box.shape != (dim, 2):
        raise ValueError(f"box must have shape ({dim}, 2), got {box.shape}")
    if np.any(box[:, 1] <= box[:, 0]):
        raise ValueError(f"degenerate box {box.tolist()}")
    return box


def _face_tags(vertices, box):
    tags = {}
    scale = np.max(box[:, 1] - box[:, 0])
    for axis in range(box.shape[0]):
        for side, name in enumerate(FACE_NAMES[2 * axis:2 * axis + 2]):
            on_face = np.abs(vertices[:, axis] - box[axis, side]) <= FACE_TOL * scale
            tags[name] = np.nonzero(on_face)[0]
    return tags


def build_rect_mesh_2d(nx: int, ny: int, box=((0.0, 1.0), (0.0, 1.0))) -> Mesh:
    """Uniform ``nx`` x ``ny`` grid, every rectangle cut along its SW-NE diagonal."""
    if nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be >= 1, got ({nx}, {ny})")
    box = _check_box(box, 2)
    xs = np.linspace(box[0, 0], box[0, 1], nx + 1)
    ys = np.linspace(box[1, 0], box[1, 1], ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    I, J = I.ravel(), J.ravel()
    v00, v10 = idx(I, J), idx(I + 1, J)
    v01, v11 = idx(I, J + 1), idx(I + 1, J + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper
    return Mesh(2, vertices, cells, box, _face_tags(vertices, box))


def build_box_mesh_3d(nx: int, ny: int, nz: int,
                      box=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))) -> Mesh:
    """Uniform box grid, every cell split into 6 Kuhn tetrahedra.

    All cells share the main diagonal direction (0,0,0)->(1,1,1), so the
    subdivision is conforming across cell faces.
    """
    if nx < 1 or ny < 1 or nz < 1:
        raise ValueError(f"cell counts must be >= 1, got ({nx}, {ny}, {nz})")
    box = _check_box(box, 3)
    xs = np.linspace(box[0, 0], box[0, 1], nx + 1)
    ys = np.linspace(box[1, 0], box[1, 1], ny + 1)
    zs = np.linspace(box[2, 0], box[2, 1], nz + 1)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    K, J, I = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    I, J, K = I.ravel(), J.ravel(), K.ravel()

    def idx(off):
        return (K + off[2]) * (ny + 1) * (nx + 1) + (J + off[1]) * (nx + 1) + (I + off[0])

    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [idx(corner)]
        for axis in perm:
            corner = corner.copy()
            corner[axis] = 1
            path.append(idx(corner))
        tets.append(np.column_stack(path))
    cells = np.stack(tets, axis=1).reshape(-1, 4)

    # odd permutations come out negatively oriented
    x = vertices[cells]
    neg = np.linalg.det(x[:, 1:] - x[:, :1]) < 0
    cells[neg] = cells[neg][:, [0, 2, 1, 3]]
    return Mesh(3, vertices, cells, box, _face_tags(vertices, box))


@dataclass(frozen=True)
class BoundarySpec:
    """Dirichlet regions as unions of box faces.

    ``gamma_s`` carries data for the degree of orientation, ``gamma_n`` for
    the director. ``"all"`` expands to every face of the box.
    """

    gamma_s: Sequence[str] = ()
    gamma_n: Sequence[str] = ()


def _expand_faces(names, dim):
    faces = set()
    for name in names:
        if name == "all":
            faces.update(FACE_NAMES[:2 * dim])
        elif name in FACE_NAMES[:2 * dim]:
            faces.add(name)
        else:
            raise ConfigurationError(f"unknown boundary face {name!r} for dim={dim}")
    return sorted(faces)


def select_boundary(mesh: Mesh, spec: BoundarySpec, require_s: bool = True
                    ) -> Dict[str, np.ndarray]:
    """Resolve a :class:`BoundarySpec` to node index arrays.

    Returns a dict with keys ``"gamma_s"`` and ``"gamma_n"``.
    """
    out = {}
    for key in ("gamma_s", "gamma_n"):
        faces = _expand_faces(getattr(spec, key), mesh.dim)
        nodes = [mesh.boundary_tags[f] for f in faces]
        out[key] = np.unique(np.concatenate(nodes)) if nodes else np.empty(0, dtype=np.int64)
    if require_s and out["gamma_s"].size == 0:
        raise ConfigurationError("Dirichlet set gamma_s is empty")
    if not np.isin(out["gamma_n"], out["gamma_s"]).all():
        raise ConfigurationError("gamma_n must be contained in gamma_s")
    return out
