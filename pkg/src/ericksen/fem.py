"""P1 finite element machinery: stiffness graph, lumped mass, quadrature.

The stiffness graph stores ``k_ij = -int grad(phi_i) . grad(phi_j)``, i.e.
the negated standard stiffness matrix. With that sign convention a mesh is
weakly acute exactly when every off-diagonal entry is non-negative, and
``sum_{i,j} k_ij (v_i - v_j)**2 / 2`` equals the Dirichlet integral of the
interpolant of ``v``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import Mesh

ACUTE_TOL = 1e-12


def element_geometry(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric gradients and volumes of every cell.

    Returns
    -------
    grads : ndarray, shape (ncells, dim + 1, dim)
    volumes : ndarray, shape (ncells,)
    """
    d = mesh.dim
    x = mesh.vertices[mesh.cells]
    B = x[:, 1:, :] - x[:, :1, :]
    det = np.linalg.det(B)
    scale = np.max(np.abs(B), axis=(1, 2)) ** d
    bad = np.nonzero(np.abs(det) <= 1e-14 * scale)[0]
    if bad.size:
        c = int(bad[0])
        raise AssemblyError(f"degenerate cell {c}: vertices {mesh.cells[c].tolist()}", cell=c)
    # rows of inv(B) are the gradients of lambda_1..lambda_d
    Binv = np.linalg.inv(B)
    g = np.transpose(Binv, (0, 2, 1))
    grads = np.concatenate([-g.sum(axis=1, keepdims=True), g], axis=1)
    return grads, np.abs(det) / math.factorial(d)


@dataclass(frozen=True)
class StiffnessGraph:
    """Symmetric node-pair couplings ``k_ij``.

    Attributes
    ----------
    matrix : csr_matrix
        Full ``k`` including the diagonal ``k_ii = -sum_{j!=i} k_ij``.
    edges : ndarray, shape (E, 2)
        Node pairs ``i < j`` in the sparsity pattern.
    weights : ndarray, shape (E,)
        ``k_ij`` on each edge.
    """

    matrix: sp.csr_matrix
    edges: np.ndarray
    weights: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_offdiag(self) -> float:
        return float(self.weights.min()) if self.weights.size else 0.0

    def laplacian(self, edge_weights: np.ndarray) -> sp.csr_matrix:
        """Graph Laplacian for per-edge coefficients ``c``.

        ``x @ L @ x == sum_edges c_e (x_i - x_j)**2``, which is one half of
        the same sum taken over ordered pairs.
        """
        n = self.num_nodes
        i, j = self.edges[:, 0], self.edges[:, 1]
        diag = np.bincount(i, edge_weights, n) + np.bincount(j, edge_weights, n)
        rows = np.concatenate([i, j, np.arange(n)])
        cols = np.concatenate([j, i, np.arange(n)])
        vals = np.concatenate([-edge_weights, -edge_weights, diag])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def pair_sum(self, values: np.ndarray) -> float:
        """``sum_{i,j} k_ij * values_ij`` over ordered pairs, for symmetric edge values."""
        return 2.0 * float(np.dot(self.weights, values))


def assemble_stiffness(mesh: Mesh) -> StiffnessGraph:
    grads, vol = element_geometry(mesh)
    local = -np.einsum("cad,cbd->cab", grads, grads) * vol[:, None, None]
    nloc = mesh.dim + 1
    rows = np.repeat(mesh.cells, nloc, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, nloc)).ravel()
    n = mesh.num_nodes
    K = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    K = ((K + K.T) * 0.5).tocsr()
    # exact zero row sums: rebuild the diagonal from the off-diagonals
    upper = sp.triu(K, k=1).tocoo()
    edges = np.column_stack([upper.row, upper.col]).astype(np.int64)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges, weights = edges[order], upper.data[order]
    offdiag = K - sp.diags(K.diagonal())
    rowsum = np.asarray(offdiag.sum(axis=1)).ravel()
    K = (offdiag - sp.diags(rowsum)).tocsr()
    K.sort_indices()
    return StiffnessGraph(K, edges, weights)


@dataclass
class AcutenessReport:
    min_offdiag: float
    violations: List[Tuple[int, int, float]]
    passed: bool


def check_weak_acuteness(graph: StiffnessGraph, tol: float = ACUTE_TOL) -> AcutenessReport:
    bad = np.nonzero(graph.weights < -tol)[0]
    violations = [(int(graph.edges[e, 0]), int(graph.edges[e, 1]), float(graph.weights[e]))
                  for e in bad]
    return AcutenessReport(graph.min_offdiag, violations, not violations)


@dataclass
class AngleReport:
    """Opposite-angle sums per interior edge of a triangulation."""

    edges: np.ndarray
    angle_sums: np.ndarray
    max_sum: float
    passed: bool


def check_angles_2d(mesh: Mesh, tol: float = ACUTE_TOL) -> AngleReport:
    if mesh.dim != 2:
        raise ValueError("angle criterion only applies to triangulations (dim=2)")
    x = mesh.vertices[mesh.cells]
    opposite = {}
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        u = x[:, b] - x[:, a]
        v = x[:, c] - x[:, a]
        cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        e = np.sort(mesh.cells[:, [b, c]], axis=1)
        for k in range(len(e)):
            opposite.setdefault((int(e[k, 0]), int(e[k, 1])), []).append(ang[k])
    interior = sorted(k for k, v in opposite.items() if len(v) == 2)
    sums = np.array([sum(opposite[k]) for k in interior])
    max_sum = float(sums.max()) if sums.size else 0.0
    return AngleReport(np.array(interior, dtype=np.int64).reshape(-1, 2), sums, max_sum,
                       max_sum <= math.pi + tol)


def lumped_mass(mesh: Mesh) -> np.ndarray:
    """Vertex-quadrature mass ``m_i = sum_{T containing i} |T| / (d + 1)``."""
    _, vol = element_geometry(mesh)
    share = np.repeat(vol / (mesh.dim + 1), mesh.dim + 1)
    return np.bincount(mesh.cells.ravel(), share, mesh.num_nodes)


def interpolate(func: Callable[[np.ndarray], np.ndarray], mesh: Mesh) -> np.ndarray:
    """Lagrange interpolant: ``func`` evaluated at every node.

    ``func`` receives the (N, dim) coordinate array and returns an array
    with leading dimension N.
    """
    values = np.asarray(func(mesh.vertices), dtype=float)
    if values.shape[:1] != (mesh.num_nodes,):
        raise ValueError(f"expected {mesh.num_nodes} nodal values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        bad = np.nonzero(~np.isfinite(values.reshape(mesh.num_nodes, -1)).all(axis=1))[0]
        raise ValueError(f"non-finite interpolated values at nodes {bad[:10].tolist()}")
    return values


@lru_cache(maxsize=None)
def simplex_quadrature(dim: int, degree: int = 5) -> Tuple[np.ndarray, np.ndarray]:
    """Grundmann-Moeller rule on the reference simplex.

    Returns barycentric points (nq, dim + 1) and weights (nq,) summing to 1,
    so that ``|T| * sum_q w_q f(x_q)`` integrates polynomials of total
    degree <= ``degree`` (rounded up to odd) exactly. Some weights are
    negative.
    """
    s = max(0, degree // 2)
    deg = 2 * s + 1
    points, weights = [], []
    for i in range(s + 1):
        denom = deg + dim - 2 * i
        w = (-1) ** i * 2.0 ** (-2 * s) * denom ** deg / (math.factorial(i) * math.factorial(deg + dim - i))
        for beta in _compositions(s - i, dim + 1):
            points.append([(2 * b + 1) / denom for b in beta])
            weights.append(w)
    weights = np.array(weights) * math.factorial(dim)
    return np.array(points), weights


def _compositions(total, parts):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cut:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


class P1Quadrature:
    """Cellwise quadrature of nonlinear functions of P1 fields on a fixed mesh."""

    def __init__(self, mesh: Mesh, degree: int = 5):
        self.mesh = mesh
        _, self.volumes = element_geometry(mesh)
        self.points, self.weights = simplex_quadrature(mesh.dim, degree)
        # (ncells, nq) quadrature weights scaled by cell volume
        self.cell_weights = self.volumes[:, None] * self.weights[None, :]

    def at_points(self, nodal: np.ndarray) -> np.ndarray:
        """Values of the P1 interpolant of ``nodal`` at all quadrature points."""
        return np.einsum("qa,ca->cq", self.points, nodal[self.mesh.cells])

    def integrate(self, func, nodal: np.ndarray) -> float:
        """``int func(v_h) dx``."""
        return float(np.sum(self.cell_weights * func(self.at_points(nodal))))

    def load(self, func, nodal: np.ndarray) -> np.ndarray:
        """Vector ``int func(v_h) phi_i dx`` over all nodes."""
        f = func(self.at_points(nodal)) * self.cell_weights
        local = np.einsum("cq,qa->ca", f, self.points)
        return np.bincount(self.mesh.cells.ravel(), local.ravel(), self.mesh.num_nodes)

    def matrix(self, func, nodal: np.ndarray) -> sp.csr_matrix:
        """Weighted mass matrix ``int func(v_h) phi_i phi_j dx``."""
        f = func(self.at_points(nodal)) * self.cell_weights
        local = np.einsum("cq,qa,qb->cab", f, self.points, self.points)
        cells = self.mesh.cells
        nloc = cells.shape[1]
        rows = np.repeat(cells, nloc, axis=1).ravel()
        cols = np.tile(cells, (1, nloc)).ravel()
        n = self.mesh.num_nodes
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
