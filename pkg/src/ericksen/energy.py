"""Discrete energies, the auxiliary energy identity and first variations.

All node-pair sums run over ordered pairs ``(i, j)`` as written in the
definitions; internally they are evaluated once per unordered edge and
doubled.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp

from .fem import P1Quadrature, StiffnessGraph
from .potential import Potential

UNIT_TOL = 1e-12
TANGENT_TOL = 1e-10


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy terms of one state.

    ``e1 - e1_tilde - c1 / 4`` vanishes up to rounding for any state whose
    director is unit length at the nodes.
    """

    e1: float
    e2: float
    e1_tilde: float
    c1: float

    @property
    def total(self) -> float:
        return self.e1 + self.e2

    @property
    def identity_residual(self) -> float:
        return self.e1 - self.e1_tilde - 0.25 * self.c1

    def as_dict(self):
        out = asdict(self)
        out["total"] = self.total
        return out


def check_director(n: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.ndim != 2:
        raise ValueError(f"director must have shape (N, d), got {n.shape}")
    dev = np.abs(np.linalg.norm(n, axis=1) - 1.0)
    if dev.size and dev.max() > tol:
        raise ValueError(f"director is not unit length at the nodes (max deviation {dev.max():.3e})")
    return n


def _diffs(graph, v):
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return v[i] - v[j]


def _check_sizes(graph, *fields):
    for f in fields:
        if len(f) != graph.num_nodes:
            raise ValueError(f"field has {len(f)} nodes, graph has {graph.num_nodes}")


def dirichlet_energy(graph: StiffnessGraph, v: np.ndarray) -> float:
    """``int |grad v_h|^2`` via the node-pair identity; ``v`` scalar or vector valued."""
    dv = _diffs(graph, np.asarray(v, dtype=float))
    sq = dv ** 2 if dv.ndim == 1 else np.sum(dv ** 2, axis=1)
    return 0.5 * graph.pair_sum(sq)


def pair_weights(graph: StiffnessGraph, s: np.ndarray) -> np.ndarray:
    """Edge averages ``(s_i^2 + s_j^2) / 2``."""
    s2 = s ** 2
    return 0.5 * (s2[graph.edges[:, 0]] + s2[graph.edges[:, 1]])


def e1h(graph: StiffnessGraph, kappa: float, s: np.ndarray, n: np.ndarray) -> float:
    """Discrete elastic energy.

    ``kappa/2 sum k_ij (d_ij s)^2 + 1/2 sum k_ij (s_i^2 + s_j^2)/2 |d_ij n|^2``.
    """
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    _check_sizes(graph, s, n)
    ds = _diffs(graph, s)
    dn2 = np.sum(_diffs(graph, n) ** 2, axis=1)
    return 0.5 * kappa * graph.pair_sum(ds ** 2) + 0.5 * graph.pair_sum(pair_weights(graph, s) * dn2)


def e2h(quad: P1Quadrature, potential: Potential, s: np.ndarray) -> float:
    """``int psi(s_h) dx`` with a degree-5 exact cell rule."""
    if not potential.enabled:
        return 0.0
    return quad.integrate(potential.psi, np.asarray(s, dtype=float))


def director_product(s: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Nodal ``u = I_h[s n]``."""
    return np.asarray(s)[:, None] * np.asarray(n)


def abs_field(s: np.ndarray) -> np.ndarray:
    """``I_h |s_h|``."""
    return np.abs(s)


def e1h_tilde(graph: StiffnessGraph, kappa: float, s: np.ndarray, u: np.ndarray) -> float:
    """Auxiliary energy ``(kappa - 1) int |grad s_h|^2 + int |grad u_h|^2``."""
    return (kappa - 1.0) * dirichlet_energy(graph, s) + dirichlet_energy(graph, u)


def consistency_c1h(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray) -> float:
    """``sum_{i,j} k_ij (d_ij s)^2 |d_ij n|^2``."""
    ds = _diffs(graph, np.asarray(s, dtype=float))
    dn2 = np.sum(_diffs(graph, np.asarray(n, dtype=float)) ** 2, axis=1)
    return graph.pair_sum(ds ** 2 * dn2)


def energy_breakdown(graph, quad, potential, kappa, s, n) -> EnergyBreakdown:
    return EnergyBreakdown(
        e1=e1h(graph, kappa, s, n),
        e2=e2h(quad, potential, s),
        e1_tilde=e1h_tilde(graph, kappa, s, director_product(s, n)),
        c1=consistency_c1h(graph, s, n),
    )


# first variations ---------------------------------------------------------

def director_operator(graph: StiffnessGraph, s: np.ndarray) -> sp.csr_matrix:
    """Scalar operator ``A`` with ``E1[s, n] = kappa-part + 1/2 sum_c n_c @ A @ n_c``.

    ``A = 2 L_w`` where ``L_w`` is the graph Laplacian with edge weights
    ``k_ij (s_i^2 + s_j^2)/2``; it acts componentwise on the director.
    Symmetric positive semidefinite on weakly acute meshes.
    """
    return 2.0 * graph.laplacian(graph.weights * pair_weights(graph, s))


def var_n_e1h(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, v: np.ndarray,
              check_tangent: bool = True) -> float:
    """``sum_{i,j} k_ij (s_i^2 + s_j^2)/2 (d_ij n) . (d_ij v)``."""
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)
    if n.shape != v.shape:
        raise ValueError("direction and director shapes differ")
    if check_tangent:
        dots = np.abs(np.einsum("id,id->i", n, v))
        if dots.size and dots.max() > TANGENT_TOL:
            raise ValueError(f"variation is not tangent to the director (max |v.n| = {dots.max():.3e})")
    w = pair_weights(graph, np.asarray(s, dtype=float))
    dots = np.einsum("ed,ed->e", _diffs(graph, n), _diffs(graph, v))
    return graph.pair_sum(w * dots)


def orientation_diagonal(graph: StiffnessGraph, n: np.ndarray) -> np.ndarray:
    """``D_ii = sum_j k_ij |d_ij n|^2``."""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    c = graph.weights * np.sum(_diffs(graph, n) ** 2, axis=1)
    N = graph.num_nodes
    return np.bincount(i, c, N) + np.bincount(j, c, N)


def orientation_operator(graph: StiffnessGraph, kappa: float, n: np.ndarray) -> sp.csr_matrix:
    """Operator ``B`` with ``delta_s E1[s, n; z] = z @ B @ s``.

    ``B = 2 kappa L + diag(D)``, ``L`` the plain graph Laplacian of ``k_ij``.
    """
    L = graph.laplacian(graph.weights)
    return (2.0 * kappa * L + sp.diags(orientation_diagonal(graph, n))).tocsr()


def var_s_e1h(graph: StiffnessGraph, kappa: float, s: np.ndarray, n: np.ndarray,
              z: np.ndarray) -> float:
    """``kappa sum k_ij (d_ij s)(d_ij z) + sum k_ij |d_ij n|^2 (s_i z_i + s_j z_j)/2``."""
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    dn2 = np.sum(_diffs(graph, np.asarray(n, dtype=float)) ** 2, axis=1)
    first = kappa * graph.pair_sum(_diffs(graph, s) * _diffs(graph, z))
    second = graph.pair_sum(dn2 * 0.5 * (s[i] * z[i] + s[j] * z[j]))
    return first + second


def var_s_e2h(quad: P1Quadrature, potential: Potential, s_new: np.ndarray,
              s_old: np.ndarray, z: np.ndarray) -> float:
    """``int (psi_c'(s_new) - psi_e'(s_old)) z dx`` with the same rule as :func:`e2h`."""
    if not potential.enabled:
        return 0.0
    return float(np.dot(split_load(quad, potential, s_new, s_old), z))


def split_load(quad: P1Quadrature, potential: Potential, s_new, s_old) -> np.ndarray:
    """Nodal vector ``int (psi_c'(s_new) - psi_e'(s_old)) phi_i dx``."""
    if not potential.enabled:
        return np.zeros(len(s_new))
    return quad.load(potential.dpsi_c, s_new) - quad.load(potential.dpsi_e, s_old)
