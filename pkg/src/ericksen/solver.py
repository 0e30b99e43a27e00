"""Jacobi-preconditioned conjugate gradients with Dirichlet elimination."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, IndefiniteError

log = logging.getLogger(__name__)


@dataclass
class LinearSystem:
    """``A x = b`` with ``x[fixed] = fixed_values`` imposed exactly."""

    matrix: sp.spmatrix
    rhs: np.ndarray
    fixed: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    fixed_values: Optional[np.ndarray] = None


@dataclass
class SolveReport:
    iterations: int
    residuals: List[float]
    converged: bool


def pcg(A, b, x0=None, diag=None, rel_tol=1e-10, max_iters=None):
    """Preconditioned CG for symmetric positive definite ``A``.

    Stops when ``||b - A x|| <= rel_tol * ||b||``. Raises
    :class:`IndefiniteError` on non-positive curvature and
    :class:`ConvergenceError` when ``max_iters`` is exhausted.
    """
    n = b.shape[0]
    if max_iters is None:
        max_iters = max(10 * n, 100)
    if diag is None:
        diag = A.diagonal()
    if np.any(diag <= 0):
        raise IndefiniteError("non-positive diagonal entry; Jacobi preconditioner undefined")
    inv_diag = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    target = rel_tol * bnorm
    residuals = [float(np.linalg.norm(r))]
    if residuals[0] <= target or bnorm == 0.0:
        if bnorm == 0.0:
            x[:] = 0.0
        return x, SolveReport(0, residuals, True)
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iters + 1):
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0.0:
            raise IndefiniteError(f"non-positive curvature {curv:.3e} at iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.linalg.norm(r))
        residuals.append(rnorm)
        if rnorm <= target:
            return x, SolveReport(it, residuals, True)
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"CG did not reach rel_tol={rel_tol:g} in {max_iters} iterations "
        f"(residual {residuals[-1] / bnorm:.3e})", residuals)


def solve_cg(system: LinearSystem, rel_tol: float = 1e-10, max_iters: Optional[int] = None,
             x0: Optional[np.ndarray] = None, shift: Optional[np.ndarray] = None):
    """Solve a constrained system by eliminating the fixed rows and columns.

    ``shift`` (length N, optional) is added to the diagonal of the reduced
    operator. Returns the full solution with fixed entries copied verbatim
    and a :class:`SolveReport`.
    """
    A = sp.csr_matrix(system.matrix)
    n = A.shape[0]
    b = np.asarray(system.rhs, dtype=float)
    fixed = np.asarray(system.fixed, dtype=np.int64)
    values = np.zeros(fixed.size) if system.fixed_values is None else np.asarray(system.fixed_values, dtype=float)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    free_mask = np.ones(n, dtype=bool)
    free_mask[fixed] = False
    free = np.nonzero(free_mask)[0]
    x[fixed] = values
    if free.size == 0:
        return x, SolveReport(0, [0.0], True)
    A_ff = A[free][:, free]
    if shift is not None:
        A_ff = A_ff + sp.diags(np.asarray(shift)[free])
    rhs = b[free] - A[free][:, fixed] @ values if fixed.size else b[free]
    xf, report = pcg(A_ff.tocsr(), rhs, x0=None if x0 is None else x[free],
                     rel_tol=rel_tol, max_iters=max_iters)
    x[free] = xf
    return x, report
