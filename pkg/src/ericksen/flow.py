"""Discrete quasi-gradient flow for the degree of orientation and director.

One step consists of

(a) a tangential minimization of the elastic energy in the director at
    fixed ``s`` (linear solve in per-node tangent-frame coordinates),
(b) nodal renormalization of the director, and
(c) an implicit Euler step for ``s`` with the convex part of the
    potential implicit and the concave part explicit.

On a weakly acute mesh the total energy decreases by at least
``sum_i m_i (s_i^{k+1} - s_i^k)^2 / dt`` per step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp

from . import energy as en
from .errors import ConfigurationError, ConvergenceError, FlowError, IndefiniteError
from .fem import (P1Quadrature, assemble_stiffness, check_weak_acuteness, lumped_mass)
from .mesh import Mesh
from .potential import Potential, clamp
from .solver import LinearSystem, solve_cg

log = logging.getLogger(__name__)

DEGENERATE_SHIFT = 1e-14


@dataclass
class FlowConfig:
    """Parameters and Dirichlet data of a flow run.

    ``gamma_s``/``g`` pin the degree of orientation, ``gamma_n``/``q`` the
    director. ``stop_tol=None`` means ``1e-10 * |E^0|``.
    """

    kappa: float
    dt: float
    potential: Potential
    gamma_s: np.ndarray
    g: np.ndarray
    gamma_n: np.ndarray
    q: np.ndarray
    max_steps: int = 1000
    stop_tol: Optional[float] = None
    rel_tol: float = 1e-10
    max_iters: Optional[int] = None
    newton_tol: float = 1e-10
    newton_max: int = 25
    check_projection: bool = False

    def validate(self, dim: int):
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        self.gamma_s = np.asarray(self.gamma_s, dtype=np.int64)
        self.gamma_n = np.asarray(self.gamma_n, dtype=np.int64)
        self.g = np.broadcast_to(np.asarray(self.g, dtype=float), self.gamma_s.shape).copy()
        self.q = np.asarray(self.q, dtype=float).reshape(len(self.gamma_n), dim)
        if self.g.size and not np.all((self.g > -0.5) & (self.g < 1.0)):
            raise ConfigurationError("Dirichlet values for s must lie in (-1/2, 1)")
        if self.q.size and not np.all(np.abs(np.linalg.norm(self.q, axis=1) - 1.0) <= 1e-12):
            raise ConfigurationError("Dirichlet director data must be unit length")
        if not np.isin(self.gamma_n, self.gamma_s).all():
            raise ConfigurationError("gamma_n must be contained in gamma_s")


@dataclass(frozen=True)
class FlowState:
    step: int
    s: np.ndarray
    n: np.ndarray
    decrement: float
    energy: en.EnergyBreakdown


@dataclass
class StepRecord:
    step: int
    e1: float
    e2: float
    total: float
    e1_tilde: float
    c1: float
    min_s: float
    decrement: float
    tangent_norm: float = 0.0
    bound_ok: bool = True
    iters_a: int = 0
    iters_c: int = 0
    clamped: int = 0

    CSV_FIELDS = ("step", "e1", "e2", "total", "e1_tilde", "c1", "min_s", "decrement")


@dataclass
class FlowResult:
    records: List[StepRecord]
    state: FlowState
    converged: bool
    acuteness_passed: bool = True
    clamped: int = 0


class FlowProblem:
    """Mesh-dependent data shared by all steps of a run."""

    def __init__(self, mesh: Mesh, config: FlowConfig):
        config.validate(mesh.dim)
        self.mesh = mesh
        self.config = config
        self.graph = assemble_stiffness(mesh)
        self.mass = lumped_mass(mesh)
        self.quad = P1Quadrature(mesh)
        self.acuteness = check_weak_acuteness(self.graph)
        if not self.acuteness.passed:
            log.warning("mesh is not weakly acute (min k_ij = %.3e); energy decrease is not guaranteed",
                        self.acuteness.min_offdiag)

    @property
    def dim(self) -> int:
        return self.mesh.dim

    def energy(self, s, n) -> en.EnergyBreakdown:
        c = self.config
        return en.energy_breakdown(self.graph, self.quad, c.potential, c.kappa, s, n)


def tangent_frame(n: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the plane orthogonal to each ``n_i``.

    Returns shape (N, d - 1, d). In 2D the single vector is ``n`` rotated by
    90 degrees. In 3D ``r1`` is the coordinate axis least aligned with
    ``n_i`` (lowest index on ties) with its ``n_i`` component removed, and
    ``r2 = n_i x r1``.
    """
    n = en.check_director(n)
    N, d = n.shape
    if d == 2:
        return np.stack([-n[:, 1], n[:, 0]], axis=1)[:, None, :]
    if d != 3:
        raise ValueError(f"unsupported dimension {d}")
    axis = np.argmin(np.abs(n), axis=1)
    e = np.zeros_like(n)
    e[np.arange(N), axis] = 1.0
    r1 = e - np.einsum("id,id->i", e, n)[:, None] * n
    r1 /= np.linalg.norm(r1, axis=1, keepdims=True)
    r2 = np.cross(n, r1)
    return np.stack([r1, r2], axis=1)


def _tangential_system(A: sp.spmatrix, R: np.ndarray) -> sp.csr_matrix:
    """Block operator ``P^T (A kron I_d) P`` for the nodal frames ``R``."""
    coo = A.tocoo()
    N, m, _ = R.shape
    blocks = coo.data[:, None, None] * np.einsum("kad,kbd->kab", R[coo.row], R[coo.col])
    a = np.arange(m)
    rows = np.broadcast_to(coo.row[:, None, None] * m + a[None, :, None], blocks.shape)
    cols = np.broadcast_to(coo.col[:, None, None] * m + a[None, None, :], blocks.shape)
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(N * m, N * m))


def step_a_minimize(problem: FlowProblem, s: np.ndarray, n: np.ndarray, report=None) -> np.ndarray:
    """Tangential update ``t`` minimizing ``E1[s, n + t]``; ``t = 0`` on gamma_n.

    The coupled system in all tangential coefficients is solved; no
    decoupling across frame directions is assumed.
    """
    c = problem.config
    A = en.director_operator(problem.graph, s)
    R = tangent_frame(n)
    N, m, d = R.shape
    T = _tangential_system(A, R)
    rhs = -np.einsum("iad,id->ia", R, A @ n).ravel()
    fixed = (c.gamma_n[:, None] * m + np.arange(m)[None, :]).ravel()

    free = np.ones(N * m, dtype=bool)
    free[fixed] = False
    diag = T.diagonal()
    shift = None
    if free.any() and diag[free].min() <= DEGENERATE_SHIFT * max(diag.max(), 1.0):
        shift = DEGENERATE_SHIFT * np.repeat(problem.mass, m)
        log.info("step (a): degenerate rows (s ~ 0 on a whole star); adding %.0e mass shift",
                 DEGENERATE_SHIFT)
    phi, rep = solve_cg(LinearSystem(T, rhs, fixed), rel_tol=c.rel_tol, max_iters=c.max_iters,
                        shift=shift)
    if report is not None:
        report["iters_a"] = rep.iterations
    return np.einsum("ia,iad->id", phi.reshape(N, m), R)


def step_b_project(n: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Nodal normalization of ``n + t``; ``|n_i + t_i| >= 1`` for tangential ``t``."""
    v = np.asarray(n) + np.asarray(t)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _s_residual(problem, B, s, s_old, explicit):
    c = problem.config
    r = problem.mass * (s - s_old) / c.dt + B @ s - explicit
    if c.potential.enabled:
        r += problem.quad.load(lambda x: c.potential.dpsi_c(clamp(x)[0]), s)
    return r


def step_c_update_s(problem: FlowProblem, s_old: np.ndarray, n_new: np.ndarray,
                    report=None) -> np.ndarray:
    """Implicit Euler step for ``s`` at the updated director.

    Solves ``M_L (s - s_old)/dt + B(n_new) s + int psi_c'(s) phi = int psi_e'(s_old) phi``
    on the free nodes by (damped) Newton; with an affine ``psi_c'`` the first
    Newton step is already the exact linear solve.
    """
    c = problem.config
    pot = c.potential
    B = en.orientation_operator(problem.graph, c.kappa, n_new)
    clamped = 0
    if pot.enabled:
        s_clamped, clamped = clamp(s_old)
        explicit = problem.quad.load(pot.dpsi_e, s_clamped)
    else:
        explicit = np.zeros_like(s_old)
    free = np.ones(len(s_old), dtype=bool)
    free[c.gamma_s] = False

    s = s_old.copy()
    s[c.gamma_s] = c.g
    F = _s_residual(problem, B, s, s_old, explicit)
    f0 = np.linalg.norm(F[free])
    # residual cannot be resolved below the rounding level of its terms
    terms = np.abs(problem.mass * s / c.dt) + np.abs(B) @ np.abs(s) + np.abs(explicit)
    if pot.enabled:
        terms += np.abs(problem.quad.load(lambda x: pot.dpsi_c(clamp(x)[0]), s))
    floor = 1e3 * np.finfo(float).eps * np.linalg.norm(terms[free])
    target = max(max(c.newton_tol, 10 * c.rel_tol) * f0, floor)
    iters = 0
    fnorm = f0
    for newton_it in range(c.newton_max):
        if fnorm <= target or fnorm == 0.0:
            break
        J = sp.diags(problem.mass / c.dt) + B
        if pot.enabled:
            inside = lambda x: pot.d2psi_c(x) * (clamp(x)[0] == x)
            J = J + problem.quad.matrix(inside, s)
        delta, rep = solve_cg(LinearSystem(J, -F, c.gamma_s), rel_tol=c.rel_tol,
                              max_iters=c.max_iters)
        iters += rep.iterations
        lam = 1.0
        for _ in range(30):
            trial = s + lam * delta
            F_trial = _s_residual(problem, B, trial, s_old, explicit)
            f_trial = np.linalg.norm(F_trial[free])
            if f_trial < fnorm or f_trial <= target:
                break
            lam *= 0.5
        else:
            raise FlowError(f"Newton line search failed in step (c) (residual {fnorm:.3e})")
        s, F, fnorm = trial, F_trial, f_trial
    else:
        if fnorm > target:
            raise FlowError(f"Newton did not converge in {c.newton_max} iterations "
                            f"(residual {fnorm:.3e}, target {target:.3e})")
    s[c.gamma_s] = c.g
    if report is not None:
        report["iters_c"] = iters
        report["clamped"] = clamped
    return s


def initial_point_defect(mesh: Mesh, location=(0.25, 0.25), eps: float = 0.05,
                         tilt: float = 0.0) -> np.ndarray:
    """Radial director around ``location`` (in the x-y plane), regularized.

    ``n = (x - p)/max(|x - p|, eps)`` in the first two components. Inside the
    ``eps`` ball the vector is blended with ``e_1`` (weight ``1 - |x-p|/eps``)
    so that a node sitting exactly on ``p`` still gets a direction. In 3D the
    z component is ``tilt`` before normalization.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    p = np.asarray(location, dtype=float)[:2]
    x = mesh.vertices
    diff = x[:, :2] - p
    r = np.linalg.norm(diff, axis=1)
    if eps == 0 and np.any(r == 0):
        raise ValueError("a node coincides with the defect location and eps = 0")
    v = np.zeros((mesh.num_nodes, mesh.dim))
    v[:, :2] = diff / np.maximum(r, eps)[:, None] if eps > 0 else diff / r[:, None]
    if eps > 0:
        v[:, 0] += np.clip(1.0 - r / eps, 0.0, None)
    if mesh.dim == 3:
        v[:, 2] = tilt
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def initial_state(problem: FlowProblem, n0: np.ndarray, s_value: float):
    """Constant ``s`` and the given director, overwritten with Dirichlet data."""
    c = problem.config
    s = np.full(problem.mesh.num_nodes, float(s_value))
    s[c.gamma_s] = c.g
    n = np.array(n0, dtype=float)
    n[c.gamma_n] = c.q
    return s, n


def defect_region(s: np.ndarray, threshold: float):
    """Nodes with ``|s_i| < threshold`` and the minimum of ``|s|``."""
    a = np.abs(np.asarray(s))
    return np.nonzero(a < threshold)[0], float(a.min())


def _record(problem, step, s, n, energy, decrement, **extra) -> StepRecord:
    return StepRecord(step=step, e1=energy.e1, e2=energy.e2, total=energy.total,
                      e1_tilde=energy.e1_tilde, c1=energy.c1, min_s=float(np.min(s)),
                      decrement=decrement, **extra)


def flow_step(problem: FlowProblem, state: FlowState):
    """One iteration of steps (a)-(c). Returns the new state and its record."""
    c = problem.config
    info = {}
    t = step_a_minimize(problem, state.s, state.n, report=info)
    tangency = np.abs(np.einsum("id,id->i", t, state.n)).max()
    if tangency > 1e-10:
        raise FlowError(f"step (a) produced a non-tangent update (max |t.n| = {tangency:.3e})")
    n_new = step_b_project(state.n, t)
    n_new[c.gamma_n] = c.q
    if c.check_projection:
        before = en.e1h(problem.graph, c.kappa, state.s, state.n + t)
        after = en.e1h(problem.graph, c.kappa, state.s, n_new)
        if after > before + 1e-12 * max(1.0, abs(before)):
            raise FlowError(f"projection increased E1 ({before!r} -> {after!r})")
    s_new = step_c_update_s(problem, state.s, n_new, report=info)
    ds = s_new - state.s
    decrement = float(np.dot(problem.mass, ds ** 2) / c.dt)
    energy = problem.energy(s_new, n_new)
    slack = 10 * c.rel_tol * abs(state.energy.total)
    bound_ok = energy.total <= state.energy.total - decrement + slack
    t_norm = float(np.dot(problem.mass, np.sum(t ** 2, axis=1)))
    rec = _record(problem, state.step + 1, s_new, n_new, energy, decrement,
                  tangent_norm=t_norm, bound_ok=bool(bound_ok), **info)
    return FlowState(state.step + 1, s_new, n_new, decrement, energy), rec


def run_flow(problem: FlowProblem, s0: np.ndarray, n0: np.ndarray,
             callback: Optional[Callable[[FlowState, StepRecord], None]] = None) -> FlowResult:
    """Iterate until the step measure ``decrement + sum m_i |t_i|^2`` drops to
    ``stop_tol`` or ``max_steps`` is reached.

    ``callback`` is invoked with every state, including the initial one.
    On a failing step a :class:`FlowError` carrying the records so far is
    raised.
    """
    c = problem.config
    s0 = np.asarray(s0, dtype=float)
    n0 = en.check_director(n0)
    if not np.array_equal(s0[c.gamma_s], c.g) or not np.array_equal(n0[c.gamma_n], c.q):
        raise ValueError("initial state does not match the Dirichlet data")
    energy = problem.energy(s0, n0)
    state = FlowState(0, s0.copy(), n0.copy(), 0.0, energy)
    records = [_record(problem, 0, s0, n0, energy, 0.0)]
    if callback:
        callback(state, records[0])
    stop_tol = c.stop_tol if c.stop_tol is not None else 1e-10 * abs(energy.total)
    clamped = 0
    converged = False
    for _ in range(c.max_steps):
        try:
            state, rec = flow_step(problem, state)
        except (FlowError, ConvergenceError, IndefiniteError) as exc:
            raise FlowError(f"step {state.step + 1} failed: {exc}", records, state) from exc
        records.append(rec)
        clamped += rec.clamped
        if not rec.bound_ok:
            log.warning("step %d: energy bound violated (E=%r, previous %r, decrement %r)",
                        rec.step, rec.total, records[-2].total, rec.decrement)
        if callback:
            callback(state, rec)
        if rec.decrement + rec.tangent_norm <= stop_tol:
            converged = True
            break
    if clamped:
        log.warning("potential derivatives were clamped at %d node evaluations", clamped)
    return FlowResult(records, state, converged, problem.acuteness.passed, clamped)
