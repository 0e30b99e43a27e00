"""Double-well potential with an explicit convex-concave split."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Polynomial

S_LOWER = -0.5
S_UPPER = 1.0
CLAMP_MARGIN = 1e-6


class PotentialValues(NamedTuple):
    psi: np.ndarray
    dpsi_c: np.ndarray
    dpsi_e: np.ndarray
    n_clamped: int


@dataclass(frozen=True)
class Potential:
    """``psi = psi_c - psi_e`` with both parts convex on (-1/2, 1).

    The two parts are polynomials given by ascending coefficients. When
    ``enabled`` is false every evaluation returns zeros; the flow then
    minimizes the elastic energy alone.
    """

    convex: Sequence[float]
    concave: Sequence[float]
    s_star: float
    enabled: bool = True

    @property
    def psi_c(self) -> Polynomial:
        return Polynomial(self.convex)

    @property
    def psi_e(self) -> Polynomial:
        return Polynomial(self.concave)

    @property
    def implicit_is_linear(self) -> bool:
        """True when ``psi_c'`` is affine, so the implicit s-update is a linear solve."""
        return self.psi_c.degree() <= 2

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        if not self.enabled:
            return np.zeros_like(s)
        return self.psi_c(s) - self.psi_e(s)

    def dpsi_c(self, s):
        s = np.asarray(s, dtype=float)
        if not self.enabled:
            return np.zeros_like(s)
        return self.psi_c.deriv()(s)

    def d2psi_c(self, s):
        s = np.asarray(s, dtype=float)
        if not self.enabled:
            return np.zeros_like(s)
        return self.psi_c.deriv(2)(s)

    def dpsi_e(self, s):
        s = np.asarray(s, dtype=float)
        if not self.enabled:
            return np.zeros_like(s)
        return self.psi_e.deriv()(s)

    def evaluate(self, s) -> PotentialValues:
        """Potential and split derivatives.

        Derivatives are taken at ``s`` clamped into
        ``[-1/2 + 1e-6, 1 - 1e-6]``; ``n_clamped`` counts the entries that
        were moved. The potential value itself is not clamped.
        """
        s = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite degree of orientation")
        if not self.enabled:
            z = np.zeros_like(s)
            return PotentialValues(z, z, z.copy(), 0)
        sc, count = clamp(s)
        return PotentialValues(self.psi(s), self.dpsi_c(sc), self.dpsi_e(sc), count)


def clamp(s):
    lo, hi = S_LOWER + CLAMP_MARGIN, S_UPPER - CLAMP_MARGIN
    s = np.asarray(s, dtype=float)
    outside = int(np.count_nonzero((s < lo) | (s > hi)))
    return np.clip(s, lo, hi), outside


def quartic_well(enabled: bool = True) -> Potential:
    """``psi(s) = 63 s^2 - (-16 s^4 + 21.33333333333 s^3 + 57 s^2)``.

    Local minimum at 0, global minimum near ``s* = 0.750025``. No vertical
    shift is applied, so ``psi(s*)`` is about -0.5625 rather than 0.
    """
    return Potential(convex=(0.0, 0.0, 63.0),
                     concave=(0.0, 0.0, 57.0, 21.33333333333, -16.0),
                     s_star=0.750025,
                     enabled=enabled)

