"""SCA loop for the antenna positions at fixed analog weights.

The beam gain toward one angle is a double sum of cosines of
u_pq = alpha*(x_p - x_q) - (phi_p - phi_q) with alpha = (2*pi/lambda)*
cos(theta).  Replacing every cosine by its global quadratic minorant
g(z|z0) = cos(z0) - sin(z0)(z - z0) - (z - z0)^2/2 turns the gain into a
concave quadratic in x whose curvature matrix is -alpha^2 * W with
W = I - (1/N) * ones (idempotent, PSD), so each iteration maximizes the
floor of L concave quadratics over the box/ordering polytope: a convex
QCQP handled by the embedded interior-point solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._threads import single_threaded_blas
from .arrays import (
    ArrayConfig,
    PositionVector,
    SampleGrid,
    WeightVector,
    beam_gain,
    is_feasible,
    min_gain,
)
from .convex import SolverTolerances
from .linalg import hermitian_eig
from .qcqp import QcqpProblem, solve_qcqp

__all__ = [
    "QuadraticSurrogate",
    "PositionTraceRecord",
    "PositionScaResult",
    "cosine_minorant",
    "build_surrogate",
    "certify_nsd",
    "sca_positions",
]

_NSD_TOL = 1e-9


def cosine_minorant(z, z0):
    """Global quadratic lower bound on cos(z), tight at z0.

    Second-order expansion with the curvature replaced by its worst case:
    g(z|z0) = cos(z0) - sin(z0)(z-z0) - (z-z0)^2/2 <= cos(z) for all z.
    """
    dz = np.asarray(z) - np.asarray(z0)
    return np.cos(z0) - np.sin(z0) * dz - 0.5 * dz * dz


@dataclass(frozen=True)
class QuadraticSurrogate:
    """Concave quadratic minorant of the beam gain toward one angle."""

    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: float
    alpha: float
    anchor: PositionVector

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.a @ x + self.b @ x + self.c)


def build_surrogate(
    w: WeightVector, x_anchor: PositionVector, theta: float, wavelength: float
) -> QuadraticSurrogate:
    """Assemble the quadratic minorant of the gain around ``x_anchor``."""
    n = len(w)
    alpha = (2.0 * np.pi / wavelength) * float(np.cos(theta))
    x0 = x_anchor.coords
    dx = x0[:, None] - x0[None, :]
    dphi = w.phases[:, None] - w.phases[None, :]
    u0 = alpha * dx - dphi
    sin_u0 = np.sin(u0)
    a = -(alpha**2) * (np.eye(n) - np.full((n, n), 1.0 / n))
    b = (2.0 * alpha / n) * np.sum(alpha * dx - sin_u0, axis=1)
    c = float(
        np.sum(np.cos(u0) + alpha * dx * sin_u0 - 0.5 * (alpha * dx) ** 2) / n
    )
    return QuadraticSurrogate(a=a, b=b, c=c, alpha=alpha, anchor=x_anchor)


def certify_nsd(s: QuadraticSurrogate, tol: float = _NSD_TOL) -> bool:
    """True iff the curvature matrix has no eigenvalue above ``tol``."""
    lam, _ = hermitian_eig(s.a)
    return bool(lam[-1] <= tol)


@dataclass(frozen=True)
class PositionTraceRecord:
    iteration: int
    surrogate_floor: float
    min_gain: float


@dataclass(frozen=True)
class PositionScaResult:
    positions: PositionVector
    trace: tuple
    iterations: int
    converged: bool

    @property
    def min_gain(self) -> float:
        return self.trace[-1].min_gain


def _sanitize(x: np.ndarray, cfg: ArrayConfig, tol: float = 1e-9) -> np.ndarray:
    """Snap solver round-off (< tol) back onto the feasible box/ordering."""
    x = np.clip(x, 0.0, cfg.aperture)
    d = np.diff(x)
    if np.any(d < -tol):
        raise RuntimeError("position solver returned out-of-order coordinates")
    return np.maximum.accumulate(x)


def sca_positions(
    w: WeightVector,
    x_init: PositionVector,
    grid: SampleGrid,
    cfg: ArrayConfig,
    sca_tol: float = 0.01,
    max_iter: int = 100,
    solver_tol: SolverTolerances = SolverTolerances(),
) -> PositionScaResult:
    """Run the minorant SCA for the positions at fixed weights.

    Each iteration rebuilds one surrogate per grid angle at the current
    anchor, certifies negative semidefiniteness, and solves the QCQP.  A
    new iterate is kept only when the recomputed worst-case gain improves,
    so the emitted min-gain trace is non-decreasing; tightness of the
    minorant at the anchor guarantees improvements until a stationary
    point.
    """
    ok, violations = is_feasible(x_init, cfg)
    if not ok:
        raise ValueError("x_init is infeasible: " + "; ".join(violations))

    with single_threaded_blas():
        lam = cfg.wavelength
        x = x_init
        g_cur = min_gain(w, x, grid, lam)
        trace = [PositionTraceRecord(0, g_cur, g_cur)]
        converged = False
        iterations = 0

        for it in range(1, max_iter + 1):
            surrogates = [
                build_surrogate(w, x, th, lam) for th in grid.angles
            ]
            for s in surrogates:
                if not certify_nsd(s):
                    raise RuntimeError(
                        "surrogate curvature failed the NSD certificate"
                    )
            problem = QcqpProblem(
                dim=cfg.n_antennas,
                quad_a=np.stack([s.a for s in surrogates]),
                quad_b=np.stack([s.b for s in surrogates]),
                quad_c=np.array([s.c for s in surrogates]),
                box_high=cfg.aperture,
                min_spacing=cfg.min_spacing,
            )
            sol = solve_qcqp(problem, solver_tol)
            iterations = it
            x_new = PositionVector(_sanitize(sol.x, cfg))
            g_new = min_gain(w, x_new, grid, lam)
            improvement = g_new - g_cur
            if improvement > 0:
                trace.append(PositionTraceRecord(it, sol.t, g_new))
                x, g_cur = x_new, g_new
            else:
                # anchor is already optimal for its own surrogate: stop
                trace.append(PositionTraceRecord(it, sol.t, g_cur))
                converged = True
                break
            if improvement < sca_tol:
                converged = True
                break

    return PositionScaResult(
        positions=x,
        trace=tuple(trace),
        iterations=iterations,
        converged=converged,
    )
