"""Interior-point solver for the position-update QCQP.

Problem shape (maximization over positions x and the floor t):

    max  t
    s.t. x' A_i x + b_i' x + c_i >= t     i = 1..L   (concave quadratics)
         0 <= x_n <= D                    n = 1..N   (box)
         x_n - x_{n-1} >= d_min           n = 2..N   (ordering)

Every A_i must be negative semidefinite (certified at construction via
eigendecomposition), so the feasible set is convex and any KKT point is a
global optimum.  The solver works directly on the concave quadratics (no
SOCP reformulation): an infeasible-start primal-dual path-following method
with a Mehrotra predictor-corrector, carrying explicit multipliers for
every constraint so the reported duality gap and stationarity residual are
measured, not reconstructed.  The condensed Newton system has size N+1 and
is symmetric positive definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import convex
from ._threads import serial_blas
from .convex import InfeasibleGeometry, SolveReport, SolverTolerances
from .linalg import hermitian_eig

__all__ = ["QcqpProblem", "QcqpSolution", "solve_qcqp"]

_NSD_TOL = 1e-9
_STEP_DAMPING = 0.99
_MIN_STEP = 1e-10


@dataclass(frozen=True)
class QcqpProblem:
    """Data of one position-update QCQP.

    ``quad_a`` is an (L, N, N) stack of symmetric NSD matrices, ``quad_b``
    an (L, N) stack, ``quad_c`` a length-L vector.  A matrix whose largest
    eigenvalue exceeds 1e-9 is rejected here rather than silently
    projected; an empty constraint list leaves t unbounded and is a caller
    bug.
    """

    dim: int
    quad_a: np.ndarray
    quad_b: np.ndarray
    quad_c: np.ndarray
    box_high: float
    min_spacing: float

    def __post_init__(self):
        n = int(self.dim)
        if n < 1:
            raise ValueError("dim must be >= 1")
        a = np.ascontiguousarray(np.asarray(self.quad_a, dtype=float))
        b = np.ascontiguousarray(np.asarray(self.quad_b, dtype=float))
        c = np.ascontiguousarray(np.asarray(self.quad_c, dtype=float))
        if a.ndim == 2:
            a = a[None]
        if b.ndim == 1:
            b = b[None]
        c = np.atleast_1d(c)
        L = a.shape[0]
        if L < 1:
            raise ValueError("at least one quadratic constraint is required "
                             "(otherwise t is unbounded)")
        if a.shape != (L, n, n) or b.shape != (L, n) or c.shape != (L,):
            raise ValueError("inconsistent quadratic constraint shapes")
        for l in range(L):
            sym_err = float(np.max(np.abs(a[l] - a[l].T)))
            if sym_err > 1e-12:
                raise ValueError(f"A[{l}] is not symmetric (error {sym_err:.3g})")
            lam, _ = hermitian_eig(a[l])
            if lam[-1] > _NSD_TOL:
                raise ValueError(
                    f"A[{l}] is not negative semidefinite: largest eigenvalue "
                    f"{lam[-1]:.3g} > {_NSD_TOL:g}"
                )
        if not self.box_high > 0:
            raise ValueError("box_high must be positive")
        if self.min_spacing < 0:
            raise ValueError("min_spacing must be nonnegative")
        for arr in (a, b, c):
            arr.flags.writeable = False
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "quad_a", a)
        object.__setattr__(self, "quad_b", b)
        object.__setattr__(self, "quad_c", c)

    @property
    def n_constraints(self) -> int:
        return self.quad_a.shape[0]

    def interior_point(self) -> np.ndarray:
        """A strictly interior x; None when the feasible set is one point.

        Raises ``InfeasibleGeometry`` when box and ordering are inconsistent.
        """
        n, d, dm = self.dim, self.box_high, self.min_spacing
        slack = d - (n - 1) * dm
        if slack < 0:
            raise InfeasibleGeometry(
                f"(N-1)*min_spacing = {(n - 1) * dm:.6g} exceeds box {d:.6g}"
            )
        if slack == 0:
            return None  # single feasible point, no interior
        k = np.arange(1, n + 1, dtype=float)
        return slack * k / (n + 1) + (k - 1) * dm

    def quad_values(self, x: np.ndarray) -> np.ndarray:
        """q_i(x) for all i."""
        ax = np.einsum("lij,j->li", self.quad_a, x)
        return ax @ x + self.quad_b @ x + self.quad_c

    def dump(self, path) -> None:
        """Write the problem in the documented plain-text format."""
        with open(path, "w") as fh:
            fh.write("qcqp 1\n")
            fh.write(f"dim {self.dim}\n")
            fh.write(f"constraints {self.n_constraints}\n")
            convex.write_scalar(fh, "box_high", self.box_high)
            convex.write_scalar(fh, "min_spacing", self.min_spacing)
            for l in range(self.n_constraints):
                convex.write_matrix(fh, f"A {l}", self.quad_a[l])
                convex.write_matrix(fh, f"b {l}", self.quad_b[l][None, :])
                convex.write_scalar(fh, "c", self.quad_c[l])

    @classmethod
    def load(cls, path) -> "QcqpProblem":
        with open(path) as fh:
            lines = iter(fh.read().splitlines())
        tag = next(lines).split()
        if tag[0] != "qcqp":
            raise ValueError(f"not a qcqp dump: {tag}")
        n = int(next(lines).split()[1])
        L = int(next(lines).split()[1])
        box_high = float(next(lines).split()[1])
        min_spacing = float(next(lines).split()[1])
        a, b, c = [], [], []
        for _ in range(L):
            assert next(lines).startswith("A ")
            a.append(convex.read_matrix(lines, n, n, complex_data=False))
            assert next(lines).startswith("b ")
            b.append(convex.read_matrix(lines, 1, n, complex_data=False)[0])
            c.append(float(next(lines).split()[1]))
        return cls(n, np.stack(a), np.stack(b), np.array(c), box_high, min_spacing)


@dataclass(frozen=True)
class QcqpSolution:
    t: float
    x: np.ndarray = field(repr=False)
    report: SolveReport


def _primal_violations(p: QcqpProblem, x, t) -> np.ndarray:
    q = p.quad_values(x)
    quad_viol = np.maximum(0.0, t - q)
    box_lo = np.maximum(0.0, -x)
    box_hi = np.maximum(0.0, x - p.box_high)
    spacing = np.maximum(0.0, p.min_spacing - np.diff(x)) if p.dim > 1 else np.empty(0)
    return np.concatenate([quad_viol, box_lo, box_hi, spacing])


def _max_step_orthant(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


@serial_blas
def solve_qcqp(
    p: QcqpProblem, tol: SolverTolerances = SolverTolerances()
) -> QcqpSolution:
    """Maximize the gain floor t over feasible positions.

    Raises ``InfeasibleGeometry`` when box and ordering admit no point.
    The report's kkt_residuals stack [quadratic violations (L), box lower
    (N), box upper (N), spacing (N-1), dual stationarity residual].
    """
    n, L = p.dim, p.n_constraints
    D, dm = p.box_high, p.min_spacing
    A, B = p.quad_a, p.quad_b
    n_sp = n - 1
    m = L + 2 * n + n_sp

    x = p.interior_point()  # raises when infeasible
    if x is None:
        # zero box slack: the ordering pins x to a single feasible point
        x = np.arange(n, dtype=float) * dm
        t = float(np.min(p.quad_values(x)))
        report = SolveReport(
            status=convex.OPTIMAL,
            objective=t,
            duality_gap=0.0,
            iterations=0,
            kkt_residuals=np.concatenate([_primal_violations(p, x, t), [0.0]]),
        )
        return QcqpSolution(t=t, x=x, report=report)

    def residual_vector(x, t):
        q = p.quad_values(x)
        parts = [q - t, x, D - x]
        if n_sp:
            parts.append(np.diff(x) - dm)
        return np.concatenate(parts)

    def jacobian(x):
        # rows: d r_i / d (x, t)
        J = np.zeros((m, n + 1))
        gq = 2.0 * np.einsum("lij,j->li", A, x) + B
        J[:L, :n] = gq
        J[:L, n] = -1.0
        idx = np.arange(n)
        J[L + idx, idx] = 1.0
        J[L + n + idx, idx] = -1.0
        if n_sp:
            sp = np.arange(n_sp)
            J[L + 2 * n + sp, sp] = -1.0
            J[L + 2 * n + sp, sp + 1] = 1.0
        return J

    t = float(np.min(p.quad_values(x))) - 1.0
    s = residual_vector(x, t)
    lam = np.concatenate(
        [np.full(L, 1.0 / L), np.full(2 * n + n_sp, 0.1)]
    )
    e_t = np.zeros(n + 1)
    e_t[n] = 1.0

    best = None
    best_err = math.inf
    status = convex.MAX_ITER
    iters_done = 0

    for it in range(tol.max_iter + 1):
        J = jacobian(x)
        r_dual = e_t + J.T @ lam
        r_prim = residual_vector(x, t) - s
        gap = float(lam @ s)
        pinf = float(np.max(np.abs(r_prim)))
        dinf = float(np.max(np.abs(r_dual)))
        err = max(gap, pinf, dinf)
        if err < best_err:
            best_err = err
            best = (x.copy(), float(t), lam.copy(), s.copy(), gap, dinf)
        if gap <= tol.gap_tol and pinf <= tol.feas_tol and dinf <= tol.feas_tol:
            status = convex.OPTIMAL
            iters_done = it
            break
        if it == tol.max_iter:
            break
        iters_done = it + 1

        abar = 2.0 * np.tensordot(lam[:L], A, axes=1)  # NSD curvature block
        M = -np.pad(abar, ((0, 1), (0, 1))) + (J.T * (lam / s)) @ J
        mu = gap / m

        try:
            chol = np.linalg.cholesky(M)

            def direction(rc):
                rhs = r_dual + J.T @ ((rc - lam * r_prim) / s)
                dz = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
                ds = J @ dz + r_prim
                dlam = (rc - lam * ds) / s
                return dz, ds, dlam

            # predictor
            dz_a, ds_a, dlam_a = direction(-lam * s)
            ap = min(1.0, _max_step_orthant(s, ds_a))
            ad = min(1.0, _max_step_orthant(lam, dlam_a))
            gap_aff = float((lam + ad * dlam_a) @ (s + ap * ds_a))
            sigma = min(max((max(gap_aff, 0.0) / gap) ** 3, 1e-10), 0.99)

            # corrector
            dz, ds, dlam = direction(sigma * mu - lam * s - dlam_a * ds_a)
            ap = min(1.0, _STEP_DAMPING * _max_step_orthant(s, ds))
            ad = min(1.0, _STEP_DAMPING * _max_step_orthant(lam, dlam))
        except np.linalg.LinAlgError:
            status = convex.NUMERICAL_FAILURE
            break
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < _MIN_STEP:
            status = convex.NUMERICAL_FAILURE
            break

        x = x + ap * dz[:n]
        t = float(t + ap * dz[n])
        s = s + ap * ds
        lam = lam + ad * dlam

    if best is None:  # pragma: no cover - first iterate always recorded
        raise convex.SolverError("qcqp solver produced no iterate")
    x, t, lam, s, gap, dinf = best
    kkt = np.concatenate([_primal_violations(p, x, t), [dinf]])
    if status != convex.OPTIMAL:
        if gap <= tol.gap_tol and float(np.max(kkt)) <= tol.feas_tol:
            status = convex.OPTIMAL
    report = SolveReport(
        status=status,
        objective=t,
        duality_gap=gap,
        iterations=iters_done,
        kkt_residuals=kkt,
    )
    return QcqpSolution(t=t, x=x, report=report)
