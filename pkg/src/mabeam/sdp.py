"""Primal-dual interior-point solver for the lifted beamformer problems.

Problem shape (maximization):

    max  c_t * t + <C, V>
    s.t. Tr(R_l V) >= t        l = 1..L     (gain constraints)
         V[n, n]   =  d        n = 1..N     (fixed per-element power)
         V Hermitian PSD

The solver is an infeasible-start path-following method with a
Mehrotra-style predictor-corrector, run natively over the Hermitian cone
(no real embedding).  Complementarity is linearized in the classic
HKM/KSH way: solve Z dV + dZ V = Rc for dV, eliminate through the Newton
system, and symmetrize dV afterwards.  The Schur complement in the dual
variables (dy, dnu, dt) has size L + N + 1 and is factored once per
iteration (shared by predictor and corrector).

Iterates stay strictly inside both cones via fraction-to-boundary steps,
so every reported V is positive definite up to the final duality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from . import convex
from ._threads import serial_blas
from .convex import SolveReport, SolverTolerances
from .linalg import assert_hermitian

__all__ = ["SdpProblem", "SdpSolution", "solve_sdp"]

_STEP_DAMPING = 0.99
_MIN_STEP = 1e-10


@dataclass(frozen=True)
class SdpProblem:
    """Data of one lifted-weight SDP; see the module docstring for the shape.

    ``gain_constraints`` is an (L, N, N) stack of Hermitian matrices R_l;
    asymmetry beyond 1e-12 is rejected.  ``c_t`` must be positive, otherwise
    t is unbounded below and the problem is a caller bug.
    """

    dim: int
    gain_constraints: np.ndarray
    diag_value: float
    c_t: float = 1.0
    C: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        n = int(self.dim)
        if n < 1:
            raise ValueError("dim must be >= 1")
        r = np.ascontiguousarray(np.asarray(self.gain_constraints, dtype=complex))
        if r.ndim == 2:
            r = r[None]
        if r.ndim != 3 or r.shape[1:] != (n, n):
            raise ValueError(f"gain_constraints must be (L, {n}, {n})")
        if r.shape[0] < 1:
            raise ValueError("at least one gain constraint is required")
        for l in range(r.shape[0]):
            assert_hermitian(r[l], 1e-12, f"R[{l}]")
        if not self.diag_value > 0:
            raise ValueError("diag_value must be positive")
        if not self.c_t > 0:
            raise ValueError("c_t must be positive (t is otherwise unbounded)")
        c = self.C
        if c is None:
            c = np.zeros((n, n), dtype=complex)
        else:
            c = np.asarray(c, dtype=complex)
            assert_hermitian(c, 1e-12, "C")
        r.flags.writeable = False
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "gain_constraints", r)
        object.__setattr__(self, "C", c)

    @property
    def n_constraints(self) -> int:
        return self.gain_constraints.shape[0]

    def dump(self, path) -> None:
        """Write the problem in the documented plain-text format."""
        with open(path, "w") as fh:
            fh.write("sdp 1\n")
            fh.write(f"dim {self.dim}\n")
            fh.write(f"constraints {self.n_constraints}\n")
            convex.write_scalar(fh, "c_t", self.c_t)
            convex.write_scalar(fh, "diag_value", self.diag_value)
            convex.write_matrix(fh, "C", self.C)
            for l in range(self.n_constraints):
                convex.write_matrix(fh, f"R {l}", self.gain_constraints[l])

    @classmethod
    def load(cls, path) -> "SdpProblem":
        with open(path) as fh:
            lines = iter(fh.read().splitlines())
        tag = next(lines).split()
        if tag[0] != "sdp":
            raise ValueError(f"not an sdp dump: {tag}")
        n = int(next(lines).split()[1])
        nc = int(next(lines).split()[1])
        c_t = float(next(lines).split()[1])
        diag_value = float(next(lines).split()[1])
        assert next(lines).startswith("C")
        c = convex.read_matrix(lines, n, n, complex_data=True)
        rs = []
        for _ in range(nc):
            assert next(lines).startswith("R ")
            rs.append(convex.read_matrix(lines, n, n, complex_data=True))
        return cls(n, np.stack(rs), diag_value, c_t, c)


@dataclass(frozen=True)
class SdpSolution:
    t: float
    V: np.ndarray = field(repr=False)
    report: SolveReport


def _max_step_cone(x_chol: np.ndarray, dx: np.ndarray) -> float:
    """Largest step a with X + a*dX staying PSD, given chol(X)."""
    y = solve_triangular(x_chol, dx, lower=True)
    w = solve_triangular(x_chol, y.conj().T, lower=True).conj().T
    lam = np.linalg.eigvalsh((w + w.conj().T) / 2.0)
    lo = lam[0]
    return math.inf if lo >= 0 else -1.0 / lo


def _max_step_orthant(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


def _kkt_residuals(p: SdpProblem, t, V, y, nu, Z) -> np.ndarray:
    trv = np.real(np.einsum("lij,ji->l", p.gain_constraints, V))
    gain_viol = np.maximum(0.0, t - trv)
    diag_viol = np.abs(np.real(np.diagonal(V)) - p.diag_value)
    psd_viol = max(0.0, -float(np.linalg.eigvalsh((V + V.conj().T) / 2)[0]))
    dual_psd = max(0.0, -float(np.linalg.eigvalsh((Z + Z.conj().T) / 2)[0]))
    dual_eq = abs(float(np.sum(y)) - p.c_t)
    rd2 = np.diag(nu) - np.tensordot(y, p.gain_constraints, axes=1) - Z - p.C
    dual_mat = float(np.max(np.abs(rd2)))
    return np.concatenate(
        [gain_viol, diag_viol, [psd_viol, dual_psd, dual_eq, dual_mat]]
    )


@serial_blas
def solve_sdp(p: SdpProblem, tol: SolverTolerances = SolverTolerances()) -> SdpSolution:
    """Solve the SDP to the absolute tolerances in ``tol``.

    Returns the optimal (t, V) with a report; the report's kkt_residuals
    stack [gain violations (L), diagonal deviations (N), primal PSD
    violation, dual PSD violation, dual scalar-equality residual, dual
    matrix-equality residual].
    """
    n, L = p.dim, p.n_constraints
    R = p.gain_constraints
    Rf = R.reshape(L, n * n)
    C, d, ct = p.C, p.diag_value, p.c_t
    eye = np.eye(n, dtype=complex)

    # cold start: V strictly interior with exact diagonal, Z shifted PD
    V = d * eye.copy()
    trv = np.real(np.einsum("lij,ji->l", R, V))
    t = float(trv.min()) - 1.0
    s = trv - t
    y = np.full(L, ct / L)
    m0 = C + np.tensordot(y, R, axes=1)
    shift = float(np.linalg.eigvalsh((m0 + m0.conj().T) / 2)[-1]) + 1.0
    nu = np.full(n, shift)
    Z = shift * eye - m0
    Z = (Z + Z.conj().T) / 2

    best = None
    best_err = math.inf
    status = convex.MAX_ITER
    iters_done = 0

    for it in range(tol.max_iter + 1):
        trv = np.real(np.einsum("lij,ji->l", R, V))
        rp1 = trv - t - s
        rp2 = np.real(np.diagonal(V)) - d
        rd1 = float(np.sum(y)) - ct
        Rd2 = np.diag(nu) - np.tensordot(y, R, axes=1) - Z - C
        gap = float(np.real(np.vdot(Z, V))) + float(y @ s)
        pinf = max(float(np.max(np.abs(rp1))), float(np.max(np.abs(rp2))))
        dinf = max(abs(rd1), float(np.max(np.abs(Rd2))))
        err = max(gap, pinf, dinf)
        if err < best_err:
            best_err = err
            best = (t, V.copy(), y.copy(), nu.copy(), Z.copy(), gap, it)
        if gap <= tol.gap_tol and pinf <= tol.feas_tol and dinf <= tol.feas_tol:
            status = convex.OPTIMAL
            iters_done = it
            break
        if it == tol.max_iter:
            break
        iters_done = it + 1

        try:
            chol_v = np.linalg.cholesky(V)
            chol_z = np.linalg.cholesky(Z)
            linv = solve_triangular(chol_z, eye, lower=True)
            zinv = linv.conj().T @ linv
            zinv = (zinv + zinv.conj().T) / 2

            # Schur complement blocks (shared by predictor and corrector)
            K = zinv @ R @ V  # (L, n, n): Z^{-1} R_l V
            Myy = np.real(Rf @ K.transpose(0, 2, 1).reshape(L, n * n).T)
            Myy[np.diag_indices_from(Myy)] += s / y
            VRZ = np.matmul(V, R) @ zinv  # (L, n, n): V R_l Z^{-1}
            Mynu = -np.real(np.einsum("lpp->lp", VRZ))
            Mnuy = np.real(np.einsum("mnn->nm", K))
            Mnunu = -np.real(zinv * V.T)
            M = np.zeros((L + n + 1, L + n + 1))
            M[:L, :L] = Myy
            M[:L, L : L + n] = Mynu
            M[:L, -1] = -1.0
            M[L : L + n, :L] = Mnuy
            M[L : L + n, L : L + n] = Mnunu
            M[-1, :L] = 1.0
            lu = lu_factor(M)

            mu = gap / (L + n)
            ZV = Z @ V

            def direction(rc_vec, Rc_mat):
                g0 = zinv @ (Rc_mat - Rd2 @ V)
                rhs = np.empty(L + n + 1)
                rhs[:L] = -rp1 - np.real(Rf @ np.ravel(g0.T)) + rc_vec / y
                rhs[L : L + n] = -rp2 - np.real(np.diagonal(g0))
                rhs[-1] = -rd1
                sol = lu_solve(lu, rhs)
                # one round of iterative refinement keeps the Schur solve
                # usable once mu is tiny
                sol += lu_solve(lu, rhs - M @ sol)
                dy = sol[:L]
                dnu = sol[L : L + n]
                dt = float(sol[-1])
                dZ = np.diag(dnu) - np.tensordot(dy, R, axes=1) + Rd2
                dV = g0 + zinv @ ((np.tensordot(dy, R, axes=1) - np.diag(dnu)) @ V)
                dV = (dV + dV.conj().T) / 2
                ds = (rc_vec - s * dy) / y
                return dt, dV, ds, dy, dnu, dZ

            # predictor (affine scaling)
            dta, dVa, dsa, dya, dnua, dZa = direction(-y * s, -ZV)
            ap = min(1.0, _max_step_cone(chol_v, dVa), _max_step_orthant(s, dsa))
            ad = min(1.0, _max_step_cone(chol_z, dZa), _max_step_orthant(y, dya))
            gap_aff = float(
                np.real(np.vdot(Z + ad * dZa, V + ap * dVa))
            ) + float((y + ad * dya) @ (s + ap * dsa))
            sigma = min(max((max(gap_aff, 0.0) / gap) ** 3, 1e-10), 0.99)

            # corrector
            rc = sigma * mu - y * s - dya * dsa
            Rc = sigma * mu * eye - ZV - dZa @ dVa
            dt, dV, ds, dy, dnu, dZ = direction(rc, Rc)
            ap = _STEP_DAMPING * min(
                _max_step_cone(chol_v, dV), _max_step_orthant(s, ds)
            )
            ad = _STEP_DAMPING * min(
                _max_step_cone(chol_z, dZ), _max_step_orthant(y, dy)
            )
            ap = min(1.0, ap)
            ad = min(1.0, ad)
        except np.linalg.LinAlgError:
            status = convex.NUMERICAL_FAILURE
            break
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < _MIN_STEP:
            status = convex.NUMERICAL_FAILURE
            break

        t += ap * dt
        V = V + ap * dV
        V = (V + V.conj().T) / 2
        s = s + ap * ds
        y = y + ad * dy
        nu = nu + ad * dnu
        Z = Z + ad * dZ
        Z = (Z + Z.conj().T) / 2

    if best is None:  # pragma: no cover - first iterate always recorded
        raise convex.SolverError("sdp solver produced no iterate")
    t, V, y, nu, Z, gap, _ = best
    if status != convex.OPTIMAL:
        # the best iterate may have crossed the tolerances even if the
        # last step failed
        kkt = _kkt_residuals(p, t, V, y, nu, Z)
        if gap <= tol.gap_tol and float(np.max(kkt)) <= tol.feas_tol:
            status = convex.OPTIMAL
    kkt = _kkt_residuals(p, t, V, y, nu, Z)
    objective = ct * t + float(np.real(np.vdot(C, V)))
    report = SolveReport(
        status=status,
        objective=objective,
        duality_gap=gap,
        iterations=iters_done,
        kkt_residuals=kkt,
    )
    return SdpSolution(t=float(t), V=V, report=report)
