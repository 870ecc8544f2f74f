"""SCA loop for the analog weights at fixed antenna positions.

The max-min problem over the lifted matrix V = w w^H is relaxed to an SDP
with fixed diagonal, and the rank-one constraint is enforced through the
penalty f(V) = Tr(V) - sigma_max(V), linearized at the current iterate
(f is concave, so its tangent plane majorizes it and each subproblem
ascent carries over to the penalized objective).  After convergence the
unit-modulus weights are read off the principal eigenvector, with a
seeded Gaussian-randomization fallback when the top eigenvalue is not
isolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._threads import single_threaded_blas
from .arrays import PositionVector, SampleGrid, WeightVector, steering_vector
from .convex import SolverTolerances
from .linalg import principal_singular_pair
from .sdp import SdpProblem, solve_sdp

__all__ = [
    "PenaltyState",
    "WeightTraceRecord",
    "WeightScaResult",
    "rank_penalty",
    "linearize_penalty",
    "extract_weights",
    "eigenvalue_gap",
    "gain_matrices",
    "sca_weights",
    "random_rank_one_weights",
]

DEGENERATE_GAP = 1e-6
RANK_TOL = 1e-3


def gain_matrices(
    x: PositionVector, grid: SampleGrid, wavelength: float
) -> np.ndarray:
    """Rank-one constraint matrices R_l = a(x, theta_l) a(x, theta_l)^H."""
    a = np.stack([steering_vector(x, th, wavelength) for th in grid.angles])
    return np.einsum("li,lj->lij", a, a.conj())


def rank_penalty(v: np.ndarray) -> float:
    """Tr(V) - sigma_max(V): nonnegative on PSD matrices, zero iff rank one."""
    sigma, _, _ = principal_singular_pair(v)
    return float(np.real(np.trace(v))) - sigma


@dataclass(frozen=True)
class PenaltyState:
    """Local point of the penalty linearization."""

    rho: float
    V_current: np.ndarray = field(repr=False)
    s_current: np.ndarray = field(repr=False)
    sigma_current: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        sigma, u, _ = principal_singular_pair(self.V_current)
        if self.s_current is None:
            object.__setattr__(self, "s_current", u)
        else:
            nrm = np.linalg.norm(self.s_current)
            if abs(nrm - 1.0) > 1e-9:
                raise ValueError("s_current must be unit norm")
        if self.sigma_current is None:
            object.__setattr__(self, "sigma_current", sigma)

    @classmethod
    def at(cls, rho: float, v: np.ndarray) -> "PenaltyState":
        return cls(rho=rho, V_current=np.asarray(v, dtype=complex), s_current=None)


def linearize_penalty(state: PenaltyState):
    """First-order expansion of the penalty at the state's local point.

    Returns f_tilde with f_tilde(V0) = f(V0) and f_tilde >= f on PSD
    matrices (sigma_max is convex, so dropping its supporting plane
    overestimates the penalty).
    """
    v0 = state.V_current
    s = state.s_current
    sigma0 = state.sigma_current
    ss = np.outer(s, s.conj())
    inner0 = float(np.real(np.vdot(ss, v0)))

    def f_tilde(v: np.ndarray) -> float:
        return (
            float(np.real(np.trace(v)))
            - sigma0
            - (float(np.real(np.vdot(ss, v))) - inner0)
        )

    return f_tilde


def extract_weights(v: np.ndarray) -> WeightVector:
    """Unit-modulus weights from the principal component of V.

    Phases are those of sigma_max^(1/2) * u_max; for a rank-one V this
    recovers the original weights up to a global phase.
    """
    sigma, u, _ = principal_singular_pair(v)
    return WeightVector(np.angle(math.sqrt(max(sigma, 0.0)) * u))


def eigenvalue_gap(v: np.ndarray) -> float:
    """Separation sigma_1 - sigma_2 of the two largest singular values."""
    s = np.linalg.svd(np.asarray(v), compute_uv=False)
    return float(s[0] - s[1]) if s.size > 1 else float(s[0])


def random_rank_one_weights(v: np.ndarray, rng: np.random.Generator) -> WeightVector:
    """One Gaussian-randomization candidate drawn from the lifted matrix."""
    n = v.shape[0]
    lam, u = np.linalg.eigh(v)
    lam = np.maximum(lam, 0.0)
    r = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return WeightVector(np.angle(u.conj().T @ (np.sqrt(lam) * r)))


@dataclass(frozen=True)
class WeightTraceRecord:
    iteration: int
    t: float
    penalty: float
    v: float


@dataclass(frozen=True)
class WeightScaResult:
    weights: WeightVector
    V: np.ndarray = field(repr=False)
    trace: tuple
    rank_penalty: float
    iterations: int
    converged: bool
    rank_one: bool
    degenerate_extraction: bool
    monotonicity_stop: bool

    @property
    def objective(self) -> float:
        return self.trace[-1].v


def sca_weights(
    x: PositionVector,
    grid: SampleGrid,
    w_init: WeightVector,
    wavelength: float,
    rho: float = 20.0,
    sca_tol: float = 0.01,
    max_iter: int = 100,
    solver_tol: SolverTolerances = SolverTolerances(),
    rank_tol: float = RANK_TOL,
    penalty_ramp: bool = False,
    rng: np.random.Generator = None,
) -> WeightScaResult:
    """Run the penalized SCA for the weights at fixed positions.

    The per-iteration objective v = t - rho*f(V) (with t the recomputed
    worst-case gain) is non-decreasing; if a solver-tolerance artifact ever
    degrades it the previous iterate is kept and the loop stops with
    ``monotonicity_stop`` set.  With ``penalty_ramp`` the penalty doubles
    every 10 iterations (capped at 1e4) for stubborn non-rank-one cases.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(0)

    with single_threaded_blas():
        n = len(w_init)
        R = gain_matrices(x, grid, wavelength)
        w0 = w_init.weights
        V = np.outer(w0, w0.conj())

        def true_floor(v):
            return float(np.min(np.real(np.einsum("lij,ji->l", R, v))))

        rho_eff = rho
        t_cur = true_floor(V)
        f_cur = rank_penalty(V)
        v_cur = t_cur - rho_eff * f_cur
        trace = [WeightTraceRecord(0, t_cur, f_cur, v_cur)]
        converged = False
        monotonicity_stop = False
        iterations = 0

        for it in range(1, max_iter + 1):
            if penalty_ramp and it > 1 and (it - 1) % 10 == 0:
                rho_eff = min(rho_eff * 2.0, 1e4)
                v_cur = t_cur - rho_eff * f_cur
            state = PenaltyState.at(rho_eff, V)
            ss = np.outer(state.s_current, state.s_current.conj())
            c_mat = -rho_eff * (np.eye(n) - ss) if rho_eff > 0 else None
            problem = SdpProblem(n, R, 1.0 / n, 1.0, c_mat)
            sol = solve_sdp(problem, solver_tol)
            iterations = it
            t_new = true_floor(sol.V)
            f_new = rank_penalty(sol.V)
            v_new = t_new - rho_eff * f_new
            if v_new < v_cur - 1e-9:
                monotonicity_stop = True
                break
            trace.append(WeightTraceRecord(it, t_new, f_new, v_new))
            improvement = v_new - v_cur
            V, t_cur, f_cur, v_cur = sol.V, t_new, f_new, v_new
            if improvement < sca_tol:
                converged = True
                break

        f_final = rank_penalty(V)
        gap = eigenvalue_gap(V)
        degenerate = gap < DEGENERATE_GAP
        weights = extract_weights(V)
        if degenerate:
            best = weights
            best_floor = true_floor(
                np.outer(weights.weights, weights.weights.conj())
            )
            for _ in range(100):
                cand = random_rank_one_weights(V, rng)
                cw = cand.weights
                floor = true_floor(np.outer(cw, cw.conj()))
                if floor > best_floor:
                    best, best_floor = cand, floor
            weights = best

    return WeightScaResult(
        weights=weights,
        V=V,
        trace=tuple(trace),
        rank_penalty=f_final,
        iterations=iterations,
        converged=converged,
        rank_one=f_final <= rank_tol,
        degenerate_extraction=degenerate,
        monotonicity_stop=monotonicity_stop,
    )
