"""Shared plumbing for the embedded convex solvers: tolerances, solve
reports, and the plain-text problem dump used for offline cross-checking.

Dump format (one file per problem, whitespace separated, 17 significant
digits):

    <tag> 1                 header: problem tag ("sdp" or "qcqp"), version
    key <value>             scalar fields, one per line
    <name> <index?>         matrix block header, followed by one line per
                            row; complex matrices store re im pairs

Blocks appear in a fixed order per problem type; see ``SdpProblem.dump``
and ``QcqpProblem.dump`` for the exact sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SolverTolerances", "SolveReport", "SolverError", "InfeasibleGeometry"]

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"


class SolverError(RuntimeError):
    """A solver could not produce a usable iterate (numerical breakdown)."""


class InfeasibleGeometry(ValueError):
    """Box/ordering constraints admit no feasible point."""


@dataclass(frozen=True)
class SolverTolerances:
    """Absolute termination tolerances; defaults sized for desk-scale problems."""

    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solver invocation.

    ``kkt_residuals`` stacks per-constraint primal violations first, then
    the solver's dual-side residuals (documented by each solver); with
    status ``optimal`` every entry is at most ``feas_tol`` and
    ``duality_gap`` is at most ``gap_tol``.
    """

    status: str
    objective: float
    duality_gap: float
    iterations: int
    kkt_residuals: np.ndarray = field(repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_scalar(fh, key: str, value) -> None:
    fh.write(f"{key} {_fmt(value)}\n")


def write_matrix(fh, name: str, m: np.ndarray) -> None:
    m = np.atleast_2d(m)
    fh.write(f"{name}\n")
    complex_data = np.iscomplexobj(m)
    for row in m:
        if complex_data:
            parts = []
            for v in row:
                parts.append(_fmt(v.real))
                parts.append(_fmt(v.imag))
            fh.write(" ".join(parts) + "\n")
        else:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def read_matrix(lines, rows: int, cols: int, complex_data: bool) -> np.ndarray:
    out = np.empty((rows, cols), dtype=complex if complex_data else float)
    for i in range(rows):
        vals = [float(v) for v in next(lines).split()]
        if complex_data:
            re = vals[0::2]
            im = vals[1::2]
            out[i] = np.array(re) + 1j * np.array(im)
        else:
            out[i] = vals
    return out
