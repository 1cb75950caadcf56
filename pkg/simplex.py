"""
Dense two-phase tableau simplex for small linear programs:

    minimize c^T x  subject to  A_ub x <= b_ub,  x >= 0

Rows with a negative right-hand side are negated and receive an artificial
variable; phase one drives the artificials out, phase two optimizes c.
Bland's rule picks both the entering and the leaving variable, so the method
cannot cycle on degenerate vertices.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from errors import (DimensionMismatchError, InfeasibleProblemError, IterationLimitError,
                    UnboundedProblemError)

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 50000


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    iterations: int
    phase_one_iterations: int


class _Tableau:
    """
    Constraint rows on top, reduced-cost row last; the last column holds the
    right-hand side (and minus the objective value in the cost row).
    """

    def __init__(self, table: np.ndarray, basis: List[int]):
        self.table = table
        self.basis = basis

    @property
    def rows(self) -> int:
        return self.table.shape[0] - 1

    def pivot(self, row: int, col: int):
        T = self.table
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def set_costs(self, costs: np.ndarray):
        """Install a cost vector as reduced costs relative to the current basis."""
        T = self.table
        basic_costs = costs[self.basis]
        T[-1, :-1] = costs - basic_costs @ T[:-1, :-1]
        T[-1, -1] = -basic_costs @ T[:-1, -1]

    def entering(self, allowed: int, tol: float) -> int:
        candidates = np.flatnonzero(self.table[-1, :allowed] < -tol)
        return int(candidates[0]) if candidates.size else -1

    def leaving(self, col: int, tol: float) -> int:
        column = self.table[:-1, col]
        rhs = self.table[:-1, -1]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return -1
        ratios = rhs[rows] / column[rows]
        best = np.min(ratios)
        tied = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows, the smallest basic variable leaves
        return int(min(tied, key=lambda r: self.basis[r]))

    def run(self, allowed: int, max_iterations: int, tol: float) -> int:
        """Pivot until optimal; returns the number of pivots made."""
        for step in range(max_iterations + 1):
            col = self.entering(allowed, tol)
            if col < 0:
                return step
            if step == max_iterations:
                break
            row = self.leaving(col, tol)
            if row < 0:
                raise UnboundedProblemError(f"column {col} has no positive entry in the tableau")
            self.pivot(row, col)
        raise IterationLimitError(f"simplex exceeded {max_iterations} pivots")


def solve_lp(c, A_ub, b_ub, max_iterations: int = DEFAULT_MAX_ITERATIONS,
             tol: float = PIVOT_TOLERANCE) -> LpSolution:
    """
    Solve min c^T x s.t. A_ub x <= b_ub, x >= 0.

    Args:
        c: objective coefficients (length n)
        A_ub: m x n constraint matrix
        b_ub: right-hand sides (length m, any sign)
        max_iterations: pivot cap shared by both phases
        tol: pivot and optimality tolerance

    Returns:
        An optimal vertex with its objective value

    Raises:
        InfeasibleProblemError, UnboundedProblemError, IterationLimitError
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.array(A_ub, dtype=np.float64)
    b = np.array(b_ub, dtype=np.float64)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise DimensionMismatchError(f"LP shapes: c {c.shape}, A {A.shape}, b {b.shape}")

    negative = np.flatnonzero(b < 0)
    n_art = negative.size
    width = n + m + n_art
    table = np.zeros((m + 1, width + 1))
    table[:m, :n] = A
    table[:m, n:n + m] = np.eye(m)
    table[:m, -1] = b
    table[negative] *= -1.0
    basis = list(range(n, n + m))
    for k, row in enumerate(negative):
        table[row, n + m + k] = 1.0
        basis[row] = n + m + k
    tableau = _Tableau(table, basis)

    phase_one = 0
    if n_art:
        costs = np.zeros(width)
        costs[n + m:] = 1.0
        tableau.set_costs(costs)
        phase_one = tableau.run(width, max_iterations, tol)
        infeasibility = -tableau.table[-1, -1]
        if infeasibility > 1e-7 * max(1.0, float(np.max(np.abs(b)))):
            raise InfeasibleProblemError(f"no feasible point (phase-one residual {infeasibility:.3g})")
        _drive_out_artificials(tableau, n + m, tol)
        tableau.table = np.delete(tableau.table, np.s_[n + m:width], axis=1)

    costs = np.zeros(n + m)
    costs[:n] = c
    tableau.set_costs(costs)
    phase_two = tableau.run(n + m, max_iterations - phase_one, tol)

    x = np.zeros(n)
    for row, var in enumerate(tableau.basis):
        if var < n:
            x[var] = max(tableau.table[row, -1], 0.0)
    total = phase_one + phase_two
    logger.debug("[DANTZIG] simplex finished: %d pivots (%d in phase one)", total, phase_one)
    return LpSolution(x=x, objective=float(c @ x), iterations=total, phase_one_iterations=phase_one)


def _drive_out_artificials(tableau: _Tableau, first_artificial: int, tol: float):
    """Pivot basic artificials (at level zero) out; drop rows that are redundant."""
    row = 0
    while row < tableau.rows:
        if tableau.basis[row] >= first_artificial:
            candidates = np.flatnonzero(np.abs(tableau.table[row, :first_artificial]) > tol)
            if candidates.size:
                tableau.pivot(row, int(candidates[0]))
            else:
                tableau.table = np.delete(tableau.table, row, axis=0)
                del tableau.basis[row]
                continue
        row += 1
