#!/usr/bin/env python3
"""
Dense linear programming

Two-phase tableau simplex with Bland's rule for

    maximize    c @ x
    subject to  A_ub @ x <= b_ub,  lo <= x <= hi

Bounds may be infinite. Infeasible and unbounded problems are reported
through the solution status. The pivot helpers follow the layout of the
scipy tableau implementation: constraint rows on top, then the phase-2
objective row and, during phase 1, the phase-1 objective row.
"""

import itertools
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import nnls

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

FEAS_TOL = 1e-9


@dataclass
class LinearProgram:
    """maximize c @ x s.t. A_ub @ x <= b_ub and lo <= x <= hi"""

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if n < 1:
            raise ValueError("A linear program needs at least one variable")
        if self.A_ub is None:
            self.A_ub = np.zeros((0, n))
            self.b_ub = np.zeros(0)
        self.A_ub = np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).ravel()
        if self.b_ub.size != self.A_ub.shape[0]:
            raise ValueError("A_ub and b_ub disagree on the number of rows")
        self.lo = np.broadcast_to(
            np.asarray(-np.inf if self.lo is None else self.lo, dtype=float), (n,)
        ).copy()
        self.hi = np.broadcast_to(
            np.asarray(np.inf if self.hi is None else self.hi, dtype=float), (n,)
        ).copy()
        if not (np.all(np.isfinite(self.A_ub)) and np.all(np.isfinite(self.b_ub))):
            raise ValueError("Constraint rows must be finite")

    @property
    def num_vars(self) -> int:
        return self.c.size

    def inequality_system(self) -> Tuple[np.ndarray, np.ndarray]:
        """All constraints, finite bounds included, as G @ x <= h"""
        n = self.num_vars
        eye = np.eye(n)
        upper = np.isfinite(self.hi)
        lower = np.isfinite(self.lo)
        G = np.vstack([self.A_ub, eye[upper], -eye[lower]])
        h = np.concatenate([self.b_ub, self.hi[upper], -self.lo[lower]])
        return G, h

    def is_feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        G, h = self.inequality_system()
        return bool(np.all(G @ x <= h + tol))


@dataclass
class LpSolution:
    """Outcome of solve_lp"""

    status: str
    x: Optional[np.ndarray] = None
    value: float = float("nan")
    pivots: int = 0
    dual: Optional[np.ndarray] = field(default=None, repr=False)
    kkt_residual: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _pivot_col(T: np.ndarray, tol: float) -> Optional[int]:
    """Bland's rule: first column with a negative reduced cost"""
    candidates = np.flatnonzero(T[-1, :-1] < -tol)
    if candidates.size == 0:
        return None
    return int(candidates[0])


def _pivot_row(
    T: np.ndarray, basis: np.ndarray, pivcol: int, phase: int, tol: float
) -> Optional[int]:
    """Minimum ratio test; ties go to the lowest basic variable index"""
    k = 2 if phase == 1 else 1
    column = T[:-k, pivcol]
    rows = np.flatnonzero(column > tol)
    if rows.size == 0:
        return None
    ratios = T[rows, -1] / column[rows]
    best = ratios.min()
    ties = rows[ratios <= best + tol * max(1.0, abs(best))]
    return int(ties[np.argmin(basis[ties])])


def _apply_pivot(T: np.ndarray, basis: np.ndarray, pivrow: int, pivcol: int):
    basis[pivrow] = pivcol
    pivot = T[pivrow] / T[pivrow, pivcol]
    T -= np.outer(T[:, pivcol], pivot)
    T[pivrow] = pivot


def _solve_simplex(
    T: np.ndarray, basis: np.ndarray, phase: int, max_pivots: int, tol: float
) -> Tuple[str, int]:
    pivots = 0
    while pivots < max_pivots:
        pivcol = _pivot_col(T, tol)
        if pivcol is None:
            return OPTIMAL, pivots
        pivrow = _pivot_row(T, basis, pivcol, phase, tol)
        if pivrow is None:
            return UNBOUNDED, pivots
        _apply_pivot(T, basis, pivrow, pivcol)
        pivots += 1
    return ITERATION_LIMIT, pivots


def _standard_form(lp: LinearProgram):
    """
    Substitute x = x0 + S @ z with z >= 0

    Finite lower bounds shift, upper-only bounds reflect, free variables
    split into two non-negative parts. Finite ranges add rows z <= hi - lo.
    """
    n = lp.num_vars
    x0 = np.zeros(n)
    columns = []
    upper_rows = []
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        unit = np.zeros(n)
        unit[j] = 1.0
        if np.isfinite(lo):
            x0[j] = lo
            columns.append(unit)
            if np.isfinite(hi):
                upper_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            x0[j] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    S = np.column_stack(columns)
    A = lp.A_ub @ S
    b = lp.b_ub - lp.A_ub @ x0
    if upper_rows:
        bound_rows = np.zeros((len(upper_rows), S.shape[1]))
        for r, (col, width) in enumerate(upper_rows):
            bound_rows[r, col] = 1.0
        A = np.vstack([A, bound_rows])
        b = np.concatenate([b, [width for _, width in upper_rows]])
    return x0, S, A, b, lp.c @ S


def dual_certificate(lp: LinearProgram, x: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Non-negative multipliers on the active constraints with G_active.T @ y ~ c

    Returns:
        (y over all rows of lp.inequality_system(), residual ||G.T y - c||)
    """
    G, h = lp.inequality_system()
    y = np.zeros(G.shape[0])
    if G.shape[0] == 0:
        return y, float(np.linalg.norm(lp.c))
    slack = h - G @ x
    active = np.flatnonzero(np.abs(slack) <= 1e-9 * (1.0 + np.abs(h)))
    if active.size == 0:
        return y, float(np.linalg.norm(lp.c))
    y_active, residual = nnls(G[active].T, lp.c)
    y[active] = y_active
    return y, float(residual)


def solve_lp(
    lp: LinearProgram, max_pivots: int = 10000, tol: float = 1e-12
) -> LpSolution:
    """
    Solve a linear program with the two-phase simplex method

    Args:
        lp: Problem to solve
        max_pivots: Pivot budget over both phases
        tol: Pivoting tolerance

    Returns:
        LpSolution; on optimal status it carries a dual certificate and its
        KKT residual
    """
    if np.any(lp.lo > lp.hi):
        return LpSolution(INFEASIBLE)

    x0, S, A, b, c_std = _standard_form(lp)
    m, n_std = A.shape

    art_rows = np.flatnonzero(b < 0)
    n_art = art_rows.size
    width = n_std + m + n_art + 1
    T = np.zeros((m + 2, width))
    T[:m, :n_std] = A
    T[:m, n_std : n_std + m] = np.eye(m)
    T[:m, -1] = b
    T[art_rows, : n_std + m] *= -1.0
    T[art_rows, -1] *= -1.0

    basis = np.arange(n_std, n_std + m)
    for a, row in enumerate(art_rows):
        col = n_std + m + a
        T[row, col] = 1.0
        basis[row] = col

    # Phase-2 objective row minimises -c; phase-1 row minimises the artificials
    T[m, :n_std] = -c_std
    if n_art:
        T[m + 1] = -T[art_rows].sum(axis=0)
        T[m + 1, n_std + m : n_std + m + n_art] = 0.0

    status, pivots = _solve_simplex(T, basis, phase=1, max_pivots=max_pivots, tol=tol)
    if status == ITERATION_LIMIT:
        return LpSolution(ITERATION_LIMIT, pivots=pivots)
    if n_art and T[-1, -1] < -FEAS_TOL * max(1.0, np.abs(b).max()):
        return LpSolution(INFEASIBLE, pivots=pivots)

    # Drive artificials still in the basis out, dropping redundant rows
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] >= n_std + m:
            candidates = np.flatnonzero(np.abs(T[row, : n_std + m]) > 1e-9)
            if candidates.size:
                _apply_pivot(T, basis, row, int(candidates[0]))
                pivots += 1
            else:
                keep[row] = False
    T = np.vstack([T[:m][keep], T[m]])
    T = np.delete(T, np.s_[n_std + m : n_std + m + n_art], axis=1)
    basis = basis[keep]

    status, extra = _solve_simplex(
        T, basis, phase=2, max_pivots=max_pivots - pivots, tol=tol
    )
    pivots += extra
    if status != OPTIMAL:
        return LpSolution(status, pivots=pivots)

    z = np.zeros(n_std)
    for row, var in enumerate(basis):
        if var < n_std:
            z[var] = T[row, -1]
    x = x0 + S @ z
    dual, residual = dual_certificate(lp, x)
    return LpSolution(OPTIMAL, x, float(lp.c @ x), pivots, dual, residual)


def vertex_enumeration(lp: LinearProgram, tol: float = FEAS_TOL) -> LpSolution:
    """
    Brute-force optimum over all basic feasible points

    Only meaningful for bounded feasible regions (finite box bounds); used
    as a reference solver on small problems.
    """
    G, h = lp.inequality_system()
    n = lp.num_vars
    best_x, best_value = None, -np.inf
    for rows in itertools.combinations(range(G.shape[0]), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ x <= h + tol):
            value = float(lp.c @ x)
            if value > best_value:
                best_x, best_value = x, value
    if best_x is None:
        return LpSolution(INFEASIBLE)
    return LpSolution(OPTIMAL, best_x, best_value)
