# Linear programming: exact rational simplex and a HiGHS bridge for larger float LPs
from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from faircut.errors import SolverFailure

log = getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

Matrix = Sequence[Sequence[Fraction]]


@dataclass
class LPResult:
    status: str
    x: List[Fraction] = field(default_factory=list)
    objective: Optional[Fraction] = None
    # Farkas multipliers when infeasible: u >= 0 on the <= rows, v free on the = rows with
    # u A_ub + v A_eq >= 0 and u b_ub + v b_eq < 0
    farkas_ub: Optional[List[Fraction]] = None
    farkas_eq: Optional[List[Fraction]] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class SimplexTableau:
    """Dense two-phase tableau over Fractions with Bland's rule.

    Solves min c x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0. Every row
    gets an artificial column, so the artificial block of the tableau always
    holds the current basis inverse, which is where the Farkas certificate is
    read from when phase one ends above zero.
    """

    def __init__(self, c: Sequence[Fraction], A_ub: Matrix, b_ub: Sequence[Fraction], A_eq: Matrix, b_eq: Sequence[Fraction]):
        self.n = len(c)
        self.m_ub = len(A_ub)
        self.m = self.m_ub + len(A_eq)
        self.width = self.n + self.m_ub  # structural + slack columns
        self.cost = [Fraction(v) for v in c] + [Fraction(0)] * self.m_ub

        self.sign: List[int] = []
        self.rows: List[List[Fraction]] = []
        for i, (coeffs, rhs) in enumerate(zip(list(A_ub) + list(A_eq), list(b_ub) + list(b_eq))):
            row = [Fraction(v) for v in coeffs] + [Fraction(0)] * self.m_ub
            if i < self.m_ub:
                row[self.n + i] = Fraction(1)
            rhs = Fraction(rhs)
            sign = -1 if rhs < 0 else 1
            row = [sign * v for v in row]
            artificial = [Fraction(0)] * self.m
            artificial[i] = Fraction(1)
            self.rows.append(row + artificial + [sign * rhs])
            self.sign.append(sign)
        self.basis = [self.width + i for i in range(self.m)]
        self.obj: List[Fraction] = []
        self.pivots = 0

    def pivot(self, r: int, c: int) -> None:
        pivot_row = self.rows[r]
        piv = pivot_row[c]
        pivot_row = [v / piv for v in pivot_row]
        self.rows[r] = pivot_row
        for i, row in enumerate(self.rows):
            if i != r and row[c] != 0:
                f = row[c]
                self.rows[i] = [a - f * b for a, b in zip(row, pivot_row)]
        if self.obj[c] != 0:
            f = self.obj[c]
            self.obj = [a - f * b for a, b in zip(self.obj, pivot_row)]
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed: int) -> str:
        while True:
            entering = next((j for j in range(allowed) if self.obj[j] < 0), None)
            if entering is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    key = (row[-1] / row[entering], self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], entering)

    def phase_one(self) -> Fraction:
        total = len(self.rows[0]) if self.rows else self.width + 1
        self.obj = [Fraction(0)] * total
        for row in self.rows:
            for j in range(self.width):
                self.obj[j] -= row[j]
            self.obj[-1] -= row[-1]
        self.run(self.width)
        return -self.obj[-1]

    def farkas(self) -> List[Fraction]:
        # Phase-one duals are 1 - reduced cost of each artificial column
        duals = [1 - self.obj[self.width + i] for i in range(self.m)]
        return [-s * d for s, d in zip(self.sign, duals)]

    def drive_out_artificials(self) -> None:
        for r in range(self.m):
            if self.basis[r] >= self.width:
                col = next((j for j in range(self.width) if self.rows[r][j] != 0), None)
                if col is not None:
                    self.pivot(r, col)

    def phase_two(self) -> str:
        self.obj = self.cost + [Fraction(0)] * self.m + [Fraction(0)]
        for r, b in enumerate(self.basis):
            if b < self.width and self.cost[b] != 0:
                f = self.cost[b]
                self.obj = [a - f * v for a, v in zip(self.obj, self.rows[r])]
        return self.run(self.width)

    def solution(self) -> List[Fraction]:
        x = [Fraction(0)] * self.n
        for r, b in enumerate(self.basis):
            if b < self.n:
                x[b] = self.rows[r][-1]
        return x


def solve_exact(
    c: Sequence[Fraction],
    A_ub: Matrix = (),
    b_ub: Sequence[Fraction] = (),
    A_eq: Matrix = (),
    b_eq: Sequence[Fraction] = (),
) -> LPResult:
    """Solve min c x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0 exactly.

    Optimal solutions are basic, so at most as many variables are positive
    as there are rows.
    """
    if not A_ub and not A_eq:
        if any(Fraction(v) < 0 for v in c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, [Fraction(0)] * len(c), Fraction(0))

    tableau = SimplexTableau(c, A_ub, b_ub, A_eq, b_eq)
    infeasibility = tableau.phase_one()
    if infeasibility > 0:
        certificate = tableau.farkas()
        log.debug(f"Exact LP infeasible after {tableau.pivots} pivots (phase-one value {infeasibility})")
        return LPResult(INFEASIBLE, farkas_ub=certificate[: tableau.m_ub], farkas_eq=certificate[tableau.m_ub :])

    tableau.drive_out_artificials()
    status = tableau.phase_two()
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = tableau.solution()
    objective = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    log.debug(f"Exact LP optimal after {tableau.pivots} pivots, objective {objective}")
    return LPResult(OPTIMAL, x, objective)


def solve_float(
    c: Sequence[float],
    A_ub: Matrix = (),
    b_ub: Sequence[float] = (),
    A_eq: Matrix = (),
    b_eq: Sequence[float] = (),
    bounds=(0, None),
) -> LPResult:
    """HiGHS solve; the primal solution comes back as floats inside ``x``."""
    res = linprog(
        np.asarray(c, dtype=float),
        A_ub=np.asarray(A_ub, dtype=float) if len(A_ub) else None,
        b_ub=np.asarray(b_ub, dtype=float) if len(b_ub) else None,
        A_eq=np.asarray(A_eq, dtype=float) if len(A_eq) else None,
        b_eq=np.asarray(b_eq, dtype=float) if len(b_eq) else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LPResult(INFEASIBLE)
    if res.status == 3:
        return LPResult(UNBOUNDED)
    if not res.success:
        raise SolverFailure(f"HiGHS failed: {res.message}")
    return LPResult(OPTIMAL, list(map(float, res.x)), res.fun)
