"""Sparse Gauss-Jordan elimination over the rationals.

Rows are dicts ``{column: value}``; the reduced pivot rows are kept with a
unit pivot and zeros in every other pivot column, so each incoming row is
reduced in a single pass.
"""
from fractions import Fraction

import numpy as np


class Elimination:
    """Incremental exact row reduction of an augmented system ``A x = b``."""

    def __init__(self):
        self.pivots = {}  # pivot column -> [row dict, rhs]
        self.inconsistent = False

    @property
    def rank(self):
        return len(self.pivots)

    def add_row(self, row, rhs=Fraction(0)):
        row = {c: Fraction(v) for c, v in row.items() if v != 0}
        rhs = Fraction(rhs)
        for c in [c for c in row if c in self.pivots]:
            coef = row.get(c, 0)
            if coef == 0:
                continue
            prow, prhs = self.pivots[c]
            for pc, pv in prow.items():
                nv = row.get(pc, 0) - coef * pv
                if nv == 0:
                    row.pop(pc, None)
                else:
                    row[pc] = nv
            rhs -= coef * prhs
        if not row:
            if rhs != 0:
                self.inconsistent = True
            return False
        p = min(row)
        inv = 1 / row[p]
        row = {c: v * inv for c, v in row.items()}
        rhs *= inv
        for entry in self.pivots.values():
            prow = entry[0]
            coef = prow.get(p, 0)
            if coef == 0:
                continue
            for c, v in row.items():
                nv = prow.get(c, 0) - coef * v
                if nv == 0:
                    prow.pop(c, None)
                else:
                    prow[c] = nv
            entry[1] -= coef * rhs
        self.pivots[p] = [row, rhs]
        return True

    def solution(self, ncols):
        """One solution with every free variable set to zero, or None."""
        if self.inconsistent:
            return None
        x = [Fraction(0)] * ncols
        for p, (_, rhs) in self.pivots.items():
            x[p] = rhs
        return x


def solve_exact(rows, rhs, ncols):
    """Solve a sparse rational system; returns ``(x, rank)`` with ``x=None`` if inconsistent."""
    elim = Elimination()
    for row, b in zip(rows, rhs):
        elim.add_row(row, b)
    return elim.solution(ncols), elim.rank


def solve_float(matrix, rhs, tol):
    """Least-squares solve; returns None when the residual exceeds ``tol``."""
    x, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
    if np.max(np.abs(matrix @ x - rhs), initial=0.0) > tol:
        return None
    return x
