"""Small dense simplex method in exact rational arithmetic.

Solves  max c.x  subject to  A x <= b, x >= 0  with b >= 0, so the slack basis
is feasible from the start.  Bland's rule prevents cycling and makes the
returned vertex deterministic.  Meant as an oracle for small programs.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass
class LPSolution:
    x: list
    objective: Fraction
    status: str  # "optimal" or "unbounded"


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPSolution:
    m, n = len(A), len(c)
    c = [Fraction(v) for v in c]
    b = [Fraction(v) for v in b]
    if any(v < 0 for v in b):
        raise ValueError("right-hand side must be non-negative")
    # tableau rows: [A | I | b]; objective row holds reduced costs -c
    rows = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [Fraction(0)] * m + [b[i]]
        row[n + i] = Fraction(1)
        rows.append(row)
    obj = [-v for v in c] + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    width = n + m

    while True:
        entering = next((j for j in range(width) if obj[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            a = rows[i][entering]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return LPSolution([], Fraction(0), "unbounded")
        r = best[1]
        pivot_row = rows[r]
        p = pivot_row[entering]
        if p != 1:
            pivot_row = [v / p for v in pivot_row]
            rows[r] = pivot_row
        nz = [j for j, v in enumerate(pivot_row) if v != 0]
        for i in range(m):
            if i != r:
                f = rows[i][entering]
                if f != 0:
                    row = rows[i]
                    for j in nz:
                        row[j] -= f * pivot_row[j]
        f = obj[entering]
        for j in nz:
            obj[j] -= f * pivot_row[j]
        basis[r] = entering

    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = rows[i][-1]
    return LPSolution(x, obj[-1], "optimal")
