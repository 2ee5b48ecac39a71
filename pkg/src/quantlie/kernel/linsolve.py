"""Exact sparse linear solving over Q.

Rows are dicts ``{column: Fraction}``. Columns are plain integers; the pivot
of a row is always its smallest column, so results depend only on the order
in which unknowns were enumerated, never on row order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence


class Inconsistent(Exception):
    """Raised by :func:`solve_or_raise` when a system has no solution."""

    def __init__(self, witness: int, message: str = ""):
        self.witness = witness
        super().__init__(message or f"inconsistent linear system (witness row {witness})")


@dataclass
class LinearProblem:
    """A system ``rows * x = rhs`` over named unknowns.

    ``unknowns`` fixes the column order, which in turn fixes the pivot rule.
    """

    unknowns: List[Hashable] = field(default_factory=list)
    rows: List[Dict[int, Fraction]] = field(default_factory=list)
    rhs: List[Fraction] = field(default_factory=list)

    def __post_init__(self):
        self._index = {u: i for i, u in enumerate(self.unknowns)}

    def column(self, unknown: Hashable) -> int:
        idx = self._index.get(unknown)
        if idx is None:
            idx = len(self.unknowns)
            self.unknowns.append(unknown)
            self._index[unknown] = idx
        return idx

    def add_equation(self, coeffs: Dict[Hashable, Fraction], value=0) -> None:
        row = {}
        for u, c in coeffs.items():
            if c:
                j = self.column(u)
                row[j] = row.get(j, 0) + c
        self.rows.append({j: Fraction(c) for j, c in row.items() if c})
        self.rhs.append(Fraction(value))


@dataclass
class Solution:
    consistent: bool
    values: Dict[Hashable, Fraction]
    rank: int
    witness: Optional[int] = None

    def __getitem__(self, key):
        return self.values.get(key, Fraction(0))


class Echelon:
    """Incrementally maintained row echelon form.

    Each stored row has its pivot at its smallest column with coefficient 1.
    """

    def __init__(self):
        self.pivots: Dict[int, Dict[int, Fraction]] = {}
        self.pivot_rhs: Dict[int, Fraction] = {}

    def reduce(self, row: Dict[int, Fraction], rhs=Fraction(0)):
        row = dict(row)
        rhs = Fraction(rhs)
        while row:
            col = min(row)
            prow = self.pivots.get(col)
            if prow is None:
                return row, rhs, col
            c = row[col]
            for j, v in prow.items():
                nv = row.get(j, 0) - c * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
            rhs -= c * self.pivot_rhs[col]
        return row, rhs, None

    def add(self, row: Dict[int, Fraction], rhs=Fraction(0)) -> Optional[Fraction]:
        """Insert a row. Returns the residual rhs if it reduced to zero, else None."""
        row, rhs, col = self.reduce(row, rhs)
        if col is None:
            return rhs
        c = row[col]
        if c != 1:
            row = {j: v / c for j, v in row.items()}
            rhs = rhs / c
        self.pivots[col] = row
        self.pivot_rhs[col] = rhs
        return None

    def normal_form(self, row: Dict[int, Fraction]) -> Dict[int, Fraction]:
        """Remainder of row after eliminating every pivot column (not just the leading one)."""
        row = {j: v for j, v in row.items() if v}
        heap = list(row)
        heapq.heapify(heap)
        seen = set()
        while heap:
            col = heapq.heappop(heap)
            if col in seen:
                continue
            seen.add(col)
            c = row.get(col)
            prow = self.pivots.get(col)
            if not c or prow is None:
                continue
            for j, v in prow.items():
                nv = row.get(j, 0) - c * v
                if nv:
                    if j not in row:
                        heapq.heappush(heap, j)
                    row[j] = nv
                else:
                    row.pop(j, None)
        return row

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def back_substitute(self) -> Dict[int, Fraction]:
        x: Dict[int, Fraction] = {}
        for col in sorted(self.pivots, reverse=True):
            row = self.pivots[col]
            s = self.pivot_rhs[col]
            for j, v in row.items():
                if j != col:
                    s -= v * x.get(j, 0)
            if s:
                x[col] = s
        return x


def solve(problem: LinearProblem) -> Solution:
    """Solve exactly; free variables are set to zero.

    Never raises on inconsistency: the returned solution carries
    ``consistent=False`` and the index of the first offending row.
    """
    ech = Echelon()
    for i, (row, b) in enumerate(zip(problem.rows, problem.rhs)):
        residual = ech.add(row, b)
        if residual:
            return Solution(False, {}, ech.rank, witness=i)
    x = ech.back_substitute()
    values = {problem.unknowns[j]: v for j, v in x.items()}
    return Solution(True, values, ech.rank)


def solve_or_raise(problem: LinearProblem) -> Solution:
    sol = solve(problem)
    if not sol.consistent:
        raise Inconsistent(sol.witness)
    return sol


def solve_dense(matrix: Sequence[Sequence], rhs: Sequence) -> Solution:
    """Convenience wrapper for small dense systems; unknowns are 0..n-1."""
    ncols = len(matrix[0]) if matrix else 0
    prob = LinearProblem(unknowns=list(range(ncols)))
    for row, b in zip(matrix, rhs):
        prob.add_equation({j: Fraction(v) for j, v in enumerate(row) if v}, b)
    return solve(prob)


def nullspace(rows: Sequence[Dict[int, Fraction]], ncols: int) -> List[Dict[int, Fraction]]:
    """Basis of the kernel, one vector per free column (in column order)."""
    ech = Echelon()
    for r in rows:
        ech.add(r)
    # fully reduce pivots against later pivots
    cols = sorted(ech.pivots)
    reduced = {}
    for col in reversed(cols):
        row = dict(ech.pivots[col])
        for j in [j for j in row if j != col and j in reduced]:
            c = row.pop(j)
            for k, v in reduced[j].items():
                if k == j:
                    continue
                nv = row.get(k, 0) - c * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        reduced[col] = row
    basis = []
    for free in range(ncols):
        if free in ech.pivots:
            continue
        vec = {free: Fraction(1)}
        for col, row in reduced.items():
            v = row.get(free)
            if v:
                vec[col] = -v
        basis.append(vec)
    return basis
