"""Finite-dimensional Lie algebras given by structure constants over Q."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .linsolve import solve_dense
from .series import Vec, vaccumulate

Bracket = Dict[Tuple[int, int], Dict[int, Fraction]]


class LieAlgebraError(ValueError):
    pass


class LieAlgebra:
    """Lie algebra with ordered basis ``labels`` and ``[x_i, x_j] = sum_k c_ij^k x_k``.

    Only nonzero brackets need be given; the antisymmetric partner is filled
    in. Giving both (i, j) and (j, i) inconsistently raises.
    """

    def __init__(self, labels: Sequence[str], brackets: Optional[Bracket] = None):
        self.labels: Tuple[str, ...] = tuple(labels)
        self.dim = len(self.labels)
        if len(set(self.labels)) != self.dim:
            raise LieAlgebraError("duplicate basis labels")
        table: Bracket = {}
        for (i, j), vec in (brackets or {}).items():
            self._check_index(i)
            self._check_index(j)
            vec = {k: Fraction(v) for k, v in vec.items() if v}
            for k in vec:
                self._check_index(k)
            if (i, j) in table and table[(i, j)] != vec:
                raise LieAlgebraError(f"conflicting brackets given for ({i},{j})")
            table[(i, j)] = vec
        self._table = table
        self._symmetric_violation = None
        for (i, j), vec in list(table.items()):
            neg = {k: -v for k, v in vec.items()}
            if (j, i) in table:
                if table[(j, i)] != neg:
                    self._symmetric_violation = (i, j)
            else:
                table[(j, i)] = neg
        self._table = {k: v for k, v in table.items() if v}

    def _check_index(self, i: int) -> None:
        if not (isinstance(i, int) and 0 <= i < self.dim):
            raise LieAlgebraError(f"basis index {i!r} out of range for dim {self.dim}")

    def __repr__(self):
        return f"LieAlgebra({list(self.labels)})"

    def __eq__(self, other):
        return (
            isinstance(other, LieAlgebra)
            and self.labels == other.labels
            and self._table == other._table
        )

    def __hash__(self):
        return hash((self.labels, tuple(sorted((k, tuple(sorted(v.items()))) for k, v in self._table.items()))))

    def bracket(self, i: int, j: int) -> Dict[int, Fraction]:
        return self._table.get((i, j), {})

    def structure_constants(self) -> Bracket:
        return {k: dict(v) for k, v in self._table.items() if k[0] < k[1]}

    def bracket_vec(self, u: Vec, v: Vec) -> Vec:
        out: Vec = {}
        for i, a in u.items():
            for j, b in v.items():
                br = self._table.get((i, j))
                if br:
                    vaccumulate(out, br, a * b)
        return out

    def is_abelian(self) -> bool:
        return not self._table

    def antisymmetry_witness(self):
        return self._symmetric_violation

    def jacobi_witness(self) -> Optional[Tuple[int, int, int]]:
        """First basis triple violating the Jacobi identity, or None."""
        for i, j, k in combinations(range(self.dim), 3):
            total: Vec = {}
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                inner = self.bracket(b, c)
                vaccumulate(total, self.bracket_vec({a: Fraction(1)}, inner))
            if total:
                return (i, j, k)
        return None

    def rebase(self, rows: Sequence[Sequence], labels: Optional[Sequence[str]] = None) -> "LieAlgebra":
        """Same Lie algebra in the basis ``y_a = sum_i rows[a][i] x_i``."""
        n = self.dim
        mat = [[Fraction(v) for v in row] for row in rows]
        if len(mat) != n or any(len(r) != n for r in mat):
            raise LieAlgebraError("rebase needs a square matrix")
        inv = matrix_inverse(mat)
        ys = [{i: v for i, v in enumerate(row) if v} for row in mat]
        brackets: Bracket = {}
        for a in range(n):
            for b in range(a + 1, n):
                xb = self.bracket_vec(ys[a], ys[b])
                yb = to_basis(xb, inv)
                if yb:
                    brackets[(a, b)] = yb
        labels = labels or [f"y{a}" for a in range(n)]
        return LieAlgebra(labels, brackets)


def matrix_inverse(mat: List[List[Fraction]]) -> List[List[Fraction]]:
    n = len(mat)
    # columns of the inverse: solve mat^T-free form  sum_a c_a y_a = x_i
    # y_a = sum_i mat[a][i] x_i, so x_i = sum_a inv[i][a] y_a with inv = (mat^T)^{-1}^T
    transpose = [[mat[a][i] for a in range(n)] for i in range(n)]
    inv = []
    for i in range(n):
        rhs = [Fraction(int(r == i)) for r in range(n)]
        sol = solve_dense(transpose, rhs)
        if not sol.consistent or sol.rank != n:
            raise LieAlgebraError("basis change matrix is singular")
        inv.append([sol[a] for a in range(n)])
    return inv


def to_basis(xvec: Vec, inv: List[List[Fraction]]) -> Vec:
    """Rewrite a vector in x-coordinates into y-coordinates using ``matrix_inverse``."""
    out: Vec = {}
    for i, c in xvec.items():
        vaccumulate(out, {a: v for a, v in enumerate(inv[i]) if v}, c)
    return out


def abelian(labels: Sequence[str]) -> LieAlgebra:
    return LieAlgebra(labels, {})
