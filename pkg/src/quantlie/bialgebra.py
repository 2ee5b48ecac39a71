"""Lie bialgebras, their duals and Drinfeld doubles, r-matrices and morphisms."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, List, Sequence, Tuple

from .kernel.enveloping import Envelope
from .kernel.lie import LieAlgebra
from .kernel.linsolve import LinearProblem, solve
from .kernel.series import Vec, vaccumulate
from .report import Report

Cobracket = Dict[int, Dict[Tuple[int, int], Fraction]]


class InternalError(RuntimeError):
    """An invariant that validated inputs guarantee was violated (a bug, not bad input)."""


@dataclass(frozen=True)
class LieBialgebra:
    algebra: LieAlgebra
    cobracket: Cobracket

    @classmethod
    def make(cls, labels: Sequence[str], brackets=None, cobracket=None) -> "LieBialgebra":
        alg = LieAlgebra(labels, brackets or {})
        cob = {}
        for k, terms in (cobracket or {}).items():
            t = {(int(i), int(j)): Fraction(v) for (i, j), v in terms.items() if v}
            if t:
                cob[int(k)] = t
        return cls(alg, cob)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def labels(self):
        return self.algebra.labels

    def delta(self, k: int) -> Dict[Tuple[int, int], Fraction]:
        return self.cobracket.get(k, {})

    def delta_vec(self, v: Vec) -> Dict[Tuple[int, int], Fraction]:
        out: Dict = {}
        for k, c in v.items():
            vaccumulate(out, self.delta(k), c)
        return out

    def __hash__(self):
        return hash((self.algebra, tuple(sorted((k, tuple(sorted(v.items()))) for k, v in self.cobracket.items()))))


def _adjoint_on_tensor(alg: LieAlgebra, i: int, t: Dict[Tuple[int, int], Fraction]):
    """x_i . (a (x) b) = [x_i, a] (x) b + a (x) [x_i, b]."""
    out: Dict = {}
    for (a, b), c in t.items():
        for k, v in alg.bracket(i, a).items():
            vaccumulate(out, {(k, b): v}, c)
        for k, v in alg.bracket(i, b).items():
            vaccumulate(out, {(a, k): v}, c)
    return out


def _dual_brackets(b: LieBialgebra) -> Dict[Tuple[int, int], Dict[int, Fraction]]:
    """Transpose of the cobracket: [xi_i, xi_j] = sum_k f_k^{ij} xi_k (all ordered pairs)."""
    out: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
    for k, terms in b.cobracket.items():
        for (i, j), v in terms.items():
            out.setdefault((i, j), {})
            out[(i, j)][k] = out[(i, j)].get(k, 0) + v
    return out


def validate_bialgebra(b: LieBialgebra) -> Report:
    alg = b.algebra
    rep = Report("bialgebra axioms")
    rep.add("bracket antisymmetry", alg.antisymmetry_witness() is None, alg.antisymmetry_witness())
    rep.add("Jacobi", alg.jacobi_witness() is None, alg.jacobi_witness())

    anti = None
    for k, terms in sorted(b.cobracket.items()):
        for (i, j), v in sorted(terms.items()):
            if terms.get((j, i), 0) != -v:
                anti = (k, i, j)
                break
        if anti:
            break
    rep.add("cobracket antisymmetry", anti is None, anti)

    cojac = None
    if anti is None:
        dual = _dual_lie(b)
        cojac = dual.jacobi_witness()
        rep.add("co-Jacobi", cojac is None, cojac)
    else:
        # co-Jacobi in the form sum_cyc (delta (x) id) delta = 0 on each generator
        cojac = _cojacobi_direct(b)
        rep.add("co-Jacobi", cojac is None, cojac)

    cocycle = None
    for i, j in combinations(range(b.dim), 2):
        lhs = b.delta_vec(alg.bracket(i, j))
        rhs = _adjoint_on_tensor(alg, i, b.delta(j))
        vaccumulate(rhs, _adjoint_on_tensor(alg, j, b.delta(i)), -1)
        diff = dict(lhs)
        vaccumulate(diff, rhs, -1)
        if diff:
            cocycle = (i, j)
            break
    rep.add("cocycle", cocycle is None, cocycle)
    return rep


def _cojacobi_direct(b: LieBialgebra):
    for k in range(b.dim):
        total: Dict = {}
        for (i, j), v in b.delta(k).items():
            for (p, q), w in b.delta(i).items():
                for perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                    key = [None] * 3
                    for src, val in zip(perm, (p, q, j)):
                        key[src] = val
                    vaccumulate(total, {tuple(key): v * w})
        if total:
            return (k,)
    return None


def _dual_lie(b: LieBialgebra) -> LieAlgebra:
    labels = [f"{l}∨" for l in b.labels]
    return LieAlgebra(labels, {k: v for k, v in _dual_brackets(b).items() if k[0] < k[1]})


def dual_bialgebra(b: LieBialgebra) -> LieBialgebra:
    """Bracket of the dual is the transposed cobracket, cobracket the transposed bracket."""
    rep = validate_bialgebra(b)
    if not rep.passed:
        raise ValueError(f"invalid bialgebra: {rep.failures()[0].name}")
    labels = [l[:-1] if l.endswith("∨") else f"{l}∨" for l in b.labels]
    dual_alg = LieAlgebra(labels, {k: v for k, v in _dual_brackets(b).items() if k[0] < k[1]})
    cob: Cobracket = {}
    for (i, j), vec in b.algebra.structure_constants().items():
        for k, v in vec.items():
            cob.setdefault(k, {})
            cob[k][(i, j)] = cob[k].get((i, j), 0) + v
            cob[k][(j, i)] = cob[k].get((j, i), 0) - v
    cob = {k: {p: v for p, v in t.items() if v} for k, t in cob.items()}
    return LieBialgebra(dual_alg, {k: t for k, t in cob.items() if t})


@dataclass(frozen=True)
class DrinfeldDouble:
    """g = g+ (+) g-, g+ basis first (indices 0..n-1), then the dual basis (n..2n-1)."""

    bialgebra: LieBialgebra
    total: LieAlgebra
    n: int

    @property
    def plus(self) -> List[int]:
        return list(range(self.n))

    @property
    def minus(self) -> List[int]:
        return list(range(self.n, 2 * self.n))

    def pairing(self, u: Vec, v: Vec) -> Fraction:
        n = self.n
        s = Fraction(0)
        for i, a in u.items():
            j = i + n if i < n else i - n
            b = v.get(j)
            if b:
                s += a * b
        return s

    def pairing_matrix(self) -> List[List[Fraction]]:
        n2 = 2 * self.n
        return [[self.pairing({i: Fraction(1)}, {j: Fraction(1)}) for j in range(n2)] for i in range(n2)]

    def envelope(self) -> Envelope:
        env = _ENVELOPES.get(self.total)
        if env is None:
            env = Envelope(self.total)
            _ENVELOPES[self.total] = env
        return env


_ENVELOPES: Dict[LieAlgebra, Envelope] = {}


@dataclass(frozen=True)
class RMatrix:
    double: DrinfeldDouble
    element: Vec  # in U(g)^{(x)2}

    def omega(self) -> Vec:
        env = self.double.envelope()
        out = dict(self.element)
        vaccumulate(out, env.permute(self.element, (1, 0)))
        return out


def build_double(b: LieBialgebra) -> Tuple[DrinfeldDouble, RMatrix]:
    rep = validate_bialgebra(b)
    if not rep.passed:
        raise ValueError(f"invalid bialgebra: {rep.failures()[0].name} {rep.failures()[0].witness}")
    n = b.dim
    plus = {k: v for k, v in b.algebra.structure_constants().items()}
    minus = {(i + n, j + n): {k + n: c for k, c in vec.items()}
             for (i, j), vec in _dual_brackets(b).items() if i < j}
    mixed = _solve_mixed_brackets(b, plus, minus)
    brackets = {}
    brackets.update(plus)
    brackets.update(minus)
    brackets.update(mixed)
    labels = list(b.labels) + [f"{l}∨" for l in b.labels]
    total = LieAlgebra(labels, brackets)
    if total.jacobi_witness() is not None:
        raise InternalError(f"assembled double violates Jacobi at {total.jacobi_witness()}")
    double = DrinfeldDouble(b, total, n)
    env = double.envelope()
    r = {(env.gen(i), env.gen(i + n)): Fraction(1) for i in range(n)}
    return double, RMatrix(double, r)


def _solve_mixed_brackets(b: LieBialgebra, plus, minus):
    """Mixed brackets [x_i, xi_j] fixed by invariance of the canonical pairing."""
    n = b.dim
    n2 = 2 * n

    def pair(i, j):
        return Fraction(1) if abs(i - j) == n else Fraction(0)

    known = {}
    for (i, j), vec in list(plus.items()) + list(minus.items()):
        known[(i, j)] = vec
        known[(j, i)] = {k: -v for k, v in vec.items()}

    def is_mixed(i, j):
        return (i < n) != (j < n)

    prob = LinearProblem(unknowns=[(i, j + n, m) for i in range(n) for j in range(n) for m in range(n2)])

    def bracket_linear(i, j):
        """[e_i, e_j] as {unknown-or-const: coeff-vector}; returns dict m -> (coeffs, const)."""
        if not is_mixed(i, j):
            vec = known.get((i, j), {})
            return {m: ({}, vec.get(m, Fraction(0))) for m in range(n2)}
        if i < n:
            return {m: ({(i, j, m): Fraction(1)}, Fraction(0)) for m in range(n2)}
        return {m: ({(j, i, m): Fraction(-1)}, Fraction(0)) for m in range(n2)}

    for a, bb, c in product(range(n2), repeat=3):
        if not (is_mixed(a, bb) or is_mixed(bb, c)):
            continue
        # <[a,b],c> - <a,[b,c]> = 0
        coeffs: Dict = {}
        const = Fraction(0)
        for m, (lin, k) in bracket_linear(a, bb).items():
            p = pair(m, c)
            if p:
                for u, v in lin.items():
                    coeffs[u] = coeffs.get(u, 0) + p * v
                const += p * k
        for m, (lin, k) in bracket_linear(bb, c).items():
            p = pair(a, m)
            if p:
                for u, v in lin.items():
                    coeffs[u] = coeffs.get(u, 0) - p * v
                const -= p * k
        prob.add_equation(coeffs, -const)
    sol = solve(prob)
    if not sol.consistent or sol.rank != len(prob.unknowns):
        raise InternalError("pairing invariance does not determine the mixed brackets uniquely")
    mixed: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
    for (i, j, m), v in sol.values.items():
        mixed.setdefault((i, j), {})[m] = v
    return mixed


def pairing_invariance_witness(double: DrinfeldDouble):
    n2 = 2 * double.n
    for a, b, c in product(range(n2), repeat=3):
        ab = double.total.bracket(a, b)
        bc = double.total.bracket(b, c)
        if double.pairing(ab, {c: Fraction(1)}) != double.pairing({a: Fraction(1)}, bc):
            return (a, b, c)
    return None


def lagrangian_witness(double: DrinfeldDouble, indices: Sequence[int]):
    """Isotropy + half dimension + closure for a coordinate subspace of the double."""
    if len(indices) != double.n:
        return ("dimension", len(indices))
    for a in indices:
        for b in indices:
            if double.pairing({a: Fraction(1)}, {b: Fraction(1)}):
                return ("isotropy", a, b)
    s = set(indices)
    for a, b in combinations(indices, 2):
        if any(k not in s for k in double.total.bracket(a, b)):
            return ("closure", a, b)
    return None


def omega_invariance_witness(r: RMatrix):
    env = r.double.envelope()
    omega = r.omega()
    for i in range(2 * r.double.n):
        dx = env.delta0(env.element({i: Fraction(1)}))
        comm = env.tmul(dx, omega)
        vaccumulate(comm, env.tmul(omega, dx), -1)
        if comm:
            return i
    return None


def cybe_tensor(r: Vec, env: Envelope) -> Vec:
    r12 = env.embed(r, (0, 1), 3)
    r13 = env.embed(r, (0, 2), 3)
    r23 = env.embed(r, (1, 2), 3)
    out: Vec = {}
    for a, b in ((r12, r13), (r12, r23), (r13, r23)):
        vaccumulate(out, env.tmul(a, b))
        vaccumulate(out, env.tmul(b, a), -1)
    return out


def check_cybe(r: Vec, double: DrinfeldDouble) -> Report:
    env = double.envelope()
    t = cybe_tensor(r, env)
    rep = Report("classical Yang-Baxter equation")
    witness = None
    if t:
        key = min(t)
        witness = {"term": [list(m) for m in key], "coefficient": str(t[key])}
    rep.add("CYBE", not t, witness)
    return rep


def verify_double(double: DrinfeldDouble, r: RMatrix) -> Report:
    """Pairing invariance, Jacobi, Lagrangian halves, CYBE for r and invariance of Omega."""
    rep = Report("Drinfeld double")
    n = double.n
    w = pairing_invariance_witness(double)
    rep.add("pairing invariance", w is None, w)
    w = double.total.jacobi_witness()
    rep.add("Jacobi", w is None, w)
    w = lagrangian_witness(double, range(n))
    rep.add("g+ Lagrangian", w is None, w)
    w = lagrangian_witness(double, range(n, 2 * n))
    rep.add("g- Lagrangian", w is None, w)
    rep.extend(check_cybe(r.element, double))
    w = omega_invariance_witness(r)
    rep.add("Omega invariant", w is None, w)
    return rep


@dataclass(frozen=True)
class BialgebraMorphism:
    source: LieBialgebra
    target: LieBialgebra
    matrix: Tuple[Tuple[Fraction, ...], ...]  # target_dim x source_dim

    @classmethod
    def make(cls, source, target, matrix) -> "BialgebraMorphism":
        return cls(source, target, tuple(tuple(Fraction(v) for v in row) for row in matrix))

    def image(self, i: int) -> Vec:
        return {a: row[i] for a, row in enumerate(self.matrix) if row[i]}

    def apply(self, v: Vec) -> Vec:
        out: Vec = {}
        for i, c in v.items():
            vaccumulate(out, self.image(i), c)
        return out


def validate_morphism(m: BialgebraMorphism) -> Report:
    n1, n2 = m.source.dim, m.target.dim
    if len(m.matrix) != n2 or any(len(row) != n1 for row in m.matrix):
        raise ValueError(f"morphism matrix must be {n2}x{n1}")
    rep = Report("bialgebra morphism")
    bad = None
    for i, j in combinations(range(n1), 2):
        lhs = m.apply(m.source.algebra.bracket(i, j))
        rhs = m.target.algebra.bracket_vec(m.image(i), m.image(j))
        if lhs != rhs:
            bad = (i, j)
            break
    rep.add("bracket compatibility", bad is None, bad)
    bad = None
    for i in range(n1):
        lhs: Dict = {}
        for (a, b), c in m.source.delta(i).items():
            for p, u in m.image(a).items():
                for q, v in m.image(b).items():
                    vaccumulate(lhs, {(p, q): c * u * v})
        rhs = m.target.delta_vec(m.image(i))
        if lhs != rhs:
            bad = i
            break
    rep.add("cobracket compatibility", bad is None, bad)
    return rep


def double_swap_witness(b: LieBialgebra):
    """Check that swapping halves maps double(b) isomorphically onto double(dual(b))."""
    d1, _ = build_double(b)
    d2, _ = build_double(dual_bialgebra(b))
    n = b.dim
    perm = [(i + n) % (2 * n) for i in range(2 * n)]
    for i, j in combinations(range(2 * n), 2):
        lhs = {perm[k]: v for k, v in d1.total.bracket(i, j).items()}
        rhs = d2.total.bracket(perm[i], perm[j])
        if lhs != rhs:
            return (i, j)
    return None


# -- reference examples -------------------------------------------------------

def zero_bialgebra(dim: int = 2) -> LieBialgebra:
    return LieBialgebra.make([f"e{i + 1}" for i in range(dim)])


def borel_bialgebra() -> LieBialgebra:
    """Basis (H, E), [H,E] = 2E, delta(H) = 0, delta(E) = (E(x)H - H(x)E)/2."""
    half = Fraction(1, 2)
    return LieBialgebra.make(["H", "E"], {(0, 1): {1: 2}}, {1: {(1, 0): half, (0, 1): -half}})
