"""Classical layer: functions on formal groups and homogeneous spaces, Poisson brackets.

Functions are truncated polynomials in coordinates dual to a PBW basis, with
the pairing <u^alpha, x^beta> = alpha! delta_{alpha,beta}. With this
normalization the product of functions is dual to the shuffle coproduct, so
``f(x^beta) = beta! * f[beta]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .bialgebra import DrinfeldDouble, LieBialgebra, RMatrix, build_double
from .kernel.enveloping import Envelope, Mono, mono_degree, mono_factorial, monomials_upto
from .kernel.lie import LieAlgebra
from .kernel.linsolve import LinearProblem, nullspace, solve
from .kernel.series import Vec, vaccumulate
from .modules import InducedModule, tensor_act
from .report import Report

Function = Dict[Mono, Fraction]


class FormalFunctionAlgebra:
    """Truncated polynomial functions on the formal group of ``lie`` (degree <= ``degree_cap``)."""

    def __init__(self, lie: LieAlgebra, degree_cap: int, env: Optional[Envelope] = None):
        self.lie = lie
        self.n = lie.dim
        self.degree_cap = degree_cap
        self.env = env if env is not None else _envelope(lie)

    def basis(self, degree: Optional[int] = None, min_degree: int = 0) -> List[Mono]:
        return monomials_upto(self.n, self.degree_cap if degree is None else degree, min_degree)

    def one(self) -> Function:
        return {(0,) * self.n: Fraction(1)}

    def coordinate(self, i: int) -> Function:
        return {tuple(int(a == i) for a in range(self.n)): Fraction(1)}

    def monomial(self, alpha: Sequence[int]) -> Function:
        return {tuple(alpha): Fraction(1)}

    def mul(self, f: Function, g: Function, cap: Optional[int] = None) -> Function:
        return poly_mul(f, g, self.degree_cap if cap is None else cap)

    def value(self, f: Function, beta: Mono) -> Fraction:
        """f(x^beta)."""
        c = f.get(beta)
        return c * mono_factorial(beta) if c else Fraction(0)

    def from_values(self, values: Dict[Mono, Fraction]) -> Function:
        return {b: Fraction(v) / mono_factorial(b) for b, v in values.items() if v}

    def partial(self, f: Function, i: int) -> Function:
        return poly_partial(f, i)

    def coproduct0(self, f: Function, cap: Optional[int] = None) -> Dict[Tuple[Mono, Mono], Fraction]:
        """Delta_0(f)(a (x) b) = f(ab), truncated at total degree ``cap``."""
        cap = self.degree_cap if cap is None else cap
        out: Dict = {}
        monos = monomials_upto(self.n, cap)
        for b in monos:
            for c in monos:
                if mono_degree(b) + mono_degree(c) > cap:
                    continue
                val = Fraction(0)
                for m, v in self.env.mono_mul(b, c).items():
                    fv = f.get(m)
                    if fv:
                        val += fv * v * mono_factorial(m)
                if val:
                    out[(b, c)] = val / (mono_factorial(b) * mono_factorial(c))
        return out


_ENVS: Dict[LieAlgebra, Envelope] = {}


def _envelope(lie: LieAlgebra) -> Envelope:
    env = _ENVS.get(lie)
    if env is None:
        env = _ENVS[lie] = Envelope(lie)
    return env


def poly_mul(f: Function, g: Function, cap: int) -> Function:
    out: Function = {}
    for a, c in f.items():
        da = mono_degree(a)
        if da > cap:
            continue
        for b, d in g.items():
            if da + mono_degree(b) > cap:
                continue
            m = tuple(x + y for x, y in zip(a, b))
            nv = out.get(m, 0) + c * d
            if nv:
                out[m] = nv
            else:
                out.pop(m, None)
    return out


def poly_partial(f: Function, i: int) -> Function:
    out: Function = {}
    for a, c in f.items():
        if a[i]:
            m = a[:i] + (a[i] - 1,) + a[i + 1:]
            out[m] = c * a[i]
    return out


def truncate_fn(f: Function, cap: int) -> Function:
    return {m: c for m, c in f.items() if mono_degree(m) <= cap}


# -- cobracket on U(a) and the formal-group bracket --------------------------------

_DELTA_CACHE: Dict[LieBialgebra, Dict[Mono, Vec]] = {}


def _generator_delta(b: LieBialgebra, env: Envelope, i: int) -> Vec:
    return {(env.gen(p), env.gen(q)): c for (p, q), c in b.delta(i).items()}


def _delta_mono(b: LieBialgebra, m: Mono) -> Vec:
    cache = _DELTA_CACHE.setdefault(b, {})
    hit = cache.get(m)
    if hit is not None:
        return hit
    env = _envelope(b.algebra)
    if not any(m):
        out: Vec = {}
    else:
        i = next(k for k, e in enumerate(m) if e)
        rest = m[:i] + (m[i] - 1,) + m[i + 1:]
        # x^m = x_i x^rest exactly in PBW order since i is the leftmost generator
        out = env.tmul(_generator_delta(b, env, i), env.delta0_mono(rest))
        vaccumulate(out, env.tmul(env.delta0_mono(env.gen(i)), _delta_mono(b, rest)))
    cache[m] = out
    return out


def extend_cobracket(b: LieBialgebra, a: Vec, cap: Optional[int] = None) -> Vec:
    """delta on U(a) from delta(xy) = delta(x) Delta_0(y) + Delta_0(x) delta(y)."""
    out: Vec = {}
    for m, c in a.items():
        if cap is not None and mono_degree(m) > cap:
            continue
        vaccumulate(out, _delta_mono(b, m), c)
    return out


def cobracket_of_word(b: LieBialgebra, word: Sequence[int]) -> Vec:
    """Apply the product rule along an arbitrary (unordered) word; used to test factorization independence."""
    env = _envelope(b.algebra)
    delta: Vec = {}
    prod = env.one()
    for i in reversed(word):
        g = env.gen(i)
        new = env.tmul(_generator_delta(b, env, i), env.delta0(prod))
        vaccumulate(new, env.tmul(env.delta0_mono(g), delta))
        delta = new
        prod = env.mul({g: Fraction(1)}, prod)
    return delta


def poisson_bracket_formal_group(b: LieBialgebra, f: Function, g: Function, D: int) -> Function:
    """<{f,g}, a> = (f (x) g)(delta(a)) for PBW monomials a of degree <= D."""
    fa = FormalFunctionAlgebra(b.algebra, D)
    values: Dict[Mono, Fraction] = {}
    for beta in fa.basis():
        val = _pair2(fa, f, g, _delta_mono(b, beta))
        if val:
            values[beta] = val
    return fa.from_values(values)


def bracket_overflow(b: LieBialgebra, f: Function, g: Function, D: int) -> bool:
    """True when {f,g} has a nonzero component of degree D+1, i.e. D truncates it."""
    fa = FormalFunctionAlgebra(b.algebra, D + 1)
    return any(_pair2(fa, f, g, _delta_mono(b, beta)) for beta in fa.basis(D + 1, D + 1))


def _pair2(fa: FormalFunctionAlgebra, f: Function, g: Function, t: Vec) -> Fraction:
    s = Fraction(0)
    for (m1, m2), c in t.items():
        a = f.get(m1)
        if a:
            bb = g.get(m2)
            if bb:
                s += c * a * bb * mono_factorial(m1) * mono_factorial(m2)
    return s


@dataclass
class PoissonBracketTable:
    """Brackets of coordinate functions, extended to all functions as a biderivation."""

    n: int
    degree_cap: int
    table: Dict[Tuple[int, int], Function]
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_bialgebra(cls, b: LieBialgebra, D: int) -> "PoissonBracketTable":
        fa = FormalFunctionAlgebra(b.algebra, D)
        table = {}
        for i in range(b.dim):
            for j in range(b.dim):
                table[(i, j)] = poisson_bracket_formal_group(b, fa.coordinate(i), fa.coordinate(j), D)
        return cls(b.dim, D, table)

    def bracket(self, f: Function, g: Function, cap: Optional[int] = None) -> Function:
        cap = self.degree_cap if cap is None else cap
        out: Function = {}
        for a, c in f.items():
            for bm, d in g.items():
                vaccumulate(out, self._mono_bracket(a, bm, cap), c * d)
        return out

    def _mono_bracket(self, a: Mono, b: Mono, cap: int) -> Function:
        key = (a, b, cap)
        hit = self._cache.get(key)
        if hit is None:
            hit = {}
            for i in range(self.n):
                if not a[i]:
                    continue
                da = poly_partial({a: Fraction(1)}, i)
                for j in range(self.n):
                    if not b[j]:
                        continue
                    db = poly_partial({b: Fraction(1)}, j)
                    vaccumulate(hit, poly_mul(poly_mul(da, db, cap), self.table.get((i, j), {}), cap))
            self._cache[key] = hit
        return hit


def _tensor_bracket(tab: PoissonBracketTable, F: Dict, G: Dict, cap: int) -> Dict:
    """Product Poisson structure: {f1(x)g1, f2(x)g2} = {f1,f2}(x)g1g2 + f1f2(x){g1,g2}; total degree <= cap."""
    out: Dict = {}
    for (a1, b1), c1 in F.items():
        for (a2, b2), c2 in G.items():
            c = c1 * c2
            gg = poly_mul({b1: Fraction(1)}, {b2: Fraction(1)}, cap)
            for m, v in tab._mono_bracket(a1, a2, cap).items():
                for p, w in gg.items():
                    if mono_degree(m) + mono_degree(p) <= cap:
                        vaccumulate(out, {(m, p): c * v * w})
            ff = poly_mul({a1: Fraction(1)}, {a2: Fraction(1)}, cap)
            for m, v in tab._mono_bracket(b1, b2, cap).items():
                for p, w in ff.items():
                    if mono_degree(m) + mono_degree(p) <= cap:
                        vaccumulate(out, {(p, m): c * v * w})
    return out


def check_poisson_group(b: LieBialgebra, D: int, table: Optional[PoissonBracketTable] = None) -> Report:
    """Antisymmetry, Jacobi, Leibniz and multiplicativity of the bracket, all up to degree D."""
    rep = Report("poisson group")
    fa = FormalFunctionAlgebra(b.algebra, D + 1)
    if table is None:
        table = PoissonBracketTable.from_bialgebra(b, D + 1)
    monos = fa.basis(D, 1)

    bad = None
    for f, g in combinations(monos, 2):
        s = table.bracket({f: 1}, {g: 1}, D)
        vaccumulate(s, table.bracket({g: 1}, {f: 1}, D))
        if s:
            bad = (list(f), list(g))
            break
    rep.add("antisymmetry", bad is None, bad, degree=D)

    bad = None
    triples = [(f, g, k) for f in monos for g in monos for k in monos
               if f <= g <= k and mono_degree(f) + mono_degree(g) + mono_degree(k) <= D + 1]
    for f, g, k in triples:
        jac: Function = {}
        for x, y, z in ((f, g, k), (g, k, f), (k, f, g)):
            inner = table.bracket({y: 1}, {z: 1}, D + 1)
            vaccumulate(jac, table.bracket({x: 1}, inner, D))
        if jac:
            bad = [list(f), list(g), list(k)]
            break
    rep.add("Jacobi", bad is None, bad, degree=D)

    # Leibniz for the bracket defined directly by duality with the extended cobracket
    bad = None
    small = fa.basis(min(D, 2), 1)
    for f in small:
        for g in small:
            for k in small:
                lhs = poisson_bracket_formal_group(b, {f: 1}, poly_mul({g: 1}, {k: 1}, D + 1), D)
                rhs = poly_mul(poisson_bracket_formal_group(b, {f: 1}, {g: 1}, D + 1), {k: 1}, D)
                vaccumulate(rhs, poly_mul({g: 1}, poisson_bracket_formal_group(b, {f: 1}, {k: 1}, D + 1), D))
                if lhs != rhs:
                    bad = [list(f), list(g), list(k)]
                    break
            if bad:
                break
        if bad:
            break
    rep.add("Leibniz", bad is None, bad, degree=D)

    bad = None
    for f in monos:
        for g in monos:
            direct = poisson_bracket_formal_group(b, {f: 1}, {g: 1}, D)
            if direct != table.bracket({f: 1}, {g: 1}, D):
                bad = (list(f), list(g))
                break
        if bad:
            break
    rep.add("table compatible with cobracket", bad is None, bad, degree=D)

    bad = None
    for f, g in combinations(fa.basis(D, 1), 2):
        if mono_degree(f) + mono_degree(g) > D + 1:
            continue
        lhs = fa.coproduct0(table.bracket({f: 1}, {g: 1}, D + 1), D)
        F = fa.coproduct0({f: Fraction(1)}, D + 1)
        G = fa.coproduct0({g: Fraction(1)}, D + 1)
        rhs = _tensor_bracket(table, F, G, D)
        if lhs != rhs:
            diff = dict(lhs)
            vaccumulate(diff, rhs, -1)
            key = min(diff)
            bad = {"f": list(f), "g": list(g), "term": [list(key[0]), list(key[1])]}
            break
    rep.add("coproduct is a Poisson map", bad is None, bad, degree=D)
    return rep


# -- Manin quadruples -------------------------------------------------------------

@dataclass
class ManinQuadruple:
    double: DrinfeldDouble
    lagrangian: List[List[Fraction]]  # rows: coordinates in the double's basis

    @classmethod
    def make(cls, double: DrinfeldDouble, rows) -> "ManinQuadruple":
        return cls(double, [[Fraction(v) for v in row] for row in rows])

    def vectors(self) -> List[Vec]:
        return [{i: c for i, c in enumerate(row) if c} for row in self.lagrangian]


def _span_coordinates(rows: List[Vec], v: Vec, dim: int) -> Optional[Dict[int, Fraction]]:
    prob = LinearProblem(unknowns=list(range(len(rows))))
    for k in range(dim):
        prob.add_equation({a: row.get(k, 0) for a, row in enumerate(rows)}, v.get(k, 0))
    sol = solve(prob)
    return dict(sol.values) if sol.consistent else None


def _rank(rows: List[Vec]) -> int:
    from .kernel.linsolve import Echelon
    ech = Echelon()
    for r in rows:
        ech.add(dict(r))
    return ech.rank


def validate_quadruple(q: ManinQuadruple) -> Report:
    rep = Report("Manin quadruple")
    d = q.double
    vecs = q.vectors()
    dim = 2 * d.n
    if any(len(row) != dim for row in q.lagrangian):
        rep.add("shape", False, f"rows must have length {dim}")
        return rep
    bad = None
    for a in range(len(vecs)):
        for b in range(a, len(vecs)):
            if d.pairing(vecs[a], vecs[b]):
                bad = (a, b)
                break
        if bad:
            break
    rep.add("isotropic", bad is None, bad)
    rk = _rank(vecs)
    rep.add("dimension", rk == d.n and len(vecs) == d.n, {"rank": rk, "rows": len(vecs), "expected": d.n})
    bad = None
    for a, b in combinations(range(len(vecs)), 2):
        br = d.total.bracket_vec(vecs[a], vecs[b])
        if _span_coordinates(vecs, br, dim) is None:
            bad = (a, b)
            break
    rep.add("subalgebra", bad is None, bad)
    return rep


class CoidealError(ValueError):
    def __init__(self, generator: int, message: str):
        self.generator = generator
        super().__init__(message)


def quadruple_from_coideal(b: LieBialgebra, h_plus, double: Optional[DrinfeldDouble] = None) -> ManinQuadruple:
    """h = h+ (+) (orthogonal complement of h+ inside g-)."""
    n = b.dim
    if double is None:
        double, _ = build_double(b)
    hp = [{i: Fraction(c) for i, c in enumerate(row) if c} for row in h_plus]
    if hp and _rank(hp) != len(hp):
        raise ValueError("h_plus rows are linearly dependent")
    for a, c in combinations(range(len(hp)), 2):
        br = b.algebra.bracket_vec(hp[a], hp[c])
        if _span_coordinates(hp, br, n) is None:
            raise ValueError(f"h_plus is not a subalgebra: bracket of rows {a},{c} leaves it")
    # annihilator of h+ in g* (coordinates on the dual basis)
    ann = nullspace([dict(v) for v in hp], n) if hp else [{i: Fraction(1)} for i in range(n)]
    for idx, y in enumerate(hp):
        dy = b.delta_vec(y)
        for xi in ann:
            for eta in ann:
                val = sum(c * xi.get(p, 0) * eta.get(q, 0) for (p, q), c in dy.items())
                if val:
                    raise CoidealError(idx, f"h_plus row {idx} violates the coideal condition")
    rows = []
    for v in hp:
        rows.append([v.get(i, Fraction(0)) for i in range(n)] + [Fraction(0)] * n)
    for xi in sorted(ann, key=lambda v: min(v)):
        rows.append([Fraction(0)] * n + [xi.get(i, Fraction(0)) for i in range(n)])
    return ManinQuadruple(double, rows)


# -- homogeneous space T = U(g)/U(g)h ---------------------------------------------

class HomSpace:
    """The module T with its PBW basis, used for the classical and quantum homogeneous layers.

    The local basis of g lists a complement of h first (standard basis
    vectors chosen greedily in index order), then the rows of h.
    """

    def __init__(self, q: ManinQuadruple, r: Optional[RMatrix] = None):
        self.q = q
        d = q.double
        self.double = d
        self.env = d.envelope()
        n2 = 2 * d.n
        hrows = [list(row) for row in q.lagrangian]
        comp = []
        current = [{i: c for i, c in enumerate(row) if c} for row in hrows]
        for i in range(n2):
            if len(comp) + len(hrows) == n2:
                break
            trial = current + [{i: Fraction(1)}]
            if _rank(trial) == len(trial):
                comp.append([Fraction(int(j == i)) for j in range(n2)])
                current = trial
        self.complement = comp
        self.n = len(comp)
        self.module = InducedModule.from_basis(self.env, comp + hrows, self.n, "T")
        self.r = r if r is not None else RMatrix(d, {(self.env.gen(i), self.env.gen(i + d.n)): Fraction(1) for i in range(d.n)})
        self._ri_cache: Dict[Mono, Vec] = {}

    @property
    def vacuum(self) -> Mono:
        return self.module.vacuum

    def basis(self, D: int) -> List[Mono]:
        return self.module.basis(D)

    def key(self, m: Mono) -> Mono:
        """Function coordinate index of a T basis monomial."""
        return m[: self.n]

    def lift(self, alpha: Mono) -> Mono:
        return tuple(alpha) + (0,) * (self.module.dim - self.n)

    def i_T(self, m: Mono) -> Vec:
        """Delta_0(m)(1_T (x) 1_T) for a T basis monomial m: a shuffle, already in the basis."""
        return self.module.local_env.delta0_mono(m)

    def i_T_rep(self, a: Vec) -> Vec:
        """Delta_0(a)(1_T (x) 1_T) for any element a of the local enveloping algebra."""
        env = self.module.local_env
        out: Vec = {}
        vac = {self.vacuum: Fraction(1)}
        for (u1, u2), c in env.delta0(a).items():
            l = self.module.act_local({u1: Fraction(1)}, vac)
            if not l:
                continue
            rr = self.module.act_local({u2: Fraction(1)}, vac)
            for m1, c1 in l.items():
                for m2, c2 in rr.items():
                    vaccumulate(out, {(m1, m2): c * c1 * c2})
        return out

    def r_i_T(self, m: Mono) -> Vec:
        hit = self._ri_cache.get(m)
        if hit is None:
            hit = tensor_act([self.module, self.module], self.r.element, self.i_T(m))
            self._ri_cache[m] = hit
        return hit

    def value(self, f: Function, m: Mono) -> Fraction:
        k = self.key(m)
        c = f.get(k)
        return c * mono_factorial(k) if c else Fraction(0)

    def pair2(self, f: Function, g: Function, t: Vec) -> Fraction:
        s = Fraction(0)
        for (m1, m2), c in t.items():
            a = f.get(self.key(m1))
            if a:
                bb = g.get(self.key(m2))
                if bb:
                    s += c * a * bb * mono_factorial(self.key(m1)) * mono_factorial(self.key(m2))
        return s

    def from_values(self, values: Dict[Mono, Fraction]) -> Function:
        return {self.key(m): Fraction(v) / mono_factorial(self.key(m)) for m, v in values.items() if v}


_HOMSPACES: Dict[int, HomSpace] = {}


def homspace(q: ManinQuadruple) -> HomSpace:
    key = id(q)
    hs = _HOMSPACES.get(key)
    if hs is None or hs.q is not q:
        hs = _HOMSPACES[key] = HomSpace(q)
    return hs


def homspace_bracket(q: ManinQuadruple, f: Function, g: Function, D: int) -> Function:
    """{f,g}(a 1_T) = (f (x) g)(r Delta_0(a)(1_T (x) 1_T)) on the PBW basis of T up to degree D."""
    hs = homspace(q)
    values = {}
    for m in hs.basis(D):
        v = hs.pair2(f, g, hs.r_i_T(m))
        if v:
            values[m] = v
    return hs.from_values(values)


def representative_witness(q: ManinQuadruple, f: Function, g: Function, D: int):
    """Evaluate the bracket on y.m (y in h) through its own coproduct and through its T-expansion.

    Returns None when every sampled representative agrees, else the offending (y, m).
    """
    hs = homspace(q)
    mod = hs.module
    env = mod.local_env
    bracket = homspace_bracket(q, f, g, D + 1)
    for m in hs.basis(D):
        for y in range(hs.n, mod.dim):
            a = env.mul({env.gen(y): Fraction(1)}, {m: Fraction(1)})
            direct = hs.pair2(f, g, tensor_act([mod, mod], hs.r.element, hs.i_T_rep(a)))
            expanded = sum((hs.value(bracket, t) * c for t, c in mod.act_local(a, {hs.vacuum: Fraction(1)}).items()), Fraction(0))
            if direct != expanded:
                return (y, list(m))
    return None


def double_cobracket(double: DrinfeldDouble, i: int) -> Vec:
    """Cobracket of a generator of the double as a Lie bialgebra, from the two halves' data.

    On g+ it is the given cobracket; on g- it is minus the transpose of the
    bracket of g+ (the double carries g- with the opposite coalgebra structure).
    """
    env = double.envelope()
    n = double.n
    out: Vec = {}
    if i < n:
        for (p, q), c in double.bialgebra.delta(i).items():
            vaccumulate(out, {(env.gen(p), env.gen(q)): c})
    else:
        k = i - n
        alg = double.bialgebra.algebra
        for p in range(n):
            for q in range(n):
                c = alg.bracket(p, q).get(k)
                if c:
                    vaccumulate(out, {(env.gen(p + n), env.gen(q + n)): -c})
    return out


def check_homspace_poisson(q: ManinQuadruple, D: int) -> Report:
    rep = Report("Poisson homogeneous space")
    hs = homspace(q)
    mod = hs.module
    d = q.double
    vac2 = {(hs.vacuum, hs.vacuum): Fraction(1)}
    omega = RMatrix(d, hs.r.element).omega()
    w = tensor_act([mod, mod], omega, vac2)
    rep.add("Omega(1_T (x) 1_T) = 0", not w, {"terms": len(w)} if w else None)

    fmonos = monomials_upto(hs.n, D, 1)
    cache: Dict = {}

    def br(f: Mono, g: Mono, cap: int) -> Function:
        key = (f, g, cap)
        if key not in cache:
            cache[key] = homspace_bracket(q, {f: Fraction(1)}, {g: Fraction(1)}, cap)
        return cache[key]

    bad = None
    for f, g in combinations(fmonos, 2):
        s = dict(br(f, g, D))
        vaccumulate(s, br(g, f, D))
        if s:
            bad = (list(f), list(g))
            break
    rep.add("skew symmetry", bad is None, bad, degree=D)

    bad = None
    for f in fmonos:
        for g in fmonos:
            for k in fmonos:
                if not f <= g <= k or mono_degree(f) + mono_degree(g) + mono_degree(k) > D + 1:
                    continue
                jac: Function = {}
                for x, y, z in ((f, g, k), (g, k, f), (k, f, g)):
                    vaccumulate(jac, homspace_bracket(q, {x: Fraction(1)}, br(y, z, D + 1), D))
                if jac:
                    bad = [list(f), list(g), list(k)]
                    break
            if bad:
                break
        if bad:
            break
    rep.add("Jacobi", bad is None, bad, degree=D)

    bad = representative_witness(q, {fmonos[0]: Fraction(1)}, {fmonos[-1]: Fraction(1)}, min(D, 2)) if fmonos else None
    if bad is None and len(fmonos) > 1:
        bad = representative_witness(q, {fmonos[0]: Fraction(1)}, {fmonos[1]: Fraction(1)}, min(D, 2))
    rep.add("independent of representative", bad is None, bad)

    # action map G x X -> X is Poisson at linear order: for x in g and t in T,
    # {f,g}(x.t) = (f(x)g)((Delta_0(x) r - delta_D(x)) i_T(t)),
    # where delta_D(x) = [Delta_0(x), r] is the double's cobracket
    env = hs.env
    bad = None
    for i in range(2 * d.n):
        dx = double_cobracket(d, i)
        comm = env.tmul(env.delta0({env.gen(i): Fraction(1)}), hs.r.element)
        vaccumulate(comm, env.tmul(hs.r.element, env.delta0({env.gen(i): Fraction(1)})), -1)
        if comm != dx:
            bad = {"generator": d.total.labels[i], "reason": "double cobracket differs from [Delta_0(x), r]"}
            break
        op = env.tmul(env.delta0({env.gen(i): Fraction(1)}), hs.r.element)
        vaccumulate(op, dx, -1)
        for m in hs.basis(max(D - 1, 0)):
            lhs = tensor_act([mod, mod], hs.r.element,
                             hs.i_T_rep(mod.act({env.gen(i): Fraction(1)}, {m: Fraction(1)})))
            rhs = tensor_act([mod, mod], op, hs.i_T(m))
            if lhs != rhs:
                bad = {"generator": d.total.labels[i], "t": list(m)}
                break
        if bad:
            break
    rep.add("action is Poisson at linear order", bad is None, bad, degree=D)
    return rep
