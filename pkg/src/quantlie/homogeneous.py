"""Quantization of Poisson homogeneous spaces.

Two constructions:

* From a Manin quadruple (g, g+, g-, h): T = U(g)/U(g)h with cyclic vector
  1_T. The coproduct on T is Delta_T(a 1_T) = J^-1 Delta_0(a)(1_T (x) 1_T),
  and the star product on functions on T is its transpose. It is
  coassociative because Phi fixes 1_T^{(x)3}.
* The split case, for a sub-bialgebra h+ of g+: functions on the quantized
  group that are invariant under right multiplication by the image of
  U_h(h+), with the star product inherited from the group.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .associator import AssociatorSeries, solve_associator, specialize
from .bialgebra import BialgebraMorphism, InternalError, LieBialgebra, validate_morphism
from .kernel.enveloping import Mono, mono_degree, mono_factorial, monomials_upto
from .kernel.linsolve import LinearProblem, nullspace, solve
from .kernel.series import HSeries, Vec, vaccumulate
from .modules import InducedModule, series_act, tensor_act
from .poisson import (Function, HomSpace, ManinQuadruple, check_homspace_poisson, homspace, homspace_bracket,
                      poisson_bracket_formal_group, poly_mul, validate_quadruple)
from .quantize_group import (QuantizedFunctionAlgebra, _pullback_pair, build_quantization, check_homomorphism,
                             check_star_associativity, star_product)
from .report import Report
from .twist import TwistSeries, fiber_functor_twist, solve_twist


# -- the carrier T ----------------------------------------------------------------

@dataclass
class InducedCarrier:
    """T truncated at degree D, with the action matrices of the double's generators.

    ``actions[i][m]`` is x_i . m for a T basis monomial m of degree <= D; it
    may reach degree D + 1.
    """

    space: HomSpace
    D: int
    actions: List[Dict[Mono, Vec]]

    @property
    def module(self) -> InducedModule:
        return self.space.module

    def basis(self) -> List[Mono]:
        return self.space.basis(self.D)


def build_induced(q: ManinQuadruple, D: int) -> InducedCarrier:
    hs = homspace(q)
    env = hs.env
    actions = []
    for i in range(env.dim):
        g = {env.gen(i): Fraction(1)}
        actions.append({m: hs.module.act(g, {m: Fraction(1)}) for m in hs.basis(D)})
    return InducedCarrier(hs, D, actions)


def check_carrier(c: InducedCarrier) -> Report:
    """Annihilation of 1_T by h, the representation property and independence of i_T from representatives."""
    rep = Report("induced module")
    hs, mod = c.space, c.module
    env = mod.local_env
    vac = {hs.vacuum: Fraction(1)}
    bad = [y for y in range(hs.n, mod.dim) if mod.act_local({env.gen(y): Fraction(1)}, vac)]
    rep.add("h annihilates 1_T", not bad, bad or None)

    amb = hs.env
    bad = None
    for i in range(amb.dim):
        for j in range(amb.dim):
            br = {amb.gen(k): v for k, v in amb.lie.bracket(i, j).items()}
            for m in c.space.basis(c.D - 1):
                v = {m: Fraction(1)}
                xi, xj = {amb.gen(i): Fraction(1)}, {amb.gen(j): Fraction(1)}
                lhs = mod.act(xi, mod.act(xj, v))
                vaccumulate(lhs, mod.act(xj, mod.act(xi, v)), -1)
                if lhs != mod.act(br, v):
                    bad = (i, j, list(m))
                    break
            if bad:
                break
        if bad:
            break
    rep.add("action is a representation", bad is None, bad, degree=c.D)

    bad = None
    for m in c.space.basis(c.D - 1):
        for y in range(hs.n, mod.dim):
            a = env.mul({m: Fraction(1)}, {env.gen(y): Fraction(1)})
            if hs.i_T_rep(a):
                bad = (list(m), y)
                break
        if bad:
            break
    rep.add("i_T vanishes on U(g)h", bad is None, bad, degree=c.D)
    return rep


def i_T(c: InducedCarrier, x: Vec) -> Vec:
    """Delta_0(a)(1_T (x) 1_T) for x = a 1_T given in the T basis."""
    out: Vec = {}
    for m, v in x.items():
        vaccumulate(out, c.space.i_T(m), v)
    return out


def check_phi_fixes(q: ManinQuadruple, phi: HSeries) -> Report:
    """Phi (1_T (x) 1_T (x) 1_T) = 1_T (x) 1_T (x) 1_T, compared order by order."""
    hs = homspace(q)
    T = hs.module
    vac = (hs.vacuum,) * 3
    w = series_act([T, T, T], phi, HSeries.constant({vac: Fraction(1)}, phi.order))
    rep = Report("associator fixes 1_T^3")
    for k in range(phi.order + 1):
        target = {vac: Fraction(1)} if k == 0 else {}
        rep.add(f"order {k}", w[k] == target, None if w[k] == target else sorted(w[k].items())[:3], order=k)
    return rep


# -- quantization from a Manin quadruple --------------------------------------------

class HomSpaceQuantization:
    """Functions on T with the star product dual to Delta_T = J^-1 i_T.

    Exposes ``N``, ``D``, ``basis`` and ``delta_tilde`` exactly like the
    quantized function algebra of a group, so the group-level star product
    and associativity checks apply unchanged.
    """

    def __init__(self, q: ManinQuadruple, phi: HSeries, J: TwistSeries, N: int, D: int):
        self.q = q
        self.space = homspace(q)
        self.phi = phi.truncate(N)
        self.J = J
        self.N = N
        self.D = D
        self.n = self.space.n
        self.env = self.space.env
        self.Jinv = J.inverse().truncate(N)
        self._dt: Dict[Mono, HSeries] = {}
        self._dj: Dict[Mono, HSeries] = {}

    def basis(self, degree: Optional[int] = None, min_degree: int = 0) -> List[Mono]:
        return monomials_upto(self.n, self.D if degree is None else degree, min_degree)

    def delta_T(self, m: Mono) -> HSeries:
        """J^-1 i_T(m) on T (x) T, keyed by pairs of T basis monomials."""
        T = self.space.module
        base = self.space.i_T(m)
        return HSeries([tensor_act([T, T], self.Jinv[k], base) if self.Jinv[k] else {}
                        for k in range(self.N + 1)], self.N)

    def delta_tilde(self, alpha: Mono) -> HSeries:
        hit = self._dt.get(alpha)
        if hit is None:
            key = self.space.key
            t = self.delta_T(self.space.lift(alpha))
            hit = HSeries([{(key(a), key(b)): c for (a, b), c in v.items()} for v in t.coeffs], self.N)
            self._dt[alpha] = hit
        return hit

    def delta_J(self, u: Mono) -> HSeries:
        """J^-1 Delta_0(u) J for a PBW monomial of the double."""
        hit = self._dj.get(u)
        if hit is None:
            env = self.env
            d0 = HSeries.constant(env.delta0_mono(u), self.N)
            hit = self.Jinv.mul(d0, env.tmul).mul(self.J.series.truncate(self.N), env.tmul)
            self._dj[u] = hit
        return hit


def build_homspace_quantization(q: ManinQuadruple, N: int = 3, D: int = 4, twist: str = "fiber",
                                associator: Optional[AssociatorSeries] = None,
                                J: Optional[TwistSeries] = None) -> HomSpaceQuantization:
    d = q.double
    if associator is None:
        associator = solve_associator(N)
    hs = homspace(q)
    phi = specialize(associator.truncated(N), d.envelope(), hs.r.omega())
    if J is None:
        if twist == "fiber":
            J = fiber_functor_twist(phi, hs.r, N)
        elif twist == "solved":
            J = solve_twist(phi, hs.r, N)
        else:
            raise ValueError(f"unknown twist method {twist!r}")
    return HomSpaceQuantization(q, phi, J, N, D)


def homspace_star(f: Function, g: Function, Q: HomSpaceQuantization, D: Optional[int] = None) -> HSeries:
    """<f*g, a 1_T> = (f (x) g)(J^-1 Delta_0(a)(1_T (x) 1_T))."""
    return star_product(f, g, Q, D)


def check_coassociativity(Q: HomSpaceQuantization, D: Optional[int] = None):
    """Associativity of the homogeneous star product; None or (order, alpha)."""
    return check_star_associativity(Q, D)


def coaction(f: Function, Q: HomSpaceQuantization, Du: int, Dt: Optional[int] = None) -> Dict[Tuple[Mono, Mono], Fraction]:
    """Values of Delta(f)(u (x) t) = f(u.t) on double monomials u (|u| <= Du) and T monomials t.

    The action is undeformed, so the table is constant in h; the deformation
    lives in the product on the double side.
    """
    hs = Q.space
    Dt = Q.D if Dt is None else Dt
    out: Dict[Tuple[Mono, Mono], Fraction] = {}
    for u in monomials_upto(Q.env.dim, Du):
        for t in hs.basis(Dt):
            moved = hs.module.act({u: Fraction(1)}, {t: Fraction(1)})
            v = sum((hs.value(f, m) * c for m, c in moved.items()), Fraction(0))
            if v:
                out[(u, hs.key(t))] = v
    return out


def check_coaction(Q: HomSpaceQuantization, Du: int = 2, D: Optional[int] = None):
    """Delta(f*g) = Delta(f)*Delta(g) for the coaction, in dual form.

    Pairing both sides with u (x) t gives (f (x) g) of Delta_T(u.t) and of
    Delta_J(u) . Delta_T(t); they must agree as elements of T (x) T.
    Returns None or (order, u, t).
    """
    D = Q.D if D is None else D
    T = Q.space.module
    for u in monomials_upto(Q.env.dim, Du):
        dj = Q.delta_J(u)
        for t in Q.space.basis(D - mono_degree(u)):
            moved = T.act({u: Fraction(1)}, {t: Fraction(1)})
            lhs = HSeries.zero(Q.N)
            for m, c in moved.items():
                s = Q.delta_T(m)
                for k in range(Q.N + 1):
                    vaccumulate(lhs.coeffs[k], s[k], c)
            rhs = dj.mul(Q.delta_T(t), lambda a, b: tensor_act([T, T], a, b))
            for k in range(Q.N + 1):
                if lhs[k] != rhs[k]:
                    return k, list(u), list(t)
    return None


def check_homspace_semiclassical(Q: HomSpaceQuantization, D: Optional[int] = None) -> Report:
    """h^0 is the commutative product and the skew part of h^1 is half the homogeneous bracket.

    The bracket is taken with swapped arguments, {f,g} := (g (x) f)(r i_T),
    matching J^-1 = 1 - h r/2 + O(h^2).
    """
    D = Q.D if D is None else D
    rep = Report("homogeneous semiclassical limit")
    bad0 = bad1 = None
    monos = Q.basis(D)
    for f in monos:
        for g in monos:
            if mono_degree(f) + mono_degree(g) > D:
                continue
            F, G = {f: Fraction(1)}, {g: Fraction(1)}
            fg = star_product(F, G, Q, D)
            gf = star_product(G, F, Q, D)
            if bad0 is None and fg[0] != poly_mul(F, G, D):
                bad0 = (list(f), list(g))
            skew = dict(fg[1])
            vaccumulate(skew, gf[1], -1)
            skew = {k: v / 2 for k, v in skew.items()}
            target = {k: v / 2 for k, v in homspace_bracket(Q.q, G, F, D).items()}
            if bad1 is None and skew != target:
                bad1 = (list(f), list(g))
    rep.add("h^0 layer is the commutative product", bad0 is None, bad0, degree=D)
    rep.add("skew h^1 layer equals half the homogeneous bracket", bad1 is None, bad1, degree=D)
    return rep


def verify_homspace(Q: HomSpaceQuantization, D: Optional[int] = None, coaction_degree: int = 2) -> Report:
    D = Q.D if D is None else D
    rep = Report("quantized homogeneous space")
    rep.extend(validate_quadruple(Q.q), "quadruple: ")
    rep.extend(check_homspace_poisson(Q.q, D), "classical: ")
    rep.extend(check_phi_fixes(Q.q, Q.phi), "Phi fixes 1_T^3: ")
    w = check_coassociativity(Q, D)
    rep.add("star product associative", w is None, w, degree=D, order=Q.N)
    w = check_coaction(Q, coaction_degree, D)
    rep.add("coaction is an algebra map", w is None, w, degree=D, order=Q.N)
    rep.extend(check_homspace_semiclassical(Q, D))
    return rep


# -- split case -------------------------------------------------------------------------

class TruncationError(ValueError):
    pass


class SubBialgebraError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class SplitQuantization:
    """Right h+-invariant functions on the quantized group.

    ``basis[i]`` is an h-series of functions lifting the i-th classical
    invariant; ``table[(i, j)]`` holds the h-series coefficients c_l(h) with
    basis_i * basis_j = sum_l c_l(h) basis_l on degree <= D.
    """

    group: QuantizedFunctionAlgebra
    inclusion: BialgebraMorphism
    basis: List[List[Function]]
    table: Dict[Tuple[int, int], Dict[int, List[Fraction]]]
    D: int

    @property
    def N(self) -> int:
        return self.group.N


def _sub_bialgebra(b: LieBialgebra, rows: Sequence[Sequence]) -> LieBialgebra:
    """The sub-bialgebra spanned by ``rows``; raises with a witness when not closed."""
    n = b.dim
    rows = [[Fraction(v) for v in r] for r in rows]
    k = len(rows)

    def coords(v: Dict[int, Fraction]):
        prob = LinearProblem(unknowns=list(range(k)))
        for i in range(n):
            prob.add_equation({a: rows[a][i] for a in range(k) if rows[a][i]}, v.get(i, 0))
        sol = solve(prob)
        return [sol[a] for a in range(k)] if sol.consistent else None

    def vec(a):
        return {i: c for i, c in enumerate(rows[a]) if c}

    brackets, cobrackets = {}, {}
    for a in range(k):
        for c in range(k):
            v: Dict[int, Fraction] = {}
            for i, x in vec(a).items():
                for j, y in vec(c).items():
                    for l, z in b.algebra.bracket(i, j).items():
                        v[l] = v.get(l, 0) + x * y * z
            cc = coords(v)
            if cc is None:
                raise SubBialgebraError("not closed under the bracket", (a, c))
            brackets[(a, c)] = cc
        d: Dict[Tuple[int, int], Fraction] = {}
        for i, x in vec(a).items():
            for key, z in b.delta(i).items():
                d[key] = d.get(key, 0) + x * z
        # delta(row a) must lie in span(rows) (x) span(rows)
        prob = LinearProblem(unknowns=[(p, q) for p in range(k) for q in range(k)])
        for i in range(n):
            for j in range(n):
                prob.add_equation({(p, q): rows[p][i] * rows[q][j] for p in range(k) for q in range(k)
                                   if rows[p][i] and rows[q][j]}, d.get((i, j), 0))
        sol = solve(prob)
        if not sol.consistent:
            raise SubBialgebraError("cobracket leaves the subspace", a)
        cobrackets[a] = {pq: v for pq, v in sol.values.items() if v}
    labels = [f"h{a}" for a in range(k)]
    table = {(a, c): {l: v for l, v in enumerate(cc) if v} for (a, c), cc in brackets.items() if a < c}
    return LieBialgebra.make(labels, {key: v for key, v in table.items() if v}, cobrackets)


def _bullet_value(Q: QuantizedFunctionAlgebra, f_series: List[Function], a: Mono, y: Vec, k: int) -> Dict:
    """Coefficients of h^k in f(a . y) split as (known part from f_0..f_{k-1}, linear form in f_k)."""
    known = Fraction(0)
    linear: Dict[Mono, Fraction] = {}
    for b, cb in y.items():
        s = Q.bullet(a, b)
        for j in range(k + 1):
            for m, c in s[j].items():
                if j == 0:
                    linear[m] = linear.get(m, 0) + cb * c * mono_factorial(m)
                else:
                    fv = f_series[k - j].get(m) if k - j < len(f_series) else None
                    if fv:
                        known += cb * c * fv * mono_factorial(m)
    return {"known": known, "linear": linear}


def split_quantization(b: LieBialgebra, h_plus: Sequence[Sequence], N: int = 3, D: int = 4,
                       twist: str = "fiber", associator: Optional[AssociatorSeries] = None,
                       group: Optional[QuantizedFunctionAlgebra] = None) -> SplitQuantization:
    """Quantized G+/H+ for a sub-bialgebra h+ of g+.

    T is U_h(g+) modulo the right ideal generated by the augmentation ideal
    of U_h(h+), embedded through the quantized inclusion. Functions on T are
    the f with f(a . y) = epsilon(y) f(a); they are found order by order as
    lifts of the classical invariants and closed under the group's star
    product.
    """
    sub = _sub_bialgebra(b, h_plus) if len(h_plus) else None
    Q = group or build_quantization(b, N, D, twist, associator=associator)
    N = Q.N
    n = b.dim
    # coproduct legs at order k reach degree |beta| + k, so invariants are
    # carried N degrees beyond the degree at which identities are compared
    cap = D + N
    monos = Q.basis(cap)
    if sub is not None:
        incl = BialgebraMorphism.make(sub, b, [[Fraction(r[i]) for r in h_plus] for i in range(n)])
        gens = [_pullback_pair(incl, None, Q, beta) for beta in monomials_upto(sub.dim, cap, 1)]
    else:
        incl = BialgebraMorphism.make(LieBialgebra.make([]), b, [() for _ in range(n)])
        gens = []

    # f(a . y) = 0 for y in the augmentation ideal, |a| + |y| <= cap
    conds = [(a, y) for y in gens for a in monos if mono_degree(a) + max(map(mono_degree, y)) <= cap]
    col = {m: i for i, m in enumerate(monos)}
    rows0 = []
    for a, y in conds:
        lin = _bullet_value(Q, [], a, y, 0)["linear"]
        rows0.append({col[m]: c for m, c in lin.items() if m in col and c})
    kernel = [v for v in nullspace(rows0, len(monos)) if any(mono_degree(monos[j]) <= D for j in v)]
    kernel.sort(key=lambda v: min(v))
    basis: List[List[Function]] = []
    for v in kernel:
        series = [{monos[j]: c for j, c in v.items() if c}]
        for k in range(1, N + 1):
            prob = LinearProblem(unknowns=list(monos))
            for a, y in conds:
                part = _bullet_value(Q, series, a, y, k)
                prob.add_equation({m: c for m, c in part["linear"].items() if m in col}, -part["known"])
            sol = solve(prob)
            if not sol.consistent:
                raise InternalError(f"invariant lift obstructed at order {k}")
            series.append({m: v for m, v in sol.values.items() if v})
        basis.append(series)
    low = [{m: c for m, c in f[0].items() if mono_degree(m) <= D} for f in basis]
    if len(nullspace([{i: f.get(m, 0) for i, f in enumerate(low) if f.get(m)} for m in Q.basis(D)], len(low))):
        raise TruncationError(f"invariant basis degenerates at degree {D}; raise the degree")

    table = {}
    for i in range(len(basis)):
        for j in range(len(basis)):
            table[(i, j)] = _expand_product(Q, basis, i, j, D)
    return SplitQuantization(Q, incl, basis, table, D)


def _series_product(Q: QuantizedFunctionAlgebra, A: List[Function], B: List[Function], D: int) -> List[Function]:
    N = Q.N
    out: List[Function] = [dict() for _ in range(N + 1)]
    for i in range(N + 1):
        for j in range(N + 1 - i):
            if A[i] and B[j]:
                s = star_product(A[i], B[j], Q, D)
                for l in range(N + 1 - i - j):
                    vaccumulate(out[i + j + l], s[l])
    return out


def _expand_product(Q, basis, i, j, D) -> Dict[int, List[Fraction]]:
    """Coefficients c_l(h) with basis_i * basis_j = sum_l c_l basis_l, degree by degree in h."""
    N = Q.N
    target = _series_product(Q, basis[i], basis[j], D)
    rest = [dict(t) for t in target]
    coeffs = {l: [Fraction(0)] * (N + 1) for l in range(len(basis))}
    for k in range(N + 1):
        prob = LinearProblem(unknowns=list(range(len(basis))))
        keys = sorted(m for m in set().union(*(b[0].keys() for b in basis), rest[k].keys()) if mono_degree(m) <= D)
        for m in keys:
            prob.add_equation({l: basis[l][0].get(m, 0) for l in range(len(basis)) if basis[l][0].get(m)},
                              rest[k].get(m, 0))
        sol = solve(prob)
        if not sol.consistent:
            raise InternalError(f"invariant functions not closed under * at order {k}")
        for l, c in sol.values.items():
            if not c:
                continue
            coeffs[l][k] = c
            for kk in range(k, N + 1):
                vaccumulate(rest[kk], {m: v for m, v in basis[l][kk - k].items() if mono_degree(m) <= D}, -c)
    return {l: c for l, c in coeffs.items() if any(c)}


def _structure_product(S: SplitQuantization, x: Dict[int, List[Fraction]], y: Dict[int, List[Fraction]]):
    N = S.N
    out: Dict[int, List[Fraction]] = {}
    for i, ci in x.items():
        for j, cj in y.items():
            for l, cl in S.table[(i, j)].items():
                acc = out.setdefault(l, [Fraction(0)] * (N + 1))
                for a in range(N + 1):
                    for b_ in range(N + 1 - a):
                        if ci[a] and cj[b_]:
                            for c in range(N + 1 - a - b_):
                                acc[a + b_ + c] += ci[a] * cj[b_] * cl[c]
    return {l: c for l, c in out.items() if any(c)}


def verify_split(S: SplitQuantization, b: LieBialgebra) -> Report:
    rep = Report("split homogeneous quantization")
    if S.inclusion.source.dim:
        rep.extend(validate_morphism(S.inclusion), "inclusion: ")
    Q, N, D = S.group, S.N, S.D
    k = len(S.basis)
    bad = None
    for i in range(k):
        for j in range(k):
            for l in range(k):
                e = lambda a: {a: [Fraction(int(t == 0)) for t in range(N + 1)]}
                left = _structure_product(S, _structure_product(S, e(i), e(j)), e(l))
                right = _structure_product(S, e(i), _structure_product(S, e(j), e(l)))
                if left != right:
                    bad = (i, j, l)
                    break
            if bad:
                break
        if bad:
            break
    rep.add("star product associative on invariants", bad is None, bad, degree=D, order=N)

    # equivariance: Delta(f) stays invariant in the right leg, f(a . (c . y)) = 0
    bad = None
    gens = [_pullback_pair(S.inclusion, None, Q, beta) for beta in monomials_upto(S.inclusion.source.dim, D, 1)]
    for idx, F in enumerate(S.basis):
        for a in Q.basis(D):
            for c in Q.basis(D - mono_degree(a)):
                for y in gens:
                    if mono_degree(a) + mono_degree(c) + max(map(mono_degree, y)) > D:
                        continue
                    for kk in range(N + 1):
                        v = Fraction(0)
                        for yb, cy in y.items():
                            cy_s = Q.bullet(c, yb)
                            for i in range(kk + 1):
                                for m, cm in cy_s[i].items():
                                    abm = Q.bullet(a, m)
                                    for j in range(kk + 1 - i):
                                        for p, cp in abm[j].items():
                                            fv = F[kk - i - j].get(p)
                                            if fv:
                                                v += cy * cm * cp * fv * mono_factorial(p)
                        if v:
                            bad = (idx, list(a), list(c), kk)
                            break
                    if bad:
                        break
                if bad:
                    break
            if bad:
                break
        if bad:
            break
    rep.add("coaction preserves invariants", bad is None, bad, degree=D, order=N)
    w = check_homomorphism(Q, D)
    rep.add("coaction is an algebra map", w is None, w, degree=D, order=N)

    bad = None
    for i in range(k):
        for j in range(k):
            f0, g0 = S.basis[i][0], S.basis[j][0]
            fg = star_product(f0, g0, Q, D)[1]
            gf = star_product(g0, f0, Q, D)[1]
            skew = {m: v / 2 for m, v in fg.items()}
            vaccumulate(skew, {m: v / 2 for m, v in gf.items()}, -1)
            target = {m: v / 2 for m, v in poisson_bracket_formal_group(b, f0, g0, D).items()}
            if skew != target:
                bad = (i, j)
    rep.add("skew h^1 layer equals half the group bracket", bad is None, bad, degree=D)
    return rep


def split_structure_table(S: SplitQuantization) -> Dict[Tuple[int, int], List[Function]]:
    """Star products of the lifted invariants, as function series on the group."""
    out = {}
    for i in range(len(S.basis)):
        for j in range(len(S.basis)):
            out[(i, j)] = _series_product(S.group, S.basis[i], S.basis[j], S.D)
    return out
