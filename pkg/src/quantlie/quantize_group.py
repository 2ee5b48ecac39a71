"""Quantization of a Poisson formal group: star product, Verma-module product, Hopf checks.

U_h(g+) is modelled on M- = U(g+)1-. Its coproduct is
Delta~(x) = J^-1 Delta_0(x)(1- (x) 1-) and its product is
x . y = X_y (1 (x) Y_x) Phi (1+ (x) 1+ (x) 1-), where X_y, Y_x are the
intertwiners M+ (x) M- -> M- sending 1+ (x) 1- to y1- and x1-. Functions
on the formal group pair with M- through PBW-dual coordinates, so the star
product is the transpose of Delta~ and the function coproduct the transpose
of the Verma product.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .associator import AssociatorSeries, solve_associator, specialize
from .bialgebra import BialgebraMorphism, DrinfeldDouble, InternalError, LieBialgebra, RMatrix, build_double, validate_morphism
from .kernel.enveloping import Mono, mono_degree, mono_factorial, monomials_upto
from .kernel.linsolve import LinearProblem, solve
from .kernel.series import HSeries, Vec, vaccumulate, vscale
from .modules import InducedModule, series_act, tensor_act
from .poisson import Function, poisson_bracket_formal_group, poly_mul, poly_partial
from .report import Report
from .twist import TwistSeries, VermaPair, fiber_functor_twist, solve_twist

VermaModule = InducedModule


class IntertwinerError(RuntimeError):
    pass


class Intertwiner:
    """The U(g)-map M+ (x) M- -> M- with 1+ (x) 1- -> value.

    M+ (x) M- is free of rank one over U(g) on 1+ (x) 1-, so the map is
    u (1+ (x) 1-) -> u . value, evaluated by pulling vectors back to U(g).
    """

    def __init__(self, pair: VermaPair, value: Vec):
        self.pair = pair
        self.value = dict(value)
        self._cache: Dict[Tuple[Mono, Mono], Vec] = {}

    def apply_basis(self, p: Mono, m: Mono) -> Vec:
        key = (p, m)
        hit = self._cache.get(key)
        if hit is None:
            u = self.pair.to_enveloping({key: Fraction(1)})
            hit = self.pair.minus.act(u, self.value)
            self._cache[key] = hit
        return hit

    def __call__(self, vec: Vec) -> Vec:
        out: Vec = {}
        for (p, m), c in vec.items():
            vaccumulate(out, self.apply_basis(p, m), c)
        return out

    def defect(self, generator: int, vec: Vec) -> Vec:
        """X(x.v) - x.X(v) for a generator x of g; zero for a genuine intertwiner."""
        env = self.pair.env
        g = {env.gen(generator): Fraction(1)}
        moved = tensor_act([self.pair.plus, self.pair.minus], env.delta0(g), vec)
        out = self(moved)
        vaccumulate(out, self.pair.minus.act(g, self(vec)), -1)
        return out


class QuantizedFunctionAlgebra:
    """Lazy tables of the deformed coproduct on M- and of the Verma product, truncated at h^N.

    ``D`` is the degree up to which identities are checked; tables are filled
    on demand for whatever degrees the checks reach.
    """

    def __init__(self, double: DrinfeldDouble, r: RMatrix, phi: HSeries, J: TwistSeries, N: int, D: int,
                 associator: Optional[AssociatorSeries] = None):
        self.double = double
        self.r = r
        self.phi = phi.truncate(N)
        self.J = J
        self.N = N
        self.D = D
        self.associator = associator
        self.n = double.n
        self.env = double.envelope()
        self.pair = VermaPair(double)
        self.minus = self.pair.minus
        self.plus = self.pair.plus
        self.Jinv = J.inverse().truncate(N)
        self._dt: Dict[Mono, HSeries] = {}
        self._dtm: Dict[Mono, HSeries] = {}
        self._bullet: Dict[Tuple[Mono, Mono], HSeries] = {}
        self._inter: Dict[Mono, Intertwiner] = {}
        self._w: Optional[HSeries] = None

    # coordinates

    def full(self, beta: Mono) -> Mono:
        return tuple(beta) + (0,) * self.n

    def short(self, m: Mono) -> Mono:
        return m[: self.n]

    def in_minus(self, m: Mono) -> bool:
        return not any(m[self.n:])

    def basis(self, degree: Optional[int] = None, min_degree: int = 0) -> List[Mono]:
        return monomials_upto(self.n, self.D if degree is None else degree, min_degree)

    # coproduct on M-, route 1: products in U(g)^{(x)2}

    def delta_tilde(self, beta: Mono) -> HSeries:
        """J^-1 Delta_0(x^beta) applied to 1- (x) 1-, keyed by pairs of g+ exponents."""
        hit = self._dt.get(beta)
        if hit is None:
            d0 = self.env.delta0_mono(self.full(beta))
            coeffs = []
            for k in range(self.N + 1):
                prod = self.env.tmul(self.Jinv[k], d0) if self.Jinv[k] else {}
                coeffs.append({(self.short(a), self.short(b)): c for (a, b), c in prod.items()
                               if self.in_minus(a) and self.in_minus(b)})
            hit = HSeries(coeffs, self.N)
            self._dt[beta] = hit
        return hit

    # coproduct on M-, route 2: i_-(x) built generator by generator, J^-1 acting on M- (x) M-

    def i_minus(self, beta: Mono) -> Vec:
        M = self.minus
        vec = {(M.vacuum, M.vacuum): Fraction(1)}
        for i in reversed([k for k, e in enumerate(beta) for _ in range(e)]):
            g = {self.env.gen(i): Fraction(1)}
            vec = tensor_act([M, M], self.env.delta0(g), vec)
        return vec

    def delta_tilde_module(self, beta: Mono) -> HSeries:
        hit = self._dtm.get(beta)
        if hit is None:
            M = self.minus
            base = self.i_minus(beta)
            coeffs = []
            for k in range(self.N + 1):
                v = tensor_act([M, M], self.Jinv[k], base) if self.Jinv[k] else {}
                coeffs.append({(self.short(a), self.short(b)): c for (a, b), c in v.items()})
            hit = HSeries(coeffs, self.N)
            self._dtm[beta] = hit
        return hit

    # Verma product

    def intertwiner(self, beta: Mono) -> Intertwiner:
        hit = self._inter.get(beta)
        if hit is None:
            hit = Intertwiner(self.pair, {self.full(beta): Fraction(1)})
            self._inter[beta] = hit
        return hit

    def phi_vacuum(self) -> HSeries:
        """Phi (1+ (x) 1+ (x) 1-)."""
        if self._w is None:
            P, M = self.plus, self.minus
            v = HSeries.constant({(P.vacuum, P.vacuum, M.vacuum): Fraction(1)}, self.N)
            self._w = series_act([P, P, M], self.phi, v)
        return self._w

    def bullet(self, a: Mono, b: Mono) -> HSeries:
        """x^a . x^b as a series of g+ PBW vectors."""
        key = (a, b)
        hit = self._bullet.get(key)
        if hit is None:
            X = self.intertwiner(b)
            Y = self.intertwiner(a)
            coeffs = []
            for w in self.phi_vacuum().coeffs:
                out: Vec = {}
                for (p1, p2, m), c in w.items():
                    for m2, c2 in Y.apply_basis(p2, m).items():
                        vaccumulate(out, X.apply_basis(p1, m2), c * c2)
                coeffs.append({self.short(m): c for m, c in out.items()})
            hit = HSeries(coeffs, self.N)
            self._bullet[key] = hit
        return hit

    def bullet_series(self, x: HSeries, y: HSeries) -> HSeries:
        """Product of two series of U(g+) vectors."""
        out = HSeries.zero(min(x.order, y.order, self.N))
        for i in range(out.order + 1):
            for a, ca in x[i].items():
                for j in range(out.order + 1 - i):
                    for b, cb in y[j].items():
                        t = self.bullet(a, b)
                        for k in range(out.order + 1 - i - j):
                            vaccumulate(out.coeffs[i + j + k], t[k], ca * cb)
        return out

    def delta_tilde_series(self, x: HSeries) -> HSeries:
        out = HSeries.zero(min(x.order, self.N))
        for i in range(out.order + 1):
            for a, ca in x[i].items():
                t = self.delta_tilde(a)
                for k in range(out.order + 1 - i):
                    vaccumulate(out.coeffs[i + k], t[k], ca)
        return out


def _pair(f: Function, m: Mono) -> Fraction:
    c = f.get(m)
    return c * mono_factorial(m) if c else Fraction(0)


def _pair_tensor(fs: Sequence[Function], t: Vec) -> Fraction:
    s = Fraction(0)
    for key, c in t.items():
        v = c
        for f, m in zip(fs, key):
            v *= _pair(f, m)
            if not v:
                break
        s += v
    return s


def _from_values(values: Dict[Mono, Fraction]) -> Function:
    return {m: Fraction(v) / mono_factorial(m) for m, v in values.items() if v}


def build_quantization(b: LieBialgebra, N: int = 3, D: int = 4, twist: str = "fiber",
                       gauge: str = "even", associator: Optional[AssociatorSeries] = None,
                       J: Optional[TwistSeries] = None) -> QuantizedFunctionAlgebra:
    double, r = build_double(b)
    env = double.envelope()
    if associator is None:
        associator = solve_associator(N, gauge)
    phi = specialize(associator.truncated(N), env, r.omega())
    if J is None:
        if twist == "fiber":
            J = fiber_functor_twist(phi, r, N)
        elif twist == "solved":
            J = solve_twist(phi, r, N)
        else:
            raise ValueError(f"unknown twist method {twist!r}")
    return QuantizedFunctionAlgebra(double, r, phi, J, N, D, associator)


# -- operations on functions ----------------------------------------------------

def star_product(f: Function, g: Function, Q: QuantizedFunctionAlgebra, D: Optional[int] = None) -> HSeries:
    """<f*g, x^beta> = (f (x) g)(J^-1 Delta_0(x^beta)(1- (x) 1-)) for |beta| <= D."""
    D = Q.D if D is None else D
    coeffs = [dict() for _ in range(Q.N + 1)]
    for beta in Q.basis(D):
        t = Q.delta_tilde(beta)
        for k in range(Q.N + 1):
            v = _pair_tensor((f, g), t[k])
            if v:
                coeffs[k][beta] = v
    return HSeries([_from_values(c) for c in coeffs], Q.N)


def star_product_module(f: Function, g: Function, Q: QuantizedFunctionAlgebra, D: Optional[int] = None) -> HSeries:
    """Same product computed as the transpose of J^-1 i_-(x) on M- (x) M-."""
    D = Q.D if D is None else D
    coeffs = [dict() for _ in range(Q.N + 1)]
    for beta in Q.basis(D):
        t = Q.delta_tilde_module(beta)
        for k in range(Q.N + 1):
            v = _pair_tensor((f, g), t[k])
            if v:
                coeffs[k][beta] = v
    return HSeries([_from_values(c) for c in coeffs], Q.N)


def env_deformed_product(x: Vec, y: Vec, Q: QuantizedFunctionAlgebra) -> HSeries:
    """x . y for elements of U(g+) (keys: g+ exponent tuples)."""
    out = HSeries.zero(Q.N)
    for a, ca in x.items():
        for b, cb in y.items():
            t = Q.bullet(a, b)
            for k in range(Q.N + 1):
                vaccumulate(out.coeffs[k], t[k], ca * cb)
    return out


def function_coproduct(f: Function, Q: QuantizedFunctionAlgebra, D: Optional[int] = None) -> HSeries:
    """Delta(f)(x^a (x) x^b) = f(x^a . x^b) for |a| + |b| <= D, keyed by (a, b)."""
    D = Q.D if D is None else D
    coeffs = [dict() for _ in range(Q.N + 1)]
    for a in Q.basis(D):
        for b in Q.basis(D - mono_degree(a)):
            t = Q.bullet(a, b)
            for k in range(Q.N + 1):
                v = sum((c * _pair(f, m) for m, c in t[k].items()), Fraction(0))
                if v:
                    coeffs[k][(a, b)] = v / (mono_factorial(a) * mono_factorial(b))
    return HSeries(coeffs, Q.N)


# -- Hopf axioms --------------------------------------------------------------------

def _restrict(t: Vec, D: int) -> Vec:
    return {k: c for k, c in t.items() if all(mono_degree(m) <= D for m in k)}


def _restrict_series(s: HSeries, D: int) -> List[Vec]:
    return [_restrict(c, D) for c in s.coeffs]


def _first_difference(a: HSeries, b: HSeries, D: int):
    for k in range(min(a.order, b.order) + 1):
        x = _restrict(a[k], D)
        y = _restrict(b[k], D)
        if x != y:
            return k
    return None


def _tensor_apply(series: HSeries, leg: int, fn: Callable[[Mono], HSeries], width: int) -> HSeries:
    """Replace leg ``leg`` of every key by the series fn(key[leg]) (keys of ``width`` legs)."""
    N = series.order
    out = HSeries.zero(N)
    for i in range(N + 1):
        for key, c in series[i].items():
            t = fn(key[leg])
            for k in range(N + 1 - i):
                for sub, v in t[k].items():
                    sub = sub if isinstance(sub[0], tuple) else (sub,)
                    new = key[:leg] + tuple(sub) + key[leg + 1:]
                    vaccumulate(out.coeffs[i + k], {new: c * v})
    return out


def check_star_associativity(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    """(f*g)*k = f*(g*k) for all coordinate monomials of degree <= D.

    Evaluated on the dual side: both sides paired with x^beta are
    (f(x)g(x)k) of the two iterated coproducts of x^beta, so comparing those
    on legs of degree <= D covers every monomial triple at once.
    Returns None or (order, beta).
    """
    D = Q.D if D is None else D
    for beta in Q.basis(D):
        t = Q.delta_tilde(beta)
        left = _tensor_apply(t, 0, Q.delta_tilde, 2)
        right = _tensor_apply(t, 1, Q.delta_tilde, 2)
        k = _first_difference(left, right, D)
        if k is not None:
            return k, list(beta)
    return None


def _bullet_keyed(Q: QuantizedFunctionAlgebra, a: Mono, b: Mono) -> HSeries:
    s = Q.bullet(a, b)
    return HSeries([{(m,): c for m, c in v.items()} for v in s.coeffs], s.order)


def check_coproduct_coassociativity(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    """(Delta(x)id)Delta(f) = (id(x)Delta)Delta(f), i.e. (a.b).c = a.(b.c) for |a|+|b|+|c| <= D."""
    D = Q.D if D is None else D
    monos = Q.basis(D, 1)
    for a in monos:
        for b in monos:
            for c in monos:
                if mono_degree(a) + mono_degree(b) + mono_degree(c) > D:
                    continue
                ab = Q.bullet(a, b)
                left = Q.bullet_series(ab, HSeries.constant({c: Fraction(1)}, Q.N))
                bc = Q.bullet(b, c)
                right = Q.bullet_series(HSeries.constant({a: Fraction(1)}, Q.N), bc)
                for k in range(Q.N + 1):
                    x = {m: v for m, v in left[k].items() if mono_degree(m) <= D}
                    y = {m: v for m, v in right[k].items() if mono_degree(m) <= D}
                    if x != y:
                        return k, [list(a), list(b), list(c)]
    return None


def check_counit(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    D = Q.D if D is None else D
    unit = (0,) * Q.n
    for a in Q.basis(D):
        target = HSeries.constant({a: Fraction(1)}, Q.N)
        if Q.bullet(unit, a) != target or Q.bullet(a, unit) != target:
            return "unit of the product", list(a)
        t = Q.delta_tilde(a)
        left = HSeries([{k[1]: c for k, c in v.items() if k[0] == unit} for v in t.coeffs], Q.N)
        right = HSeries([{k[0]: c for k, c in v.items() if k[1] == unit} for v in t.coeffs], Q.N)
        if left != target or right != target:
            return "counit of the coproduct", list(a)
    return None


def check_homomorphism(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    """Delta(f*g) = Delta(f)*Delta(g); dually Delta~(a.b) = Delta~(a).Delta~(b) on legs of degree <= D."""
    D = Q.D if D is None else D
    monos = Q.basis(D, 1)
    for a in monos:
        for b in monos:
            if mono_degree(a) + mono_degree(b) > D:
                continue
            left = Q.delta_tilde_series(Q.bullet(a, b))
            da, db = Q.delta_tilde(a), Q.delta_tilde(b)
            right = HSeries.zero(Q.N)
            for i in range(Q.N + 1):
                for (a1, a2), c1 in da[i].items():
                    for j in range(Q.N + 1 - i):
                        for (b1, b2), c2 in db[j].items():
                            s1 = Q.bullet(a1, b1)
                            s2 = Q.bullet(a2, b2)
                            for k in range(Q.N + 1 - i - j):
                                for l in range(Q.N + 1 - i - j - k):
                                    for m1, e1 in s1[k].items():
                                        for m2, e2 in s2[l].items():
                                            vaccumulate(right.coeffs[i + j + k + l], {(m1, m2): c1 * c2 * e1 * e2})
            k = _first_difference(left, right, D)
            if k is not None:
                return k, [list(a), list(b)]
    return None


def solve_antipode(Q: QuantizedFunctionAlgebra, D: Optional[int] = None) -> Dict[Mono, HSeries]:
    """s(a) with sum s(a_1).a_2 = eps(a) 1, solved by recursion on (h-order, degree)."""
    D = Q.D if D is None else D
    unit = (0,) * Q.n
    memo: Dict[Tuple[Mono, int], Vec] = {}

    def s(a: Mono, k: int) -> Vec:
        key = (a, k)
        if key in memo:
            return memo[key]
        if a == unit:
            val = {unit: Fraction(1)} if k == 0 else {}
            memo[key] = val
            return val
        memo[key] = None  # guards against a cyclic recursion
        acc: Vec = {}
        t = Q.delta_tilde(a)
        for i in range(k + 1):
            for (a1, a2), c in t[i].items():
                if i == 0 and a1 == a:
                    continue  # the term being solved for: s(a).1 = s(a)
                for j in range(k - i + 1):
                    sv = s(a1, j) if (a1, j) != (a, k) else None
                    if sv is None:
                        raise InternalError("antipode recursion is not triangular")
                    for m, cm in sv.items():
                        prod = Q.bullet(m, a2)
                        vaccumulate(acc, prod[k - i - j], c * cm)
        val = vscale(acc, -1)
        memo[key] = val
        return val

    out = {}
    for a in Q.basis(D):
        out[a] = HSeries([s(a, k) for k in range(Q.N + 1)], Q.N)
    return out


def check_antipode(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    """Solve the left antipode equation and verify the right one: sum a_1.s(a_2) = eps(a) 1."""
    D = Q.D if D is None else D
    S = solve_antipode(Q, D + Q.N)
    unit = (0,) * Q.n
    for a in Q.basis(D):
        t = Q.delta_tilde(a)
        acc = HSeries.zero(Q.N)
        for i in range(Q.N + 1):
            for (a1, a2), c in t[i].items():
                sa = S.get(a2)
                if sa is None:
                    sa = solve_antipode(Q, mono_degree(a2))[a2]
                prod = Q.bullet_series(HSeries.constant({a1: Fraction(1)}, Q.N), sa)
                for k in range(Q.N + 1 - i):
                    vaccumulate(acc.coeffs[i + k], prod[k], c)
        target = HSeries.constant({unit: Fraction(1)} if a == unit else {}, Q.N)
        for k in range(Q.N + 1):
            x = {m: v for m, v in acc[k].items() if mono_degree(m) <= D}
            if x != target[k]:
                return k, list(a)
    return None


def verify_hopf(Q: QuantizedFunctionAlgebra, antipode: bool = False, D: Optional[int] = None) -> Report:
    D = Q.D if D is None else D
    rep = Report("quantized function algebra")
    w = check_star_associativity(Q, D)
    rep.add("star associativity", w is None, w and {"order": w[0], "beta": w[1]}, order=w and w[0], degree=D)
    w = check_coproduct_coassociativity(Q, D)
    rep.add("coproduct coassociativity", w is None, w and {"order": w[0], "monomials": w[1]}, order=w and w[0], degree=D)
    w = check_counit(Q, D)
    rep.add("unit and counit", w is None, w and {"law": w[0], "monomial": w[1]}, degree=D)
    w = check_homomorphism(Q, D)
    rep.add("coproduct is multiplicative", w is None, w and {"order": w[0], "monomials": w[1]}, order=w and w[0], degree=D)
    if antipode:
        w = check_antipode(Q, D)
        rep.add("antipode", w is None, w and {"order": w[0], "monomial": w[1]}, order=w and w[0], degree=D)
    return rep


def check_semiclassical(Q: QuantizedFunctionAlgebra, b: LieBialgebra, D: Optional[int] = None) -> Report:
    """h^0 layers are classical, the h^1 skew part of * is the Poisson bracket, Delta has no h^1 term."""
    D = Q.D if D is None else D
    rep = Report("semiclassical limit")
    monos = Q.basis(D)
    bad0 = bad1 = bad_sym = None
    for f in monos:
        for g in monos:
            s = star_product({f: Fraction(1)}, {g: Fraction(1)}, Q, D)
            if s[0] != poly_mul({f: Fraction(1)}, {g: Fraction(1)}, D):
                bad0 = bad0 or (list(f), list(g))
            if Q.N >= 1:
                t = star_product({g: Fraction(1)}, {f: Fraction(1)}, Q, D)
                skew = dict(s[1])
                vaccumulate(skew, t[1], -1)
                pb = poisson_bracket_formal_group(b, {f: Fraction(1)}, {g: Fraction(1)}, D)
                if skew != pb:
                    bad1 = bad1 or (list(f), list(g))
                sym = dict(s[1])
                vaccumulate(sym, t[1])
                if sym:
                    bad_sym = bad_sym or (list(f), list(g))
    rep.add("h^0 of * is the pointwise product", bad0 is None, bad0, order=0, degree=D)
    if Q.N >= 1:
        rep.add("h^1 skew part of * is the Poisson bracket", bad1 is None, bad1, order=1, degree=D)
        rep.add("h^1 symmetric part of * vanishes", bad_sym is None, bad_sym, order=1, degree=D)
    bad = None
    bad_first = None
    for a in Q.basis(D):
        for c in Q.basis(D - mono_degree(a)):
            t = Q.bullet(a, c)
            classical = Q.env.mono_mul(Q.full(a), Q.full(c))
            if t[0] != {Q.short(m): v for m, v in classical.items()}:
                bad = bad or (list(a), list(c))
            if Q.N >= 1 and t[1]:
                bad_first = bad_first or (list(a), list(c))
    rep.add("h^0 of Delta is the group coproduct", bad is None, bad, order=0, degree=D)
    if Q.N >= 1:
        rep.add("h^1 of Delta vanishes", bad_first is None, bad_first, order=1, degree=D)
    return rep


def check_duality(Q: QuantizedFunctionAlgebra, D: Optional[int] = None):
    """Star product from J (products in U(g)^{(x)2}) against J^-1 i_- computed on M- (x) M-."""
    D = Q.D if D is None else D
    for beta in Q.basis(D):
        if Q.delta_tilde(beta) != Q.delta_tilde_module(beta):
            return list(beta)
    return None


# -- locality: bidifferential operators ---------------------------------------------

@dataclass
class DiffOperator:
    """sum_gamma p_gamma(u) d^gamma with polynomial coefficients truncated at ``cap``."""

    n: int
    coeffs: Dict[Mono, Function]
    cap: int

    @property
    def order(self) -> int:
        return max((mono_degree(g) for g, p in self.coeffs.items() if p), default=-1)

    def apply(self, f: Function, cap: Optional[int] = None) -> Function:
        cap = self.cap if cap is None else cap
        out: Function = {}
        for gamma, p in self.coeffs.items():
            df = dict(f)
            for i, e in enumerate(gamma):
                for _ in range(e):
                    df = poly_partial(df, i)
            if df:
                vaccumulate(out, poly_mul(p, df, cap))
        return out


@dataclass
class BiDiffOperator:
    """sum_i c_i p(D_i f . D'_i g)."""

    terms: List[Tuple[Fraction, DiffOperator, DiffOperator]]
    order_bound: int
    label: str = ""

    def apply(self, f: Function, g: Function, cap: int) -> Function:
        out: Function = {}
        for c, A, B in self.terms:
            vaccumulate(out, poly_mul(A.apply(f, cap), B.apply(g, cap), cap), c)
        return out

    @property
    def order(self) -> int:
        return max((A.order + B.order for _, A, B in self.terms), default=-1)


def _transpose_action(Q: QuantizedFunctionAlgebra, u: Mono, cap: int) -> Callable[[Function], Function]:
    """f -> u^T f, (u^T f)(m) = f(u m) on M- (computed exactly for |m| <= cap)."""
    M = Q.minus
    images = {beta: M.act_mono(u, Q.full(beta)) for beta in Q.basis(cap)}

    def op(f: Function) -> Function:
        vals = {}
        for beta, img in images.items():
            v = sum((c * _pair(f, Q.short(m)) for m, c in img.items()), Fraction(0))
            if v:
                vals[beta] = v
        return _from_values(vals)

    return op


def differential_normal_form(n: int, op: Callable[[Function], Function], cap: int) -> DiffOperator:
    """L = sum_gamma (1/gamma!) c_gamma d^gamma with c_gamma = sum_delta C(gamma,delta) (-u)^(gamma-delta) L(u^delta)."""
    coeffs: Dict[Mono, Function] = {}
    for gamma in monomials_upto(n, cap):
        c: Function = {}
        for delta in monomials_upto(n, mono_degree(gamma)):
            if any(d > g for d, g in zip(delta, gamma)):
                continue
            rest = tuple(g - d for g, d in zip(gamma, delta))
            binom = 1
            for g, d in zip(gamma, delta):
                binom *= comb(g, d)
            sign = -1 if mono_degree(rest) % 2 else 1
            Ld = op({delta: Fraction(1)})
            vaccumulate(c, poly_mul({rest: Fraction(1)}, Ld, cap), sign * binom)
        if c:
            coeffs[gamma] = vscale(c, Fraction(1, mono_factorial(gamma)))
    return DiffOperator(n, coeffs, cap)


class LocalityError(InternalError):
    pass


def extract_bidiff(Q: QuantizedFunctionAlgebra, k: int, D: Optional[int] = None) -> BiDiffOperator:
    """The h^k coefficient of * as sum_i c_i p(u_i^T f . v_i^T g) over the terms of (J^-1)_k.

    Each u^T is materialized as a differential operator and the whole
    operator is checked against the star table on every basis function pair.
    """
    D = Q.D if D is None else D
    if k > Q.N:
        raise ValueError(f"k={k} exceeds the computed order {Q.N}")
    cache: Dict[Mono, DiffOperator] = {}

    def op_for(u: Mono) -> DiffOperator:
        if u not in cache:
            cache[u] = differential_normal_form(Q.n, _transpose_action(Q, u, D), D)
        return cache[u]

    terms = []
    for (u, v), c in sorted(Q.Jinv[k].items()):
        terms.append((c, op_for(u), op_for(v)))
    bd = BiDiffOperator(terms, 2 * k, f"h^{k}")
    for A in list(cache.values()):
        if A.order > D:
            raise LocalityError("operator order reached the truncation degree")
    for f in Q.basis(D):
        for g in Q.basis(D):
            want = star_product({f: Fraction(1)}, {g: Fraction(1)}, Q, D)[k]
            got = bd.apply({f: Fraction(1)}, {g: Fraction(1)}, D)
            if want != got:
                raise LocalityError(f"bidifferential form of the h^{k} coefficient disagrees at {f},{g}")
    return bd


def r_matrix_bidiff(Q: QuantizedFunctionAlgebra, D: Optional[int] = None) -> BiDiffOperator:
    """-1/2 sum_j x_j^T (x) xi_j^T: the first-order operator predicted from J = 1 + h r/2."""
    D = Q.D if D is None else D
    env = Q.env
    terms = []
    for j in range(Q.n):
        A = differential_normal_form(Q.n, _transpose_action(Q, env.gen(j), D), D)
        B = differential_normal_form(Q.n, _transpose_action(Q, env.gen(j + Q.n), D), D)
        terms.append((Fraction(-1, 2), A, B))
    return BiDiffOperator(terms, 2, "r")


def operators_agree(A: BiDiffOperator, B: BiDiffOperator, n: int, D: int):
    """None when A and B act identically on all coordinate monomial pairs of total degree <= D."""
    monos = monomials_upto(n, D)
    for f in monos:
        for g in monos:
            if mono_degree(f) + mono_degree(g) <= D:
                F, G = {f: Fraction(1)}, {g: Fraction(1)}
                if A.apply(F, G, D) != B.apply(F, G, D):
                    return list(f), list(g)
    return None


# -- functoriality -----------------------------------------------------------------

def _pullback(m: BialgebraMorphism, QS: QuantizedFunctionAlgebra, QT: QuantizedFunctionAlgebra, f: Function,
              D: int) -> Function:
    """(phi^* f)(a) = f(U(phi) a) on PBW monomials of the source."""
    env_t = QT.env
    vals = {}
    for beta in QS.basis(D):
        img = env_t.one()
        for i in [k for k, e in enumerate(beta) for _ in range(e)]:
            x = {env_t.gen(a): c for a, c in m.image(i).items()}
            img = env_t.mul(img, x)
        v = sum((c * _pair(f, QT.short(t)) for t, c in img.items() if QT.in_minus(t)), Fraction(0))
        if v:
            vals[beta] = v
    return _from_values(vals)


Gauge = List[Dict[Mono, Function]]  # theta_k on source monomials, k = 1..N (index 0 unused)


def _apply_gauge(theta: Optional[Gauge], f_series: List[Function], N: int, D: int) -> List[Function]:
    """theta applied to a series of functions: (theta F)_k = sum_{i+j=k} theta_i(F_j), theta_0 = id."""
    out = [dict(f) for f in f_series[: N + 1]]
    if not theta:
        return out
    for k in range(1, N + 1):
        for i in range(1, k + 1):
            th = theta[i]
            for beta, c in f_series[k - i].items():
                img = th.get(beta)
                if img:
                    vaccumulate(out[k], {m: v for m, v in img.items() if mono_degree(m) <= D}, c)
    return out


def _series_star(QS: QuantizedFunctionAlgebra, A: List[Function], B: List[Function], D: int) -> List[Function]:
    N = QS.N
    out = [dict() for _ in range(N + 1)]
    for i in range(N + 1):
        for j in range(N + 1 - i):
            if not A[i] or not B[j]:
                continue
            s = star_product(A[i], B[j], QS, D)
            for l in range(N + 1 - i - j):
                vaccumulate(out[i + j + l], s[l])
    return out


def _star_mismatch(m, QS, QT, D, theta: Optional[Gauge]):
    N = QS.N
    monos = QT.basis(D)
    pulled = {f: _pullback(m, QS, QT, {f: Fraction(1)}, D) for f in monos}
    for f in monos:
        for g in monos:
            if mono_degree(f) + mono_degree(g) > D:
                continue
            lhs_t = star_product({f: Fraction(1)}, {g: Fraction(1)}, QT, D)
            lhs = _apply_gauge(theta, [_pullback(m, QS, QT, c, D) for c in lhs_t.coeffs], N, D)
            A = _apply_gauge(theta, [pulled[f]] + [{}] * N, N, D)
            B = _apply_gauge(theta, [pulled[g]] + [{}] * N, N, D)
            rhs = _series_star(QS, A, B, D)
            for k in range(N + 1):
                if lhs[k] != rhs[k]:
                    return {"order": k, "f": list(f), "g": list(g)}
    return None


def _theta_fn(th: Dict[Mono, Function], F: Function, D: int) -> Function:
    out: Function = {}
    for beta, c in F.items():
        img = th.get(beta)
        if img:
            vaccumulate(out, {m: v for m, v in img.items() if mono_degree(m) <= D}, c)
    return out


def _gauge_equations(QS, D, data, theta: Gauge, S: Sequence[int], ell: int, prob: LinearProblem) -> None:
    """Order-ell equations, linear in theta_i for i in S; terms with two unknowns must not occur."""
    src = QS.basis(D)
    for A, B, P in data:
        rows: Dict[Mono, Dict] = {}
        known: Function = {}

        def theta_of(i, F):
            return dict(F) if i == 0 else _theta_fn(theta[i], F, D)

        for i in range(ell + 1):
            F = P[ell - i]
            if i in S:
                for beta, c in F.items():
                    for gamma in src:
                        vaccumulate(rows.setdefault(gamma, {}), {(i, beta, gamma): c})
            else:
                vaccumulate(known, theta_of(i, F), -1)
        for i in range(ell + 1):
            for j in range(ell + 1 - i):
                l = ell - i - j
                if i in S and j in S:
                    continue
                if i in S or j in S:
                    unk, other, side = (A, theta_of(j, B), 0) if i in S else (B, theta_of(i, A), 1)
                    if not other:
                        continue
                    idx = i if i in S else j
                    for gamma in src:
                        pair = ({gamma: Fraction(1)}, other) if side == 0 else (other, {gamma: Fraction(1)})
                        prod = star_product(pair[0], pair[1], QS, D)[l]
                        for beta, c in unk.items():
                            for mm, v in prod.items():
                                vaccumulate(rows.setdefault(mm, {}), {(idx, beta, gamma): -c * v})
                else:
                    X, Y = theta_of(i, A), theta_of(j, B)
                    if X and Y:
                        vaccumulate(known, star_product(X, Y, QS, D)[l])
        for mm in sorted(set(rows) | set(known)):
            prob.add_equation(rows.get(mm, {}), known.get(mm, 0))


def _solve_gauge(m, QS, QT, D) -> Optional[Gauge]:
    """Find theta order by order with theta(phi^*(f *_T g)) = theta(phi^* f) *_S theta(phi^* g).

    theta_k is only determined up to derivations, and a careless choice can
    obstruct the next order. The order-(k+1) equation is linear in
    (theta_k, theta_{k+1}) once theta_1 is fixed, so for k >= 2 both are
    solved together and theta_k kept; once 2k > N every remaining order is
    linear in the remaining unknowns and they are solved in one system.
    """
    N = QS.N
    src = QS.basis(D)
    monos = QT.basis(D)
    pulled = {f: _pullback(m, QS, QT, {f: Fraction(1)}, D) for f in monos}
    data = []
    for f in monos:
        for g in monos:
            if mono_degree(f) + mono_degree(g) <= D:
                P = star_product({f: Fraction(1)}, {g: Fraction(1)}, QT, D)
                data.append((pulled[f], pulled[g], [_pullback(m, QS, QT, c, D) for c in P.coeffs]))
    theta: Gauge = [dict() for _ in range(N + 1)]
    k = 1
    while k <= N:
        if 2 * k > N:
            S, keep = list(range(k, N + 1)), list(range(k, N + 1))
        elif k >= 2:
            S, keep = [k, k + 1], [k]
        else:
            S, keep = [k], [k]
        prob = LinearProblem(unknowns=[(i, b, c) for i in S for b in src for c in src])
        for ell in S:
            _gauge_equations(QS, D, data, theta, S, ell, prob)
        sol = solve(prob)
        if not sol.consistent:
            return None
        for (i, beta, gamma), v in sorted(sol.values.items()):
            if v and i in keep:
                theta[i].setdefault(beta, {})[gamma] = v
        k = max(keep) + 1
    return theta


def check_functoriality(m: BialgebraMorphism, N: int = 3, D: int = 4, twist: str = "fiber",
                        associator: Optional[AssociatorSeries] = None,
                        source: Optional[QuantizedFunctionAlgebra] = None,
                        target: Optional[QuantizedFunctionAlgebra] = None) -> Report:
    """phi^* intertwines * and Delta mod h^{N+1}, after an order-by-order gauge correction if needed.

    phi^* is the transpose of U(phi) on PBW monomials. When the star products
    do not match directly, a correction theta = id + sum h^k theta_k on source
    functions is solved degree-wise by a linear system; if none exists the
    check fails. The quantum checks run even for maps that are not bialgebra
    morphisms, so such controls fail at the quantum level as well.
    """
    rep = Report("functoriality")
    rep.extend(validate_morphism(m), "morphism: ")
    if associator is None:
        associator = solve_associator(N)
    QT = target or build_quantization(m.target, N, D, twist, associator=associator)
    QS = source or build_quantization(m.source, N, D, twist, associator=associator)

    theta: Optional[Gauge] = None
    bad = _star_mismatch(m, QS, QT, D, None)
    detail = "direct"
    if bad is not None:
        theta = _solve_gauge(m, QS, QT, D)
        if theta is not None:
            bad = _star_mismatch(m, QS, QT, D, theta)
            detail = "after gauge correction"
        else:
            detail = "no gauge correction exists"
    rep.add("pullback intertwines star products", bad is None, bad, detail, degree=D)

    bad = None
    monos = QT.basis(D)
    for f in monos:
        pulled = _apply_gauge(theta, [_pullback(m, QS, QT, {f: Fraction(1)}, D)] + [{}] * N, N, D)
        ds = HSeries.zero(N)
        for j in range(N + 1):
            if pulled[j]:
                c = function_coproduct(pulled[j], QS, D)
                for k in range(N + 1 - j):
                    vaccumulate(ds.coeffs[j + k], c[k])
        dt = function_coproduct({f: Fraction(1)}, QT, D + N)
        got = HSeries.zero(N)
        for k in range(N + 1):
            for a in QS.basis(D):
                for b in QS.basis(D - mono_degree(a)):
                    fa = _pullback_pair(m, QS, QT, a)
                    fb = _pullback_pair(m, QS, QT, b)
                    v = Fraction(0)
                    for ta, ca in fa.items():
                        for tb, cb in fb.items():
                            c = dt[k].get((ta, tb))
                            if c:
                                v += ca * cb * c * mono_factorial(ta) * mono_factorial(tb)
                    if v:
                        got.coeffs[k][(a, b)] = v / (mono_factorial(a) * mono_factorial(b))
        got = _gauge_tensor(theta, got, N, D)
        for k in range(N + 1):
            if got[k] != ds[k]:
                bad = {"order": k, "f": list(f)}
                break
        if bad:
            break
    rep.add("pullback intertwines coproducts", bad is None, bad, detail, degree=D)
    return rep


def _gauge_tensor(theta: Optional[Gauge], F: HSeries, N: int, D: int) -> HSeries:
    """(theta (x) theta) applied to a series of functions of two variables."""
    if not theta:
        return F
    out = HSeries.zero(N)
    for j in range(N + 1):
        for (a, b), c in F[j].items():
            la = _apply_gauge(theta, [{a: Fraction(1)}] + [{}] * N, N, D)
            lb = _apply_gauge(theta, [{b: Fraction(1)}] + [{}] * N, N, D)
            for p in range(N + 1 - j):
                for q in range(N + 1 - j - p):
                    for x, u in la[p].items():
                        for y, v in lb[q].items():
                            if mono_degree(x) + mono_degree(y) <= D:
                                vaccumulate(out.coeffs[j + p + q], {(x, y): c * u * v})
    return out


def _pullback_pair(m: BialgebraMorphism, QS: QuantizedFunctionAlgebra, QT: QuantizedFunctionAlgebra,
                   beta: Mono) -> Vec:
    """U(phi)(x^beta) in the target PBW basis of U(g+), keyed by short monomials."""
    env_t = QT.env
    img = env_t.one()
    for i in [k for k, e in enumerate(beta) for _ in range(e)]:
        x = {env_t.gen(a): c for a, c in m.image(i).items()}
        img = env_t.mul(img, x)
    return {QT.short(t): c for t, c in img.items() if QT.in_minus(t)}
