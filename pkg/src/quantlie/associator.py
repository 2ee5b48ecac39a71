"""Rational Drinfeld associators solved order by order in Drinfeld-Kohno algebras.

Elements of the free algebra on the generators ``t_ij`` are dicts keyed by
words (tuples of generator indices); the word length is the h-degree. The
associator itself is a series in two free variables A = t12, B = t23 whose
words use the letters 0 (A) and 1 (B).

Conventions fixed here and used everywhere downstream:

* R = exp(h t / 2).
* pentagon   Phi_{1,2,34} Phi_{12,3,4} = Phi_{2,3,4} Phi_{1,23,4} Phi_{1,2,3}
* hexagons   exp(h(t13+t23)/2) = Phi(t13,t12) R13 Phi(t13,t23)^-1 R23 Phi(t12,t23)
             exp(h(t12+t13)/2) = Phi(t23,t13)^-1 R13 Phi(t12,t13) R12 Phi(t12,t23)^-1
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

from .kernel.enveloping import Envelope
from .kernel.linsolve import Echelon, LinearProblem, solve
from .kernel.series import HSeries, Vec, vaccumulate, vscale
from .report import Report

Word = Tuple[int, ...]
MAX_DEGREE = 5


class AssociatorError(RuntimeError):
    pass


# -- free algebra helpers -----------------------------------------------------

def fmul(a: Vec, b: Vec, max_deg: int) -> Vec:
    out: Vec = {}
    for wa, ca in a.items():
        la = len(wa)
        for wb, cb in b.items():
            if la + len(wb) > max_deg:
                continue
            w = wa + wb
            nv = out.get(w, 0) + ca * cb
            if nv:
                out[w] = nv
            else:
                out.pop(w, None)
    return out


def finverse(a: Vec, max_deg: int) -> Vec:
    """Inverse of 1 + (higher degree terms), truncated."""
    if a.get((), 0) != 1:
        raise ValueError("free-algebra inverse needs constant term 1")
    x = {w: -c for w, c in a.items() if w}
    out: Vec = {(): Fraction(1)}
    power: Vec = {(): Fraction(1)}
    for _ in range(max_deg):
        power = fmul(power, x, max_deg)
        if not power:
            break
        vaccumulate(out, power)
    return out


def fexp(t: Vec, scale, max_deg: int) -> Vec:
    """exp(scale * t) for t homogeneous of degree 1."""
    out: Vec = {(): Fraction(1)}
    term: Vec = {(): Fraction(1)}
    for k in range(1, max_deg + 1):
        term = vscale(fmul(term, t, max_deg), Fraction(scale) / k)
        vaccumulate(out, term)
    return out


def substitute(series: Vec, images: Sequence[Vec], max_deg: int) -> Vec:
    """Replace letter i of every word by images[i] (degree-1 elements)."""
    cache: Dict[Word, Vec] = {(): {(): Fraction(1)}}

    def word_value(w: Word) -> Vec:
        hit = cache.get(w)
        if hit is None:
            hit = fmul(word_value(w[:-1]), images[w[-1]], max_deg)
            cache[w] = hit
        return hit

    out: Vec = {}
    for w, c in series.items():
        if len(w) <= max_deg:
            vaccumulate(out, word_value(w), c)
    return out


def degree_part(a: Vec, d: int) -> Vec:
    return {w: c for w, c in a.items() if len(w) == d}


# -- Drinfeld-Kohno algebras ----------------------------------------------------

class DKAlgebra:
    """Infinitesimal braid algebra on n strands, graded components by exact reduction."""

    def __init__(self, n: int):
        if n not in (2, 3, 4):
            raise ValueError("DK algebras are built for 2, 3 or 4 strands")
        self.n = n
        self.pairs: List[Tuple[int, int]] = list(combinations(range(1, n + 1), 2))
        self.index = {p: k for k, p in enumerate(self.pairs)}
        self.ngens = len(self.pairs)
        self._components: Dict[int, Tuple[Dict[Word, int], Echelon]] = {}

    def t(self, i: int, j: int) -> Vec:
        key = (min(i, j), max(i, j))
        return {(self.index[key],): Fraction(1)}

    def tsum(self, *pairs) -> Vec:
        out: Vec = {}
        for i, j in pairs:
            vaccumulate(out, self.t(i, j))
        return out

    def relations(self) -> List[Vec]:
        rels = []
        gens = self.pairs
        for (a, b), (c, d) in combinations(gens, 2):
            if len({a, b, c, d}) == 4:
                rels.append(self._comm(self.t(a, b), self.t(c, d)))
        for i, j in gens:
            for k in range(1, self.n + 1):
                if k in (i, j):
                    continue
                rels.append(self._comm(self.t(i, j), self.tsum((i, k), (j, k))))
        return rels

    @staticmethod
    def _comm(a: Vec, b: Vec) -> Vec:
        out = fmul(a, b, 2)
        vaccumulate(out, fmul(b, a, 2), -1)
        return out

    def _component(self, d: int):
        comp = self._components.get(d)
        if comp is not None:
            return comp
        words = list(product(range(self.ngens), repeat=d))
        col = {w: k for k, w in enumerate(words)}
        ech = Echelon()
        if d >= 2:
            rels = self.relations()
            for a in range(d - 1):
                for u in product(range(self.ngens), repeat=a):
                    for v in product(range(self.ngens), repeat=d - 2 - a):
                        for rel in rels:
                            row = {col[u + w + v]: c for w, c in rel.items()}
                            ech.add(row)
        comp = (col, ech)
        self._components[d] = comp
        return comp

    def basis(self, d: int) -> List[Word]:
        """Deterministic basis of the degree-d component: words that are not pivots."""
        col, ech = self._component(d)
        return [w for w, k in col.items() if k not in ech.pivots]

    def dim(self, d: int) -> int:
        return len(self.basis(d))

    def normal_form(self, a: Vec) -> Vec:
        """Reduce each homogeneous part modulo the relations; result keyed by basis words."""
        out: Vec = {}
        by_deg: Dict[int, Vec] = {}
        for w, c in a.items():
            by_deg.setdefault(len(w), {})[w] = c
        for d, part in by_deg.items():
            col, ech = self._component(d)
            words = list(col)
            row = ech.normal_form({col[w]: c for w, c in part.items()})
            for k, c in row.items():
                out[words[k]] = c
        return out

    def is_zero(self, a: Vec) -> bool:
        return not self.normal_form(a)

    def format(self, a: Vec) -> str:
        if not a:
            return "0"
        terms = []
        for w in sorted(a, key=lambda w: (len(w), w)):
            name = "".join(f"t{self.pairs[g][0]}{self.pairs[g][1]}" for g in w) or "1"
            terms.append(f"({a[w]}){name}")
        return " + ".join(terms)


@lru_cache(maxsize=None)
def dk(n: int) -> DKAlgebra:
    return DKAlgebra(n)


def dk_basis(n: int, d: int) -> List[Word]:
    if d > MAX_DEGREE:
        raise ValueError(f"degree {d} exceeds configured maximum {MAX_DEGREE}")
    return dk(n).basis(d)


# -- associator series --------------------------------------------------------

@dataclass(frozen=True)
class AssociatorSeries:
    """Phi = 1 + sum_{d>=2} h^d phi_d with phi_d a polynomial in A (letter 0), B (letter 1)."""

    order: int
    components: Tuple[Tuple[int, Tuple[Tuple[Word, Fraction], ...]], ...] = ()
    gauge: str = "even"

    @classmethod
    def from_dict(cls, order: int, comps: Dict[int, Vec], gauge: str = "even") -> "AssociatorSeries":
        frozen = tuple(
            (d, tuple(sorted((w, Fraction(c)) for w, c in comps[d].items() if c)))
            for d in sorted(comps)
            if d <= order
        )
        return cls(order, frozen, gauge)

    def component(self, d: int) -> Vec:
        for dd, terms in self.components:
            if dd == d:
                return dict(terms)
        return {}

    def as_free(self) -> Vec:
        out: Vec = {(): Fraction(1)}
        for d, terms in self.components:
            for w, c in terms:
                vaccumulate(out, {w: c})
        return out

    def with_component(self, d: int, comp: Vec) -> "AssociatorSeries":
        comps = {dd: dict(t) for dd, t in self.components}
        comps[d] = comp
        return AssociatorSeries.from_dict(max(self.order, d), comps, self.gauge)

    def truncated(self, order: int) -> "AssociatorSeries":
        comps = {dd: dict(t) for dd, t in self.components if dd <= order}
        return AssociatorSeries.from_dict(order, comps, self.gauge)

    def identifier(self) -> str:
        return f"rational-{self.gauge}-N{self.order}"


def trivial_associator(order: int) -> AssociatorSeries:
    return AssociatorSeries.from_dict(order, {})


def _phi_at(phi: Vec, a: Vec, b: Vec, N: int) -> Vec:
    return substitute(phi, [a, b], N)


def pentagon_free(phi: AssociatorSeries, N: Optional[int] = None) -> Vec:
    N = phi.order if N is None else N
    D = dk(4)
    p = phi.as_free()
    t = D.t
    lhs = fmul(_phi_at(p, t(1, 2), D.tsum((2, 3), (2, 4)), N),
               _phi_at(p, D.tsum((1, 3), (2, 3)), t(3, 4), N), N)
    rhs = fmul(fmul(_phi_at(p, t(2, 3), t(3, 4), N),
                    _phi_at(p, D.tsum((1, 2), (1, 3)), D.tsum((2, 4), (3, 4)), N), N),
               _phi_at(p, t(1, 2), t(2, 3), N), N)
    vaccumulate(lhs, rhs, -1)
    return lhs


def hexagon_free(phi: AssociatorSeries, sign: int = 1, N: Optional[int] = None) -> Tuple[Vec, Vec]:
    N = phi.order if N is None else N
    D = dk(3)
    p = phi.as_free()
    t = D.t
    s = Fraction(sign, 2)

    def R(*pairs):
        return fexp(D.tsum(*pairs), s, N)

    def P(a, b):
        return _phi_at(p, t(*a), t(*b), N)

    def Pinv(a, b):
        return finverse(P(a, b), N)

    chain1 = [P((1, 3), (1, 2)), R((1, 3)), Pinv((1, 3), (2, 3)), R((2, 3)), P((1, 2), (2, 3))]
    chain2 = [Pinv((2, 3), (1, 3)), R((1, 3)), P((1, 2), (1, 3)), R((1, 2)), Pinv((1, 2), (2, 3))]
    out = []
    for lhs_pairs, chain in ((((1, 3), (2, 3)), chain1), (((1, 2), (1, 3)), chain2)):
        acc: Vec = {(): Fraction(1)}
        for factor in chain:
            acc = fmul(acc, factor, N)
        res = R(*lhs_pairs)
        vaccumulate(res, acc, -1)
        out.append(res)
    return out[0], out[1]


def _graded(a: Vec, D: DKAlgebra, N: int) -> HSeries:
    nf = D.normal_form(a)
    coeffs = [dict() for _ in range(N + 1)]
    for w, c in nf.items():
        coeffs[len(w)][w] = c
    return HSeries(coeffs, N)


def pentagon_residual(phi: AssociatorSeries) -> HSeries:
    return _graded(pentagon_free(phi), dk(4), phi.order)


def hexagon_residual(phi: AssociatorSeries, sign: int = 1) -> Tuple[HSeries, HSeries]:
    h1, h2 = hexagon_free(phi, sign)
    return _graded(h1, dk(3), phi.order), _graded(h2, dk(3), phi.order)


def _residual_vector(phi: AssociatorSeries, d: int) -> Vec:
    """All degree-d residual coordinates (pentagon + both hexagons) keyed by tag."""
    out: Vec = {}
    for w, c in degree_part(dk(4).normal_form(degree_part(pentagon_free(phi, d), d)), d).items():
        out[("P", w)] = c
    h1, h2 = hexagon_free(phi, 1, d)
    for tag, h in (("H1", h1), ("H2", h2)):
        for w, c in dk(3).normal_form(degree_part(h, d)).items():
            out[(tag, w)] = c
    return out


def solve_associator(N: int = 3, gauge: str = "even") -> AssociatorSeries:
    """Order-by-order rational solution of the pentagon and hexagon equations."""
    if N > MAX_DEGREE:
        raise ValueError(f"N={N} exceeds configured maximum {MAX_DEGREE}")
    if gauge not in ("even", "zero-free"):
        raise ValueError(f"unknown gauge {gauge!r}")
    phi = trivial_associator(N)
    for d in range(2, N + 1):
        base = phi.truncated(d)
        r0 = _residual_vector(base, d)
        if gauge == "even" and d % 2 == 1 and not r0:
            continue
        words = list(product((0, 1), repeat=d))
        prob = LinearProblem(unknowns=words)
        columns = {}
        for w in words:
            rw = _residual_vector(base.with_component(d, {w: Fraction(1)}), d)
            vaccumulate(rw, r0, -1)
            columns[w] = rw
        keys = sorted({k for col in columns.values() for k in col} | set(r0), key=repr)
        for k in keys:
            prob.add_equation({w: col.get(k, 0) for w, col in columns.items()}, -r0.get(k, 0))
        # counit normalisation: Phi(A, 0) = Phi(0, B) = 1
        prob.add_equation({(0,) * d: Fraction(1)}, 0)
        prob.add_equation({(1,) * d: Fraction(1)}, 0)
        sol = solve(prob)
        if not sol.consistent:
            raise AssociatorError(f"associator equations inconsistent at order {d} (solver bug)")
        comp = {w: v for w, v in sol.values.items() if v}
        phi = phi.with_component(d, comp)
    return AssociatorSeries.from_dict(N, {d: phi.component(d) for d in range(2, N + 1)}, gauge)


# -- Lie elements ---------------------------------------------------------------

def lyndon_words(d: int, k: int = 2) -> List[Word]:
    """Lyndon words of length d over {0..k-1} (Duval's algorithm)."""
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        if m == d:
            out.append(tuple(w))
        while len(w) < d:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()
    return out


def _standard_bracketing(w: Word) -> Vec:
    if len(w) == 1:
        return {w: Fraction(1)}
    # split at the longest proper Lyndon suffix
    for i in range(1, len(w)):
        v = w[i:]
        if _is_lyndon(v):
            u = w[:i]
            a, b = _standard_bracketing(u), _standard_bracketing(v)
            out = fmul(a, b, len(w))
            vaccumulate(out, fmul(b, a, len(w)), -1)
            return out
    raise AssertionError("unreachable")


def _is_lyndon(w: Word) -> bool:
    return all(w < w[i:] + w[:i] for i in range(1, len(w)))


def hall_basis(d: int) -> List[Vec]:
    return [_standard_bracketing(w) for w in lyndon_words(d)]


def is_lie_element(p: Vec) -> bool:
    """Membership of a homogeneous element in the span of the degree-d Hall basis."""
    if not p:
        return True
    degs = {len(w) for w in p}
    if len(degs) != 1:
        return all(is_lie_element(degree_part(p, d)) for d in degs)
    d = degs.pop()
    basis = hall_basis(d)
    prob = LinearProblem(unknowns=list(range(len(basis))))
    words = sorted({w for b in basis for w in b} | set(p))
    for w in words:
        prob.add_equation({i: b.get(w, 0) for i, b in enumerate(basis)}, p.get(w, 0))
    return solve(prob).consistent


def log_series(phi: AssociatorSeries) -> Vec:
    N = phi.order
    x = {w: c for w, c in phi.as_free().items() if w}
    out: Vec = {}
    power: Vec = {(): Fraction(1)}
    for k in range(1, N + 1):
        power = fmul(power, x, N)
        vaccumulate(out, power, Fraction((-1) ** (k + 1), k))
    return out


def counit_specialization(phi: AssociatorSeries, letter: int) -> Vec:
    """Phi with one variable set to zero (letter 0 -> A=0, letter 1 -> B=0)."""
    return {w: c for w, c in phi.as_free().items() if letter not in w}


def verify_associator(phi: AssociatorSeries) -> Report:
    """Pentagon and both hexagons mod h^{N+1}, Lie-ness of the phi_d, counit specializations."""
    rep = Report("associator")
    N = phi.order
    res = pentagon_residual(phi)
    k = res.first_nonzero()
    rep.add("pentagon", k is None, k, order=N)
    for sign in (1, -1):
        h1, h2 = hexagon_residual(phi, sign)
        k = h1.first_nonzero()
        if k is None:
            k = h2.first_nonzero()
        rep.add(f"hexagon ({'+' if sign > 0 else '-'})", k is None, k, order=N)
    bad = [d for d, _ in phi.components if not is_lie_element(phi.component(d))]
    rep.add("phi_d are Lie elements", not bad, bad or None, order=N)
    bad = [letter for letter in (0, 1) if counit_specialization(phi, letter) != {(): Fraction(1)}]
    rep.add("counit specializations are 1", not bad, bad or None, order=N)
    return rep


# -- specialization to U(g)^{(x)3} -------------------------------------------------

def specialize(phi: AssociatorSeries, env: Envelope, omega: Vec, cap: Optional[int] = None) -> HSeries:
    """Substitute t12 -> Omega_12, t23 -> Omega_23 in U(g)^{(x)3}."""
    a = env.embed(omega, (0, 1), 3)
    b = env.embed(omega, (1, 2), 3)
    images = [a, b]
    cache: Dict[Word, Vec] = {(): env.tone(3)}

    def value(w: Word) -> Vec:
        hit = cache.get(w)
        if hit is None:
            hit = env.tmul(value(w[:-1]), images[w[-1]])
            cache[w] = hit
        return hit

    coeffs: List[Vec] = [env.tone(3)] + [{} for _ in range(phi.order)]
    flagged = False
    for d, terms in phi.components:
        acc: Vec = {}
        for w, c in terms:
            vaccumulate(acc, value(w), c)
        acc, f = env.truncate(acc, cap)
        flagged = flagged or f
        coeffs[d] = acc
    s = HSeries(coeffs, phi.order)
    s.flagged = flagged
    return s
