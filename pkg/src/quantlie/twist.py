"""Twists J in U(g)^{(x)2}[[h]] trivializing the associator on a Drinfeld double.

Convention (checked by coassociativity of ``J^-1 Delta_0 J``):

    (id (x) Delta_0)(J) (1 (x) J)  =  Phi (Delta_0 (x) id)(J) (J (x) 1)

with Phi acting on the left, so that Phi's fixed vectors 1(x)1(x)1 in
M- or T stay fixed after twisting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Tuple

from .bialgebra import DrinfeldDouble, RMatrix
from .kernel.enveloping import Envelope, Mono, monomials_upto
from .kernel.linsolve import LinearProblem, solve
from .kernel.series import HSeries, Vec, vaccumulate, vscale
from .modules import series_act, verma_minus, verma_plus
from .report import Report


class TwistError(RuntimeError):
    pass


@dataclass
class TwistSeries:
    """J = 1 + sum_k h^k J_k together with the data it was built from."""

    series: HSeries
    double: DrinfeldDouble
    method: str = "solved"

    @property
    def order(self) -> int:
        return self.series.order

    def component(self, k: int) -> Vec:
        return self.series[k]

    def inverse(self) -> HSeries:
        env = self.double.envelope()
        cached = getattr(self, "_inv", None)
        if cached is None:
            cached = self.series.inverse(env.tmul, env.tone(2))
            self._inv = cached
        return cached


def _split_products(env: Envelope, J: HSeries, phi: HSeries):
    """Return (M, Phi L) as series in U^{(x)3}."""
    N = min(J.order, phi.order)
    d_right = J.map(lambda t: env.delta_leg(t, 1))
    d_left = J.map(lambda t: env.delta_leg(t, 0))
    one_J = J.map(lambda t: env.embed(t, (1, 2), 3))
    J_one = J.map(lambda t: env.embed(t, (0, 1), 3))
    M = d_right.mul(one_J, env.tmul).truncate(N)
    L = d_left.mul(J_one, env.tmul).truncate(N)
    return M, phi.mul(L, env.tmul).truncate(N)


def twist_residual(J: HSeries, phi: HSeries, env: Envelope) -> HSeries:
    """(id(x)D0)(J)(1(x)J) - Phi (D0(x)id)(J)(J(x)1), truncated at the common order."""
    M, PL = _split_products(env, J, phi)
    return M - PL


def counit_residual(J: HSeries, env: Envelope) -> Tuple[HSeries, HSeries]:
    one = env.tone(1)
    left = J.map(lambda t: env.counit_leg(t, 0))
    right = J.map(lambda t: env.counit_leg(t, 1))
    target = HSeries.constant(one, J.order)
    return left - target, right - target


def _coboundary_column(env: Envelope, a: Mono, b: Mono) -> Vec:
    """d(a(x)b) = (id(x)D0)(a(x)b) + 1(x)a(x)b - (D0(x)id)(a(x)b) - a(x)b(x)1."""
    u = env.unit
    out: Vec = {}
    for (b1, b2), c in env.delta0_mono(b).items():
        vaccumulate(out, {(a, b1, b2): c})
    vaccumulate(out, {(u, a, b): Fraction(1)})
    for (a1, a2), c in env.delta0_mono(a).items():
        vaccumulate(out, {(a1, a2, b): -c})
    vaccumulate(out, {(a, b, u): Fraction(-1)})
    return out


def _splits(total: Mono):
    """All (a, b) with a + b = total, both non-unit."""
    for a in product(*(range(e + 1) for e in total)):
        b = tuple(t - x for t, x in zip(total, a))
        if any(a) and any(b):
            yield tuple(a), b


def _wedge_basis(env: Envelope) -> List[Vec]:
    """x_i (x) x_j - x_j (x) x_i for i < j: cocycles that are not coboundaries."""
    d = env.dim
    gens = [tuple(int(a == i) for a in range(d)) for i in range(d)]
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            out.append({(gens[i], gens[j]): Fraction(1), (gens[j], gens[i]): Fraction(-1)})
    return out


def _order_rhs(env: Envelope, coeffs: List[Vec], phi: HSeries, k: int) -> Vec:
    J = HSeries(coeffs[:k] + [{}], k)
    return vscale(twist_residual(J, phi.truncate(k), env)[k], -1)


def solve_twist(phi: HSeries, r: RMatrix, N: int, cap: Optional[int] = None) -> TwistSeries:
    """Gauge-fixed solution: J_1 = r/2, J_k solves the order-k twist equation with free variables zero.

    The linear operator is the cobar differential, which preserves the total
    exponent vector of PBW tensor monomials, so the system splits into small
    blocks, one per total multidegree.

    Zeroing the antisymmetric part of J_{k-1} can obstruct order k. When that
    happens the order-k system is re-solved with an extra wedge-square
    correction to J_{k-1} as unknowns; wedge cocycles keep order k-1 intact.
    """
    double = r.double
    env = double.envelope()
    one2 = env.tone(2)
    if N < 1:
        return TwistSeries(HSeries([one2], 0), double, "solved")
    coeffs: List[Vec] = [one2, vscale(r.element, Fraction(1, 2))] + [{} for _ in range(N - 1)]
    wedges = _wedge_basis(env)
    for k in range(2, N + 1):
        rhs = _order_rhs(env, coeffs, phi, k)
        Jk = _solve_order(env, rhs, {})
        if Jk is None and k >= 3:
            # columns: change of the order-k rhs per wedge added to J_{k-1}
            extra: Dict[int, Vec] = {}
            for w, wv in enumerate(wedges):
                trial = list(coeffs)
                trial[k - 1] = vaccumulate_copy(coeffs[k - 1], wv)
                extra[w] = vscale(vaccumulate_copy(_order_rhs(env, trial, phi, k), rhs, -1), -1)
            sol = _solve_order(env, rhs, extra)
            if sol is not None:
                Jk, t = sol
                for w, c in t.items():
                    coeffs[k - 1] = vaccumulate_copy(coeffs[k - 1], wedges[w], c)
        elif Jk is not None:
            Jk = Jk[0]
        if Jk is None:
            raise TwistError(
                f"twist equation inconsistent at order h^{k}; this signals a "
                "convention mismatch between the associator and the residual orientation"
            )
        coeffs[k] = Jk
    series = HSeries(coeffs, N)
    if cap is not None:
        kept = [env.truncate(c, cap) for c in series.coeffs]
        series = HSeries([k for k, _ in kept], N)
        series.flagged = any(f for _, f in kept)
    return TwistSeries(series, double, "solved")


def vaccumulate_copy(a: Vec, b: Vec, scale=1) -> Vec:
    out = dict(a)
    vaccumulate(out, b, scale)
    return out


def _solve_order(env: Envelope, rhs: Vec, extra: Dict[int, Vec]):
    """Solve d(X) + sum_w t_w extra[w] = rhs; returns (X, t) or None.

    Blocks by total multidegree are solved separately unless some extra
    column couples them, in which case the coupled blocks form one system.
    """
    blocks: Dict[Mono, Vec] = {}
    for key, c in rhs.items():
        blocks.setdefault(tuple(map(sum, zip(*key))), {})[key] = c
    coupled = set()
    for col in extra.values():
        for key in col:
            tot = tuple(map(sum, zip(*key)))
            coupled.add(tot)
            blocks.setdefault(tot, {})
    groups = [[tot] for tot in sorted(blocks) if tot not in coupled]
    if coupled:
        groups.append(sorted(coupled))
    X: Vec = {}
    t: Dict[int, Fraction] = {}
    for group in groups:
        unknowns = [ab for tot in group for ab in _splits(tot)]
        cols = {ab: _coboundary_column(env, *ab) for ab in unknowns}
        is_coupled = len(group) > 1 or group[0] in coupled
        if is_coupled:
            for w, col in extra.items():
                cols[("wedge", w)] = col
        prob = LinearProblem(unknowns=list(cols))
        target: Vec = {}
        for tot in group:
            target.update(blocks[tot])
        rows = sorted({key for col in cols.values() for key in col} | set(target))
        by_row: Dict[tuple, Dict] = {key: {} for key in rows}
        for u, col in cols.items():
            for key, c in col.items():
                by_row[key][u] = c
        for key in rows:
            prob.add_equation(by_row[key], target.get(key, 0))
        sol = solve(prob)
        if not sol.consistent:
            return None
        for u, v in sol.values.items():
            if not v:
                continue
            if isinstance(u[0], str):
                t[u[1]] = v
            else:
                X[u] = v
    return X, t


def gauge_transform_twist(J: TwistSeries, F: HSeries) -> TwistSeries:
    """J^F = Delta_0(F) J (F^-1 (x) F^-1) for F = 1 + O(h) in U(g).

    Phi is invariant, so it commutes with every Delta_0^(2)(u) and J^F solves
    the same twist equation as J.
    """
    env = J.double.envelope()
    N = min(J.order, F.order)
    Finv = F.inverse(env.mul, env.one())
    dF = F.map(env.delta0)
    right = HSeries.zero(N)
    for i in range(N + 1):
        for j in range(N + 1 - i):
            for x, ca in Finv[i].items():
                for y, cb in Finv[j].items():
                    vaccumulate(right.coeffs[i + j], {(x, y): ca * cb})
    out = dF.mul(J.series, env.tmul).truncate(N).mul(right, env.tmul).truncate(N)
    return TwistSeries(out, J.double, J.method + "+gauge")


def deformed_coproduct_double(a: Vec, J: TwistSeries, cap: Optional[int] = None) -> HSeries:
    """Delta_J(a) = J^-1 Delta_0(a) J."""
    env = J.double.envelope()
    d = HSeries.constant(env.delta0(a), J.order)
    out = J.inverse().mul(d, env.tmul).mul(J.series, env.tmul)
    if cap is not None:
        kept = [env.truncate(c, cap) for c in out.coeffs]
        flagged = any(f for _, f in kept)
        out = HSeries([k for k, _ in kept], out.order)
        out.flagged = flagged
    return out


def coassociativity_defect(a: Vec, J: TwistSeries) -> HSeries:
    """(Delta_J (x) id) Delta_J(a) - (id (x) Delta_J) Delta_J(a)."""
    left, right = coassociativity_parts(a, J)
    return left - right


def coassociativity_parts(a: Vec, J: TwistSeries) -> Tuple[HSeries, HSeries]:
    """The two iterated coproducts (Delta_J (x) id) Delta_J(a) and (id (x) Delta_J) Delta_J(a)."""
    env = J.double.envelope()
    N = J.order
    Jinv = J.inverse()
    d = J.series.map(lambda t: env.delta_leg(t, 0))
    dinv = Jinv.map(lambda t: env.delta_leg(t, 0))
    e = J.series.map(lambda t: env.delta_leg(t, 1))
    einv = Jinv.map(lambda t: env.delta_leg(t, 1))
    J1 = J.series.map(lambda t: env.embed(t, (0, 1), 3))
    J1inv = Jinv.map(lambda t: env.embed(t, (0, 1), 3))
    J2 = J.series.map(lambda t: env.embed(t, (1, 2), 3))
    J2inv = Jinv.map(lambda t: env.embed(t, (1, 2), 3))
    a3 = HSeries.constant(env.delta_leg(env.delta0(a), 0), N)
    m = env.tmul
    left = J1inv.mul(dinv, m).mul(a3, m).mul(d, m).mul(J1, m)
    right = J2inv.mul(einv, m).mul(a3, m).mul(e, m).mul(J2, m)
    return left, right


def iterated_coproduct_defects(J: TwistSeries, D: int):
    """Yield (monomial, first order where the two iterated Delta_J differ) for degree 1..D.

    Both iterated coproducts are algebra maps, so they are built for the
    generators by conjugation and extended to PBW monomials by products.
    """
    env = J.double.envelope()
    N = J.order
    m = env.tmul
    cache_l: Dict[Mono, HSeries] = {}
    cache_r: Dict[Mono, HSeries] = {}
    for i in range(env.dim):
        d = coassociativity_parts({env.gen(i): Fraction(1)}, J)
        cache_l[env.gen(i)], cache_r[env.gen(i)] = d
    for mono in monomials_upto(env.dim, D, 1):
        if mono not in cache_l:
            first = next(i for i, e in enumerate(mono) if e)
            rest = tuple(e - (i == first) for i, e in enumerate(mono))
            g = env.gen(first)
            cache_l[mono] = cache_l[g].mul(cache_l[rest], m).truncate(N)
            cache_r[mono] = cache_r[g].mul(cache_r[rest], m).truncate(N)
        yield mono, (cache_l[mono] - cache_r[mono]).first_nonzero()


def verify_twist(J: TwistSeries, phi: HSeries, r: RMatrix, D: int = 4) -> Report:
    """J_1 = r/2, the twist equation, counit normalization and coassociativity of Delta_J."""
    env = J.double.envelope()
    rep = Report(f"twist ({J.method})")
    half = {k: v / 2 for k, v in r.element.items()}
    rep.add("J_1 = r/2", J.component(1) == half)
    res = twist_residual(J.series, phi, env)
    k = res.first_nonzero()
    rep.add("twist equation", k is None, k, order=J.order)
    left, right = counit_residual(J.series, env)
    k = left.first_nonzero()
    if k is None:
        k = right.first_nonzero()
    rep.add("counit normalization", k is None, k, order=J.order)
    bad = None
    for m, k in iterated_coproduct_defects(J, D):
        if k is not None:
            bad = {"order": k, "monomial": list(m)}
            break
    rep.add("Delta_J coassociative", bad is None, bad, order=J.order, degree=D)
    return rep


# -- twist from the Verma-module fiber functor -------------------------------------

class VermaPair:
    """M+ (x) M- with its identification U(g) -> M+ (x) M-, u -> D0(u)(1+ (x) 1-)."""

    def __init__(self, double: DrinfeldDouble):
        self.double = double
        self.env = double.envelope()
        self.plus = verma_plus(double)
        self.minus = verma_minus(double)
        self._cache: Dict[Tuple[Mono, Mono], Vec] = {}

    def vacuum(self) -> Vec:
        return {(self.plus.vacuum, self.minus.vacuum): Fraction(1)}

    def from_enveloping_mono(self, u: Mono) -> Vec:
        from .modules import tensor_act
        return tensor_act([self.plus, self.minus], self.env.delta0_mono(u), self.vacuum())

    def to_enveloping(self, v: Vec) -> Vec:
        """Inverse of u -> D0(u)(1+(x)1-); triangular in the degree of the M- leg."""
        out: Vec = {}
        for key, c in v.items():
            hit = self._cache.get(key)
            if hit is None:
                hit = self._to_env_basis(key)
                self._cache[key] = hit
            vaccumulate(out, hit, c)
        return out

    def _to_env_basis(self, key) -> Vec:
        n = self.double.n
        rest: Vec = {key: Fraction(1)}
        out: Vec = {}
        guard = 0
        while rest:
            guard += 1
            if guard > 10000:
                raise TwistError("M+ (x) M- inversion did not terminate")
            top = max(sum(m) for _, m in rest)
            for (p, m), c in [(k, c) for k, c in rest.items() if sum(k[1]) == top]:
                # p is xi^beta in the reordered basis (g- first), m is x^alpha
                beta = p[:n]
                alpha = m[:n]
                u = alpha + beta
                vaccumulate(out, {u: c})
                vaccumulate(rest, self.from_enveloping_mono(u), -c)
        return out


def fiber_functor_twist(phi: HSeries, r: RMatrix, N: int) -> TwistSeries:
    """J from the tensor structure of V -> Hom(M+ (x) M-, V).

    Psi = Phi^-1_{1,2,34} Phi_{2,3,4} beta_23 Phi^-1_{2,3,4} Phi_{1,2,34} applied to
    1+ (x) 1+ (x) 1- (x) 1-, with beta = flip o exp(h Omega / 2); the two
    M+ (x) M- halves of the result are pulled back to U(g).
    """
    double = r.double
    env = double.envelope()
    pair = VermaPair(double)
    P, M = pair.plus, pair.minus
    phi = phi.truncate(N)
    one3 = env.tone(3)
    phi_inv = phi.inverse(env.tmul, one3)

    def lift_1_2_34(s: HSeries) -> HSeries:
        return s.map(lambda t: env.delta_leg(t, 2))

    def lift_2_3_4(s: HSeries) -> HSeries:
        return s.map(lambda t: env.embed(t, (1, 2, 3), 4))

    vac = {(P.vacuum, P.vacuum, M.vacuum, M.vacuum): Fraction(1)}
    v = HSeries.constant(vac, N)
    v = series_act([P, P, M, M], lift_1_2_34(phi), v)
    v = series_act([P, P, M, M], lift_2_3_4(phi_inv), v)
    # beta on legs 2,3: exp(h Omega/2) then flip
    omega23 = env.embed(r.omega(), (1, 2), 4)
    expo = [env.tone(4)]
    term = env.tone(4)
    for k in range(1, N + 1):
        term = vscale(env.tmul(term, omega23), Fraction(1, 2 * k))
        expo.append(term)
    v = series_act([P, P, M, M], HSeries(expo, N), v)
    v = v.map(lambda t: {(k[0], k[2], k[1], k[3]): c for k, c in t.items()})
    v = series_act([P, M, P, M], lift_2_3_4(phi), v)
    v = series_act([P, M, P, M], lift_1_2_34(phi_inv), v)

    coeffs = []
    for vec in v.coeffs:
        out: Vec = {}
        for (p1, m1, p2, m2), c in vec.items():
            u1 = pair.to_enveloping({(p1, m1): Fraction(1)})
            u2 = pair.to_enveloping({(p2, m2): Fraction(1)})
            for a, ca in u1.items():
                for b, cb in u2.items():
                    vaccumulate(out, {(a, b): c * ca * cb})
        coeffs.append(out)
    return TwistSeries(HSeries(coeffs, N), double, "fiber-functor")
