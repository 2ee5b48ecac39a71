import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantlie.kernel.enveloping import (Envelope, EnvElement, counit0, delta0, env_multiply, monomials_upto,
                                        straighten)
from quantlie.kernel.lie import LieAlgebra, LieAlgebraError, abelian
from quantlie.kernel.linsolve import LinearProblem, nullspace, solve, solve_dense
from quantlie.kernel.series import HSeries, vadd, vscale

BOREL = LieAlgebra(["H", "E"], {(0, 1): {1: 2}})
SO3 = LieAlgebra(["x", "y", "z"], {(0, 1): {2: 1}, (1, 2): {0: 1}, (2, 0): {1: 1}})
HEIS = LieAlgebra(["p", "q", "c"], {(0, 1): {2: 1}})
ALGEBRAS = [BOREL, SO3, HEIS, abelian(["a", "b"])]


def naive_straighten(word, lie, rng):
    """Oracle: rewrite out-of-order adjacent pairs x_j x_i -> x_i x_j + [x_j, x_i] in random order."""
    terms = {tuple(word): Fraction(1)}
    done = {}
    while terms:
        w, c = terms.popitem()
        bad = [k for k in range(len(w) - 1) if w[k] > w[k + 1]]
        if not bad:
            e = [0] * lie.dim
            for i in w:
                e[i] += 1
            key = tuple(e)
            done[key] = done.get(key, 0) + c
            continue
        k = rng.choice(bad)
        j, i = w[k], w[k + 1]
        swapped = w[:k] + (i, j) + w[k + 2:]
        terms[swapped] = terms.get(swapped, 0) + c
        for l, v in lie.bracket(j, i).items():
            shorter = w[:k] + (l,) + w[k + 2:]
            terms[shorter] = terms.get(shorter, 0) + c * v
        terms = {t: v for t, v in terms.items() if v}
    return {m: v for m, v in done.items() if v}


# straighten / multiply ---------------------------------------------------------------

def test_straighten_examples():
    ab = Envelope(abelian(["e1", "e2"]))
    assert straighten([1, 0], ab, 2).terms == {(1, 1): 1}
    env = Envelope(BOREL)
    assert straighten([1, 0], env, 2).terms == {(1, 1): 1, (0, 1): -2}
    assert straighten([], env).terms == {(0, 0): 1}


def test_straighten_cap_flags_truncation():
    env = Envelope(SO3)
    full = straighten([2, 1, 0], env)
    cut = straighten([2, 1, 0], env, 3)
    assert not full.truncated
    assert cut.terms == full.terms
    with pytest.raises(ValueError):
        straighten([2, 1, 0], env, 2)


def test_env_multiply_examples():
    env = Envelope(BOREL)
    H = EnvElement(env, {(1, 0): 1})
    E = EnvElement(env, {(0, 1): 1})
    one = EnvElement(env, env.one())
    assert one * H == H
    assert (H * E - E * H).terms == {(0, 1): 2}
    ab = Envelope(abelian(["x", "y"]))
    x, y = EnvElement(ab, {(1, 0): 1}), EnvElement(ab, {(0, 1): 1})
    assert x * y == y * x


def test_env_multiply_rejects_mixed_algebras():
    a = EnvElement(Envelope(BOREL), {(1, 0): 1})
    b = EnvElement(Envelope(HEIS), {(1, 0, 0): 1})
    with pytest.raises(ValueError):
        env_multiply(a, b)


def test_delta0_and_counit_examples():
    env = Envelope(BOREL)
    x = EnvElement(env, {(1, 0): 1})
    assert delta0(x) == {((1, 0), (0, 0)): 1, ((0, 0), (1, 0)): 1}
    assert delta0(x * x) == {((2, 0), (0, 0)): 1, ((1, 0), (1, 0)): 2, ((0, 0), (2, 0)): 1}
    assert delta0(EnvElement(env, env.one())) == {((0, 0), (0, 0)): 1}
    assert counit0(EnvElement(env, env.one())) == 1
    assert counit0(x) == 0
    assert counit0(EnvElement(env, {(0, 0): 1, (2, 0): 3})) == 1


@settings(max_examples=150, deadline=None)
@given(st.integers(0, len(ALGEBRAS) - 1), st.lists(st.integers(0, 2), max_size=5), st.integers(0, 10 ** 6))
def test_pbw_confluence_against_random_rewriting(a, word, seed):
    lie = ALGEBRAS[a]
    word = [i % lie.dim for i in word]
    got = straighten(word, Envelope(lie)).terms
    assert got == naive_straighten(word, lie, random.Random(seed))


@pytest.mark.parametrize("lie", ALGEBRAS, ids=lambda l: "".join(l.labels))
def test_multiplication_associative(lie):
    env = Envelope(lie)
    monos = monomials_upto(lie.dim, 2)
    for a in monos:
        for b in monos:
            for c in monos:
                A, B, C = ({m: Fraction(1)} for m in (a, b, c))
                assert env.mul(env.mul(A, B), C) == env.mul(A, env.mul(B, C))


@pytest.mark.parametrize("lie", ALGEBRAS, ids=lambda l: "".join(l.labels))
def test_delta0_is_a_coassociative_counital_algebra_map(lie):
    env = Envelope(lie)
    monos = monomials_upto(lie.dim, 3)
    for a in monos:
        d = env.delta0({a: Fraction(1)})
        assert env.delta_leg(d, 0) == env.delta_leg(d, 1)
        assert env.counit_leg(d, 0) == {(a,): 1}
        assert env.counit_leg(d, 1) == {(a,): 1}
        for b in monos:
            if sum(a) + sum(b) > 3:
                continue
            A, B = {a: Fraction(1)}, {b: Fraction(1)}
            assert env.delta0(env.mul(A, B)) == env.tmul(env.delta0(A), env.delta0(B))


# Lie algebra --------------------------------------------------------------------------

def test_lie_algebra_rejects_conflicts_and_bad_indices():
    with pytest.raises(LieAlgebraError):
        LieAlgebra(["a", "a"])
    with pytest.raises(LieAlgebraError):
        LieAlgebra(["a", "b"], {(0, 2): {0: 1}})
    assert SO3.jacobi_witness() is None
    assert LieAlgebra(["x", "y", "z"], {(0, 1): {2: 1}, (1, 2): {1: 1}, (0, 2): {0: 1}}).jacobi_witness() is not None


# linear solving ----------------------------------------------------------------------

def test_solve_examples():
    sol = solve_dense([[1, 0], [0, 1]], [3, Fraction(-1, 2)])
    assert sol.consistent and sol.values == {0: 3, 1: Fraction(-1, 2)}
    bad = solve_dense([[0]], [1])
    assert not bad.consistent and bad.witness == 0
    under = solve_dense([[1, 1]], [1])
    assert under.values == {0: 1} and under[1] == 0


def test_solve_named_unknowns_and_determinism():
    def build():
        p = LinearProblem(unknowns=["a", "b", "c"])
        p.add_equation({"a": 1, "b": 2}, 3)
        p.add_equation({"b": 1, "c": -1}, 1)
        return solve(p)
    s1, s2 = build(), build()
    assert s1 == s2
    assert s1["a"] + 2 * s1["b"] == 3 and s1["b"] - s1["c"] == 1
    assert s1["c"] == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=4),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_solve_recovers_consistent_systems(matrix, x):
    rhs = [sum(Fraction(a) * b for a, b in zip(row, x)) for row in matrix]
    sol = solve_dense(matrix, rhs)
    assert sol.consistent
    for row, b in zip(matrix, rhs):
        assert sum(Fraction(a) * sol[j] for j, a in enumerate(row)) == b
    for v in nullspace([{j: Fraction(a) for j, a in enumerate(row) if a} for row in matrix], 4):
        for row in matrix:
            assert sum(a * v.get(j, 0) for j, a in enumerate(row)) == 0


# vectors and h-series -----------------------------------------------------------------

vecs = st.dictionaries(st.integers(0, 4), st.fractions(max_denominator=7).filter(bool), max_size=4)


@given(vecs, vecs, st.fractions(max_denominator=5))
def test_vector_ops_exact(a, b, c):
    s = vadd(a, vscale(b, c))
    for k in set(a) | set(b):
        assert s.get(k, 0) == a.get(k, 0) + c * b.get(k, 0)
    assert all(v != 0 and isinstance(v, Fraction) for v in s.values())


def _poly(a, b):
    out = {}
    for (i,), x in a.items():
        for (j,), y in b.items():
            out[(i + j,)] = out.get((i + j,), 0) + x * y
    return {k: v for k, v in out.items() if v}


polys = st.dictionaries(st.tuples(st.integers(0, 3)), st.fractions(max_denominator=5).filter(bool), max_size=3)
series = st.lists(polys, min_size=3, max_size=3).map(lambda cs: HSeries(cs, 2))


@settings(max_examples=60, deadline=None)
@given(series, series, series)
def test_hseries_ring_axioms(a, b, c):
    assert a.mul(b, _poly).mul(c, _poly) == a.mul(b.mul(c, _poly), _poly)
    assert a.mul(b + c, _poly) == a.mul(b, _poly) + a.mul(c, _poly)
    assert a.mul(b, _poly) == b.mul(a, _poly)
    one = HSeries.constant({(0,): Fraction(1)}, 2)
    assert a.mul(one, _poly) == a


@settings(max_examples=40, deadline=None)
@given(series)
def test_hseries_inverse(a):
    unit = {(0,): Fraction(1)}
    a = HSeries([unit] + [a[1], a[2]], 2)
    inv = a.inverse(_poly, unit)
    assert a.mul(inv, _poly) == HSeries.constant(unit, 2)


def test_hseries_truncation_discards_high_orders():
    x = HSeries([{(0,): 1}, {(0,): 1}], 1)
    sq = x.mul(x, _poly)
    assert sq.order == 1 and sq[1] == {(0,): 2}
    assert x.truncate(0) == HSeries([{(0,): 1}], 0)
