from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantlie.bialgebra import LieBialgebra, borel_bialgebra, build_double, zero_bialgebra
from quantlie.kernel.enveloping import Envelope, monomials_upto
from quantlie.kernel.series import vaccumulate
from quantlie.poisson import (CoidealError, FormalFunctionAlgebra, ManinQuadruple, PoissonBracketTable,
                              bracket_overflow, check_homspace_poisson, check_poisson_group, cobracket_of_word,
                              extend_cobracket, homspace, homspace_bracket, poisson_bracket_formal_group, poly_mul,
                              quadruple_from_coideal, representative_witness, validate_quadruple)

HALF = Fraction(1, 2)
EXB = borel_bialgebra()
U, V = {(1, 0): Fraction(1)}, {(0, 1): Fraction(1)}


def test_extend_cobracket_examples():
    assert extend_cobracket(EXB, {(0, 0): Fraction(1)}) == {}
    assert extend_cobracket(EXB, {(0, 1): Fraction(1)}) == {((0, 1), (1, 0)): HALF, ((1, 0), (0, 1)): -HALF}
    # delta(HE) = Delta_0(H) delta(E), expanded by hand
    expected = {((1, 1), (1, 0)): HALF, ((0, 1), (2, 0)): HALF, ((2, 0), (0, 1)): -HALF, ((1, 0), (1, 1)): -HALF}
    assert extend_cobracket(EXB, {(1, 1): Fraction(1)}) == expected


def test_extend_cobracket_independent_of_factorization():
    # EH = HE - 2E in U(Borel)
    via_word = cobracket_of_word(EXB, [1, 0])
    direct = extend_cobracket(EXB, {(1, 1): Fraction(1), (0, 1): Fraction(-2)})
    assert via_word == direct
    env = Envelope(EXB.algebra)
    for word in ([1, 1, 0], [1, 0, 1], [0, 1, 1, 0]):
        assert cobracket_of_word(EXB, word) == extend_cobracket(EXB, env.straighten_word(word))


def test_formal_group_bracket_examples():
    assert poisson_bracket_formal_group(zero_bialgebra(2), U, V, 4) == {}
    uv = poisson_bracket_formal_group(EXB, U, V, 4)
    assert {m: c for m, c in uv.items() if sum(m) == 1} == {(0, 1): -HALF}
    # no higher terms in PBW-dual coordinates: only delta(E) has an H (x) E component
    assert uv == {(0, 1): -HALF}
    assert poisson_bracket_formal_group(EXB, V, U, 4) == {m: -c for m, c in uv.items()}


def test_bracket_overflow_flag():
    assert bracket_overflow(EXB, U, V, 0)
    assert not bracket_overflow(EXB, U, V, 1)
    assert not bracket_overflow(zero_bialgebra(2), U, V, 0)


def test_leibniz_on_samples():
    D = 4
    monos = monomials_upto(2, 2, 1)
    for f in monos:
        for g in monos:
            for k in monos:
                F, G, K = {f: Fraction(1)}, {g: Fraction(1)}, {k: Fraction(1)}
                lhs = poisson_bracket_formal_group(EXB, F, poly_mul(G, K, D + 1), D)
                rhs = poly_mul(poisson_bracket_formal_group(EXB, F, G, D + 1), K, D)
                vaccumulate(rhs, poly_mul(G, poisson_bracket_formal_group(EXB, F, K, D + 1), D))
                assert lhs == rhs


def test_pairing_normalization_makes_product_dual_to_delta0():
    fa = FormalFunctionAlgebra(EXB.algebra, 4)
    for f in monomials_upto(2, 2):
        for g in monomials_upto(2, 2):
            prod = fa.mul({f: Fraction(1)}, {g: Fraction(1)})
            for beta in fa.basis(4):
                d = fa.env.delta0_mono(beta)
                via = sum((c * fa.value({f: Fraction(1)}, a) * fa.value({g: Fraction(1)}, b)
                           for (a, b), c in d.items()), Fraction(0))
                assert fa.value(prod, beta) == via


def test_check_poisson_group():
    assert check_poisson_group(zero_bialgebra(2), 3).passed
    assert check_poisson_group(EXB, 4).passed
    table = PoissonBracketTable.from_bialgebra(EXB, 5)
    table.table[(0, 1)] = {m: -c if sum(m) == 1 else c for m, c in table.table[(0, 1)].items()}
    table.table[(1, 0)] = {m: -c for m, c in table.table[(0, 1)].items()}
    table._cache.clear()
    rep = check_poisson_group(EXB, 4, table)
    assert not rep["table compatible with cobracket"].passed
    # the flipped table is minus the true bracket, itself a Poisson-group bracket
    assert rep["coproduct is a Poisson map"].passed


def test_jacobi_of_bracket_tracks_co_jacobi():
    # cobracket transposing to a bracket that fails Jacobi
    cob = {2: {(0, 1): 1, (1, 0): -1}, 1: {(1, 2): 1, (2, 1): -1}, 0: {(0, 2): 1, (2, 0): -1}}
    b = LieBialgebra.make(["x", "y", "z"], {}, cob)
    assert not check_poisson_group(b, 2)["Jacobi"].passed


small = st.integers(-2, 2).map(Fraction)


@settings(max_examples=40, deadline=None)
@given(small, small, small, small)
def test_linear_part_is_transposed_cobracket(a, b, c0, c1):
    bi = LieBialgebra.make(["x", "y"], {(0, 1): {0: a, 1: b}}, {0: {(0, 1): c0, (1, 0): -c0},
                                                                 1: {(0, 1): c1, (1, 0): -c1}})
    fa = FormalFunctionAlgebra(bi.algebra, 3)
    for i in range(2):
        for j in range(2):
            br = poisson_bracket_formal_group(bi, fa.coordinate(i), fa.coordinate(j), 3)
            linear = {m: c for m, c in br.items() if sum(m) == 1}
            expected = {fa.coordinate(k).popitem()[0]: bi.delta(k).get((i, j), 0) for k in range(2)}
            assert linear == {m: c for m, c in expected.items() if c}


# quadruples -------------------------------------------------------------------------

def _double():
    return build_double(EXB)[0]


def test_validate_quadruple_examples():
    d = _double()
    assert validate_quadruple(ManinQuadruple.make(d, [[1, 0, 0, 0], [0, 1, 0, 0]])).passed
    assert validate_quadruple(ManinQuadruple.make(d, [[0, 1, 0, 0], [0, 0, 1, 0]])).passed
    rep = validate_quadruple(ManinQuadruple.make(d, [[1, 0, 0, 0], [0, 0, 1, 0]]))
    assert not rep["isotropic"].passed and rep["isotropic"].witness == (0, 1)


def test_quadruple_from_coideal_examples():
    assert quadruple_from_coideal(EXB, []).lagrangian == [[0, 0, 1, 0], [0, 0, 0, 1]]
    assert quadruple_from_coideal(EXB, [[0, 1]]).lagrangian == [[0, 1, 0, 0], [0, 0, 1, 0]]
    q = quadruple_from_coideal(EXB, [[1, 0]])
    assert q.lagrangian == [[1, 0, 0, 0], [0, 0, 0, 1]]
    assert validate_quadruple(q).passed


def test_coideal_violation_has_witness():
    b = LieBialgebra.make(["x", "y", "z"], {}, {0: {(1, 2): 1, (2, 1): -1}})
    with pytest.raises(CoidealError) as err:
        quadruple_from_coideal(b, [[1, 0, 0]])
    assert err.value.generator == 0
    with pytest.raises(ValueError):
        quadruple_from_coideal(EXB, [[1, 0], [2, 0]])


def test_homspace_bracket_at_unit():
    q = ManinQuadruple.make(_double(), [[0, 1, 0, 0], [0, 0, 1, 0]])
    hs = homspace(q)
    vac = hs.vacuum
    for f in monomials_upto(hs.n, 2):
        for g in monomials_upto(hs.n, 2):
            F, G = {f: Fraction(1)}, {g: Fraction(1)}
            br = homspace_bracket(q, F, G, 2)
            assert hs.value(br, vac) == hs.pair2(F, G, hs.r_i_T(vac))


def test_exq_bracket_vanishes_through_degree_four():
    q = ManinQuadruple.make(_double(), [[0, 1, 0, 0], [0, 0, 1, 0]])
    hs = homspace(q)
    for f in monomials_upto(hs.n, 2, 1):
        for g in monomials_upto(hs.n, 2, 1):
            assert homspace_bracket(q, {f: Fraction(1)}, {g: Fraction(1)}, 4) == {}
    assert representative_witness(q, {(1, 0): Fraction(1)}, {(0, 1): Fraction(1)}, 2) is None


def test_h_equal_g_minus_reproduces_group_bracket():
    q = ManinQuadruple.make(_double(), [[0, 0, 1, 0], [0, 0, 0, 1]])
    for f in monomials_upto(2, 2, 1):
        for g in monomials_upto(2, 2, 1):
            F, G = {f: Fraction(1)}, {g: Fraction(1)}
            group = poisson_bracket_formal_group(EXB, F, G, 4)
            assert homspace_bracket(q, G, F, 4) == group


def test_check_homspace_poisson():
    d = _double()
    for rows in ([[0, 1, 0, 0], [0, 0, 1, 0]], [[1, 0, 0, 0], [0, 1, 0, 0]], [[0, 0, 1, 0], [0, 0, 0, 1]]):
        rep = check_homspace_poisson(ManinQuadruple.make(d, rows), 3)
        assert rep.passed, str(rep)
    bad = check_homspace_poisson(ManinQuadruple.make(d, [[1, 0, 0, 0], [0, 0, 1, 0]]), 2)
    assert not bad["Omega(1_T (x) 1_T) = 0"].passed
