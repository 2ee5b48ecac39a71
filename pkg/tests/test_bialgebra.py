from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantlie.bialgebra import (BialgebraMorphism, LieBialgebra, borel_bialgebra, build_double, check_cybe,
                                double_swap_witness, dual_bialgebra, lagrangian_witness, omega_invariance_witness,
                                validate_bialgebra, validate_morphism, verify_double, zero_bialgebra)
from quantlie.kernel.series import vaccumulate

HALF = Fraction(1, 2)
EXB = borel_bialgebra()


def sl2_standard():
    """sl2 (H, E, F) with the standard cobracket delta(E) = E^H/2, delta(F) = F^H/2."""
    return LieBialgebra.make(["H", "E", "F"], {(0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}},
                             {1: {(1, 0): HALF, (0, 1): -HALF}, 2: {(2, 0): HALF, (0, 2): -HALF}})


def mixed_bracket_oracle(b, i, j):
    """[x_i, xi_j] = sum_m f_i^{jm} x_m - sum_m c_{im}^j xi_m (coadjoint formula)."""
    n = b.dim
    out = {}
    for m in range(n):
        f = b.delta(i).get((j, m), 0)
        if f:
            out[m] = out.get(m, 0) + f
        c = b.algebra.bracket(i, m).get(j, 0)
        if c:
            out[m + n] = out.get(m + n, 0) - c
    return {k: v for k, v in out.items() if v}


def test_reference_bialgebras_validate():
    assert validate_bialgebra(zero_bialgebra(2)).passed
    assert validate_bialgebra(EXB).passed
    assert validate_bialgebra(sl2_standard()).passed


def test_symmetric_cobracket_fails_antisymmetry_with_witness():
    b = LieBialgebra.make(["H", "E"], {(0, 1): {1: 2}}, {1: {(1, 1): 1}})
    rep = validate_bialgebra(b)
    assert not rep["cobracket antisymmetry"].passed
    assert rep["cobracket antisymmetry"].witness == (1, 1, 1)


def test_dual_bialgebra():
    z = zero_bialgebra(2)
    dz = dual_bialgebra(z)
    assert not dz.algebra.structure_constants() and not dz.cobracket
    d = dual_bialgebra(EXB)
    assert d.algebra.bracket(0, 1) == {1: -HALF}
    assert dual_bialgebra(d) == EXB


def test_double_of_zero_is_abelian():
    double, r = build_double(zero_bialgebra(2))
    assert not double.total.structure_constants()
    env = double.envelope()
    assert r.element == {(env.gen(0), env.gen(2)): 1, (env.gen(1), env.gen(3)): 1}


@pytest.mark.parametrize("b", [EXB, sl2_standard(), zero_bialgebra(3)], ids=["Borel", "sl2", "zero"])
def test_double_matches_coadjoint_formula(b):
    double, r = build_double(b)
    n = b.dim
    for i, j in product(range(n), repeat=2):
        assert double.total.bracket(i, j + n) == mixed_bracket_oracle(b, i, j), (i, j)
    for i, j in product(range(n), repeat=2):
        assert double.total.bracket(i, j) == b.algebra.bracket(i, j)
    rep = verify_double(double, r)
    assert rep.passed, str(rep)


def test_exb_double_mixed_brackets():
    double, _ = build_double(EXB)
    # basis (H, E, H∨, E∨)
    assert double.total.bracket(2, 3) == {3: -HALF}
    assert double.total.bracket(0, 3) == {3: -2}
    assert double.total.bracket(1, 3) == {0: HALF, 2: 2}
    assert double.total.bracket(1, 2) == {1: -HALF}


def test_cybe_negative_control():
    double, r = build_double(EXB)
    assert check_cybe(r.element, double).passed
    bad = dict(r.element)
    env = double.envelope()
    vaccumulate(bad, {(env.gen(1), env.gen(1)): Fraction(1)})
    rep = check_cybe(bad, double)
    assert not rep.passed and rep["CYBE"].witness is not None


def test_lagrangian_and_omega():
    double, r = build_double(EXB)
    assert lagrangian_witness(double, double.plus) is None
    assert lagrangian_witness(double, double.minus) is None
    assert lagrangian_witness(double, [0, 2]) is not None
    assert omega_invariance_witness(r) is None


def test_morphisms():
    ident = BialgebraMorphism.make(EXB, EXB, [[1, 0], [0, 1]])
    assert validate_morphism(ident).passed
    src = LieBialgebra.make(["h"])
    assert validate_morphism(BialgebraMorphism.make(src, EXB, [[1], [0]])).passed
    bad = validate_morphism(BialgebraMorphism.make(src, EXB, [[0], [1]]))
    assert not bad["cobracket compatibility"].passed
    with pytest.raises(ValueError):
        validate_morphism(BialgebraMorphism.make(src, EXB, [[1, 0]]))


def test_double_of_dual_is_swapped_double():
    for b in (EXB, sl2_standard(), zero_bialgebra(2)):
        assert double_swap_witness(b) is None


def test_invalid_input_rejected_by_double():
    with pytest.raises(ValueError):
        build_double(LieBialgebra.make(["H", "E"], {(0, 1): {1: 2}}, {1: {(1, 1): 1}}))


# random two-dimensional bialgebras: [x0, x1] = a x0 + b x1, delta(x_k) = c_k x0^x1
small = st.integers(-2, 2).map(Fraction)


@settings(max_examples=60, deadline=None)
@given(small, small, small, small)
def test_random_bialgebra_doubles(a, b, c0, c1):
    br = {(0, 1): {0: a, 1: b}}
    cob = {k: {(0, 1): c, (1, 0): -c} for k, c in ((0, c0), (1, c1))}
    bi = LieBialgebra.make(["x", "y"], br, cob)
    rep = validate_bialgebra(bi)
    # ad_x acts on Lambda^2 of a plane by its trace (tr ad_x0 = b, tr ad_x1 = -a), so
    # x0.delta(x1) - x1.delta(x0) = (b c1 + a c0) x0^x1 = delta([x0, x1]): always a cocycle
    assert rep.passed, str(rep)
    double, r = build_double(bi)
    assert verify_double(double, r).passed
    for i, j in product(range(2), repeat=2):
        assert double.total.bracket(i, j + 2) == mixed_bracket_oracle(bi, i, j)
