from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantlie.associator import (dk, dk_basis, fmul, hall_basis, hexagon_residual,
                                 is_lie_element, log_series, lyndon_words, pentagon_residual, solve_associator,
                                 specialize, trivial_associator, verify_associator)
from quantlie.bialgebra import borel_bialgebra, build_double, zero_bialgebra
from quantlie.kernel.series import vaccumulate

BRACKET_AB = {(0, 1): Fraction(1), (1, 0): Fraction(-1)}


@pytest.fixture(scope="module")
def phi3():
    return solve_associator(3)


def _hilbert(n, d):
    """Oracle: U(t_n) has Hilbert series prod_{k<n} 1/(1 - k x) (iterated semidirect free Lie algebras)."""
    coeffs = [1] + [0] * d
    for k in range(1, n):
        for i in range(1, d + 1):
            coeffs[i] += k * coeffs[i - 1]
    return coeffs[d]


def test_dk_basis_examples():
    assert dk_basis(3, 0) == [()]
    assert dk_basis(3, 1) == [(0,), (1,), (2,)]
    assert dk(3).dim(2) == 7


@pytest.mark.parametrize("n,d", [(3, 2), (3, 3), (4, 2), (2, 3)])
def test_dk_dimensions_match_hilbert_series(n, d):
    assert dk(n).dim(d) == _hilbert(n, d)


def test_dk_relations_reduce_to_zero():
    D = dk(4)
    for rel in D.relations():
        assert D.is_zero(rel)
    # the sum t12 + t13 + t23 is central in t_3
    D3 = dk(3)
    c = D3.tsum((1, 2), (1, 3), (2, 3))
    for i, j in ((1, 2), (1, 3), (2, 3)):
        comm = fmul(c, D3.t(i, j), 2)
        vaccumulate(comm, fmul(D3.t(i, j), c, 2), -1)
        assert D3.is_zero(comm)
    assert not D3.is_zero(fmul(D3.t(1, 2), D3.t(2, 3), 2))


def test_dk_rejects_unsupported_strands():
    with pytest.raises(ValueError):
        dk(5)


def test_low_orders():
    assert solve_associator(1).components == ()
    phi2 = solve_associator(2)
    assert phi2.component(2) == {w: c / 24 for w, c in BRACKET_AB.items()}
    assert verify_associator(phi2).passed


def test_order_three_even_gauge(phi3):
    assert phi3.component(2) == {w: c / 24 for w, c in BRACKET_AB.items()}
    assert phi3.component(3) == {}
    assert phi3.identifier() == "rational-even-N3"
    rep = verify_associator(phi3)
    assert rep.passed, str(rep)


def test_solver_is_deterministic(phi3):
    assert solve_associator(3) == phi3
    zf = solve_associator(3, "zero-free")
    assert zf.gauge == "zero-free" and zf.components == phi3.components
    with pytest.raises(ValueError):
        solve_associator(3, "odd")


def test_trivial_associator_residuals():
    phi1 = trivial_associator(1)
    assert pentagon_residual(phi1).first_nonzero() is None
    assert all(h.first_nonzero() is None for h in hexagon_residual(phi1, 1))
    # Phi = 1 solves the pentagon but the hexagons fail at h^2
    phi2 = trivial_associator(2)
    assert pentagon_residual(phi2).first_nonzero() is None
    assert [h.first_nonzero() for h in hexagon_residual(phi2, 1)] == [2, 2]


@pytest.mark.parametrize("factor", [0, 2, -1])
def test_rescaled_phi2_is_detected(phi3, factor):
    bad = phi3.with_component(2, {w: factor * c for w, c in phi3.component(2).items()})
    rep = verify_associator(bad)
    assert not rep.passed
    assert rep["hexagon (+)"].witness == 2 and rep["hexagon (-)"].witness == 2
    # the degree-2 pentagon is homogeneous linear in phi_2, so it cannot see the scale
    assert rep["pentagon"].passed


def test_non_lie_component_and_bad_counit_are_reported(phi3):
    rep = verify_associator(phi3.with_component(3, {(0, 0, 1): Fraction(1)}))
    assert rep["phi_d are Lie elements"].witness == [3]
    rep = verify_associator(phi3.with_component(2, {(0, 0): Fraction(1)}))
    assert rep["counit specializations are 1"].witness == [1]


def test_hall_basis_sizes():
    # Witt's formula for two letters: 2, 1, 2, 3, 6
    assert [len(lyndon_words(d)) for d in range(1, 6)] == [2, 1, 2, 3, 6]
    assert hall_basis(2) == [BRACKET_AB]
    for d in range(1, 5):
        assert all(is_lie_element(p) for p in hall_basis(d))


def _lie_combo(d, coeffs):
    out = {}
    for p, c in zip(hall_basis(d), coeffs):
        vaccumulate(out, p, c)
    return out


coeffs = st.lists(st.integers(-2, 2).map(Fraction), min_size=3, max_size=3)
words = st.lists(st.integers(0, 1), min_size=2, max_size=5).map(tuple)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), coeffs, coeffs)
def test_brackets_of_lie_elements_are_lie(d1, d2, c1, c2):
    a, b = _lie_combo(d1, c1), _lie_combo(d2, c2)
    comm = fmul(a, b, 8)
    vaccumulate(comm, fmul(b, a, 8), -1)
    assert is_lie_element(comm)
    prod = fmul(a, b, 8)
    if prod:
        # a nonzero product of two Lie elements of positive degree is never Lie
        assert not is_lie_element(prod)


@given(words)
def test_single_words_of_length_two_or_more_are_not_lie(w):
    assert not is_lie_element({w: Fraction(1)})


def test_log_of_phi_is_lie(phi3):
    lg = log_series(phi3)
    assert is_lie_element(lg)
    assert lg == phi3.component(2)


def test_specialization_on_abelian_double_is_one(phi3):
    double, r = build_double(zero_bialgebra(2))
    s = specialize(phi3, double.envelope(), r.omega())
    assert s[0] == double.envelope().tone(3)
    assert all(not s[k] for k in range(1, 4))


def test_specialization_on_exb_double_is_nontrivial(phi3):
    double, r = build_double(borel_bialgebra())
    s = specialize(phi3, double.envelope(), r.omega())
    assert s[1] == {} and s[2] != {} and s[3] == {}
