"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
lines are also collected into the pytest terminal summary.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import pytest

from quantlie import cli
from quantlie.associator import (counit_specialization, hexagon_residual, is_lie_element, pentagon_residual,
                                 solve_associator, specialize, verify_associator)
from quantlie.bialgebra import (BialgebraMorphism, LieBialgebra, borel_bialgebra, build_double, check_cybe,
                                validate_bialgebra, verify_double, zero_bialgebra)
from quantlie.homogeneous import (build_homspace_quantization, split_quantization, split_structure_table,
                                  verify_homspace, verify_split)
from quantlie.kernel.series import vaccumulate
from quantlie.poisson import ManinQuadruple, check_homspace_poisson
from quantlie.quantize_group import (build_quantization, check_duality, check_functoriality, check_semiclassical,
                                     extract_bidiff, operators_agree, r_matrix_bidiff, star_product, verify_hopf)
from quantlie.twist import fiber_functor_twist, solve_twist, verify_twist

INPUTS = Path(__file__).resolve().parent.parent / "inputs"
RESULTS: dict = {}

N, D = 3, 4
HALF = Fraction(1, 2)
EX_Q_ROWS = [[0, 1, 0, 0], [0, 0, 1, 0]]  # span{E, H∨} in the basis (H, E, H∨, E∨)
NON_LAGRANGIAN_ROWS = [[1, 0, 0, 0], [0, 0, 1, 0]]  # span{H, H∨}: <H, H∨> = 1


@contextmanager
def criterion(num: int, title: str, budget: float):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = dt < budget
        line = (f"criterion {num:2d} {'PASS' if ok and within else 'FAIL'}  {title}  "
                f"({dt:.1f} s, budget {budget:.0f} s)")
        RESULTS[num] = line
        print(line)
    assert within, f"criterion {num} took {dt:.1f} s, budget {budget} s"


@pytest.fixture(scope="module")
def phi3():
    return solve_associator(3)


@pytest.fixture(scope="module")
def exb():
    return borel_bialgebra()


def _assert_passed(rep):
    assert rep.passed, str(rep)


# 1 ----------------------------------------------------------------------------

def _transpose(brackets, n):
    """Antisymmetric cobracket whose transpose is the given bracket table."""
    cob = {k: {} for k in range(n)}
    for (i, j), v in brackets.items():
        for k, c in v.items():
            cob[k][(i, j)] = c
            cob[k][(j, i)] = -c
    return cob


def _corruptions():
    """One corrupted input per axiom."""
    exb_br = {(0, 1): {1: 2}}
    exb_cob = {1: {(1, 0): HALF, (0, 1): -HALF}}
    broken = {(0, 1): {2: 1}, (1, 2): {1: 1}, (0, 2): {0: 1}}  # fails Jacobi at (x, y, z)
    return {
        "bracket antisymmetry": LieBialgebra.make(["H", "E"], {(0, 1): {1: 2}, (1, 0): {1: 2}}, exb_cob),
        "Jacobi": LieBialgebra.make(["x", "y", "z"], broken),
        # delta(E) = E (x) E also breaks co-Jacobi and the cocycle identity: it is
        # not antisymmetric, so it cannot be corrupted in isolation
        "cobracket antisymmetry": LieBialgebra.make(["H", "E"], exb_br, {1: {(1, 1): 1}}),
        # abelian bracket, cobracket transposing to the broken algebra
        "co-Jacobi": LieBialgebra.make(["x", "y", "z"], {}, _transpose(broken, 3)),
        # Heisenberg bracket [x,y] = z with delta(z) = x^y, delta(x) = delta(y) = 0
        "cocycle": LieBialgebra.make(["x", "y", "z"], {(0, 1): {2: 1}}, {2: {(0, 1): 1, (1, 0): -1}}),
    }


def test_criterion_01_bialgebra_validation(exb):
    with criterion(1, "bialgebra validation and single-axiom corruptions", 1.0):
        rep = validate_bialgebra(exb)
        _assert_passed(rep)
        assert [c.name for c in rep.checks] == ["bracket antisymmetry", "Jacobi", "cobracket antisymmetry",
                                                 "co-Jacobi", "cocycle"]
        for axiom, b in _corruptions().items():
            rep = validate_bialgebra(b)
            failed = [c.name for c in rep.failures()]
            assert axiom in failed, (axiom, failed)
            if axiom != "cobracket antisymmetry":
                assert failed == [axiom], (axiom, failed)
            assert rep[axiom].witness is not None, axiom


# 2 ----------------------------------------------------------------------------

def test_criterion_02_double(exb):
    with criterion(2, "Drinfeld double: invariance, Jacobi, Lagrangian halves, CYBE", 5.0):
        for b in (exb, zero_bialgebra(2)):
            double, r = build_double(b)
            rep = verify_double(double, r)
            _assert_passed(rep)
            for name in ("pairing invariance", "Jacobi", "g+ Lagrangian", "g- Lagrangian", "CYBE"):
                assert rep[name].passed
        # negative control: r + H (x) H breaks CYBE on the nonabelian double
        double, r = build_double(exb)
        bad = dict(r.element)
        vaccumulate(bad, {((1, 0, 0, 0), (1, 0, 0, 0)): Fraction(1)})
        assert not check_cybe(bad, double).passed


# 3 ----------------------------------------------------------------------------

def test_criterion_03_associator(phi3):
    with criterion(3, "associator pentagon/hexagon mod h^4, Lie components, counit", 120.0):
        phi = solve_associator(3)
        assert all(not c for c in pentagon_residual(phi).coeffs)
        for sign in (1, -1):
            for part in hexagon_residual(phi, sign):
                assert all(not c for c in part.coeffs)
        for d, comp in phi.components:
            assert is_lie_element(dict(comp)), d
        for letter in (0, 1):
            assert counit_specialization(phi, letter) == {(): Fraction(1)}
        _assert_passed(verify_associator(phi))


# 4 ----------------------------------------------------------------------------

def test_criterion_04_twist(exb, phi3):
    with criterion(4, "twist J_1 = r/2, twist equation, counit, coassociativity (Borel)", 120.0):
        double, r = build_double(exb)
        phi_u = specialize(phi3.truncated(N), double.envelope(), r.omega())
        half = {k: v / 2 for k, v in r.element.items()}
        for J in (fiber_functor_twist(phi_u, r, N), solve_twist(phi_u, r, N)):
            assert J.component(1) == half
            _assert_passed(verify_twist(J, phi_u, r, D))


# 5 ----------------------------------------------------------------------------

def _star_checks(b, order, phi):
    Q = build_quantization(b, order, D, associator=phi)
    hopf = verify_hopf(Q, False, D)
    _assert_passed(hopf)
    semi = check_semiclassical(Q, b, D)
    _assert_passed(semi)
    for name in ("h^0 of * is the pointwise product", "h^1 skew part of * is the Poisson bracket",
                 "h^1 of Delta vanishes"):
        assert semi[name].passed
    return Q


def test_criterion_05_star_product(exb, phi3):
    with criterion(5, "star product and Hopf structure, Borel at N=3, D=4", 600.0):
        _star_checks(exb, 3, phi3)
    t0 = time.perf_counter()
    _star_checks(exb, 2, solve_associator(2))
    assert time.perf_counter() - t0 < 60.0


# 6 ----------------------------------------------------------------------------

def test_criterion_06_duality(exb, phi3):
    with criterion(6, "star product from J equals transpose of J^-1 i_-", 120.0):
        Q = build_quantization(exb, N, D, associator=phi3)
        assert check_duality(Q, D) is None
        # the two routes are independent code paths, compare them order by order too
        for beta in Q.basis(D):
            assert Q.delta_tilde(beta).coeffs == Q.delta_tilde_module(beta).coeffs


# 7 ----------------------------------------------------------------------------

def test_criterion_07_locality(exb, phi3):
    with criterion(7, "locality certificate: bidifferential h^k coefficients", 120.0):
        Q = build_quantization(exb, N, D, associator=phi3)
        ops = [extract_bidiff(Q, k, D) for k in range(N + 1)]
        for k, op in enumerate(ops):
            assert op.order <= 2 * k
        assert operators_agree(ops[1], r_matrix_bidiff(Q, D), Q.n, D) is None


# 8 ----------------------------------------------------------------------------

def test_criterion_08_trivial_limit(phi3):
    with criterion(8, "zero bialgebra quantizes to the undeformed Hopf algebra", 120.0):
        b = zero_bialgebra(2)
        Q = build_quantization(b, N, D, associator=phi3)
        _assert_passed(verify_hopf(Q, False, D))
        for beta in Q.basis(D):
            t = Q.delta_tilde(beta)
            assert all(not t[k] for k in range(1, N + 1)), beta
        for a in Q.basis(D):
            for c in Q.basis(D - sum(a)):
                s = Q.bullet(a, c)
                assert all(not s[k] for k in range(1, N + 1)), (a, c)
        for f in Q.basis(D):
            for g in Q.basis(D):
                s = star_product({f: Fraction(1)}, {g: Fraction(1)}, Q, D)
                assert all(not s[k] for k in range(1, N + 1)), (f, g)


# 9 ----------------------------------------------------------------------------

def test_criterion_09_homogeneous_classical(exb):
    with criterion(9, "Borel/E classical layer and non-Lagrangian control", 120.0):
        double, _ = build_double(exb)
        rep = check_homspace_poisson(ManinQuadruple.make(double, EX_Q_ROWS), D)
        for name in ("Omega(1_T (x) 1_T) = 0", "skew symmetry", "Jacobi"):
            assert rep[name].passed, name
        bad = check_homspace_poisson(ManinQuadruple.make(double, NON_LAGRANGIAN_ROWS), 2)
        assert not bad["Omega(1_T (x) 1_T) = 0"].passed


# 10 ---------------------------------------------------------------------------

def test_criterion_10_homogeneous_quantum(exb, phi3):
    with criterion(10, "Borel/E quantum layer at N=3", 600.0):
        double, _ = build_double(exb)
        H = build_homspace_quantization(ManinQuadruple.make(double, EX_Q_ROWS), N, D, associator=phi3)
        rep = verify_homspace(H, D)
        _assert_passed(rep)
        assert any(c.name.startswith("Phi fixes 1_T^3") for c in rep.checks)
        for name in ("star product associative", "coaction is an algebra map"):
            assert rep[name].passed


# 11 ---------------------------------------------------------------------------

def test_criterion_11_split(exb, phi3):
    with criterion(11, "split case span{H} and its h+ = 0 degeneration", 300.0):
        Q = build_quantization(exb, N, D, associator=phi3)
        S = split_quantization(exb, [[1, 0]], N, D, group=Q)
        _assert_passed(verify_split(S, exb))
        # h+ = 0: every monomial is invariant and the structure table is the star table
        S0 = split_quantization(exb, [], N, D, group=Q)
        assert all(len(f[0]) == 1 and not any(f[1:]) for f in S0.basis)
        monos = [next(iter(f[0])) for f in S0.basis]
        assert sorted(monos) == sorted(Q.basis(D))
        for (i, j), coeffs in S0.table.items():
            s = star_product({monos[i]: Fraction(1)}, {monos[j]: Fraction(1)}, Q, D)
            for k in range(N + 1):
                got = {monos[l]: c[k] for l, c in coeffs.items() if c[k]}
                assert got == s[k], (i, j, k)
        assert split_structure_table(S0)


# 12 ---------------------------------------------------------------------------

def test_criterion_12_functoriality(exb, phi3):
    with criterion(12, "functoriality of span{H} -> Borel, non-morphism control", 300.0):
        src = LieBialgebra.make(["h"])
        rep = check_functoriality(BialgebraMorphism.make(src, exb, [[1], [0]]), N, D, associator=phi3)
        _assert_passed(rep)
        for name in ("pullback intertwines star products", "pullback intertwines coproducts"):
            assert rep[name].passed
        ctrl = check_functoriality(BialgebraMorphism.make(src, exb, [[0], [1]]), N, D, associator=phi3)
        assert not ctrl.passed
        assert not ctrl["morphism: cobracket compatibility"].passed
        assert not (ctrl["pullback intertwines star products"].passed
                    and ctrl["pullback intertwines coproducts"].passed)


# 13 ---------------------------------------------------------------------------

def _report_bytes(tmp: Path, name: str, task: str, workers: int, cache: bool, tag: str) -> bytes:
    out = tmp / f"{name}-{task}-{workers}-{tag}.json"
    args = [str(INPUTS / name), "--task", task, "--h-order", "2", "--pbw-degree", "3",
            "--workers", str(workers), "-o", str(out)]
    if cache:
        args += ["--cache-dir", str(tmp / f"cache-{tag}")]
    code = cli.main(args)
    assert code in (cli.EXIT_OK, cli.EXIT_VERIFY)
    return out.read_bytes()


def test_criterion_13_determinism(tmp_path):
    with criterion(13, "byte-identical reports across runs, caches and worker counts", 300.0):
        for name, task in (("ex_b.json", "check-all"), ("ex_q.json", "check-all"), ("split.json", "check-all"),
                           ("zero.json", "quantize-group"), ("broken_jacobi.json", "validate")):
            ref = _report_bytes(tmp_path, name, task, 1, False, "plain")
            assert _report_bytes(tmp_path, name, task, 1, False, "again") == ref
            assert _report_bytes(tmp_path, name, task, 4, True, "cold") == ref
            assert _report_bytes(tmp_path, name, task, 4, True, "cold") == ref  # warm cache now
            assert _report_bytes(tmp_path, name, task, 1, True, "cold") == ref


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
