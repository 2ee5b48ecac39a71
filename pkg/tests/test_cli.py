import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantlie import cli
from quantlie.associator import solve_associator
from quantlie.serialize import (SchemaError, associator_from_json, associator_to_json, dumps, fixture_path, fmt,
                                parse_document, parse_rational)

INPUTS = Path(__file__).resolve().parent.parent / "inputs"


def _run(tmp_path, *argv):
    out = tmp_path / "report.out"
    code = cli.main([*argv, "--output", str(out)])
    return code, out.read_text(encoding="utf-8") if out.exists() else None


def test_validate_exit_codes(tmp_path):
    code, text = _run(tmp_path, str(INPUTS / "zero.json"), "--task", "validate")
    assert code == cli.EXIT_OK and json.loads(text)["passed"] is True
    code, text = _run(tmp_path, str(INPUTS / "broken_jacobi.json"), "--task", "validate")
    assert code == cli.EXIT_VERIFY
    checks = {c["name"]: c for c in json.loads(text)["sections"][0]["checks"]}
    assert checks["Jacobi"]["passed"] is False and checks["Jacobi"]["witness"] == [0, 1, 2]


def test_schema_errors_exit_before_computing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    for raw in ('{"labels": ["H", "H"]}', '{"labels": ["H"], "colour": 1}', "not json",
                '{"labels": ["a", "b"], "bracket": [{"pair": ["a", "b"], "value": {"a": 0.5}}]}'):
        bad.write_text(raw, encoding="utf-8")
        code, text = _run(tmp_path, str(bad), "--task", "validate")
        assert code == cli.EXIT_SCHEMA and text is None
        assert "schema error" in capsys.readouterr().err
    assert cli.main([str(tmp_path / "missing.json")]) == cli.EXIT_SCHEMA


def test_usage_errors(tmp_path):
    zero = str(INPUTS / "zero.json")
    assert cli.main([zero, "--h-order", "0"]) == cli.EXIT_USAGE
    assert cli.main([zero, "--pbw-degree", "1"]) == cli.EXIT_USAGE
    assert cli.main([zero, "--twist", "other"]) == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        cli.main([zero, "--task", "nonsense"])
    assert err.value.code == cli.EXIT_USAGE


def test_text_table_report(tmp_path):
    code, text = _run(tmp_path, str(INPUTS / "ex_b.json"), "--task", "quantize-group", "--h-order", "2",
                      "--pbw-degree", "2", "--emit", "text-table")
    assert code == cli.EXIT_OK
    lines = text.splitlines()
    assert lines[1] == "overall: PASS"
    assert "star product  f * g  (coefficients of h^k)" in lines
    assert any(l.startswith("  u^(1, 0) * u^(0, 1):  h^0: 1/1*u^(1, 1); h^1: -1/4*u^(0, 1)") for l in lines)


def test_json_report_round_trips(tmp_path):
    code, text = _run(tmp_path, str(INPUTS / "ex_q.json"), "--task", "quantize-homspace", "--h-order", "2",
                      "--pbw-degree", "2")
    assert code == cli.EXIT_OK
    doc = json.loads(text)
    assert dumps(doc) == text
    assert doc["input"] == "Borel/E" and doc["h_order"] == 2


def test_shipped_fixture_matches_solver():
    shipped = json.loads(fixture_path(3, "even").read_text(encoding="utf-8"))
    assert shipped == associator_to_json(solve_associator(3))
    assert associator_from_json(shipped) == solve_associator(3)


def test_input_documents_parse():
    for path in sorted(INPUTS.glob("*.json")):
        doc = parse_document(json.loads(path.read_text(encoding="utf-8")))
        assert doc.digest() == parse_document(json.loads(path.read_text(encoding="utf-8"))).digest()
    exq = parse_document(json.loads((INPUTS / "ex_q.json").read_text(encoding="utf-8")))
    assert exq.subalgebra == [[0, 1]]
    assert exq.bialgebra.delta(1) == {(1, 0): Fraction(1, 2), (0, 1): Fraction(-1, 2)}


def test_rationals_must_be_exact():
    assert parse_rational("-3/6", "x") == Fraction(-1, 2)
    assert parse_rational(4, "x") == 4
    for bad in (0.5, True, None, "1/0", "abc", [1]):
        with pytest.raises(SchemaError):
            parse_rational(bad, "x")


@given(st.fractions())
def test_rational_format_round_trip(q):
    assert parse_rational(fmt(q), "x") == q
    assert fmt(q).count("/") == 1
