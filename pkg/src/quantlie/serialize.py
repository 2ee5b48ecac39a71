"""JSON input documents, report emission and artifact caches.

Every number crosses the boundary as an exact rational string "p/q".
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from .associator import AssociatorSeries
from .bialgebra import BialgebraMorphism, DrinfeldDouble, LieBialgebra
from .kernel.lie import LieAlgebraError
from .kernel.series import HSeries
from .twist import TwistSeries

FIXTURE_DIR = Path(__file__).parent / "data"


class SchemaError(ValueError):
    """The input document does not match the schema; raised before any computation."""


# -- rationals -------------------------------------------------------------------

def parse_rational(v, where: str) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise SchemaError(f"{where}: expected an exact rational string, got {v!r}")
    try:
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"{where}: cannot parse {v!r} as p/q") from None


def fmt(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def jsonable(x: Any) -> Any:
    """Deterministic JSON form: rationals as "p/q", tuples as lists, dicts with
    non-string keys as sorted [key, value] pairs."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return fmt(x)
    if isinstance(x, int):
        return x
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, dict):
        if all(isinstance(k, str) for k in x):
            return {k: jsonable(v) for k, v in x.items()}
        return [[jsonable(k), jsonable(v)] for k, v in sorted(x.items(), key=lambda kv: repr(kv[0]))]
    return str(x)


def vec_entries(v: Dict) -> List:
    """A sparse tensor element as a sorted list of (monomial tuple, coefficient)."""
    return [[jsonable(k), fmt(c)] for k, c in sorted(v.items())]


def dumps(doc: Any) -> str:
    return json.dumps(jsonable(doc), indent=2, ensure_ascii=False) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- input documents --------------------------------------------------------------

@dataclass
class InputDocument:
    name: str
    bialgebra: LieBialgebra
    subalgebra: Optional[List[List[Fraction]]]
    quadruple: Optional[List[List[Fraction]]]
    morphism: Optional[Dict[str, Any]]
    raw: Dict[str, Any]

    def digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def build_morphism(self) -> Optional[BialgebraMorphism]:
        if self.morphism is None:
            return None
        return BialgebraMorphism.make(self.morphism["source"], self.bialgebra, self.morphism["matrix"])


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _rows(raw, width: Optional[int], where: str) -> List[List[Fraction]]:
    _expect(isinstance(raw, list), f"{where}: expected a list of rows")
    out = []
    for i, row in enumerate(raw):
        _expect(isinstance(row, list), f"{where}[{i}]: expected a list")
        if width is not None:
            _expect(len(row) == width, f"{where}[{i}]: expected {width} entries, got {len(row)}")
        out.append([parse_rational(v, f"{where}[{i}]") for v in row])
    return out


def parse_bialgebra(raw: Dict[str, Any], where: str = "document") -> LieBialgebra:
    _expect(isinstance(raw, dict), f"{where}: expected an object")
    labels = raw.get("labels")
    _expect(isinstance(labels, list) and all(isinstance(x, str) for x in labels), f"{where}.labels: list of strings required")
    _expect(len(set(labels)) == len(labels), f"{where}.labels: duplicate label")
    index = {l: i for i, l in enumerate(labels)}

    def idx(label, at):
        _expect(label in index, f"{at}: unknown label {label!r}")
        return index[label]

    brackets: Dict = {}
    for k, entry in enumerate(raw.get("bracket", [])):
        at = f"{where}.bracket[{k}]"
        _expect(isinstance(entry, dict) and set(entry) == {"pair", "value"}, f"{at}: expected {{pair, value}}")
        pair = entry["pair"]
        _expect(isinstance(pair, list) and len(pair) == 2, f"{at}.pair: two labels required")
        i, j = idx(pair[0], at), idx(pair[1], at)
        _expect(i != j, f"{at}: bracket of a generator with itself")
        _expect(isinstance(entry["value"], dict), f"{at}.value: object label -> rational required")
        val = {idx(l, at): parse_rational(c, at) for l, c in entry["value"].items()}
        _expect((i, j) not in brackets and (j, i) not in brackets, f"{at}: pair given twice")
        brackets[(i, j)] = val

    cob: Dict = {}
    for k, entry in enumerate(raw.get("cobracket", [])):
        at = f"{where}.cobracket[{k}]"
        _expect(isinstance(entry, dict) and set(entry) == {"of", "value"}, f"{at}: expected {{of, value}}")
        i = idx(entry["of"], at)
        _expect(i not in cob, f"{at}: cobracket of {entry['of']!r} given twice")
        terms = {}
        _expect(isinstance(entry["value"], list), f"{at}.value: list of [label, label, rational] required")
        for t in entry["value"]:
            _expect(isinstance(t, list) and len(t) == 3, f"{at}.value: entries are [label, label, rational]")
            terms[(idx(t[0], at), idx(t[1], at))] = parse_rational(t[2], at)
        cob[i] = terms
    try:
        return LieBialgebra.make(labels, brackets, cob)
    except (LieAlgebraError, ValueError) as e:
        raise SchemaError(f"{where}: {e}") from None


def parse_document(raw: Dict[str, Any]) -> InputDocument:
    _expect(isinstance(raw, dict), "document: expected a JSON object")
    known = {"name", "labels", "bracket", "cobracket", "subalgebra", "quadruple", "morphism"}
    extra = sorted(set(raw) - known)
    _expect(not extra, f"document: unknown fields {extra}")
    b = parse_bialgebra(raw)
    n = b.dim
    sub = _rows(raw["subalgebra"], n, "subalgebra") if "subalgebra" in raw else None
    quad = _rows(raw["quadruple"], 2 * n, "quadruple") if "quadruple" in raw else None
    mor = None
    if "morphism" in raw:
        m = raw["morphism"]
        _expect(isinstance(m, dict) and set(m) == {"source", "matrix"}, "morphism: expected {source, matrix}")
        src = parse_bialgebra(m["source"], "morphism.source")
        mor = {"source": src, "matrix": _rows(m["matrix"], src.dim, "morphism.matrix")}
        _expect(len(mor["matrix"]) == n, f"morphism.matrix: expected {n} rows (one per target generator)")
    name = raw.get("name", "")
    _expect(isinstance(name, str), "name: string required")
    return InputDocument(name, b, sub, quad, mor, raw)


def load_document(path) -> InputDocument:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from None
    return parse_document(raw)


# -- artifacts ---------------------------------------------------------------------

def associator_to_json(phi: AssociatorSeries) -> Dict[str, Any]:
    return {
        "order": phi.order,
        "gauge": phi.gauge,
        "components": [[d, [[list(w), fmt(c)] for w, c in terms]] for d, terms in phi.components],
    }


def associator_from_json(doc: Dict[str, Any]) -> AssociatorSeries:
    comps = {int(d): {tuple(w): Fraction(c) for w, c in terms} for d, terms in doc["components"]}
    return AssociatorSeries.from_dict(int(doc["order"]), comps, doc["gauge"])


def associator_digest(phi: AssociatorSeries) -> str:
    canon = json.dumps(associator_to_json(phi), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def series_to_json(s: HSeries) -> List:
    return [vec_entries(c) for c in s.coeffs]


def twist_to_json(J: TwistSeries) -> Dict[str, Any]:
    return {"method": J.method, "order": J.order, "series": series_to_json(J.series)}


def twist_from_json(doc: Dict[str, Any], double: DrinfeldDouble) -> TwistSeries:
    coeffs = [{tuple(tuple(m) for m in key): Fraction(c) for key, c in layer} for layer in doc["series"]]
    return TwistSeries(HSeries(coeffs, int(doc["order"])), double, doc["method"])


def fixture_path(N: int, gauge: str) -> Path:
    return FIXTURE_DIR / f"associator-N{N}-{gauge}.json"
