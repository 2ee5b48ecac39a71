"""Batch front end: validate -> double -> Phi -> J -> quantize -> verify, with cached artifacts.

Exit codes: 0 all checks passed, 1 a verification failed (the report is
still written), 2 bad command line, 3 input schema violation, 4 internal
invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__
from .associator import AssociatorSeries, solve_associator, specialize, verify_associator
from .bialgebra import InternalError, build_double, validate_bialgebra, validate_morphism, verify_double
from .homogeneous import (SubBialgebraError, build_homspace_quantization, homspace_star, split_quantization,
                          verify_homspace, verify_split)
from .kernel.enveloping import mono_degree
from .poisson import CoidealError, ManinQuadruple, check_poisson_group, quadruple_from_coideal, validate_quadruple
from .quantize_group import (LocalityError, build_quantization, check_duality, check_functoriality,
                             check_semiclassical, extract_bidiff, operators_agree, r_matrix_bidiff, star_product, verify_hopf)
from .report import Report
from .serialize import (InputDocument, SchemaError, associator_digest, associator_from_json, associator_to_json,
                        atomic_write, dumps, fixture_path, fmt, load_document, twist_from_json, twist_to_json,
                        vec_entries)
from .twist import TwistSeries, fiber_functor_twist, solve_twist, verify_twist

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_INTERNAL = 4

TASKS = ("validate", "quantize-group", "quantize-homspace", "associator", "twist", "check-all")
GAUGES = ("even",)
TWISTS = ("fiber", "solved")
FIXTURE_ORDER = 3


@dataclass
class JobConfig:
    input: Optional[str]
    task: str
    h_order: int = 3
    pbw_degree: int = 4
    gauge: str = "even"
    cache_dir: Optional[str] = None
    emit: str = "json"
    antipode_check: bool = False
    twist: str = "fiber"
    output: Optional[str] = None
    workers: int = 1

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.h_order < 1:
            raise ValueError("--h-order must be >= 1")
        if self.pbw_degree < 2:
            raise ValueError("--pbw-degree must be >= 2")
        if self.gauge not in GAUGES:
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if self.twist not in TWISTS:
            raise ValueError(f"unknown twist method {self.twist!r}")
        if self.task != "associator" and not self.input:
            raise ValueError(f"task {self.task!r} needs an input file")


# -- cached artifacts ------------------------------------------------------------------

def load_associator(N: int, gauge: str, cache_dir: Optional[str]) -> AssociatorSeries:
    """Phi from the cache directory, else from the shipped fixture, else solved (and cached)."""
    name = fixture_path(N, gauge).name
    candidates = []
    if cache_dir:
        candidates.append(Path(cache_dir) / name)
    candidates.append(fixture_path(N, gauge))
    candidates.extend(fixture_path(M, gauge) for M in range(N + 1, FIXTURE_ORDER + 1))
    for path in candidates:
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                return associator_from_json(json.load(fh)).truncated(N)
    phi = solve_associator(N, gauge)
    if cache_dir:
        atomic_write(Path(cache_dir) / name, dumps(associator_to_json(phi)))
    return phi


def load_twist(doc: InputDocument, phi: AssociatorSeries, cfg: JobConfig) -> TwistSeries:
    double, r = build_double(doc.bialgebra)
    key = f"twist-{doc.digest()}-N{cfg.h_order}-D{cfg.pbw_degree}-{associator_digest(phi)}-{cfg.twist}.json"
    path = Path(cfg.cache_dir) / key if cfg.cache_dir else None
    if path is not None and path.exists():
        with open(path, encoding="utf-8") as fh:
            return twist_from_json(json.load(fh), double)
    phi_u = specialize(phi.truncated(cfg.h_order), double.envelope(), r.omega())
    make = fiber_functor_twist if cfg.twist == "fiber" else solve_twist
    J = make(phi_u, r, cfg.h_order)
    if path is not None:
        atomic_write(path, dumps(twist_to_json(J)))
    return J


def regenerate_fixtures(max_order: int = FIXTURE_ORDER) -> List[Path]:
    out = []
    for gauge in GAUGES:
        phi = solve_associator(max_order, gauge)
        path = fixture_path(max_order, gauge)
        atomic_write(path, dumps(associator_to_json(phi)))
        out.append(path)
    return out


# -- pipeline ---------------------------------------------------------------------------

class Pipeline:
    def __init__(self, cfg: JobConfig, doc: Optional[InputDocument]):
        self.cfg = cfg
        self.doc = doc
        self.sections: List[Report] = []
        self.tables: Dict[str, object] = {}
        self._phi: Optional[AssociatorSeries] = None
        self._J: Optional[TwistSeries] = None
        self._Q = None

    # shared artifacts

    @property
    def phi(self) -> AssociatorSeries:
        if self._phi is None:
            self._phi = load_associator(self.cfg.h_order, self.cfg.gauge, self.cfg.cache_dir)
        return self._phi

    @property
    def J(self) -> TwistSeries:
        if self._J is None:
            self._J = load_twist(self.doc, self.phi, self.cfg)
        return self._J

    @property
    def Q(self):
        if self._Q is None:
            c = self.cfg
            self._Q = build_quantization(self.doc.bialgebra, c.h_order, c.pbw_degree, associator=self.phi, J=self.J)
        return self._Q

    def run_parallel(self, jobs: Sequence[Callable[[], Report]]) -> None:
        """Independent sections, possibly on worker threads; results kept in submission order."""
        if self.cfg.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                reports = list(pool.map(lambda f: f(), jobs))
        else:
            reports = [f() for f in jobs]
        self.sections.extend(reports)

    # stages

    def stage_validate(self) -> bool:
        b = self.doc.bialgebra
        rep = validate_bialgebra(b)
        self.sections.append(rep)
        if not rep.passed:
            return False
        double, r = build_double(b)
        jobs = [lambda: verify_double(double, r), lambda: check_poisson_group(b, self.cfg.pbw_degree)]
        if self.doc.quadruple is not None:
            jobs.append(lambda: validate_quadruple(ManinQuadruple.make(double, self.doc.quadruple)))
        m = self.doc.build_morphism()
        if m is not None:
            jobs.append(lambda: _titled(validate_morphism(m), "morphism"))
        self.run_parallel(jobs)
        return all(s.passed for s in self.sections)

    def stage_associator(self) -> None:
        phi = self.phi
        self.sections.append(verify_associator(phi))
        self.tables["associator"] = {"id": phi.identifier(), "digest": associator_digest(phi),
                                     **associator_to_json(phi)}

    def stage_twist(self) -> None:
        c = self.cfg
        double, r = build_double(self.doc.bialgebra)
        phi_u = specialize(self.phi.truncated(c.h_order), double.envelope(), r.omega())
        J = self.J
        self.sections.append(verify_twist(J, phi_u, r, c.pbw_degree))
        self.tables["twist"] = {"method": J.method, "J_1": vec_entries(J.component(1)),
                                "r_over_2": vec_entries({k: v / 2 for k, v in r.element.items()})}

    def stage_group(self) -> None:
        c = self.cfg
        Q = self.Q
        D = c.pbw_degree
        self.run_parallel([
            lambda: verify_hopf(Q, c.antipode_check, D),
            lambda: check_semiclassical(Q, self.doc.bialgebra, D),
            lambda: _single("duality of the two coproduct routes", check_duality(Q, D), D, c.h_order),
            lambda: locality_report(Q, D),
        ])
        double, r = build_double(self.doc.bialgebra)
        rep = Report("twist used for the quantization")
        half = {k: v / 2 for k, v in r.element.items()}
        rep.add("J_1 = r/2", self.J.component(1) == half, None, self.J.method)
        self.sections.append(rep)
        self.tables["J_1"] = vec_entries(self.J.component(1))
        self.tables["star_product"] = star_table(Q, D, star_product)
        m = self.doc.build_morphism()
        if m is not None:
            src_Q = build_quantization(m.source, c.h_order, D, c.twist, associator=self.phi)
            self.sections.append(check_functoriality(m, c.h_order, D, c.twist, associator=self.phi,
                                                     source=src_Q, target=Q))

    def stage_homspace(self) -> None:
        c = self.cfg
        doc = self.doc
        double, _ = build_double(doc.bialgebra)
        quads = []
        if doc.quadruple is not None:
            quads.append(("quadruple", ManinQuadruple.make(double, doc.quadruple)))
        if doc.subalgebra is not None:
            try:
                quads.append(("coideal", quadruple_from_coideal(doc.bialgebra, doc.subalgebra, double)))
            except CoidealError as e:
                rep = Report("coideal quadruple")
                rep.add("subalgebra is a coideal", False, getattr(e, "witness", None), str(e))
                self.sections.append(rep)
        if not quads and doc.subalgebra is None:
            raise SchemaError("quantize-homspace needs a 'quadruple' or 'subalgebra' block")
        for tag, q in quads:
            v = validate_quadruple(q)
            if not v.passed:
                self.sections.append(_titled(v, f"quadruple ({tag})"))
                continue
            H = build_homspace_quantization(q, c.h_order, c.pbw_degree, associator=self.phi, J=self.J)
            self.sections.append(_titled(verify_homspace(H, c.pbw_degree), f"quantized homogeneous space ({tag})"))
            self.tables[f"homspace_star_{tag}"] = star_table(H, c.pbw_degree, homspace_star)
        if doc.subalgebra is not None:
            try:
                S = split_quantization(doc.bialgebra, doc.subalgebra, c.h_order, c.pbw_degree, group=self.Q)
            except SubBialgebraError as e:
                rep = Report("split homogeneous quantization")
                rep.add("split case applicability", True, None, f"not applicable, subalgebra is not a sub-bialgebra: {e}")
                self.sections.append(rep)
            else:
                self.sections.append(verify_split(S, doc.bialgebra))
                self.tables["split_invariants"] = [[vec_entries(layer) for layer in f] for f in S.basis]
                self.tables["split_structure"] = [
                    [i, j, [[l, [fmt(x) for x in cs]] for l, cs in sorted(v.items())]]
                    for (i, j), v in sorted(S.table.items())]

    # driver

    def run(self) -> None:
        t = self.cfg.task
        if t == "associator":
            self.stage_associator()
            return
        if not self.stage_validate() or t == "validate":
            return
        if t == "check-all":
            self.stage_associator()
        if t in ("twist", "check-all"):
            self.stage_twist()
        if t in ("quantize-group", "check-all"):
            self.stage_group()
        if t == "quantize-homspace" or (t == "check-all" and (self.doc.subalgebra is not None
                                                             or self.doc.quadruple is not None)):
            self.stage_homspace()

    def document(self) -> Dict[str, object]:
        c = self.cfg
        doc = {
            "tool": "quantlie",
            "version": __version__,
            "task": c.task,
            "input": self.doc.name if self.doc else None,
            "input_digest": self.doc.digest() if self.doc else None,
            "h_order": c.h_order,
            "pbw_degree": c.pbw_degree,
            "gauge": c.gauge,
            "twist": c.twist,
            "passed": all(s.passed for s in self.sections),
            "sections": [s.as_dict() for s in self.sections],
        }
        if self.tables:
            doc["tables"] = self.tables
        return doc


def _titled(rep: Report, title: str) -> Report:
    out = Report(title)
    out.extend(rep)
    return out


def _single(title: str, witness, degree: int, order: int) -> Report:
    rep = Report(title)
    rep.add("star product equals transpose of J^-1 i_-", witness is None, witness, order=order, degree=degree)
    return rep


def locality_report(Q, D: int) -> Report:
    rep = Report("locality certificate")
    for k in range(Q.N + 1):
        try:
            op = extract_bidiff(Q, k, D)
        except LocalityError as e:
            rep.add(f"h^{k} coefficient is bidifferential", False, None, str(e), order=k, degree=D)
            continue
        rep.add(f"h^{k} coefficient is bidifferential", True, None, f"order <= {op.order_bound}", order=k, degree=D)
        if k == 1:
            w = operators_agree(op, r_matrix_bidiff(Q, D), Q.n, D)
            rep.add("h^1 operator equals the r-matrix form", w is None, w, order=1, degree=D)
    return rep


def star_table(Q, D: int, product) -> List:
    rows = []
    monos = Q.basis(D, 1)
    for f in monos:
        for g in monos:
            if mono_degree(f) + mono_degree(g) > D:
                continue
            s = product({f: 1}, {g: 1}, Q, D)
            rows.append({"f": list(f), "g": list(g), "orders": [vec_entries(c) for c in s.coeffs]})
    return rows


# -- emitters ----------------------------------------------------------------------------

def emit_text(doc: Dict[str, object]) -> str:
    lines = [f"quantlie {doc['version']}  task={doc['task']}  input={doc['input']}  "
             f"N={doc['h_order']}  D={doc['pbw_degree']}  gauge={doc['gauge']}  twist={doc['twist']}",
             f"overall: {'PASS' if doc['passed'] else 'FAIL'}"]
    for sec in doc["sections"]:
        lines.append("")
        lines.append(f"{sec['title']}: {'PASS' if sec['passed'] else 'FAIL'}")
        for chk in sec["checks"]:
            where = []
            if "h_order" in chk:
                where.append(f"h^{chk['h_order']}")
            if "degree" in chk:
                where.append(f"deg<={chk['degree']}")
            extra = f"  [{', '.join(where)}]" if where else ""
            wit = f"  witness={json.dumps(json.loads(dumps(chk['witness'])))}" if "witness" in chk else ""
            lines.append(f"  {'ok  ' if chk['passed'] else 'FAIL'} {chk['name']}{extra}{wit}")
    star = doc.get("tables", {}).get("star_product") if isinstance(doc.get("tables"), dict) else None
    if star:
        lines.append("")
        lines.append("star product  f * g  (coefficients of h^k)")
        for row in star:
            parts = []
            for k, layer in enumerate(row["orders"]):
                if layer:
                    terms = " + ".join(f"{c}*u^{tuple(m)}" for m, c in layer)
                    parts.append(f"h^{k}: {terms}")
            lines.append(f"  u^{tuple(row['f'])} * u^{tuple(row['g'])}:  " + ("; ".join(parts) or "0"))
    return "\n".join(lines) + "\n"


def emit(doc: Dict[str, object], fmt_name: str) -> str:
    return dumps(doc) if fmt_name == "json" else emit_text(doc)


# -- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quantlie", description="Exact quantization of Lie bialgebras and "
                                                            "Poisson homogeneous spaces.")
    p.add_argument("input", nargs="?", help="input JSON document")
    p.add_argument("--task", default="check-all", choices=TASKS)
    p.add_argument("--h-order", type=int, default=3, help="truncation order N in h (>= 1)")
    p.add_argument("--pbw-degree", type=int, default=4, help="PBW / function degree D (>= 2)")
    p.add_argument("--gauge", default="even", help="associator gauge")
    p.add_argument("--twist", default="fiber", help="twist construction: fiber or solved")
    p.add_argument("--cache-dir", help="directory for cached Phi and J")
    p.add_argument("--emit", default="json", choices=("json", "text-table"))
    p.add_argument("--antipode-check", action="store_true", help="also solve and verify the antipode")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="threads for independent report sections")
    p.add_argument("--regenerate-fixtures", action="store_true", help="rewrite the shipped associator fixture and exit")
    p.add_argument("--version", action="version", version=f"quantlie {__version__}")
    return p


def run(cfg: JobConfig) -> int:
    """Run one job; returns the exit status. The report is written even when checks fail."""
    doc = load_document(cfg.input) if cfg.input else None
    pipe = Pipeline(cfg, doc)
    pipe.run()
    out = pipe.document()
    text = emit(out, cfg.emit)
    if cfg.output:
        atomic_write(Path(cfg.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if out["passed"] else EXIT_VERIFY


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.regenerate_fixtures:
        for path in regenerate_fixtures():
            print(path)
        return EXIT_OK
    cfg = JobConfig(args.input, args.task, args.h_order, args.pbw_degree, args.gauge, args.cache_dir,
                    args.emit, args.antipode_check, args.twist, args.output, args.workers)
    try:
        cfg.validate()
    except ValueError as e:
        parser.print_usage(sys.stderr)
        print(f"quantlie: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except SchemaError as e:
        print(f"quantlie: schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as e:
        print(f"quantlie: cannot read input: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as e:
        print(f"quantlie: I/O error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InternalError, ArithmeticError, KeyError, IndexError, TypeError, AssertionError) as e:
        print(f"quantlie: internal invariant breach ({type(e).__name__}: {e}). "
              "This is a bug; please report it with the input file and command line.", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
