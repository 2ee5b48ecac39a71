"""Pass/fail reports shared by all verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Optional


@dataclass
class Check:
    name: str
    passed: bool
    witness: Any = None
    detail: str = ""
    order: Optional[int] = None
    degree: Optional[int] = None

    def as_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.detail:
            out["detail"] = self.detail
        if self.order is not None:
            out["h_order"] = self.order
        if self.degree is not None:
            out["degree"] = self.degree
        return out


@dataclass
class Report:
    title: str
    checks: List[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, witness=None, detail: str = "", order=None, degree=None) -> Check:
        c = Check(name, bool(passed), witness, detail, order, degree)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.witness, c.detail, c.order, c.degree))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"title": self.title, "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}

    def __str__(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            w = f" witness={c.witness}" if c.witness is not None else ""
            lines.append(f"  [{'ok' if c.passed else 'XX'}] {c.name}{w}")
        return "\n".join(lines)
