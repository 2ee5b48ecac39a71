"""Sparse vectors over Q and truncated series in h with vector coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, List, Optional

Vec = Dict[Hashable, Fraction]


def vadd(a: Vec, b: Vec, scale=1) -> Vec:
    """Return a + scale*b as a new dict with zeros pruned."""
    out = dict(a)
    if not scale:
        return out
    for k, v in b.items():
        nv = out.get(k, 0) + scale * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


def vaccumulate(target: Vec, b: Vec, scale=1) -> None:
    """In-place target += scale*b."""
    if not scale:
        return
    for k, v in b.items():
        nv = target.get(k, 0) + scale * v
        if nv:
            target[k] = nv
        else:
            target.pop(k, None)


def vscale(a: Vec, c) -> Vec:
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


def vsum(vectors: Iterable[Vec]) -> Vec:
    out: Vec = {}
    for v in vectors:
        vaccumulate(out, v)
    return out


def check_exact(v: Vec) -> None:
    """Guard used by the audit tests: every coefficient must be an exact rational."""
    for c in v.values():
        if not isinstance(c, (int, Fraction)) or isinstance(c, bool):
            raise TypeError(f"non-exact coefficient {c!r} ({type(c).__name__})")


class HSeries:
    """Truncated series ``sum_k h^k c_k`` for ``k <= order``.

    Coefficients are sparse vectors; multiplication needs a bilinear map on
    coefficients, supplied per call because the coefficient space varies
    (enveloping algebra, tensor powers, function spaces, ...).
    """

    __slots__ = ("order", "coeffs", "flagged")

    def __init__(self, coeffs: Iterable[Vec], order: Optional[int] = None):
        coeffs = [dict(c) for c in coeffs]
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise ValueError("truncation order must be >= 0")
        coeffs = coeffs[: order + 1]
        coeffs += [{} for _ in range(order + 1 - len(coeffs))]
        self.order = order
        self.coeffs: List[Vec] = coeffs
        self.flagged = False

    @classmethod
    def constant(cls, vec: Vec, order: int) -> "HSeries":
        return cls([vec], order)

    @classmethod
    def zero(cls, order: int) -> "HSeries":
        return cls([], order)

    def __getitem__(self, k: int) -> Vec:
        return self.coeffs[k] if k <= self.order else {}

    def __eq__(self, other):
        if not isinstance(other, HSeries):
            return NotImplemented
        n = max(self.order, other.order)
        return all(self[k] == other[k] for k in range(n + 1))

    def __add__(self, other: "HSeries") -> "HSeries":
        n = min(self.order, other.order)
        return HSeries([vadd(self[k], other[k]) for k in range(n + 1)], n)

    def __sub__(self, other: "HSeries") -> "HSeries":
        n = min(self.order, other.order)
        return HSeries([vadd(self[k], other[k], -1) for k in range(n + 1)], n)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "HSeries":
        return HSeries([vscale(v, c) for v in self.coeffs], self.order)

    def map(self, fn: Callable[[Vec], Vec]) -> "HSeries":
        """Apply a linear map to every coefficient."""
        return HSeries([fn(v) if v else {} for v in self.coeffs], self.order)

    def truncate(self, order: int) -> "HSeries":
        return HSeries(self.coeffs[: order + 1], min(order, self.order))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def first_nonzero(self) -> Optional[int]:
        for k, v in enumerate(self.coeffs):
            if v:
                return k
        return None

    def mul(self, other: "HSeries", bilinear: Callable[[Vec, Vec], Vec]) -> "HSeries":
        n = min(self.order, other.order)
        out: List[Vec] = [{} for _ in range(n + 1)]
        for i in range(n + 1):
            a = self.coeffs[i]
            if not a:
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if b:
                    vaccumulate(out[i + j], bilinear(a, b))
        return HSeries(out, n)

    def inverse(self, bilinear: Callable[[Vec, Vec], Vec], one: Vec) -> "HSeries":
        """Inverse of a series whose h^0 coefficient is ``one``.

        Solves x_k = -sum_{j>=1} c_j x_{k-j} order by order (left inverse, which
        equals the right inverse in an associative algebra).
        """
        if self.coeffs[0] != one:
            raise ValueError("series inverse requires unit constant term")
        n = self.order
        inv: List[Vec] = [dict(one)] + [{} for _ in range(n)]
        for k in range(1, n + 1):
            acc: Vec = {}
            for j in range(1, k + 1):
                if self.coeffs[j] and inv[k - j]:
                    vaccumulate(acc, bilinear(inv[k - j], self.coeffs[j]))
            inv[k] = vscale(acc, -1)
        return HSeries(inv, n)

    def __repr__(self):
        return f"HSeries(order={self.order}, coeffs={self.coeffs!r})"


def exp_series(x: Vec, order: int, bilinear, one: Vec, scale=1) -> HSeries:
    """exp(scale * h * x) truncated at h^order."""
    coeffs = [dict(one)]
    term = dict(one)
    for k in range(1, order + 1):
        term = vscale(bilinear(term, x), Fraction(scale) / k)
        coeffs.append(term)
    return HSeries(coeffs, order)
