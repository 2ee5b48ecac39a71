"""PBW arithmetic in universal enveloping algebras and their tensor powers.

A PBW monomial is a tuple of exponents over the ordered basis of the Lie
algebra. Elements of ``U(g)`` are dicts ``{monomial: Fraction}``; elements of
``U(g)^{(x)k}`` are dicts keyed by k-tuples of monomials.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from itertools import product
from math import comb, factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .lie import LieAlgebra
from .series import Vec, vaccumulate, vscale

Mono = Tuple[int, ...]

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class TruncationFlag(Exception):
    """Raised when a computation that must be exact would exceed its degree cap."""


def mono_degree(m: Mono) -> int:
    return sum(m)


def mono_factorial(m: Mono) -> int:
    out = 1
    for e in m:
        out *= factorial(e)
    return out


def monomials_upto(n: int, degree: int, min_degree: int = 0) -> List[Mono]:
    """All exponent vectors of length n with min_degree <= total <= degree, graded-lex."""
    out = []
    for d in range(min_degree, degree + 1):
        out.extend(_monos_of_degree(n, d))
    return out


def _monos_of_degree(n: int, d: int) -> List[Mono]:
    if n == 0:
        return [()] if d == 0 else []
    res = []
    for first in range(d, -1, -1):
        for rest in _monos_of_degree(n - 1, d - first):
            res.append((first,) + rest)
    return res


class Envelope:
    """Computational model of ``U(L)`` in the PBW basis of ``L``'s ordered basis.

    Products are cached per monomial pair; instances are safe to share since
    cached values are never mutated after insertion.
    """

    def __init__(self, lie: LieAlgebra):
        self.lie = lie
        self.dim = lie.dim
        self.unit: Mono = (0,) * lie.dim
        self._gen_cache: Dict[Tuple[int, Mono], Vec] = {}
        self._mul_cache: Dict[Tuple[Mono, Mono], Vec] = {}
        self._delta_cache: Dict[Mono, Vec] = {}

    # -- single factor -----------------------------------------------------

    def gen(self, i: int) -> Mono:
        if not 0 <= i < self.dim:
            raise IndexError(f"generator index {i} out of range")
        m = [0] * self.dim
        m[i] = 1
        return tuple(m)

    def one(self) -> Vec:
        return {self.unit: Fraction(1)}

    def element(self, vec: Vec) -> Vec:
        """Lie algebra vector {index: coeff} as an element of U."""
        return {self.gen(i): Fraction(c) for i, c in vec.items() if c}

    def left_gen(self, i: int, m: Mono) -> Vec:
        """PBW normal form of x_i * m."""
        key = (i, m)
        hit = self._gen_cache.get(key)
        if hit is not None:
            return hit
        j = next((k for k, e in enumerate(m) if e), None)
        if j is None or i <= j:
            new = list(m)
            new[i] += 1
            res = {tuple(new): Fraction(1)}
        else:
            # x_i x_j m' = x_j (x_i m') + [x_i, x_j] m'
            rest = list(m)
            rest[j] -= 1
            rest = tuple(rest)
            res: Vec = {}
            for mm, c in self.left_gen(i, rest).items():
                vaccumulate(res, self.left_gen(j, mm), c)
            for k, c in self.lie.bracket(i, j).items():
                vaccumulate(res, self.left_gen(k, rest), c)
        self._gen_cache[key] = res
        return res

    def mono_mul(self, a: Mono, b: Mono) -> Vec:
        key = (a, b)
        hit = self._mul_cache.get(key)
        if hit is not None:
            return hit
        if not any(a):
            res = {b: Fraction(1)}
        elif not any(b):
            res = {a: Fraction(1)}
        else:
            res = {b: Fraction(1)}
            for i in reversed(word_of(a)):
                nxt: Vec = {}
                for mm, c in res.items():
                    vaccumulate(nxt, self.left_gen(i, mm), c)
                res = nxt
        self._mul_cache[key] = res
        return res

    def mul(self, a: Vec, b: Vec) -> Vec:
        out: Vec = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                vaccumulate(out, self.mono_mul(ma, mb), ca * cb)
        return out

    def straighten_word(self, word: Sequence[int]) -> Vec:
        res = self.one()
        for i in reversed(list(word)):
            if not 0 <= i < self.dim:
                raise IndexError(f"generator index {i} out of range")
            nxt: Vec = {}
            for mm, c in res.items():
                vaccumulate(nxt, self.left_gen(i, mm), c)
            res = nxt
        return res

    def commutator(self, a: Vec, b: Vec) -> Vec:
        out = self.mul(a, b)
        vaccumulate(out, self.mul(b, a), -1)
        return out

    def delta0_mono(self, m: Mono) -> Vec:
        """Undeformed coproduct of a PBW monomial (a shuffle: no straightening needed)."""
        hit = self._delta_cache.get(m)
        if hit is not None:
            return hit
        out: Vec = {}
        for left in product(*(range(e + 1) for e in m)):
            right = tuple(e - l for e, l in zip(m, left))
            c = 1
            for e, l in zip(m, left):
                c *= comb(e, l)
            out[(tuple(left), right)] = Fraction(c)
        self._delta_cache[m] = out
        return out

    def delta0(self, a: Vec) -> Vec:
        out: Vec = {}
        for m, c in a.items():
            vaccumulate(out, self.delta0_mono(m), c)
        return out

    def counit(self, a: Vec) -> Fraction:
        return Fraction(a.get(self.unit, 0))

    # -- tensor powers -----------------------------------------------------

    def tmul(self, a: Vec, b: Vec) -> Vec:
        """Componentwise product in U^{(x)k}."""
        out: Vec = {}
        for ka, ca in a.items():
            for kb, cb in b.items():
                parts = [self.mono_mul(x, y) for x, y in zip(ka, kb)]
                coeff = ca * cb
                for combo in product(*(p.items() for p in parts)):
                    c = coeff
                    for _, v in combo:
                        c *= v
                    key = tuple(m for m, _ in combo)
                    nv = out.get(key, 0) + c
                    if nv:
                        out[key] = nv
                    else:
                        out.pop(key, None)
        return out

    def tone(self, k: int) -> Vec:
        return {(self.unit,) * k: Fraction(1)}

    def embed(self, t: Vec, legs: Sequence[int], k: int) -> Vec:
        """Place the factors of t (a tensor of len(legs) factors) in the given legs of U^{(x)k}."""
        out: Vec = {}
        for key, c in t.items():
            full = [self.unit] * k
            for leg, m in zip(legs, key):
                full[leg] = m
            full = tuple(full)
            out[full] = out.get(full, 0) + c
        return {k_: v for k_, v in out.items() if v}

    def delta_leg(self, t: Vec, leg: int) -> Vec:
        """Apply Delta_0 to one leg, splitting it into two adjacent legs."""
        out: Vec = {}
        for key, c in t.items():
            for (l, r), v in self.delta0_mono(key[leg]).items():
                nk = key[:leg] + (l, r) + key[leg + 1:]
                nv = out.get(nk, 0) + c * v
                if nv:
                    out[nk] = nv
                else:
                    out.pop(nk, None)
        return out

    def counit_leg(self, t: Vec, leg: int) -> Vec:
        out: Vec = {}
        for key, c in t.items():
            if not any(key[leg]):
                nk = key[:leg] + key[leg + 1:]
                out[nk] = out.get(nk, 0) + c
        return {k_: v for k_, v in out.items() if v}

    def permute(self, t: Vec, perm: Sequence[int]) -> Vec:
        """Leg permutation: factor at position i moves to position perm[i]."""
        out: Vec = {}
        for key, c in t.items():
            new = [None] * len(key)
            for i, m in enumerate(key):
                new[perm[i]] = m
            out[tuple(new)] = c
        return out

    def tensor(self, *factors: Vec) -> Vec:
        out: Vec = {(): Fraction(1)}
        for f in factors:
            nxt: Vec = {}
            for k1, c1 in out.items():
                for m, c2 in f.items():
                    nxt[k1 + (m,)] = c1 * c2
            out = nxt
        return out

    def truncate(self, t: Vec, cap: Optional[int]):
        """Drop terms with some leg of PBW degree > cap. Returns (tensor, flagged)."""
        if cap is None:
            return t, False
        kept = {}
        flagged = False
        for key, c in t.items():
            if _key_degree(key) > cap:
                flagged = True
            else:
                kept[key] = c
        return kept, flagged

    def format(self, a: Vec) -> str:
        return format_element(a, self.lie.labels)


def _key_degree(key) -> int:
    if key and isinstance(key[0], tuple):
        return max(sum(m) for m in key)
    return sum(key)


def word_of(m: Mono) -> List[int]:
    out = []
    for i, e in enumerate(m):
        out.extend([i] * e)
    return out


def format_mono(m: Mono, labels: Sequence[str]) -> str:
    parts = []
    for i, e in enumerate(m):
        if e == 1:
            parts.append(labels[i])
        elif e:
            parts.append(f"{labels[i]}^{e}")
    return "*".join(parts) if parts else "1"


def format_element(a: Vec, labels: Sequence[str]) -> str:
    if not a:
        return "0"
    terms = []
    for key in sorted(a):
        c = a[key]
        if key and isinstance(key[0], tuple):
            m = " (x) ".join(format_mono(k, labels) for k in key)
        else:
            m = format_mono(key, labels)
        terms.append(f"({c})*{m}")
    return " + ".join(terms)


class EnvElement:
    """Element of U(L): a thin immutable-by-convention wrapper for the public API."""

    __slots__ = ("env", "terms", "truncated")

    def __init__(self, env: Envelope, terms: Vec, truncated: bool = False):
        self.env = env
        self.terms = {k: Fraction(v) for k, v in terms.items() if v}
        self.truncated = truncated

    def _same(self, other: "EnvElement"):
        if self.env.lie != other.env.lie:
            raise ValueError("elements belong to different enveloping algebras")

    def __add__(self, other):
        self._same(other)
        out = dict(self.terms)
        vaccumulate(out, other.terms)
        return EnvElement(self.env, out, self.truncated or other.truncated)

    def __sub__(self, other):
        self._same(other)
        out = dict(self.terms)
        vaccumulate(out, other.terms, -1)
        return EnvElement(self.env, out, self.truncated or other.truncated)

    def __mul__(self, other):
        if isinstance(other, EnvElement):
            return env_multiply(self, other)
        return EnvElement(self.env, vscale(self.terms, Fraction(other)), self.truncated)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, EnvElement) and self.terms == other.terms

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def __repr__(self):
        return self.env.format(self.terms)


def straighten(word: Sequence[int], env: Envelope, cap: Optional[int] = None) -> EnvElement:
    """PBW normal form of the product of the listed generators."""
    if cap is not None and cap < len(word):
        raise ValueError("cap must be at least the word length")
    terms = env.straighten_word(word)
    kept, flagged = env.truncate(terms, cap)
    return EnvElement(env, kept, flagged)


def env_multiply(a: EnvElement, b: EnvElement, cap: Optional[int] = None) -> EnvElement:
    a._same(b)
    kept, flagged = a.env.truncate(a.env.mul(a.terms, b.terms), cap)
    return EnvElement(a.env, kept, flagged or a.truncated or b.truncated)


def delta0(a: EnvElement, cap: Optional[int] = None) -> Vec:
    kept, _ = a.env.truncate(a.env.delta0(a.terms), cap)
    return kept


def counit0(a: EnvElement) -> Fraction:
    return a.env.counit(a.terms)
