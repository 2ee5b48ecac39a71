"""Induced modules U(g) (x)_{U(k)} 1 with k spanned by the last generators of a basis.

The Verma modules M- = U(g)/U(g)g-, M+ = U(g)/U(g)g+ and the homogeneous
carrier T = U(g)/U(g)h are all instances: choose a basis of g whose trailing
vectors span the annihilated subalgebra, work in the PBW basis of that
reordered algebra and drop every monomial that involves a trailing generator.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .kernel.enveloping import Envelope, Mono, monomials_upto, word_of
from .kernel.lie import LieAlgebra, matrix_inverse, to_basis
from .kernel.series import HSeries, Vec, vaccumulate


class InducedModule:
    """Cyclic module generated by ``1`` with the trailing ``dim - n_free`` generators acting by zero.

    ``local`` is the Lie algebra in the module's own basis; ``images[i]`` is
    the i-th generator of the ambient algebra written in that basis.
    """

    def __init__(self, ambient: Envelope, local: LieAlgebra, images: Sequence[Vec], n_free: int, name: str = "module"):
        self.ambient = ambient
        self.local_env = Envelope(local)
        self.images = [dict(v) for v in images]
        self.n_free = n_free
        self.name = name
        self.dim = local.dim
        self._convert_cache: Dict[Mono, Vec] = {}
        self._act_cache: Dict[Tuple[Mono, Mono], Vec] = {}
        self.vacuum: Mono = self.local_env.unit

    # construction helpers

    @classmethod
    def from_basis(cls, ambient: Envelope, rows: Sequence[Sequence], n_free: int, name: str = "module"):
        """rows[a] = coordinates of the a-th local basis vector in the ambient basis."""
        labels = [f"{name}{a}" for a in range(len(rows))]
        local = ambient.lie.rebase(rows, labels)
        inv = matrix_inverse([[Fraction(v) for v in row] for row in rows])
        images = [to_basis({i: Fraction(1)}, inv) for i in range(ambient.dim)]
        return cls(ambient, local, images, n_free, name)

    def is_basis_mono(self, m: Mono) -> bool:
        return not any(m[self.n_free:])

    def basis(self, degree: int) -> List[Mono]:
        return [m + (0,) * (self.dim - self.n_free) for m in monomials_upto(self.n_free, degree)]

    def free_exponents(self, m: Mono) -> Mono:
        return m[: self.n_free]

    def convert(self, m: Mono) -> Vec:
        """An ambient PBW monomial rewritten in the local PBW basis."""
        hit = self._convert_cache.get(m)
        if hit is None:
            env = self.local_env
            res = env.one()
            for i in word_of(m):
                res = env.mul(res, env.element(self.images[i]))
            hit = res
            self._convert_cache[m] = hit
        return hit

    def project(self, v: Vec) -> Vec:
        return {m: c for m, c in v.items() if self.is_basis_mono(m)}

    def act_mono(self, u: Mono, m: Mono) -> Vec:
        """Ambient monomial u acting on the basis vector m."""
        key = (u, m)
        hit = self._act_cache.get(key)
        if hit is None:
            env = self.local_env
            out: Vec = {}
            for lm, c in self.convert(u).items():
                for mm, v in env.mono_mul(lm, m).items():
                    if self.is_basis_mono(mm):
                        nv = out.get(mm, 0) + c * v
                        if nv:
                            out[mm] = nv
                        else:
                            out.pop(mm, None)
            hit = out
            self._act_cache[key] = hit
        return hit

    def act(self, u: Vec, v: Vec) -> Vec:
        out: Vec = {}
        for um, uc in u.items():
            for m, c in v.items():
                vaccumulate(out, self.act_mono(um, m), uc * c)
        return out

    def act_local(self, u: Vec, v: Vec) -> Vec:
        """Action of an element already written in the local basis."""
        out: Vec = {}
        for um, uc in u.items():
            for m, c in v.items():
                for mm, val in self.local_env.mono_mul(um, m).items():
                    if self.is_basis_mono(mm):
                        vaccumulate(out, {mm: val}, uc * c)
        return out

    def format(self, v: Vec) -> str:
        return self.local_env.format(v)


def tensor_act(modules: Sequence[InducedModule], op: Vec, vec: Vec) -> Vec:
    """An element of U(g)^{(x)k} acting on a vector of the tensor product of k modules."""
    out: Vec = {}
    for okey, oc in op.items():
        for vkey, vc in vec.items():
            parts = [mod.act_mono(u, m) for mod, u, m in zip(modules, okey, vkey)]
            if not all(parts):
                continue
            _accumulate_product(out, parts, oc * vc)
    return out


def _accumulate_product(out: Vec, parts: List[Vec], coeff) -> None:
    acc = [((), coeff)]
    for p in parts:
        acc = [(k + (m,), c * v) for k, c in acc for m, v in p.items()]
    for k, c in acc:
        nv = out.get(k, 0) + c
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)


def series_act(modules: Sequence[InducedModule], op: HSeries, vec: HSeries) -> HSeries:
    return op.mul(vec, lambda a, b: tensor_act(modules, a, b))


def permute_vec(vec: Vec, perm: Sequence[int]) -> Vec:
    out: Vec = {}
    for key, c in vec.items():
        new = [None] * len(key)
        for i, m in enumerate(key):
            new[perm[i]] = m
        out[tuple(new)] = c
    return out


def verma_minus(double) -> InducedModule:
    """M- = U(g+) 1-: the double's own basis already lists g+ first."""
    env = double.envelope()
    n2 = 2 * double.n
    mod = InducedModule(env, env.lie, [{i: Fraction(1)} for i in range(n2)], double.n, "M-")
    mod.local_env = env
    return mod


def verma_plus(double) -> InducedModule:
    """M+ = U(g-) 1+: reorder the basis so g- comes first."""
    env = double.envelope()
    n = double.n
    order = list(range(n, 2 * n)) + list(range(n))
    rows = [[int(order[a] == j) for j in range(2 * n)] for a in range(2 * n)]
    labels = [double.total.labels[i] for i in order]
    local = double.total.rebase(rows, labels)
    images = [{order.index(i): Fraction(1)} for i in range(2 * n)]
    return InducedModule(env, local, images, n, "M+")
