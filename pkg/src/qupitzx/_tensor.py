"""Exact tensor contraction over Q(i, omega_p), vectorised.

A factor is a labelled tensor whose last axis holds integer coefficients
over the cyclotomic basis {i^a omega^b}.  Multiplication of coefficients
is a convolution followed by basis reduction, implemented as an integer
matmul against a precomputed reduction table, so numpy does the heavy
lifting.  Powers of p^{-1/2} are tracked in a side exponent and folded in
exactly at the very end (sqrt(p) itself lives in the field).

Coefficients are int64 with a conservative magnitude bound carried along;
if a computation could overflow, the affected arrays fall back to Python
integers (object dtype), trading speed for unconditional exactness.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Hashable, Sequence

import numpy as np

from .cyclo import Cyclo, CycloMatrix, _mul_table, sqrt_p
from .modp import Prime

_INT64_LIMIT = float(2**60)


@lru_cache(maxsize=None)
def _reduction_matrix(p: int) -> np.ndarray:
    """(D*D, D) int64 matrix turning outer coefficient products into basis form."""
    table = _mul_table(p)
    dim = 2 * (p - 1)
    red = np.zeros((dim * dim, dim), dtype=np.int64)
    for c1 in range(dim):
        for c2 in range(dim):
            for coeff, idx in table[c1][c2]:
                red[c1 * dim + c2, idx] = coeff
    return red


@lru_cache(maxsize=None)
def _red_absmax(p: int) -> float:
    red = _reduction_matrix(p)
    return float(np.abs(red).sum(axis=0).max())


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class Factor:
    """A tensor factor with named axes over Z_p values plus a coefficient axis."""

    __slots__ = ("p", "axes", "arr", "hp", "den", "bound")

    def __init__(self, p: Prime, axes: Sequence[Hashable], arr: np.ndarray,
                 hp: int = 0, den: int = 1, bound: float | None = None):
        self.p = p
        self.axes = list(axes)
        self.arr = arr
        self.hp = hp
        self.den = den
        if bound is None:
            bound = float(np.abs(arr.astype(object)).max()) if arr.size else 0.0
        self.bound = bound

    def _to_object(self):
        if self.arr.dtype != object:
            self.arr = self.arr.astype(object)

    def multiply(self, other: "Factor") -> "Factor":
        """Pointwise join over shared axes, outer product over the rest.

        The coefficient convolution loops over the first operand's nonzero
        coefficient planes, so memory stays at the size of the result and
        sparse coefficient structure (most entries are single monomials)
        is exploited.
        """
        p = self.p
        pm = p.p
        dim = 2 * (pm - 1)
        only2 = [ax for ax in other.axes if ax not in self.axes]
        out_axes = self.axes + only2
        new_bound = self.bound * other.bound * _red_absmax(pm)
        a1, a2 = self.arr, other.arr
        use_object = (new_bound > _INT64_LIMIT or a1.dtype == object
                      or a2.dtype == object)
        if use_object:
            a1 = a1.astype(object)
            a2 = a2.astype(object)
        # align a1 to (*dims1, 1...1, D)
        a1v = a1.reshape(a1.shape[:-1] + (1,) * len(only2) + (dim,))
        # align a2 to out_axes order with singletons where it lacks an axis
        perm = sorted(range(len(other.axes)),
                      key=lambda i: out_axes.index(other.axes[i]))
        a2t = np.transpose(a2, perm + [len(other.axes)])
        present = {out_axes.index(ax) for ax in other.axes}
        shape2 = tuple(pm if pos in present else 1
                       for pos in range(len(out_axes)))
        a2v = np.ascontiguousarray(a2t.reshape(shape2 + (dim,)))
        table = _mul_table(pm)
        # broadcast result shape
        out_shape = tuple(
            max(a, b) for a, b in zip(a1v.shape[:-1], a2v.shape[:-1])
        )
        if use_object:
            out = np.full(out_shape + (dim,), 0, dtype=object)
        else:
            out = np.zeros(out_shape + (dim,), dtype=np.int64)
        for c1 in range(dim):
            plane = a1v[..., c1]
            if not plane.any():
                continue
            row = table[c1]
            # contrib[..., c_out] = sum_{c2} a2v[..., c2] * red[c1][c2][c_out]
            for c2 in range(dim):
                src = a2v[..., c2]
                if not src.any():
                    continue
                prod = plane * src
                for coeff, idx in row[c2]:
                    if coeff == 1:
                        out[..., idx] += prod
                    elif coeff == -1:
                        out[..., idx] -= prod
                    else:
                        out[..., idx] += coeff * prod
        return Factor(p, out_axes, out, self.hp + other.hp,
                      self.den * other.den, new_bound)

    def sum_over(self, ax: Hashable) -> "Factor":
        i = self.axes.index(ax)
        arr = self.arr.sum(axis=i)
        axes = self.axes[:i] + self.axes[i + 1:]
        return Factor(self.p, axes, arr, self.hp, self.den, self.bound * self.p.p)

    def transpose_to(self, axes: Sequence[Hashable]) -> "Factor":
        perm = [self.axes.index(ax) for ax in axes] + [len(self.axes)]
        return Factor(self.p, list(axes), np.transpose(self.arr, perm),
                      self.hp, self.den, self.bound)


def scalar_factor(p: Prime, c: Cyclo) -> Factor:
    dim = 2 * (p.p - 1)
    arr = np.array(list(c.num), dtype=np.int64).reshape(dim)
    return Factor(p, [], arr, 0, c.den)


def entry_to_cyclo(p: Prime, coeffs, hp: int, den: int) -> Cyclo:
    c = Cyclo(p, [int(v) for v in coeffs], den)
    if hp:
        root = sqrt_p(p)
        if hp % 2:
            c = c * root
            hp += 1
        c = c.divide_by_int(p.p ** (hp // 2))
    return c


def contract(p: Prime, factors: list[Factor], eliminate: list[Hashable],
             keep: list[Hashable]) -> "Factor":
    """Bucket elimination: sum out `eliminate` axes, keep `keep` axes ordered.

    Deterministic: the variable whose elimination yields the smallest
    intermediate tensor goes first, ties broken by axis label.
    """
    factors = list(factors)
    todo = list(eliminate)
    while todo:
        best = None
        for ax in todo:
            group = [f for f in factors if ax in f.axes]
            axes = set()
            for f in group:
                axes.update(f.axes)
            cost = len(axes)
            key = (cost, repr(ax))
            if best is None or key < best[0]:
                best = (key, ax, group)
        _, ax, group = best
        if not group:
            todo.remove(ax)
            continue
        todo.remove(ax)
        combined = group[0]
        for f in group[1:]:
            combined = combined.multiply(f)
        combined = combined.sum_over(ax)
        factors = [f for f in factors if f not in group]
        factors.append(combined)
    result = factors[0]
    for f in factors[1:]:
        result = result.multiply(f)
    missing = [ax for ax in keep if ax not in result.axes]
    if missing:
        raise ValueError(f"axes missing from contraction result: {missing}")
    extra = [ax for ax in result.axes if ax not in keep]
    if extra:
        raise ValueError(f"unexpected leftover axes: {extra}")
    return result.transpose_to(keep)


def factor_to_matrix(p: Prime, f: Factor, out_axes: int, in_axes: int) -> CycloMatrix:
    """Reshape a contracted factor into an exact matrix.

    The factor's axes must be ordered outputs-then-inputs; wire 0 is the
    most significant base-p digit on each side.
    """
    pm = p.p
    rows, cols = pm**out_axes, pm**in_axes
    dim = 2 * (pm - 1)
    flat = f.arr.reshape(rows, cols, dim)
    data = [
        [entry_to_cyclo(p, flat[r, c], f.hp, f.den) for c in range(cols)]
        for r in range(rows)
    ]
    return CycloMatrix(p, rows, cols, data)


@lru_cache(maxsize=None)
def _sqrtp_mul_matrix(pval: int) -> np.ndarray:
    """(D, D) integer matrix: coeff-vector multiplication by sqrt(p)."""
    from .modp import prime

    p = prime(pval)
    root = sqrt_p(p)
    dim = 2 * (pval - 1)
    table = _mul_table(pval)
    m = np.zeros((dim, dim), dtype=np.int64)
    if root.den != 1:
        raise AssertionError("sqrt(p) has integral coefficients")
    for b in range(dim):
        for c2, y in enumerate(root.num):
            if not y:
                continue
            for coeff, idx in table[b][c2]:
                m[b, idx] += coeff * y
    return m


def factors_equal(f1: Factor, f2: Factor) -> bool:
    """Exact equality of two contracted factors over identical axes."""
    if f1.axes != f2.axes:
        raise ValueError("factors compare over identical axes")
    if f1.p != f2.p:
        return False
    pm = f1.p.p
    a1, a2 = f1.arr, f2.arr
    h1, h2 = f1.hp, f2.hp
    if h1 > h2:
        a1, a2, h1, h2 = a2, a1, h2, h1
        d1, d2 = f2.den, f1.den
        b1, b2 = f2.bound, f1.bound
    else:
        d1, d2 = f1.den, f2.den
        b1, b2 = f1.bound, f2.bound
    dh = h2 - h1
    scale1 = d2 * pm ** (dh // 2)
    bound = max(b1 * scale1 * (pm if dh % 2 else 1) * pm, b2 * d1)
    if bound > _INT64_LIMIT or a1.dtype == object or a2.dtype == object:
        a1 = a1.astype(object)
        a2 = a2.astype(object)
        s = _sqrtp_mul_matrix(pm).astype(object)
    else:
        s = _sqrtp_mul_matrix(pm)
    lhs = a1 * scale1
    if dh % 2:
        lhs = lhs.dot(s)
    rhs = a2 * d1
    return bool(np.array_equal(lhs, rhs))
