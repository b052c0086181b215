"""Exact arithmetic in the cyclotomic field Q(i, omega_p).

Elements are stored as integer coefficient vectors over the basis
{ i^a * omega^b : a in {0,1}, b in {0,..,p-2} } together with a common
positive denominator.  omega is a primitive p-th root of unity and i a
primitive 4th root; since gcd(4, p) = 1 this is a field of degree 2(p-1)
over Q, large enough to contain every amplitude of the stabiliser
fragment -- in particular sqrt(p), realised as a quadratic Gauss sum.

Equality is coefficient-wise after reduction by
omega^(p-1) = -(1 + omega + ... + omega^(p-2)), so there is never a
tolerance anywhere.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from math import gcd
from typing import Iterable, Sequence

from .modp import ModError, Prime, prime


@lru_cache(maxsize=None)
def _reduction_row(p: int, a: int, b: int) -> tuple[tuple[int, int, int], ...]:
    """Rewrite i^a * omega^b as a sum of basis monomials.

    Returns tuples (coeff, a', b') with a' in {0,1}, b' in [0, p-1).
    """
    a %= 4
    b %= p
    sign = 1
    if a >= 2:
        sign = -1
        a -= 2
    if b <= p - 2:
        return ((sign, a, b),)
    # b == p-1: omega^(p-1) = -(1 + omega + ... + omega^(p-2))
    return tuple((-sign, a, j) for j in range(p - 1))


@lru_cache(maxsize=None)
def _mul_table(p: int) -> list[list[tuple[tuple[int, int], ...]]]:
    """table[c1][c2] -> ((coeff, c_out), ...) for basis-index products."""
    dim = 2 * (p - 1)

    def split(c: int) -> tuple[int, int]:
        return divmod(c, p - 1)

    table: list[list[tuple[tuple[int, int], ...]]] = []
    for c1 in range(dim):
        a1, b1 = split(c1)
        row = []
        for c2 in range(dim):
            a2, b2 = split(c2)
            out: dict[int, int] = {}
            for coeff, a, b in _reduction_row(p, a1 + a2, b1 + b2):
                idx = a * (p - 1) + b
                out[idx] = out.get(idx, 0) + coeff
            row.append(tuple((v, k) for k, v in out.items() if v))
        table.append(row)
    return table


class Cyclo:
    """An element of Q(i, omega_p), exact.

    Construct via the helpers (`zero`, `one`, `omega_pow`, `i_pow`,
    `from_int`, `sqrt_p`) rather than poking at coefficient vectors.
    """

    __slots__ = ("p", "num", "den")

    def __init__(self, p: Prime, num: Sequence[int], den: int = 1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        dim = 2 * (p.p - 1)
        if len(num) != dim:
            raise ValueError("coefficient vector has wrong length")
        self.p = p
        num = list(num)
        if den < 0:
            den = -den
            num = [-c for c in num]
        g = den
        for c in num:
            g = gcd(g, c)
            if g == 1:
                break
        if g > 1:
            num = [c // g for c in num]
            den //= g
        self.num = tuple(num)
        self.den = den

    # -- constructors --------------------------------------------------

    @staticmethod
    def zero(p: Prime) -> "Cyclo":
        return Cyclo(p, [0] * (2 * (p.p - 1)))

    @staticmethod
    def from_int(p: Prime, n: int, den: int = 1) -> "Cyclo":
        v = [0] * (2 * (p.p - 1))
        v[0] = n
        return Cyclo(p, v, den)

    @staticmethod
    def one(p: Prime) -> "Cyclo":
        return Cyclo.from_int(p, 1)

    @staticmethod
    def from_fraction(p: Prime, numerator: int, denominator: int) -> "Cyclo":
        return Cyclo.from_int(p, numerator, denominator)

    # -- ring structure -------------------------------------------------

    def _check(self, other: "Cyclo"):
        if self.p != other.p:
            raise ModError("mixed cyclotomic orders")

    def __add__(self, other: "Cyclo") -> "Cyclo":
        self._check(other)
        d1, d2 = self.den, other.den
        num = [a * d2 + b * d1 for a, b in zip(self.num, other.num)]
        return Cyclo(self.p, num, d1 * d2)

    def __sub__(self, other: "Cyclo") -> "Cyclo":
        return self + (-other)

    def __neg__(self) -> "Cyclo":
        return Cyclo(self.p, [-c for c in self.num], self.den)

    def __mul__(self, other) -> "Cyclo":
        if isinstance(other, int):
            return Cyclo(self.p, [c * other for c in self.num], self.den)
        self._check(other)
        table = _mul_table(self.p.p)
        dim = len(self.num)
        out = [0] * dim
        for c1, x in enumerate(self.num):
            if not x:
                continue
            row = table[c1]
            for c2, y in enumerate(other.num):
                if not y:
                    continue
                xy = x * y
                for coeff, idx in row[c2]:
                    out[idx] += coeff * xy
        return Cyclo(self.p, out, self.den * other.den)

    __rmul__ = __mul__

    def conj(self) -> "Cyclo":
        """Complex conjugation: omega -> omega^{-1}, i -> -i."""
        p = self.p.p
        out = [0] * len(self.num)
        for c, x in enumerate(self.num):
            if not x:
                continue
            a, b = divmod(c, p - 1)
            for coeff, aa, bb in _reduction_row(p, a + (2 if a else 0), (-b) % p):
                # i^a -> (-1)^a i^a handled by a + 2a mod 4: a=0 -> 0, a=1 -> 3
                out[aa * (p - 1) + bb] += coeff * x
        return Cyclo(self.p, out, self.den)

    def inverse(self) -> "Cyclo":
        """Inverse for elements whose norm x * conj(x) is rational.

        This covers the whole scalar monoid of the fragment (units times
        powers of sqrt(p) times rationals).  Raises for elements with a
        non-rational norm: general field inversion is out of scope.
        """
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        n = self * self.conj()
        if not n.is_rational():
            raise ModError("inverse only supported when x*conj(x) is rational")
        # x^{-1} = conj(x) * den(n) / num(n)
        c = self.conj()
        return Cyclo(self.p, [v * n.den for v in c.num], c.den * n.num[0])

    def __truediv__(self, other: "Cyclo") -> "Cyclo":
        return self * other.inverse()

    def divide_by_int(self, n: int) -> "Cyclo":
        return Cyclo(self.p, self.num, self.den * n)

    # -- predicates ------------------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.num)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.num[1:])

    def rational_parts(self) -> tuple[int, int]:
        """(numerator, denominator) of a rational element."""
        if not self.is_rational():
            raise ModError("not rational")
        return self.num[0], self.den

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cyclo):
            if isinstance(other, int):
                other = Cyclo.from_int(self.p, other)
            else:
                return NotImplemented
        return self.p == other.p and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.p.p, self.num, self.den))

    # -- output ----------------------------------------------------------

    def __repr__(self) -> str:
        return f"Cyclo({self.p.p}, {self.text()})"

    def text(self) -> str:
        """Exact rendering as a sum of `a/b * i^s * w^k` terms."""
        if self.is_zero():
            return "0"
        p = self.p.p
        terms = []
        for c, x in enumerate(self.num):
            if not x:
                continue
            a, b = divmod(c, p - 1)
            frac = f"{x}" if self.den == 1 else f"{x}/{self.den}"
            mono = ""
            if a:
                mono += "*i"
            if b:
                mono += f"*w^{b}" if b > 1 else "*w"
            terms.append(frac + mono)
        return " + ".join(terms)

    def to_complex(self) -> complex:
        """Floating-point embedding with omega = exp(2*pi*i/p).  Debug only."""
        p = self.p.p
        w = cmath.exp(2j * math.pi / p)
        total = 0j
        for c, x in enumerate(self.num):
            if not x:
                continue
            a, b = divmod(c, p - 1)
            total += x * (1j**a) * (w**b)
        return total / self.den


# -- named elements --------------------------------------------------------


def omega_pow(p: Prime, k: int) -> Cyclo:
    """omega^k as a field element."""
    k %= p.p
    v = [0] * (2 * (p.p - 1))
    for coeff, a, b in _reduction_row(p.p, 0, k):
        v[a * (p.p - 1) + b] += coeff
    return Cyclo(p, v)


def i_pow(p: Prime, s: int) -> Cyclo:
    """i^s as a field element."""
    v = [0] * (2 * (p.p - 1))
    for coeff, a, b in _reduction_row(p.p, s, 0):
        v[a * (p.p - 1) + b] += coeff
    return Cyclo(p, v)


def phase_term(p: Prime, x: int, y: int, k: int) -> Cyclo:
    """omega^{2^{-1}(x k + y k^2)}: the spider phase at leg value k."""
    e = p.half * (x * k + y * k * k)
    return omega_pow(p, e)


@lru_cache(maxsize=None)
def _sqrt_p_cached(pval: int) -> Cyclo:
    p = prime(pval)
    acc = Cyclo.zero(p)
    for j in range(pval):
        acc = acc + omega_pow(p, (j * j) % pval)
    if pval % 4 == 3:
        acc = acc * i_pow(p, 3)  # -i * (i sqrt(p)) = sqrt(p)
    return acc


def sqrt_p(p: Prime) -> Cyclo:
    """The positive square root of p, via the quadratic Gauss sum.

    For p = 1 mod 4 the plain Gauss sum sum_j omega^{j^2} already equals
    sqrt(p); for p = 3 mod 4 it equals i*sqrt(p) and is corrected by -i.
    Satisfies sqrt_p(p)**2 == p exactly.
    """
    return _sqrt_p_cached(p.p)


def sqrt_p_pow(p: Prime, r: int) -> Cyclo:
    """sqrt(p)^r for any integer r (negative powers use 1/sqrt(p) = sqrt(p)/p)."""
    if r == 0:
        return Cyclo.one(p)
    s = sqrt_p(p)
    if r > 0:
        out = Cyclo.from_int(p, p.p ** (r // 2))
        return out * s if r % 2 else out
    r = -r
    out = Cyclo.from_int(p, 1, p.p ** (r // 2))
    return out * s.divide_by_int(p.p) if r % 2 else out


def quadratic_gauss_sum(p: Prime, z: int) -> Cyclo:
    """sum_j omega^{2^{-1} z j^2}, exactly, for z != 0.

    Closed form: legendre(2z) * g_p where g_p = sqrt(p) for p = 1 mod 4 and
    i*sqrt(p) for p = 3 mod 4.  The i-power/sign convention is pinned here
    by the defining sum itself; callers should rely on this function rather
    than any formula.
    """
    z %= p.p
    if z == 0:
        raise ModError("quadratic_gauss_sum needs z != 0 (the sum degenerates to p)")
    acc = Cyclo.zero(p)
    for j in range(p.p):
        acc = acc + phase_term(p, 0, z, j)
    return acc


def gauss_sum_with_linear(p: Prime, x: int, y: int) -> Cyclo:
    """sum_k omega^{2^{-1}(x k + y k^2)} in closed form.

    y = 0: p when x = 0, otherwise 0.
    y != 0: omega^{-2^{-3} y^{-1} x^2} * quadratic_gauss_sum(y), by
    completing the square.
    """
    x %= p.p
    y %= p.p
    if y == 0:
        return Cyclo.from_int(p, p.p if x == 0 else 0)
    inv8y = (p.half**3 * p.inv(y)) % p.p
    return omega_pow(p, -inv8y * x * x) * quadratic_gauss_sum(p, y)


# -- exact dense matrices ---------------------------------------------------


class CycloMatrix:
    """Dense matrix over Q(i, omega_p); small and exact.

    Used for single-qupit operators, oracle comparisons and CLI dumps.
    Entries are Cyclo values; shape checks are strict.
    """

    __slots__ = ("p", "rows", "cols", "data")

    def __init__(self, p: Prime, rows: int, cols: int, data: list[list[Cyclo]]):
        if len(data) != rows or any(len(r) != cols for r in data):
            raise ValueError("shape mismatch")
        self.p = p
        self.rows = rows
        self.cols = cols
        self.data = data

    @staticmethod
    def zeros(p: Prime, rows: int, cols: int) -> "CycloMatrix":
        z = Cyclo.zero(p)
        return CycloMatrix(p, rows, cols, [[z] * cols for _ in range(rows)])

    @staticmethod
    def identity(p: Prime, n: int) -> "CycloMatrix":
        m = CycloMatrix.zeros(p, n, n)
        one = Cyclo.one(p)
        for k in range(n):
            m.data[k][k] = one
        return m

    @staticmethod
    def from_entries(p: Prime, entries: Iterable[Iterable[Cyclo]]) -> "CycloMatrix":
        data = [list(row) for row in entries]
        return CycloMatrix(p, len(data), len(data[0]) if data else 0, data)

    def __getitem__(self, rc: tuple[int, int]) -> Cyclo:
        return self.data[rc[0]][rc[1]]

    def mat_mul(self, other: "CycloMatrix") -> "CycloMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in mat_mul")
        out = CycloMatrix.zeros(self.p, self.rows, other.cols)
        for i in range(self.rows):
            row = self.data[i]
            for k in range(self.cols):
                x = row[k]
                if x.is_zero():
                    continue
                orow = other.data[k]
                trow = out.data[i]
                for j in range(other.cols):
                    y = orow[j]
                    if not y.is_zero():
                        trow[j] = trow[j] + x * y
        return out

    def kron(self, other: "CycloMatrix") -> "CycloMatrix":
        out = CycloMatrix.zeros(self.p, self.rows * other.rows, self.cols * other.cols)
        for i in range(self.rows):
            for j in range(self.cols):
                x = self.data[i][j]
                if x.is_zero():
                    continue
                for k in range(other.rows):
                    for l in range(other.cols):
                        y = other.data[k][l]
                        if not y.is_zero():
                            out.data[i * other.rows + k][j * other.cols + l] = x * y
        return out

    def dagger(self) -> "CycloMatrix":
        out = CycloMatrix.zeros(self.p, self.cols, self.rows)
        for i in range(self.rows):
            for j in range(self.cols):
                out.data[j][i] = self.data[i][j].conj()
        return out

    def transpose(self) -> "CycloMatrix":
        out = CycloMatrix.zeros(self.p, self.cols, self.rows)
        for i in range(self.rows):
            for j in range(self.cols):
                out.data[j][i] = self.data[i][j]
        return out

    def scalar_mul(self, c: Cyclo) -> "CycloMatrix":
        return CycloMatrix(
            self.p, self.rows, self.cols, [[c * x for x in row] for row in self.data]
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CycloMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and all(
                self.data[i][j] == other.data[i][j]
                for i in range(self.rows)
                for j in range(self.cols)
            )
        )

    def __hash__(self):
        raise TypeError("CycloMatrix is unhashable")

    def is_zero(self) -> bool:
        return all(x.is_zero() for row in self.data for x in row)

    def first_nonzero(self) -> tuple[int, int] | None:
        for i in range(self.rows):
            for j in range(self.cols):
                if not self.data[i][j].is_zero():
                    return (i, j)
        return None

    def text(self, decimal: bool = False) -> str:
        lines = []
        for row in self.data:
            if decimal:
                lines.append("  ".join(f"{x.to_complex():.6f}" for x in row))
            else:
                lines.append("  ".join(x.text() for x in row))
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"CycloMatrix({self.rows}x{self.cols} over p={self.p.p})"
