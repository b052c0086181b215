"""Arithmetic in the prime field Z_p and the quadratic-residue predicates.

Everything downstream works over a fixed odd prime p.  The `Prime` object
carries p together with the handful of number-theoretic queries the rewrite
engine needs: inverses, the non-square indicator chi, Legendre symbols and
modular square roots.  A thin `Zp` value type is provided for callers who
want modulus-safe arithmetic; the engine itself passes plain ints around
with an explicit `Prime` context.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional


class ModError(ValueError):
    """Domain error for Z_p operations (zero inverses, mixed moduli...)."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class Prime:
    """An odd prime modulus with cached residue tables.

    Only odd primes are accepted: the phase-group conventions used by the
    calculus need 2 to be invertible.
    """

    __slots__ = ("p", "half", "_squares", "_sqrt")

    def __init__(self, p: int):
        if not _is_prime(p):
            raise ModError(f"{p} is not prime")
        if p == 2:
            raise ModError("p must be an odd prime (p >= 3)")
        self.p = p
        self.half = pow(2, p - 2, p)  # 2^{-1} mod p
        self._squares = None
        self._sqrt = None

    # -- basic field ops ---------------------------------------------------

    def norm(self, x: int) -> int:
        """Canonical representative of x in [0, p)."""
        return x % self.p

    def inv(self, x: int) -> int:
        """Multiplicative inverse; raises on zero."""
        x %= self.p
        if x == 0:
            raise ModError("0 has no inverse")
        return pow(x, self.p - 2, self.p)

    def neg(self, x: int) -> int:
        return (-x) % self.p

    # -- quadratic residues ------------------------------------------------

    def _square_table(self) -> dict[int, int]:
        if self._sqrt is None:
            table: dict[int, int] = {}
            for y in range(self.p):
                s = (y * y) % self.p
                if s not in table:
                    table[s] = y
            self._sqrt = table
        return self._sqrt

    def chi(self, x: int) -> int:
        """1 if x is *not* a square mod p, else 0.  chi(0) = 0."""
        x %= self.p
        if x == 0:
            return 0
        return 0 if self.legendre(x) == 1 else 1

    def legendre(self, x: int) -> int:
        """Legendre symbol: +1 for nonzero squares, -1 for non-squares, 0 at 0."""
        x %= self.p
        if x == 0:
            return 0
        r = pow(x, (self.p - 1) // 2, self.p)
        return 1 if r == 1 else -1

    def sqrt_mod(self, x: int) -> Optional[int]:
        """Smallest square root of x mod p, or None if x is a non-square."""
        x %= self.p
        if self.p <= 10_000:
            table = self._square_table()
            if x not in table:
                return None
            y = table[x]
            return min(y, (self.p - y) % self.p) if x != 0 else 0
        if x == 0:
            return 0
        if self.legendre(x) != 1:
            return None
        y = self._tonelli_shanks(x)
        return min(y, self.p - y)

    def _tonelli_shanks(self, n: int) -> int:
        p = self.p
        q, s = p - 1, 0
        while q % 2 == 0:
            q //= 2
            s += 1
        z = 2
        while self.legendre(z) != -1:
            z += 1
        m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
        while t != 1:
            i, t2 = 0, t
            while t2 != 1:
                t2 = (t2 * t2) % p
                i += 1
            b = pow(c, 1 << (m - i - 1), p)
            m, c = i, (b * b) % p
            t = (t * c) % p
            r = (r * b) % p
        return r

    def minus_one_is_square(self) -> bool:
        """True iff -1 is a quadratic residue, i.e. p = 1 mod 4."""
        return self.p % 4 == 1

    # -- plumbing ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, Prime) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("Prime", self.p))

    def __repr__(self) -> str:
        return f"Prime({self.p})"


@lru_cache(maxsize=None)
def prime(p: int) -> Prime:
    """Interned Prime instances, so `prime(5) is prime(5)`."""
    return Prime(p)


@dataclass(frozen=True)
class Zp:
    """A value of Z_p that remembers its modulus.

    Arithmetic between values of different moduli is a construction error;
    ints mix freely.
    """

    value: int
    p: Prime

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p.p)

    def _coerce(self, other) -> int:
        if isinstance(other, Zp):
            if other.p != self.p:
                raise ModError("mixed moduli")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        return Zp(self.value + v, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return Zp(self.value - v, self.p)

    def __rsub__(self, other):
        v = self._coerce(other)
        return Zp(v - self.value, self.p)

    def __mul__(self, other):
        v = self._coerce(other)
        return Zp(self.value * v, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return Zp(-self.value, self.p)

    def inv(self) -> "Zp":
        return Zp(self.p.inv(self.value), self.p)

    def __bool__(self) -> bool:
        return self.value != 0

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.p.p})"
