"""Single-qupit Clifford words and their canonical forms.

A 1 -> 1 stabiliser diagram is a word in green phases, red phases,
Hadamard boxes and multipliers.  Modulo global phases it is an affine
symplectic transformation of Z_p^2: a matrix A in SL(2, Z_p) plus a
translation b, recovered here by exact conjugation of the Pauli
operators.  The canonical form follows the Bruhat cells of SL(2, p):

- branch B (lower-left entry of A zero):  mul(w) then green(0, t);
- branch A (otherwise): green(0, u) then h(1) then mul(w) then green(0, v);

each followed by a translation X^s Z^t.  Counting gives
p^2 * (p^2(p-1) + p(p-1)) = p^3(p^2-1) distinct forms, which matches the
order of the single-qupit reduced Clifford group modulo phases, so the
form is unique and the branch split is exactly the parameter-count
reconciliation between p^4(p-1) naive tuples and p^3(p^2-1) classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union

from .cyclo import Cyclo, CycloMatrix, omega_pow, phase_term, sqrt_p
from .diagram import Diagram, X, Z, hbox, mul, spider
from .modp import ModError, Prime, prime


@dataclass(frozen=True)
class GreenPhase:
    x: int
    y: int


@dataclass(frozen=True)
class RedPhase:
    x: int
    y: int


@dataclass(frozen=True)
class HBox:
    w: int


@dataclass(frozen=True)
class Multiplier:
    z: int


C1Element = Union[GreenPhase, RedPhase, HBox, Multiplier]


class C1Error(ValueError):
    pass


@lru_cache(maxsize=None)
def _green_matrix(pval: int, x: int, y: int) -> CycloMatrix:
    p = prime(pval)
    m = CycloMatrix.zeros(p, pval, pval)
    for k in range(pval):
        m.data[k][k] = phase_term(p, x, y, k)
    return m


@lru_cache(maxsize=None)
def _red_matrix(pval: int, x: int, y: int) -> CycloMatrix:
    from .interp import interp

    p = prime(pval)
    return interp(spider(p, X, 1, 1, x, y))


@lru_cache(maxsize=None)
def _h_matrix(pval: int, w: int) -> CycloMatrix:
    p = prime(pval)
    inv_root = sqrt_p(p).divide_by_int(pval)
    m = CycloMatrix.zeros(p, pval, pval)
    for j in range(pval):
        for k in range(pval):
            m.data[k][j] = inv_root * omega_pow(p, w * j * k)
    return m


@lru_cache(maxsize=None)
def _mul_matrix(pval: int, z: int) -> CycloMatrix:
    p = prime(pval)
    m = CycloMatrix.zeros(p, pval, pval)
    one = Cyclo.one(p)
    for j in range(pval):
        m.data[(-z * j) % pval][j] = one
    return m


def element_matrix(p: Prime, el: C1Element) -> CycloMatrix:
    if isinstance(el, GreenPhase):
        return _green_matrix(p.p, el.x % p.p, el.y % p.p)
    if isinstance(el, RedPhase):
        return _red_matrix(p.p, el.x % p.p, el.y % p.p)
    if isinstance(el, HBox):
        if el.w % p.p == 0:
            raise C1Error("h-box weight must be nonzero")
        return _h_matrix(p.p, el.w % p.p)
    if isinstance(el, Multiplier):
        if el.z % p.p == 0:
            raise C1Error("multiplier label must be nonzero")
        return _mul_matrix(p.p, el.z % p.p)
    raise C1Error(f"not a single-qupit element: {el!r}")


def element_inverse(p: Prime, el: C1Element) -> C1Element:
    if isinstance(el, GreenPhase):
        return GreenPhase((-el.x) % p.p, (-el.y) % p.p)
    if isinstance(el, RedPhase):
        return RedPhase((-el.x) % p.p, (-el.y) % p.p)
    if isinstance(el, HBox):
        return HBox((-el.w) % p.p)
    if isinstance(el, Multiplier):
        return Multiplier(p.inv(el.z))
    raise C1Error(f"not a single-qupit element: {el!r}")


def word_matrix(p: Prime, word: Iterable[C1Element]) -> CycloMatrix:
    """Exact matrix of a word; elements are listed first-applied-first."""
    m = CycloMatrix.identity(p, p.p)
    for el in word:
        m = element_matrix(p, el).mat_mul(m)
    return m


def word_inverse(p: Prime, word: Iterable[C1Element]) -> list[C1Element]:
    return [element_inverse(p, el) for el in reversed(list(word))]


# -- symplectic data ---------------------------------------------------------


def _pauli_xz(p: Prime, a: int, b: int) -> CycloMatrix:
    """X^a Z^b exactly."""
    m = CycloMatrix.zeros(p, p.p, p.p)
    for c in range(p.p):
        m.data[(c + a) % p.p][c] = omega_pow(p, b * c)
    return m


def _recognise_pauli(p: Prime, m: CycloMatrix) -> tuple[int, int, Cyclo]:
    """Write m = lambda * X^a Z^b; raises C1Error if it is not of that shape."""
    pm = p.p
    a = None
    lam = None
    for r in range(pm):
        if not m.data[r][0].is_zero():
            if a is not None:
                raise C1Error("not a Pauli: column 0 has two entries")
            a, lam = r, m.data[r][0]
    if a is None:
        raise C1Error("not a Pauli: zero column")
    b = None
    target = m.data[(1 + a) % pm][1]
    for k in range(pm):
        if target == lam * omega_pow(p, k):
            b = k
            break
    if b is None:
        raise C1Error("not a Pauli: bad phase pattern")
    if not m == _pauli_xz(p, a, b).scalar_mul(lam):
        raise C1Error("not a Pauli")
    return a, b, lam


def clifford_inverse(m: CycloMatrix) -> CycloMatrix:
    """Inverse of a matrix proportional to a unitary: dagger over the norm."""
    md = m.dagger()
    prod = md.mat_mul(m)
    c = prod.data[0][0]
    if c.is_zero() or not c.is_rational():
        raise C1Error("matrix is not proportional to a unitary")
    if not prod == CycloMatrix.identity(m.p, m.rows).scalar_mul(c):
        raise C1Error("matrix is not proportional to a unitary")
    num, den = c.rational_parts()
    return md.scalar_mul(Cyclo.from_int(m.p, den, num))


def symplectic_of_matrix(p: Prime, m: CycloMatrix) -> tuple[tuple[int, ...], ...]:
    """The SL(2, Z_p) matrix [[alpha, beta], [gamma, delta]] of a Clifford.

    Defined by conjugation: m X m^{-1} ~ X^alpha Z^gamma and
    m Z m^{-1} ~ X^beta Z^delta.
    """
    minv = clifford_inverse(m)
    ax, gx, _ = _recognise_pauli(p, m.mat_mul(_pauli_xz(p, 1, 0)).mat_mul(minv))
    bz, dz, _ = _recognise_pauli(p, m.mat_mul(_pauli_xz(p, 0, 1)).mat_mul(minv))
    a = ((ax, bz), (gx, dz))
    det = (ax * dz - bz * gx) % p.p
    if det != 1:
        raise C1Error("conjugation matrix is not symplectic")
    return a


def _mat2_mul(p: Prime, a, b):
    return (
        (
            (a[0][0] * b[0][0] + a[0][1] * b[1][0]) % p.p,
            (a[0][0] * b[0][1] + a[0][1] * b[1][1]) % p.p,
        ),
        (
            (a[1][0] * b[0][0] + a[1][1] * b[1][0]) % p.p,
            (a[1][0] * b[0][1] + a[1][1] * b[1][1]) % p.p,
        ),
    )


@lru_cache(maxsize=None)
def _gen_symplectics(pval: int):
    """Symplectic matrices of the canonical-form generators, extracted."""
    p = prime(pval)
    a_green = {
        t: symplectic_of_matrix(p, _green_matrix(pval, 0, t)) for t in range(pval)
    }
    a_mul = {
        z: symplectic_of_matrix(p, _mul_matrix(pval, z)) for z in range(1, pval)
    }
    a_h = symplectic_of_matrix(p, _h_matrix(pval, 1))
    return a_green, a_mul, a_h


@lru_cache(maxsize=None)
def _bruhat_table(pval: int):
    """Map every SL(2, p) matrix to its canonical branch and parameters."""
    p = prime(pval)
    a_green, a_mul, a_h = _gen_symplectics(pval)
    table = {}
    # branch B: word [mul(w), green(0, t)] (mul applied first)
    for w in range(1, pval):
        for t in range(pval):
            a = _mat2_mul(p, a_green[t], a_mul[w])
            table.setdefault(a, ("B", (t, 0, w)))
    # branch A: word [green(0, v), h(1), mul(w), green(0, u)]
    for u in range(pval):
        for w in range(1, pval):
            for v in range(pval):
                a = _mat2_mul(
                    p, a_green[u], _mat2_mul(p, a_mul[w], _mat2_mul(p, a_h, a_green[v]))
                )
                key = ("A", (u, v, w))
                if a not in table:
                    table[a] = key
    return table


@lru_cache(maxsize=None)
def _translation_basis(pval: int):
    """Translation vectors of X^1 and Z^1 in the symplectic picture.

    Conjugating a Pauli by X^g Z^s shifts its phase; solving the resulting
    2x2 system recovers (g, s) from any translation.  Here we only need
    the phase fingerprints of the basis translations.
    """
    p = prime(pval)
    fingerprints = {}
    for g, s in ((1, 0), (0, 1)):
        t = _pauli_xz(p, g, s)
        tinv = clifford_inverse(t)
        _, _, lamx = _recognise_pauli(p, t.mat_mul(_pauli_xz(p, 1, 0)).mat_mul(tinv))
        _, _, lamz = _recognise_pauli(p, t.mat_mul(_pauli_xz(p, 0, 1)).mat_mul(tinv))
        fingerprints[(g, s)] = (lamx, lamz)
    return fingerprints


@dataclass(frozen=True)
class C1NormalForm:
    """Canonical single-qupit Clifford datum.

    branch 'A' or 'B'; (s, t) is the trailing Pauli translation X^s Z^t;
    (u, v) are the shear labels (v unused in branch B) and w the multiplier
    label.  `scalar` relates the normalised word back to whatever it was
    computed from: original = scalar * form.
    """

    p: Prime
    branch: str
    s: int
    t: int
    u: int
    v: int
    w: int
    scalar: Cyclo

    def key(self) -> tuple:
        """Class identity, ignoring the scalar."""
        return (self.branch, self.s, self.t, self.u, self.v, self.w)

    def word(self) -> list[C1Element]:
        """The canonical word, first-applied-first, with no scalar."""
        pm = self.p.p
        if self.branch == "B":
            out: list[C1Element] = [Multiplier(self.w), GreenPhase(0, self.u)]
        else:
            out = [
                GreenPhase(0, self.v),
                HBox(1),
                Multiplier(self.w),
                GreenPhase(0, self.u),
            ]
        # trailing translation X^s Z^t: X^s = mul(1) then red(2s, 0)
        if self.s:
            out += [Multiplier(1), RedPhase((2 * self.s) % pm, 0)]
        if self.t:
            out.append(GreenPhase((2 * self.t) % pm, 0))
        return out

    def matrix(self) -> CycloMatrix:
        return word_matrix(self.p, self.word())

    def symplectic(self):
        return symplectic_of_matrix(self.p, self.matrix())

    def is_identity_class(self) -> bool:
        # mul(p-1) is the identity wire, so the identity sits in branch B
        return self.key() == ("B", 0, 0, 0, 0, self.p.p - 1)

    def is_marked(self) -> bool:
        """Whether the vertex operator contains an irreducible red part.

        Scalings, red shears and X-translations absorb into the graph;
        what remains is a green phase exactly when the symplectic matrix
        has an invertible upper-left entry.  The rest form the marked
        class.
        """
        a = self.symplectic()
        return a[0][0] == 0

    def __repr__(self):
        return (
            f"C1NormalForm(p={self.p.p}, {self.branch}, s={self.s}, t={self.t}, "
            f"u={self.u}, v={self.v}, w={self.w}, scalar={self.scalar.text()})"
        )


def _scalar_ratio(a: CycloMatrix, b: CycloMatrix) -> Cyclo:
    """The exact lambda with a = lambda * b; raises if not proportional."""
    pos = b.first_nonzero()
    if pos is None:
        raise C1Error("zero matrix has no scalar ratio")
    lam = a.data[pos[0]][pos[1]] / b.data[pos[0]][pos[1]]
    if not a == b.scalar_mul(lam):
        raise C1Error("matrices are not proportional")
    return lam


def c1_normalize_matrix(p: Prime, m: CycloMatrix) -> C1NormalForm:
    """Canonical form of an invertible single-qupit Clifford matrix."""
    a = symplectic_of_matrix(p, m)
    table = _bruhat_table(p.p)
    if a not in table:
        raise C1Error("symplectic part not reachable: not a Clifford?")
    branch, (u, v, w) = table[a]
    if branch == "B":
        base: list[C1Element] = [Multiplier(w), GreenPhase(0, u)]
    else:
        base = [GreenPhase(0, v), HBox(1), Multiplier(w), GreenPhase(0, u)]
    base_m = word_matrix(p, base)
    resid = m.mat_mul(clifford_inverse(base_m))
    s, t, _ = _recognise_pauli(p, resid)
    probe = C1NormalForm(p, branch, s, t, u, v, w, Cyclo.one(p))
    lam = _scalar_ratio(m, probe.matrix())
    return C1NormalForm(p, branch, s, t, u, v, w, lam)


def c1_normalize(p: Prime, word: Iterable[C1Element]) -> C1NormalForm:
    """Canonical form of a word of 1 -> 1 elements.

    The word's exact matrix equals `form.scalar * form.matrix()`;
    normalising a canonical word returns the same form with scalar 1.
    """
    return c1_normalize_matrix(p, word_matrix(p, word))


def word_to_diagram(p: Prime, word: Iterable[C1Element]) -> Diagram:
    """The 1 -> 1 diagram of a word (phases as spiders, h/mul as wires)."""
    from .diagram import compose, h_gate, identity_diagram, mul_gate

    d = identity_diagram(p, 1)
    for el in word:
        if isinstance(el, GreenPhase):
            g = spider(p, Z, 1, 1, el.x, el.y)
        elif isinstance(el, RedPhase):
            g = spider(p, X, 1, 1, el.x, el.y)
        elif isinstance(el, HBox):
            g = h_gate(p, el.w)
        else:
            g = mul_gate(p, el.z)
        d = compose(d, g)
    return d
