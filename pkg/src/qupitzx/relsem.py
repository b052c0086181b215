"""Affine co-isotropic relation semantics over Z_p.

A second, scalar-free interpretation.  Each wire carries a phase-space
pair (position, momentum) in Z_p^2 and a diagram denotes an affine
subspace of Z_p^{2m} x Z_p^{2n}, or the empty relation.  The conventions
are pinned by the discrete Wigner transfer of the matrix semantics
(displaced-parity phase-point operators), under which every stabiliser
map's transfer support is affine co-isotropic and nonzero scalars are
invisible:

- a green spider with phase (x, y): all leg positions equal a common q,
  and the leg momenta (outward-oriented) sum to y q + 2^{-1} x;
- a red spider with phase (x, y): all leg momenta equal a common t, and
  the leg positions sum to -y t + 2^{-1} x;
- bending a wire (cup/cap) maps (q, p) to (q, -p);
- a plain wire glues (q', p') = (q, -p) between outward legs;
  mul(z) glues (q', p') = (-z q, z^{-1} p); h(w) glues
  (q', p') = (w^{-1} p, w q);
- discard leaves its wire unconstrained; the star and invertible scalar
  sub-diagrams contribute nothing; spider components with zero value
  (isolated spiders with a bare nonzero Pauli phase) make the whole
  relation empty.

The semantics is computed by solving one affine system over all leg
coordinates and projecting onto the boundary wires; composition of two
relations glues interface wires by coordinate equality.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .diagram import (
    BOUNDARY_IN,
    BOUNDARY_OUT,
    DISCARD,
    Diagram,
    HKIND,
    MULKIND,
    PLAIN,
    X,
    Z,
)
from .modp import Prime


class RelError(ValueError):
    pass


def _rref(p: Prime, rows: list[list[int]]) -> list[list[int]]:
    """Reduced row echelon form over Z_p; zero rows dropped."""
    pm = p.p
    rows = [[x % pm for x in r] for r in rows]
    out_r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = None
        for i in range(out_r, len(rows)):
            if rows[i][c]:
                piv = i
                break
        if piv is None:
            continue
        rows[out_r], rows[piv] = rows[piv], rows[out_r]
        inv = p.inv(rows[out_r][c])
        rows[out_r] = [(x * inv) % pm for x in rows[out_r]]
        for i in range(len(rows)):
            if i != out_r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(a - f * b) % pm for a, b in zip(rows[i], rows[out_r])]
        out_r += 1
        if out_r == len(rows):
            break
    return rows[:out_r]


def _pivots(rows: list[list[int]]) -> list[int]:
    out = []
    for row in rows:
        for c, x in enumerate(row):
            if x:
                out.append(c)
                break
    return out


def _solve_affine(p: Prime, a_mat: list[list[int]], b_vec: list[int],
                  dim: int) -> Optional[tuple[list[list[int]], list[int]]]:
    """Solution set of A x = b as (nullspace basis, particular), or None."""
    pm = p.p
    if not a_mat:
        return [[1 if i == j else 0 for j in range(dim)] for i in range(dim)], \
            [0] * dim
    aug = [row + [b] for row, b in zip(a_mat, b_vec)]
    red = _rref(p, aug)
    pivs = _pivots(red)
    if dim in pivs:
        return None
    part = [0] * dim
    for row, c in zip(red, pivs):
        part[c] = row[dim]
    free = [c for c in range(dim) if c not in pivs]
    basis = []
    for f in free:
        v = [0] * dim
        v[f] = 1
        for row, c in zip(red, pivs):
            v[c] = (-row[f]) % pm
        basis.append(v)
    return basis, part


class AffineRelation:
    """An affine subspace of Z_p^{2(m+n)} in canonical form, or Empty.

    Wire k occupies coordinates (2k, 2k+1) = (position, momentum); input
    wires come before output wires.  The linear part is a reduced echelon
    basis and the offset is the canonical coset representative (zero in
    every pivot coordinate).
    """

    def __init__(self, p: Prime, m: int, n: int,
                 basis: Optional[list[list[int]]] = None,
                 offset: Optional[list[int]] = None,
                 empty: bool = False):
        self.p = p
        self.m = m
        self.n = n
        self.dim = 2 * (m + n)
        self.empty = empty
        if empty:
            self.basis: list[list[int]] = []
            self.offset: list[int] = [0] * self.dim
            return
        basis = [] if basis is None else basis
        offset = [0] * self.dim if offset is None else list(offset)
        if any(len(v) != self.dim for v in basis) or len(offset) != self.dim:
            raise RelError("vector length mismatch")
        self.basis = _rref(p, basis) if basis else []
        off = [x % p.p for x in offset]
        for row in self.basis:
            c = next(i for i, x in enumerate(row) if x)
            if off[c]:
                f = off[c]
                off = [(a - f * b) % p.p for a, b in zip(off, row)]
        self.offset = off

    # -- constructors ------------------------------------------------------

    @staticmethod
    def empty_rel(p: Prime, m: int, n: int) -> "AffineRelation":
        return AffineRelation(p, m, n, empty=True)

    @staticmethod
    def full(p: Prime, m: int, n: int) -> "AffineRelation":
        dim = 2 * (m + n)
        basis = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
        return AffineRelation(p, m, n, basis)

    @staticmethod
    def from_points(p: Prime, m: int, n: int,
                    points: Iterable[tuple[int, ...]]) -> "AffineRelation":
        pts = [list(q) for q in points]
        if not pts:
            return AffineRelation.empty_rel(p, m, n)
        base = pts[0]
        basis = [[(a - b) % p.p for a, b in zip(q, base)] for q in pts[1:]]
        return AffineRelation(p, m, n, basis, base)

    # -- queries -------------------------------------------------------------

    def rank(self) -> int:
        return len(self.basis)

    def contains(self, point: Iterable[int]) -> bool:
        if self.empty:
            return False
        pm = self.p.p
        v = [(a - b) % pm for a, b in zip(point, self.offset)]
        for row in self.basis:
            c = next(i for i, x in enumerate(row) if x)
            if v[c]:
                f = v[c]
                v = [(a - f * b) % pm for a, b in zip(v, row)]
        return not any(v)

    def points(self) -> list[tuple[int, ...]]:
        """Every point of the subspace; exponential, for tiny cross-checks."""
        if self.empty:
            return []
        pm = self.p.p
        out = set()
        k = len(self.basis)
        for code in range(pm**k):
            v = list(self.offset)
            c = code
            for row in self.basis:
                t = c % pm
                c //= pm
                if t:
                    v = [(a + t * b) % pm for a, b in zip(v, row)]
            out.add(tuple(v))
        return sorted(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AffineRelation):
            return NotImplemented
        if (self.p, self.m, self.n) != (other.p, other.m, other.n):
            return False
        if self.empty or other.empty:
            return self.empty == other.empty
        return self.basis == other.basis and self.offset == other.offset

    def __hash__(self):
        raise TypeError("AffineRelation is unhashable")

    def __repr__(self):
        if self.empty:
            return f"AffineRelation(p={self.p.p}, {self.m}->{self.n}, empty)"
        return (f"AffineRelation(p={self.p.p}, {self.m}->{self.n}, "
                f"rank {self.rank()}, offset {tuple(self.offset)})")

    def dumps(self) -> str:
        """Text dump: `p m n`, basis rows, offset, property flags."""
        lines = [f"{self.p.p} {self.m} {self.n}"]
        if self.empty:
            lines.append("empty")
            return "\n".join(lines) + "\n"
        for row in self.basis:
            lines.append("basis " + " ".join(map(str, row)))
        lines.append("offset " + " ".join(map(str, self.offset)))
        flags = []
        if is_coisotropic(self):
            flags.append("coisotropic")
        if is_lagrangian(self):
            flags.append("lagrangian")
        lines.append("flags " + (" ".join(flags) if flags else "-"))
        return "\n".join(lines) + "\n"

    def constraints(self) -> tuple[list[list[int]], list[int]]:
        """(A, b) with the relation = {x : A x = b}; empty is the caller's
        problem."""
        if self.empty:
            raise RelError("empty relation has no constraint form")
        p = self.p
        pm = p.p
        pivs = _pivots(self.basis)
        free = [c for c in range(self.dim) if c not in pivs]
        a_mat = []
        for f in free:
            v = [0] * self.dim
            v[f] = 1
            for row, c in zip(self.basis, pivs):
                v[c] = (-row[f]) % pm
            a_mat.append(v)
        b_vec = [sum(r * o for r, o in zip(row, self.offset)) % pm
                 for row in a_mat]
        return a_mat, b_vec


# -- symplectic structure ------------------------------------------------------


def _twisted_form(rel: AffineRelation, u, v) -> int:
    """omega(u, v) with the sign flipped on input wires (graph convention)."""
    p = rel.p.p
    total = 0
    for w in range(rel.m + rel.n):
        sign = -1 if w < rel.m else 1
        a, b = u[2 * w], u[2 * w + 1]
        c, d = v[2 * w], v[2 * w + 1]
        total += sign * (a * d - b * c)
    return total % p


def is_coisotropic(rel: AffineRelation) -> bool:
    """True when the linear part contains its symplectic complement."""
    if rel.empty:
        return True
    k = rel.rank()
    half = rel.m + rel.n
    if k < half:
        return False
    gram = [[_twisted_form(rel, u, v) for v in rel.basis] for u in rel.basis]
    gram_rank = len(_rref(rel.p, gram)) if gram else 0
    # dim(L ^ Lperp) = k - rank(gram) must equal dim(Lperp) = 2 half - k
    return k - gram_rank == 2 * half - k


def is_lagrangian(rel: AffineRelation) -> bool:
    """True when the linear part equals its symplectic complement."""
    if rel.empty:
        return False
    if rel.rank() != rel.m + rel.n:
        return False
    gram = [[_twisted_form(rel, u, v) for v in rel.basis] for u in rel.basis]
    return all(x == 0 for row in gram for x in row)


# -- composition ------------------------------------------------------------------


def rel_compose(r1: AffineRelation, r2: AffineRelation) -> AffineRelation:
    """Relational composition (r2 after r1): interface wires are equated
    coordinate-wise and projected out."""
    if r1.p != r2.p or r1.n != r2.m:
        raise RelError("arity mismatch in composition")
    p = r1.p
    if r1.empty or r2.empty:
        return AffineRelation.empty_rel(p, r1.m, r2.n)
    d1, d2 = r1.dim, r2.dim
    dim = d1 + d2
    a1, b1 = r1.constraints()
    a2, b2 = r2.constraints()
    a_mat = [row + [0] * d2 for row in a1] + [[0] * d1 + row for row in a2]
    b_vec = b1 + b2
    pm = p.p
    for k in range(r1.n):
        for off in (0, 1):
            row = [0] * dim
            row[2 * (r1.m + k) + off] = 1
            row[d1 + 2 * k + off] = pm - 1
            a_mat.append(row)
            b_vec.append(0)
    sol = _solve_affine(p, a_mat, b_vec, dim)
    if sol is None:
        return AffineRelation.empty_rel(p, r1.m, r2.n)
    basis, part = sol
    keep = [2 * k + off for k in range(r1.m) for off in (0, 1)]
    keep += [d1 + 2 * (r2.m + k) + off for k in range(r2.n) for off in (0, 1)]
    return AffineRelation(p, r1.m, r2.n,
                          [[v[c] for c in keep] for v in basis],
                          [part[c] for c in keep])


def rel_tensor(r1: AffineRelation, r2: AffineRelation) -> AffineRelation:
    if r1.p != r2.p:
        raise RelError("mixed moduli")
    p = r1.p
    m, n = r1.m + r2.m, r1.n + r2.n
    if r1.empty or r2.empty:
        return AffineRelation.empty_rel(p, m, n)
    dim = 2 * (m + n)
    basis = []
    keep1 = list(range(2 * r1.m)) + [2 * (m) + c for c in range(2 * r1.n)]
    keep2 = [2 * r1.m + c for c in range(2 * r2.m)]
    keep2 += [2 * m + 2 * r1.n + c for c in range(2 * r2.n)]
    for v in r1.basis:
        row = [0] * dim
        for c, val in zip(keep1, v):
            row[c] = val
        basis.append(row)
    for v in r2.basis:
        row = [0] * dim
        for c, val in zip(keep2, v):
            row[c] = val
        basis.append(row)
    off = [0] * dim
    for c, val in zip(keep1, r1.offset):
        off[c] = val
    for c, val in zip(keep2, r2.offset):
        off[c] = val
    return AffineRelation(p, m, n, basis, off)


def rel_equal(r1: AffineRelation, r2: AffineRelation) -> bool:
    """Canonical-form comparison; requires matching types."""
    if (r1.p, r1.m, r1.n) != (r2.p, r2.m, r2.n):
        raise RelError("type mismatch")
    return r1 == r2


def rel_converse(rel: AffineRelation) -> AffineRelation:
    """Swap the roles of inputs and outputs."""
    perm = []
    for k in range(rel.n):
        perm += [2 * (rel.m + k), 2 * (rel.m + k) + 1]
    for k in range(rel.m):
        perm += [2 * k, 2 * k + 1]
    if rel.empty:
        return AffineRelation.empty_rel(rel.p, rel.n, rel.m)
    return AffineRelation(rel.p, rel.n, rel.m,
                          [[v[c] for c in perm] for v in rel.basis],
                          [rel.offset[c] for c in perm])


# -- generator relations ------------------------------------------------------------


def rel_identity(p: Prime) -> AffineRelation:
    return AffineRelation(p, 1, 1, [[1, 0, 1, 0], [0, 1, 0, 1]])


def rel_h(p: Prime, w: int = 1) -> AffineRelation:
    """h(w): the graph of (q, p) -> (-w^{-1} p, w q)."""
    pm = p.p
    w %= pm
    if w == 0:
        raise RelError("h weight must be nonzero")
    wi = p.inv(w)
    return AffineRelation(p, 1, 1,
                          [[1, 0, 0, w], [0, 1, (-wi) % pm, 0]])


def rel_mul(p: Prime, z: int) -> AffineRelation:
    """mul(z): the graph of (q, p) -> (-z q, -z^{-1} p); mul(-1) is plain."""
    pm = p.p
    z %= pm
    if z == 0:
        raise RelError("multiplier label must be nonzero")
    zi = p.inv(z)
    return AffineRelation(p, 1, 1,
                          [[1, 0, (-z) % pm, 0], [0, 1, 0, (-zi) % pm]])


def rel_discard(p: Prime) -> AffineRelation:
    return AffineRelation.full(p, 1, 0)


def rel_spider(p: Prime, colour: str, m: int, n: int, x: int = 0,
               y: int = 0) -> AffineRelation:
    """The relation of an m -> n spider, via the diagram pipeline."""
    from .diagram import spider as d_spider

    return rel_interp(d_spider(p, colour, m, n, x, y))


# -- the interpretation ------------------------------------------------------------


def rel_interp(d: Diagram) -> AffineRelation:
    """The affine relation of a diagram.

    One affine system is assembled over a (position, momentum) pair per
    edge end (plus one per boundary wire), with spider fragments and edge
    decorations contributing constraints, and solved exactly; the result
    is projected onto the boundary coordinates, inputs unbent.
    """
    p = d.p
    pm = p.p
    half = p.half

    # slot assignment: one leg slot per (edge, endpoint); boundary vertices
    # identify their wire with their single leg slot.
    slot_count = 0
    slots: dict[tuple[int, int], int] = {}  # (eid, 0|1) -> slot
    for eid in sorted(d.edges):
        slots[(eid, 0)] = slot_count
        slots[(eid, 1)] = slot_count + 1
        slot_count += 2

    def q(s: int) -> int:
        return 2 * s

    def mom(s: int) -> int:
        return 2 * s + 1

    dim = 2 * slot_count
    a_mat: list[list[int]] = []
    b_vec: list[int] = []
    empty = False

    def add(coeffs: dict[int, int], rhs: int):
        row = [0] * dim
        for c, v in coeffs.items():
            row[c] = v % pm
        a_mat.append(row)
        b_vec.append(rhs % pm)

    # vertex fragments
    legs_of: dict[int, list[int]] = {v: [] for v in d.vertices}
    for eid in sorted(d.edges):
        e = d.edges[eid]
        legs_of[e.a].append(slots[(eid, 0)])
        legs_of[e.b].append(slots[(eid, 1)])
    for v in sorted(d.vertices):
        k = d.vertices[v]
        legs = legs_of[v]
        if k.is_boundary() or k.kind == DISCARD:
            continue  # free leg
        x, y = k.phase.x, k.phase.y
        if not legs:
            if y % pm == 0 and x % pm != 0:
                empty = True  # a zero-valued scalar component
            continue
        if k.kind == Z:
            for s in legs[1:]:
                add({q(s): 1, q(legs[0]): pm - 1}, 0)
            coeffs = {mom(s): 1 for s in legs}
            coeffs[q(legs[0])] = (coeffs.get(q(legs[0]), 0) - y) % pm
            add(coeffs, half * x)
        else:
            for s in legs[1:]:
                add({mom(s): 1, mom(legs[0]): pm - 1}, 0)
            coeffs = {q(s): 1 for s in legs}
            coeffs[mom(legs[0])] = (coeffs.get(mom(legs[0]), 0) + y) % pm
            add(coeffs, half * x)

    # edge decorations: slot (eid,0) is the tail end, (eid,1) the head
    for eid in sorted(d.edges):
        e = d.edges[eid]
        sa, sb = slots[(eid, 0)], slots[(eid, 1)]
        if e.kind.kind == PLAIN:
            add({q(sb): 1, q(sa): pm - 1}, 0)
            add({mom(sb): 1, mom(sa): 1}, 0)
        elif e.kind.kind == MULKIND:
            z = e.kind.weight
            add({q(sb): 1, q(sa): z}, 0)
            add({mom(sb): 1, mom(sa): (-p.inv(z)) % pm}, 0)
        else:
            w = e.kind.weight
            add({q(sb): 1, mom(sa): (-p.inv(w)) % pm}, 0)
            add({mom(sb): 1, q(sa): (-w) % pm}, 0)

    if empty:
        return AffineRelation.empty_rel(p, len(d.inputs), len(d.outputs))
    sol = _solve_affine(p, a_mat, b_vec, dim)
    if sol is None:
        return AffineRelation.empty_rel(p, len(d.inputs), len(d.outputs))
    basis, part = sol

    # project to boundary wires, inputs first; unbend inputs (p -> -p)
    keep: list[tuple[int, int]] = []  # (coordinate, sign)
    for b in d.inputs:
        s = legs_of[b][0]
        keep.append((q(s), 1))
        keep.append((mom(s), -1))
    for b in d.outputs:
        s = legs_of[b][0]
        keep.append((q(s), 1))
        keep.append((mom(s), 1))
    proj_basis = [[(sign * vec[c]) % pm for c, sign in keep] for vec in basis]
    proj_off = [(sign * part[c]) % pm for c, sign in keep]
    return AffineRelation(p, len(d.inputs), len(d.outputs), proj_basis, proj_off)
