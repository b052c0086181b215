"""The standard matrix semantics of diagrams, and the CPM (doubled) variant.

`interp` maps a diagram with m inputs and n outputs to an exact
p^n x p^m matrix.  Green spiders with phase (x, y) sum
omega^{2^{-1}(xk + yk^2)} |k..k><k..k| over the computational basis; red
spiders are the Hadamard-conjugated green ones, which makes every leg of
a red spider carry the X-basis convention with the extra sign
(output legs |-k:X>, input legs <k:X|).  Edge decorations act as the
matrices

    plain:   identity          h(w):  p^{-1/2} sum omega^{w j k} |k><j|
    mul(z):  sum |-z j><j|  (tail to head)

Internally every red spider is replaced by a green one with negated Pauli
part and an h(1) composed onto each leg; this is an exact identity of
interpretations and keeps the contraction core single-coloured.
"""

from __future__ import annotations

from typing import Hashable, Optional

import numpy as np

from ._tensor import Factor, contract, entry_to_cyclo, factor_to_matrix
from .cyclo import Cyclo, CycloMatrix, omega_pow, phase_term
from .diagram import (
    BOUNDARY_IN,
    BOUNDARY_OUT,
    DISCARD,
    Diagram,
    DiagramError,
    Edge,
    EdgeKind,
    HKIND,
    MULKIND,
    PLAIN,
    Phase,
    VertexKind,
    X,
    Z,
    conjugate,
    hbox,
    kind_compose,
    kind_transpose,
    tensor as d_tensor,
)
from .modp import Prime


class InterpError(ValueError):
    pass


def _coeff_vec(p: Prime, c: Cyclo) -> np.ndarray:
    if c.den != 1:
        raise ValueError("integral coefficients expected")
    return np.array(list(c.num), dtype=np.int64)


def _phase_vector(p: Prime, ph: Phase) -> np.ndarray:
    """(p, D) array: row k holds omega^{2^{-1}(x k + y k^2)}."""
    dim = 2 * (p.p - 1)
    out = np.zeros((p.p, dim), dtype=np.int64)
    for k in range(p.p):
        out[k] = _coeff_vec(p, phase_term(p, ph.x, ph.y, k))
    return out


def _edge_matrix(p: Prime, kind: EdgeKind) -> tuple[np.ndarray, int]:
    """(tail, head, D) coefficient array and its p^{-1/2} power."""
    pm = p.p
    dim = 2 * (pm - 1)
    arr = np.zeros((pm, pm, dim), dtype=np.int64)
    if kind.kind == PLAIN:
        for j in range(pm):
            arr[j, j, 0] = 1
        return arr, 0
    if kind.kind == MULKIND:
        z = kind.weight
        for j in range(pm):
            arr[j, (-z * j) % pm, 0] = 1
        return arr, 0
    w = kind.weight
    for j in range(pm):
        for k in range(pm):
            arr[j, k] = _coeff_vec(p, omega_pow(p, w * j * k))
    return arr, 1


def _greenified(d: Diagram) -> Diagram:
    """Replace every X spider by a Z spider with h(1) folded onto its legs."""
    if not any(k.kind == X for k in d.vertices.values()):
        return d
    out = d.copy()
    reds = {v for v, k in out.vertices.items() if k.kind == X}
    for v in reds:
        k = out.vertices[v]
        out.vertices[v] = VertexKind(Z, Phase((-k.phase.x) % d.p.p, k.phase.y))
    h1 = hbox(1)
    for eid, e in list(out.edges.items()):
        kind = e.kind
        if e.a in reds:
            kind = kind_compose(kind, h1, d.p)  # h first (at the tail side)
        if e.b in reds:
            kind = kind_compose(h1, kind, d.p)  # h last (at the head side)
        if kind is not e.kind:
            out.edges[eid] = Edge(e.a, e.b, kind)
    return out


def _axis_of(d: Diagram, v: int) -> Hashable:
    k = d.vertices[v]
    if k.kind == BOUNDARY_IN:
        return ("i", k.port)
    if k.kind == BOUNDARY_OUT:
        return ("o", k.port)
    return ("v", v)


def build_factors(d: Diagram) -> tuple[list[Factor], list[Hashable], list[Hashable]]:
    """Factor-graph form of a (green-only) diagram.

    Returns (factors, internal axes to sum, boundary axes in matrix order).
    """
    p = d.p
    factors: list[Factor] = []
    for v, k in d.vertices.items():
        if k.is_spider():
            factors.append(Factor(p, [("v", v)], _phase_vector(p, k.phase)))
    for e in d.edges.values():
        arr, hp = _edge_matrix(p, e.kind)
        ax_a, ax_b = _axis_of(d, e.a), _axis_of(d, e.b)
        if ax_a == ax_b:  # self-loop: diagonal entries only
            pm = p.p
            diag = np.stack([arr[j, j] for j in range(pm)])
            factors.append(Factor(p, [ax_a], diag, hp))
        else:
            factors.append(Factor(p, [ax_a, ax_b], arr, hp))
    internal = [("v", v) for v in sorted(d.spider_ids())]
    keep = [("o", d.vertices[v].port) for v in d.outputs]
    keep += [("i", d.vertices[v].port) for v in d.inputs]
    keep.sort(key=lambda ax: (ax[0] != "o", ax[1]))
    return factors, internal, keep


def interp_factor(d: Diagram, extra_scalar: Optional[Cyclo] = None):
    """Contract a discard-free diagram to a single labelled factor.

    Boundary axes are ordered outputs then inputs, by port; the star and
    any extra scalar are folded in.  This is the fast path used by the
    soundness harness; `interp` reshapes the result into a matrix.
    """
    from ._tensor import scalar_factor

    if d.has_discard():
        raise InterpError("diagram contains discards; use interp_cpm")
    d = _greenified(d)
    factors, internal, keep = build_factors(d)
    p = d.p
    scal = Cyclo.one(p) if extra_scalar is None else extra_scalar
    if d.star_count:
        scal = scal * Cyclo.from_int(p, -1)
    factors.append(scalar_factor(p, scal))
    return contract(p, factors, internal, keep)


def interp(d: Diagram) -> CycloMatrix:
    """Exact matrix of a discard-free diagram: p^{|outputs|} x p^{|inputs|}."""
    f = interp_factor(d)
    return factor_to_matrix(d.p, f, len(d.outputs), len(d.inputs))


def interp_scalar(d: Diagram) -> Cyclo:
    """Value of a closed (0 -> 0) diagram."""
    if d.inputs or d.outputs:
        raise InterpError("interp_scalar needs a closed diagram")
    return interp(d)[0, 0]


def interp_cpm(d: Diagram) -> CycloMatrix:
    """Superoperator semantics via doubling, p^{2n} x p^{2m}.

    The diagram is tensored with its entrywise conjugate (the conjugate
    copy's wires listed after the original's), and each discard is traced
    against its twin by a connecting wire.  For discard-free diagrams this
    reduces to M (x) conj(M).
    """
    base = d.copy()
    twin = conjugate(d)
    doubled = d_tensor(base, twin)
    # identify discard pairs: vertex ids of the twin are offset by merge order;
    # rebuild the matching by sorted discard id lists.
    discards = sorted(
        v for v, k in doubled.vertices.items() if k.kind == DISCARD
    )
    half = len(discards) // 2
    for v1, v2 in zip(discards[:half], discards[half:]):
        e1 = doubled.edges[doubled.vertex_edges(v1)[0]]
        e2 = doubled.edges[doubled.vertex_edges(v2)[0]]
        k1 = e1.kind if e1.b == v1 else kind_transpose(e1.kind, d.p)
        u1 = e1.other(v1)
        k2 = e2.kind if e2.b == v2 else kind_transpose(e2.kind, d.p)
        u2 = e2.other(v2)
        # u1 --k1--> (traced point) --k2^T--> u2
        kind = kind_compose(kind_transpose(k2, d.p), k1, d.p)
        for eid in list(doubled.edges):
            e = doubled.edges[eid]
            if e.a in (v1, v2) or e.b in (v1, v2):
                del doubled.edges[eid]
        del doubled.vertices[v1]
        del doubled.vertices[v2]
        doubled.edges[doubled._next_e] = Edge(u1, u2, kind)
        doubled._next_e += 1
    doubled.cpm = False
    return interp(doubled)


# -- reference operators -----------------------------------------------------


def pauli_x(p: Prime) -> CycloMatrix:
    m = CycloMatrix.zeros(p, p.p, p.p)
    one = Cyclo.one(p)
    for j in range(p.p):
        m.data[(j + 1) % p.p][j] = one
    return m


def pauli_z(p: Prime) -> CycloMatrix:
    m = CycloMatrix.zeros(p, p.p, p.p)
    for j in range(p.p):
        m.data[j][j] = omega_pow(p, j)
    return m


def hadamard_matrix(p: Prime) -> CycloMatrix:
    """H = p^{-1/2} sum omega^{jk} |k><j| exactly."""
    m = CycloMatrix.zeros(p, p.p, p.p)
    from .cyclo import sqrt_p

    inv_root = sqrt_p(p).divide_by_int(p.p)  # 1/sqrt(p)
    for j in range(p.p):
        for k in range(p.p):
            m.data[k][j] = inv_root * omega_pow(p, j * k)
    return m


def s_matrix(p: Prime) -> CycloMatrix:
    m = CycloMatrix.zeros(p, p.p, p.p)
    for j in range(p.p):
        m.data[j][j] = omega_pow(p, p.half * j * (j + 1))
    return m


def e_matrix(p: Prime) -> CycloMatrix:
    m = CycloMatrix.zeros(p, p.p * p.p, p.p * p.p)
    for a in range(p.p):
        for b in range(p.p):
            m.data[a * p.p + b][a * p.p + b] = omega_pow(p, a * b)
    return m
