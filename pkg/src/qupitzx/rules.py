"""Sound rewrite rules with exact scalar tracking.

A `RewriteState` pairs a diagram with a field-element accumulator; the
fundamental invariant, enforced by the randomised soundness harness, is
that ``scalar * interp(graph)`` never changes when a rule is applied.
Scalar side conditions of the rules therefore live in the accumulator
rather than as floating scalar sub-diagrams.

Rules are site-directed: the caller (or a matcher) names the vertices and
edges consumed.  Matchers are deterministic (sorted by vertex/edge id), and
every rule comes with an instance generator used by `calibrate` and the
soundness fuzzing command.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .cyclo import (
    Cyclo,
    gauss_sum_with_linear,
    omega_pow,
    quadratic_gauss_sum,
    sqrt_p_pow,
)
from .diagram import (
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
    hbox,
    kind_compose,
    kind_reduce,
    kind_transpose,
    mul,
    plain,
    spider,
)
from .modp import Prime


class RuleError(ValueError):
    """Pattern mismatch or parameter out of domain."""


@dataclass
class RuleSite:
    """Which rule to apply and where: vertex ids, edge ids and parameters."""

    rule: str
    vertices: tuple[int, ...] = ()
    edges: tuple[int, ...] = ()
    params: dict = field(default_factory=dict)


class RewriteState:
    """(diagram, exact scalar) with an append-only trace of applications."""

    def __init__(self, graph: Diagram, scalar: Optional[Cyclo] = None):
        self.graph = graph
        self.scalar = Cyclo.one(graph.p) if scalar is None else scalar
        self.trace: list[str] = []

    def copy(self) -> "RewriteState":
        st = RewriteState(self.graph.copy(), self.scalar)
        st.trace = list(self.trace)
        return st

    def emit(self, site: RuleSite, factor: Cyclo):
        self.scalar = self.scalar * factor
        ids = ",".join(map(str, site.vertices)) or "-"
        eids = ",".join(map(str, site.edges)) or "-"
        self.trace.append(f"{site.rule} v[{ids}] e[{eids}] {factor.text()}")

    def is_zero(self) -> bool:
        return self.scalar.is_zero()

    def __repr__(self):
        return f"RewriteState({self.graph!r}, scalar={self.scalar.text()})"


# --------------------------------------------------------------------------
# small structural helpers


def _edges_between(d: Diagram, u: int, v: int) -> list[int]:
    return sorted(
        eid for eid, e in d.edges.items()
        if (e.a == u and e.b == v) or (e.a == v and e.b == u)
    )


def _self_loops(d: Diagram, v: int) -> list[int]:
    return sorted(eid for eid, e in d.edges.items() if e.a == e.b == v)


def _oriented_from(d: Diagram, eid: int, v: int) -> EdgeKind:
    """The edge's decoration read with tail at v."""
    e = d.edges[eid]
    return e.kind if e.a == v else kind_transpose(e.kind, d.p)


def _spider_kind(d: Diagram, v: int) -> Optional[str]:
    k = d.vertices.get(v)
    return k.kind if k is not None and k.is_spider() else None


def _compose_at_vertex(d: Diagram, v: int, extra: EdgeKind):
    """Compose `extra` onto the v-side of every edge incident to v."""
    for eid, e in list(d.edges.items()):
        kind = e.kind
        if e.a == v and e.b == v:
            kind = kind_compose(kind_compose(extra, kind, d.p), extra, d.p)
        elif e.a == v:
            kind = kind_compose(kind, extra, d.p)
        elif e.b == v:
            kind = kind_compose(extra, kind, d.p)
        else:
            continue
        d.edges[eid] = Edge(e.a, e.b, kind)


def _splice_vertex_on_edge(d: Diagram, eid: int, colour: str, x: int, y: int,
                           near: int) -> int:
    """Insert a degree-2 spider next to endpoint `near` of edge `eid`.

    The new vertex is joined to `near` by a plain wire and inherits the old
    decoration on its far side, which leaves the interpretation unchanged
    when the spider is an identity; callers add phases deliberately.
    """
    e = d.edges[eid]
    w = d.add_spider(colour, x, y)
    far = e.b if e.a == near else e.a
    kind = e.kind
    del d.edges[eid]
    if e.a == near:
        d.add_edge(near, w, plain())
        d.add_edge(w, far, kind)
    else:
        d.add_edge(far, w, kind)
        d.add_edge(w, near, plain())
    return w


def _green_substitute(d: Diagram, v: int, c: int):
    """Reparametrise a green spider's summation variable k -> c*k.

    Phase (x, y) becomes (c x, c^2 y) and every leg picks up the scaling
    map k -> c k, i.e. a mul(-c) composed at the vertex side.  Exact, no
    scalar.
    """
    pm = d.p.p
    c %= pm
    if c == 0:
        raise RuleError("substitution must be invertible")
    k = d.vertices[v]
    if k.kind != Z:
        raise RuleError("substitution targets a green spider")
    cinv = d.p.inv(c)
    for eid, e in list(d.edges.items()):
        kind = e.kind
        if e.a == v and e.b == v:
            kind = kind_compose(
                kind_compose(EdgeKind(MULKIND, (-cinv) % pm), kind, d.p),
                EdgeKind(MULKIND, (-c) % pm), d.p)
        elif e.a == v:
            kind = kind_compose(kind, EdgeKind(MULKIND, (-c) % pm), d.p)
        elif e.b == v:
            kind = kind_compose(EdgeKind(MULKIND, (-cinv) % pm), kind, d.p)
        else:
            continue
        d.edges[eid] = Edge(e.a, e.b, kind_reduce(kind, d.p))
    d.set_phase(v, Phase(c * k.phase.x, c * c * k.phase.y))


def _add_h_weight(d: Diagram, u: int, v: int, delta: int) -> int:
    """Add `delta` to the h-weight between green spiders u, v.

    Assumes at most one h-edge (graph-like locally).  Returns +1 when an
    edge is created, -1 when one is deleted, 0 otherwise; the caller turns
    that into the p^{1/2} bookkeeping factor.
    """
    pm = d.p.p
    delta %= pm
    if delta == 0:
        return 0
    existing = _edges_between(d, u, v)
    hs = [eid for eid in existing if d.edges[eid].kind.kind == HKIND]
    if not hs:
        d.add_edge(u, v, hbox(delta))
        return 1
    eid = hs[0]
    w = (d.edges[eid].kind.weight + delta) % pm
    if w == 0:
        del d.edges[eid]
        return -1
    e = d.edges[eid]
    d.edges[eid] = Edge(e.a, e.b, hbox(w))
    return 0


# --------------------------------------------------------------------------
# rule appliers


def _need(cond: bool, msg: str):
    if not cond:
        raise RuleError(msg)


def _apply_fusion(state: RewriteState, site: RuleSite):
    """Merge two same-colour spiders along a plain edge (green) or an
    antipode edge mul(1) (red); phases add."""
    d = state.graph
    _need(len(site.edges) == 1, "fusion consumes one edge")
    eid = site.edges[0]
    _need(eid in d.edges, "no such edge")
    e = d.edges[eid]
    u, v = e.a, e.b
    _need(u != v, "fusion needs distinct endpoints")
    ku, kv = _spider_kind(d, u), _spider_kind(d, v)
    _need(ku is not None and ku == kv, "fusion needs same-colour spiders")
    if ku == Z:
        _need(e.kind.kind == PLAIN, "green fusion runs along a plain edge")
    else:
        _need(e.kind.kind == MULKIND and e.kind.weight == 1,
              "red fusion runs along a mul(1) edge")
    pu, pv = d.vertices[u].phase, d.vertices[v].phase
    del d.edges[eid]
    for oid, oe in list(d.edges.items()):
        a = u if oe.a == v else oe.a
        b = u if oe.b == v else oe.b
        if (a, b) != (oe.a, oe.b):
            d.edges[oid] = Edge(a, b, oe.kind)
    del d.vertices[v]
    d.set_phase(u, Phase(pu.x + pv.x, pu.y + pv.y))
    state.emit(site, Cyclo.one(d.p))


def _apply_colour_flip(state: RewriteState, site: RuleSite):
    """Flip one spider's colour, folding Hadamards onto its legs.

    X(x,y) -> Z(-x,y) with h(1) on each leg; Z(x,y) -> X(-x,y) with h(-1).
    """
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.is_spider(), "colour flip targets a spider")
    if k.kind == X:
        d.vertices[v] = VertexKind(Z, Phase((-k.phase.x) % d.p.p, k.phase.y))
        _compose_at_vertex(d, v, hbox(1))
    else:
        d.vertices[v] = VertexKind(X, Phase((-k.phase.x) % d.p.p, k.phase.y))
        _compose_at_vertex(d, v, hbox(d.p.p - 1))
    state.emit(site, Cyclo.one(d.p))


def _apply_g_elim(state: RewriteState, site: RuleSite):
    """Remove an identity green spider of degree 2, composing its edges."""
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.kind == Z and k.phase.is_zero(),
          "identity elimination needs a phaseless green spider")
    es = d.vertex_edges(v)
    _need(len(es) == 2 and not _self_loops(d, v), "degree must be exactly 2")
    e1, e2 = d.edges[es[0]], d.edges[es[1]]
    k1 = e1.kind if e1.b == v else kind_transpose(e1.kind, d.p)
    u = e1.other(v)
    k2 = e2.kind if e2.a == v else kind_transpose(e2.kind, d.p)
    w = e2.other(v)
    kind = kind_compose(k2, k1, d.p)
    del d.edges[es[0]]
    del d.edges[es[1]]
    del d.vertices[v]
    d.add_edge(u, w, kind)
    state.emit(site, Cyclo.one(d.p))


def _apply_r_elim(state: RewriteState, site: RuleSite):
    """Remove a phaseless red spider of degree 2 (an antipode vertex)."""
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.kind == X and k.phase.is_zero(),
          "antipode elimination needs a phaseless red spider")
    es = d.vertex_edges(v)
    _need(len(es) == 2 and not _self_loops(d, v), "degree must be exactly 2")
    e1, e2 = d.edges[es[0]], d.edges[es[1]]
    k1 = e1.kind if e1.b == v else kind_transpose(e1.kind, d.p)
    u = e1.other(v)
    k2 = e2.kind if e2.a == v else kind_transpose(e2.kind, d.p)
    w = e2.other(v)
    kind = kind_compose(k2, kind_compose(mul(1), k1, d.p), d.p)
    del d.edges[es[0]]
    del d.edges[es[1]]
    del d.vertices[v]
    d.add_edge(u, w, kind)
    state.emit(site, Cyclo.one(d.p))


def _apply_shear(state: RewriteState, site: RuleSite):
    """Collapse Z(a,0) . X(c,d) . Z(a,0) sandwiches (all degree 2, plain)."""
    d = state.graph
    _need(len(site.vertices) == 3, "shear consumes three vertices")
    z1, xv, z2 = site.vertices
    for v in (z1, z2):
        k = d.vertices.get(v)
        _need(k is not None and k.kind == Z and k.phase.y == 0,
              "outer vertices must be green Pauli phases")
    _need(d.vertices[z1].phase.x == d.vertices[z2].phase.x,
          "outer Pauli labels must match")
    kx = d.vertices.get(xv)
    _need(kx is not None and kx.kind == X, "inner vertex must be red")
    for v in (z1, z2, xv):
        _need(len(d.vertex_edges(v)) == 2 and not _self_loops(d, v),
              "sandwich vertices must have degree 2")
    e1s = _edges_between(d, z1, xv)
    e2s = _edges_between(d, xv, z2)
    _need(len(e1s) == 1 and len(e2s) == 1, "sandwich must be a chain")
    _need(d.edges[e1s[0]].kind.kind == PLAIN
          and d.edges[e2s[0]].kind.kind == PLAIN, "chain edges must be plain")
    a = d.vertices[z1].phase.x
    c, dd = kx.phase.x, kx.phase.y
    pm = d.p.p
    # outer connections
    outer = []
    for v in (z1, z2):
        for eid in d.vertex_edges(v):
            e = d.edges[eid]
            if e.other(v) != xv:
                kind = e.kind if e.b == v else kind_transpose(e.kind, d.p)
                outer.append((e.other(v), kind))
    _need(len(outer) == 2, "sandwich endpoints must leave the chain")
    for v in (z1, z2):
        d.remove_vertex(v)
    d.remove_vertex(xv)
    nv = d.add_spider(X, (c + a * dd) % pm, dd)
    (u1, ku1), (u2, ku2) = outer
    d.add_edge(u1, nv, kind_transpose(ku1, d.p))
    d.add_edge(nv, u2, kind_transpose(ku2, d.p))
    half = d.p.half
    expo = (half * half * a * c + half * half * half * dd * a * a) % pm
    state.emit(site, omega_pow(d.p, expo))


def _apply_char_collapse(state: RewriteState, site: RuleSite):
    """Delete p parallel plain edges between a red and a green spider."""
    d = state.graph
    u, v = site.vertices
    _need({_spider_kind(d, u), _spider_kind(d, v)} == {Z, X},
          "char collapse needs opposite colours")
    es = [eid for eid in _edges_between(d, u, v)
          if d.edges[eid].kind.kind == PLAIN]
    _need(len(es) >= d.p.p, f"needs {d.p.p} parallel plain edges")
    for eid in es[: d.p.p]:
        del d.edges[eid]
    state.emit(site, sqrt_p_pow(d.p, -d.p.p))


def _apply_hopf(state: RewriteState, site: RuleSite):
    """Disconnect a green/red pair joined by one plain and one mul(1) edge."""
    d = state.graph
    u, v = site.vertices
    _need({_spider_kind(d, u), _spider_kind(d, v)} == {Z, X},
          "hopf needs opposite colours")
    es = _edges_between(d, u, v)
    plains = [eid for eid in es if d.edges[eid].kind.kind == PLAIN]
    antis = [eid for eid in es
             if d.edges[eid].kind.kind == MULKIND and d.edges[eid].kind.weight == 1]
    _need(plains and antis, "needs one plain and one mul(1) edge")
    del d.edges[plains[0]]
    del d.edges[antis[0]]
    state.emit(site, Cyclo.from_int(d.p, 1, d.p.p))


def _apply_bigebra(state: RewriteState, site: RuleSite):
    """Contract a complete bipartite green/red wall to a single pair.

    m phaseless green spiders (one free leg each) fully joined by plain
    edges to n phaseless red spiders (one free leg each) become a red
    spider carrying the green side's free legs joined by a plain wire to a
    green spider carrying the red side's legs; the exact factor is
    p^{-(m-1)(n-1)/2}.
    """
    d = state.graph
    greens = list(site.params["greens"])
    reds = list(site.params["reds"])
    m, n = len(greens), len(reds)
    _need(m >= 1 and n >= 1, "bigebra needs both sides nonempty")
    free: dict[int, tuple[int, EdgeKind]] = {}
    for g in greens:
        k = d.vertices.get(g)
        _need(k is not None and k.kind == Z and k.phase.is_zero(),
              "green side must be phaseless")
        _need(len(d.vertex_edges(g)) == n + 1, "green degree must be n+1")
    for r in reds:
        k = d.vertices.get(r)
        _need(k is not None and k.kind == X and k.phase.is_zero(),
              "red side must be phaseless")
        _need(len(d.vertex_edges(r)) == m + 1, "red degree must be m+1")
    for g in greens:
        for r in reds:
            es = _edges_between(d, g, r)
            _need(len(es) == 1 and d.edges[es[0]].kind.kind == PLAIN,
                  "wall edges must be single plain wires")
    legs_g, legs_r = [], []
    for g in greens:
        for eid in d.vertex_edges(g):
            e = d.edges[eid]
            if e.other(g) not in reds:
                legs_g.append((e.other(g), _oriented_from(d, eid, g)))
    for r in reds:
        for eid in d.vertex_edges(r):
            e = d.edges[eid]
            if e.other(r) not in greens:
                legs_r.append((e.other(r), _oriented_from(d, eid, r)))
    _need(len(legs_g) == m and len(legs_r) == n, "free legs must leave the wall")
    for v in greens + reds:
        d.remove_vertex(v)
    xv = d.add_spider(X)
    zv = d.add_spider(Z)
    d.add_edge(xv, zv, plain())
    for u, kind in legs_g:
        d.add_edge(xv, u, kind)
    for u, kind in legs_r:
        d.add_edge(zv, u, kind)
    state.emit(site, sqrt_p_pow(d.p, -(m - 1) * (n - 1)))


def _apply_copy(state: RewriteState, site: RuleSite):
    """Copy a red Pauli state through a green spider onto all its legs."""
    d = state.graph
    sv, zv = site.vertices  # state vertex, green spider
    ks = d.vertices.get(sv)
    kz = d.vertices.get(zv)
    _need(ks is not None and ks.kind == X and ks.phase.y == 0,
          "copied state must be a red Pauli unit")
    _need(len(d.vertex_edges(sv)) == 1, "copied state must have degree 1")
    _need(kz is not None and kz.kind == Z, "copy target must be green")
    eid = _edges_between(d, sv, zv)
    _need(len(eid) == 1 and d.edges[eid[0]].kind.kind == PLAIN,
          "state attaches by a single plain wire")
    _need(not _self_loops(d, zv), "copy target must have no self-loops")
    pm = d.p.p
    xlab = ks.phase.x
    a = (d.p.half * xlab) % pm
    s, t = kz.phase.x, kz.phase.y
    legs: list[tuple[int, EdgeKind]] = []
    for le in d.vertex_edges(zv):
        e = d.edges[le]
        if e.other(zv) != sv:
            legs.append((e.other(zv), _oriented_from(d, le, zv)))
    nlegs = len(legs)
    d.remove_vertex(sv)
    d.remove_vertex(zv)
    for u, kind in legs:
        if kind.kind == PLAIN:
            nv = d.add_spider(X, xlab, 0)
            d.add_edge(nv, u, plain())
        elif kind.kind == HKIND:
            nv = d.add_spider(Z, (2 * kind.weight * a) % pm, 0)
            d.add_edge(nv, u, plain())
        else:
            nv = d.add_spider(X, (-2 * kind.weight * a) % pm, 0)
            d.add_edge(nv, u, plain())
    expo = (d.p.half * (s * a + t * a * a)) % pm
    factor = omega_pow(d.p, expo) * sqrt_p_pow(d.p, 1 - nlegs)
    state.emit(site, factor)


def _apply_gauss(state: RewriteState, site: RuleSite):
    """Absorb an isolated spider into the scalar accumulator.

    The value is sum_k omega^{2^{-1}(xk + yk^2)}: p for (0,0), a Gauss sum
    for y != 0, and zero for a nonzero pure Pauli phase (which zeroes the
    whole state).
    """
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.is_spider(), "needs a spider")
    _need(not d.vertex_edges(v), "spider must be isolated")
    value = gauss_sum_with_linear(d.p, k.phase.x, k.phase.y)
    d.remove_vertex(v)
    state.emit(site, value)


def _apply_star_absorb(state: RewriteState, site: RuleSite):
    """Fold the star generator into the accumulator as -1."""
    d = state.graph
    _need(d.star_count == 1, "no star to absorb")
    d.star_count = 0
    state.emit(site, Cyclo.from_int(d.p, -1))


def _apply_m_elim(state: RewriteState, site: RuleSite):
    """Absorb a multiplier into an adjacent degree-1 red spider."""
    d = state.graph
    (v,) = site.vertices
    (eid,) = site.edges
    k = d.vertices.get(v)
    _need(k is not None and k.kind == X, "multiplier absorbs into a red spider")
    es = d.vertex_edges(v)
    _need(es == [eid] and not _self_loops(d, v), "red spider must have degree 1")
    e = d.edges[eid]
    _need(e.kind.kind == MULKIND, "edge must be a multiplier")
    z = e.kind.weight
    pm = d.p.p
    a, b = k.phase.x, k.phase.y
    if e.b == v:  # neighbour --mul(z)--> spider
        zi = d.p.inv(z)
        na, nb = (-a * zi) % pm, (b * zi * zi) % pm
    else:  # spider --mul(z)--> neighbour
        na, nb = (-a * z) % pm, (b * z * z) % pm
    d.set_phase(v, Phase(na, nb))
    d.edges[eid] = Edge(e.a, e.b, plain())
    state.emit(site, Cyclo.one(d.p))


def _apply_mul_spider(state: RewriteState, site: RuleSite):
    """Push a multiplier into a green spider by rescaling its variable."""
    d = state.graph
    (v,) = site.vertices
    (eid,) = site.edges
    k = d.vertices.get(v)
    _need(k is not None and k.kind == Z, "target must be green")
    _need(eid in d.edges, "no such edge")
    e = d.edges[eid]
    _need(e.kind.kind == MULKIND, "edge must be a multiplier")
    _need(e.a != e.b, "no self-loops")
    _need(v in (e.a, e.b), "edge must touch the vertex")
    z = e.kind.weight
    c = (-d.p.inv(z)) % d.p.p if e.a == v else (-z) % d.p.p
    _green_substitute(d, v, c)
    state.emit(site, Cyclo.one(d.p))


def _apply_antipode_spider(state: RewriteState, site: RuleSite):
    """Negate a green spider's variable: x flips, every leg gains mul(1)."""
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.kind == Z, "target must be green")
    _green_substitute(d, v, d.p.p - 1)
    state.emit(site, Cyclo.one(d.p))


def _apply_plain_loop(state: RewriteState, site: RuleSite):
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.a == e.b, "needs a self-loop")
    _need(e.kind.kind == PLAIN, "loop must be plain")
    _need(_spider_kind(d, e.a) == Z, "loop host must be green")
    del d.edges[eid]
    state.emit(site, Cyclo.one(d.p))


def _apply_h_loop(state: RewriteState, site: RuleSite):
    """h(w) self-loop on a green spider folds into phase (0, 2w) / sqrt(p)."""
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.a == e.b, "needs a self-loop")
    _need(e.kind.kind == HKIND, "loop must be an h-edge")
    v = e.a
    _need(_spider_kind(d, v) == Z, "loop host must be green")
    w = e.kind.weight
    del d.edges[eid]
    d.add_to_phase(v, 0, 2 * w)
    state.emit(site, sqrt_p_pow(d.p, -1))


def _apply_mul_loop(state: RewriteState, site: RuleSite):
    """mul(z) self-loop pins the spider to 0: it shatters into |0> legs."""
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.a == e.b, "needs a self-loop")
    _need(e.kind.kind == MULKIND, "loop must be a multiplier")
    v = e.a
    _need(_spider_kind(d, v) == Z, "loop host must be green")
    legs = []
    extra_loops = Cyclo.one(d.p)
    for oid in d.vertex_edges(v):
        if oid == eid:
            continue
        oe = d.edges[oid]
        if oe.a == oe.b:
            # another loop evaluated at 0: plain and mul give 1, h gives 1/sqrt(p)
            if oe.kind.kind == HKIND:
                extra_loops = extra_loops * sqrt_p_pow(d.p, -1)
        else:
            legs.append((oe.other(v), _oriented_from(d, oid, v)))
    d.remove_vertex(v)
    for u, kind in legs:
        if kind.kind == HKIND:
            nv = d.add_spider(Z, 0, 0)
        else:
            nv = d.add_spider(X, 0, 0)
        d.add_edge(nv, u, plain())
    state.emit(site, extra_loops * sqrt_p_pow(d.p, -len(legs)))


def _apply_parallel_merge(state: RewriteState, site: RuleSite):
    """Merge two parallel edges between green spiders pointwise.

    plain/mul edges are constraint edges: equal constraints collapse to
    one; contradictory ones pin both endpoints to zero.  h-edges add
    weights (with a 1/sqrt p), and mul against h folds a quadratic phase
    into the tail-side vertex.
    """
    d = state.graph
    e1id, e2id = site.edges
    _need(e1id in d.edges and e2id in d.edges and e1id != e2id, "need two edges")
    e1, e2 = d.edges[e1id], d.edges[e2id]
    pair = {e1.a, e1.b}
    _need(pair == {e2.a, e2.b} and len(pair) == 2, "edges must be parallel")
    u, v = sorted(pair)
    _need(_spider_kind(d, u) == Z and _spider_kind(d, v) == Z,
          "parallel merge works between green spiders")
    k1 = _oriented_from(d, e1id, u)
    k2 = _oriented_from(d, e2id, u)
    pm = d.p.p
    one = Cyclo.one(d.p)
    if k1.kind != HKIND and k2.kind != HKIND:
        z1 = pm - 1 if k1.kind == PLAIN else k1.weight
        z2 = pm - 1 if k2.kind == PLAIN else k2.weight
        if z1 == z2:
            del d.edges[e2id]
            state.emit(site, one)
        else:
            del d.edges[e1id]
            del d.edges[e2id]
            for t in (u, v):
                nv = d.add_spider(X, 0, 0)
                d.add_edge(nv, t, plain())
            state.emit(site, Cyclo.from_int(d.p, 1, pm))
        return
    if k1.kind == HKIND and k2.kind == HKIND:
        w = (k1.weight + k2.weight) % pm
        del d.edges[e1id]
        del d.edges[e2id]
        if w == 0:
            state.emit(site, Cyclo.from_int(d.p, 1, pm))
        else:
            d.add_edge(u, v, hbox(w))
            state.emit(site, sqrt_p_pow(d.p, -1))
        return
    # one h, one constraint edge
    if k1.kind == HKIND:
        k1, k2 = k2, k1
        e1id, e2id = e2id, e1id
    z = pm - 1 if k1.kind == PLAIN else k1.weight
    w = k2.weight
    del d.edges[e2id]
    d.add_to_phase(u, 0, (-2 * w * z) % pm)
    state.emit(site, sqrt_p_pow(d.p, -1))


def _apply_euler_expand(state: RewriteState, site: RuleSite):
    """Expand an h(w) edge into the chain Z(0,-w) . X(0,-w^{-1}) . Z(0,-w)."""
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.kind.kind == HKIND, "needs an h-edge")
    _need(e.a != e.b, "no self-loops")
    pm = d.p.p
    w = e.kind.weight
    winv = d.p.inv(w)
    u, v = e.a, e.b
    del d.edges[eid]
    z1 = d.add_spider(Z, 0, (-w) % pm)
    xm = d.add_spider(X, 0, (-winv) % pm)
    z2 = d.add_spider(Z, 0, (-w) % pm)
    d.add_edge(u, z1, plain())
    d.add_edge(z1, xm, plain())
    d.add_edge(xm, z2, plain())
    d.add_edge(z2, v, plain())
    g = quadratic_gauss_sum(d.p, (-winv) % pm)
    state.emit(site, sqrt_p_pow(d.p, 1) * g.inverse())


def _apply_euler_contract(state: RewriteState, site: RuleSite):
    """Contract a Z(0,t).X(0,s).Z(0,t) chain with st=1 into an h-edge."""
    d = state.graph
    z1, xm, z2 = site.vertices
    kz1, kx, kz2 = (d.vertices.get(t) for t in (z1, xm, z2))
    _need(all(k is not None for k in (kz1, kx, kz2)), "missing vertices")
    _need(kz1.kind == Z and kz2.kind == Z and kx.kind == X, "chain colours")
    _need(kz1.phase.x == 0 and kz2.phase.x == 0 and kx.phase.x == 0,
          "chain phases must be pure quadratic")
    t = kz1.phase.y
    s = kx.phase.y
    pm = d.p.p
    _need(t == kz2.phase.y and t != 0 and s != 0 and (s * t) % pm == 1,
          "chain labels must satisfy s = t^{-1}")
    for v in (z1, xm, z2):
        _need(len(d.vertex_edges(v)) == 2 and not _self_loops(d, v),
              "chain vertices must have degree 2")
    _need(len(_edges_between(d, z1, xm)) == 1
          and len(_edges_between(d, xm, z2)) == 1, "must be a chain")
    _need(all(d.edges[eid].kind.kind == PLAIN
              for eid in _edges_between(d, z1, xm) + _edges_between(d, xm, z2)),
          "chain edges must be plain")
    w = (-t) % pm  # chain = Z(0,-w) X(0,-w^{-1}) Z(0,-w) for h(w)
    outer = []
    for v in (z1, z2):
        for eid in d.vertex_edges(v):
            e = d.edges[eid]
            if e.other(v) != xm:
                outer.append((e.other(v), _oriented_from(d, eid, v)))
    _need(len(outer) == 2, "chain ends must leave the chain")
    for v in (z1, xm, z2):
        d.remove_vertex(v)
    (u1, ku1), (u2, ku2) = outer
    mid1 = d.add_spider(Z, 0, 0)
    mid2 = d.add_spider(Z, 0, 0)
    d.add_edge(mid1, u1, ku1)
    d.add_edge(mid2, u2, ku2)
    d.add_edge(mid1, mid2, hbox(w))
    g = quadratic_gauss_sum(d.p, s)
    state.emit(site, g * sqrt_p_pow(d.p, -1))


def _apply_pauli_copy(state: RewriteState, site: RuleSite):
    """Push a degree-2 red Pauli through a green spider onto its other legs."""
    d = state.graph
    wv, zv = site.vertices
    kw, kz = d.vertices.get(wv), d.vertices.get(zv)
    _need(kw is not None and kw.kind == X and kw.phase.y == 0,
          "walker must be a red Pauli")
    _need(kz is not None and kz.kind == Z, "target must be green")
    es = d.vertex_edges(wv)
    _need(len(es) == 2 and not _self_loops(d, wv), "walker must have degree 2")
    _need(all(d.edges[eid].kind.kind == PLAIN for eid in es),
          "walker legs must be plain")
    link = [eid for eid in es if d.edges[eid].other(wv) == zv]
    _need(len(link) == 1, "walker must touch the target exactly once")
    _need(not _self_loops(d, zv), "target must have no self-loops")
    far_eid = next(eid for eid in es if eid != link[0])
    far = d.edges[far_eid].other(wv)
    far_kind = _oriented_from(d, far_eid, wv)
    xlab = kw.phase.x
    pm = d.p.p
    s, t = kz.phase.x, kz.phase.y
    # remove walker, wire its far end straight onto the spider
    del d.edges[link[0]]
    del d.edges[far_eid]
    del d.vertices[wv]
    new_edge = d.add_edge(zv, far, far_kind)
    # splice a copy of the walker into every other leg
    for eid in list(d.vertex_edges(zv)):
        if eid == new_edge:
            continue
        _splice_vertex_on_edge(d, eid, X, xlab, 0, zv)
    d.set_phase(zv, Phase((-s - t * xlab) % pm, t))
    half = d.p.half
    expo = (half * (half * s * xlab + half * half * t * xlab * xlab)) % pm
    state.emit(site, omega_pow(d.p, expo))


def _apply_lc_elim(state: RewriteState, site: RuleSite):
    """Remove an internal green spider with invertible quadratic phase.

    The spider must sit in a locally graph-like patch: h-edges only, one
    per neighbour, no self-loops, all neighbours green.  Neighbours pick
    up phases and pairwise h-weight shifts; the exact factor is a Gauss
    sum times sqrt-p bookkeeping for created/deleted edges.
    """
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.kind == Z, "target must be green")
    y = k.phase.y
    _need(y % d.p.p != 0, "needs an invertible quadratic phase")
    _need(not _self_loops(d, v), "no self-loops")
    pm = d.p.p
    nbrs: list[tuple[int, int]] = []
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        u = e.other(v)
        _need(e.kind.kind == HKIND, "legs must be h-edges")
        _need(_spider_kind(d, u) == Z, "neighbours must be green spiders")
        _need(len(_edges_between(d, v, u)) == 1, "single edge per neighbour")
        nbrs.append((u, e.kind.weight))
    x = k.phase.x
    yinv = d.p.inv(y)
    dnum = len(nbrs)
    d.remove_vertex(v)
    for u, e_u in nbrs:
        d.add_to_phase(u, (-yinv * x * e_u) % pm, (-yinv * e_u * e_u) % pm)
    root_shift = 0
    for i in range(dnum):
        for j in range(i + 1, dnum):
            u, e_u = nbrs[i]
            w, e_w = nbrs[j]
            root_shift += _add_h_weight(d, u, w, (-yinv * e_u * e_w) % pm)
    half = d.p.half
    expo = (-(half**3) * yinv * x * x) % pm
    factor = (quadratic_gauss_sum(d.p, y) * omega_pow(d.p, expo)
              * sqrt_p_pow(d.p, root_shift - dnum))
    state.emit(site, factor)


def _apply_pivot_elim(state: RewriteState, site: RuleSite):
    """Remove an adjacent pair of green Pauli spiders in a graph-like patch."""
    d = state.graph
    u, v = site.vertices
    ku, kv = d.vertices.get(u), d.vertices.get(v)
    _need(ku is not None and ku.kind == Z and ku.phase.y == 0,
          "first vertex must be green Pauli")
    _need(kv is not None and kv.kind == Z and kv.phase.y == 0,
          "second vertex must be green Pauli")
    _need(not _self_loops(d, u) and not _self_loops(d, v), "no self-loops")
    link = _edges_between(d, u, v)
    _need(len(link) == 1 and d.edges[link[0]].kind.kind == HKIND,
          "pair must share a single h-edge")
    e = d.edges[link[0]].kind.weight
    pm = d.p.p
    a, c = ku.phase.x, kv.phase.x

    def h_nbrs(t: int, excl: int) -> list[tuple[int, int]]:
        out = []
        for eid in d.vertex_edges(t):
            ed = d.edges[eid]
            w = ed.other(t)
            if w == excl:
                continue
            _need(ed.kind.kind == HKIND, "legs must be h-edges")
            _need(_spider_kind(d, w) == Z, "neighbours must be green")
            _need(len(_edges_between(d, t, w)) == 1, "single edge per neighbour")
            out.append((w, ed.kind.weight))
        return out

    un = h_nbrs(u, v)
    vn = h_nbrs(v, u)
    einv = d.p.inv(e)
    du, dv = len(un) + 1, len(vn) + 1
    d.remove_vertex(u)
    d.remove_vertex(v)
    for q, e_q in un:
        d.add_to_phase(q, (-einv * c * e_q) % pm, 0)
    for q, f_q in vn:
        d.add_to_phase(q, (-einv * a * f_q) % pm, 0)
    root_shift = 0
    for q, e_q in un:
        for r, f_r in vn:
            if q == r:
                d.add_to_phase(q, 0, (-2 * einv * e_q * f_r) % pm)
            else:
                root_shift += _add_h_weight(d, q, r, (-einv * e_q * f_r) % pm)
    half = d.p.half
    expo = (-(half**2) * einv * a * c) % pm
    factor = (omega_pow(d.p, expo)
              * sqrt_p_pow(d.p, 2 + root_shift - (du + dv - 1)))
    state.emit(site, factor)


def _apply_state_flip(state: RewriteState, site: RuleSite):
    """Swap a degree-1 spider between colours when its quadratic part is
    invertible: Z(x,y) state = scalar * X(-y^{-1}x, -y^{-1}) state."""
    d = state.graph
    (v,) = site.vertices
    k = d.vertices.get(v)
    _need(k is not None and k.is_spider(), "needs a spider")
    _need(len(d.vertex_edges(v)) == 1 and not _self_loops(d, v),
          "needs a degree-1 spider")
    y = k.phase.y
    _need(y % d.p.p != 0, "quadratic part must be invertible")
    pm = d.p.p
    x = k.phase.x
    yinv = d.p.inv(y)
    half = d.p.half
    if k.kind == Z:
        # Z(x,y) = sqrt(p) w^{2^{-3} yt^{-1} xt^2} / G(yt) * X(xt, yt)
        nx, ny = (-yinv * x) % pm, (-yinv) % pm
        d.vertices[v] = VertexKind(X, Phase(nx, ny))
        g = quadratic_gauss_sum(d.p, ny)
        expo = ((half**3) * d.p.inv(ny) * nx * nx) % pm
        factor = sqrt_p_pow(d.p, 1) * omega_pow(d.p, expo) * g.inverse()
    else:
        # X(x,y) = G(y) w^{-2^{-3} y^{-1} x^2} / sqrt(p) * Z(y^{-1}x, -y^{-1})
        nx, ny = (yinv * x) % pm, (-yinv) % pm
        d.vertices[v] = VertexKind(Z, Phase(nx, ny))
        g = quadratic_gauss_sum(d.p, y)
        expo = (-(half**3) * yinv * x * x) % pm
        factor = sqrt_p_pow(d.p, -1) * omega_pow(d.p, expo) * g
    state.emit(site, factor)


def _apply_mul_flip(state: RewriteState, site: RuleSite):
    """Reverse a multiplier's orientation, inverting its label.  Exact."""
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.kind.kind == MULKIND, "needs a multiplier edge")
    d.edges[eid] = Edge(e.b, e.a, mul(d.p.inv(e.kind.weight)))
    state.emit(site, Cyclo.one(d.p))


def _apply_mul_split(state: RewriteState, site: RuleSite):
    """Decompose mul(z) into h(z) then h(1) through a fresh green identity."""
    d = state.graph
    (eid,) = site.edges
    e = d.edges.get(eid)
    _need(e is not None and e.kind.kind == MULKIND, "needs a multiplier edge")
    _need(e.a != e.b, "no self-loops")
    z = e.kind.weight
    u, v = e.a, e.b
    del d.edges[eid]
    t = d.add_spider(Z)
    d.add_edge(u, t, hbox(z))
    d.add_edge(t, v, hbox(1))
    state.emit(site, Cyclo.one(d.p))


# --------------------------------------------------------------------------
# matchers (deterministic: sorted by ids)


def match_fusion(d: Diagram) -> list[RuleSite]:
    sites = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.a == e.b:
            continue
        ka, kb = _spider_kind(d, e.a), _spider_kind(d, e.b)
        if ka == kb == Z and e.kind.kind == PLAIN:
            sites.append(RuleSite("fusion", (e.a, e.b), (eid,)))
        elif ka == kb == X and e.kind.kind == MULKIND and e.kind.weight == 1:
            sites.append(RuleSite("fusion", (e.a, e.b), (eid,)))
    return sites


def match_g_elim(d: Diagram) -> list[RuleSite]:
    sites = []
    for v in sorted(d.spider_ids()):
        k = d.vertices[v]
        if (k.kind == Z and k.phase.is_zero() and len(d.vertex_edges(v)) == 2
                and not _self_loops(d, v)):
            sites.append(RuleSite("g_elim", (v,)))
    return sites


def match_r_elim(d: Diagram) -> list[RuleSite]:
    sites = []
    for v in sorted(d.spider_ids()):
        k = d.vertices[v]
        if (k.kind == X and k.phase.is_zero() and len(d.vertex_edges(v)) == 2
                and not _self_loops(d, v)):
            sites.append(RuleSite("r_elim", (v,)))
    return sites


def match_loops(d: Diagram) -> list[RuleSite]:
    sites = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.a != e.b or _spider_kind(d, e.a) != Z:
            continue
        if e.kind.kind == PLAIN:
            sites.append(RuleSite("plain_loop", (e.a,), (eid,)))
        elif e.kind.kind == HKIND:
            sites.append(RuleSite("h_loop", (e.a,), (eid,)))
        else:
            sites.append(RuleSite("mul_loop", (e.a,), (eid,)))
    return sites


def match_gauss(d: Diagram) -> list[RuleSite]:
    return [RuleSite("gauss", (v,)) for v in sorted(d.spider_ids())
            if not d.vertex_edges(v)]


def match_parallel_merge(d: Diagram) -> list[RuleSite]:
    seen = {}
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.a == e.b:
            continue
        if _spider_kind(d, e.a) == Z and _spider_kind(d, e.b) == Z:
            seen.setdefault(frozenset((e.a, e.b)), []).append(eid)
    sites = []
    for _, eids in sorted(seen.items(), key=lambda kv: kv[1][0]):
        if len(eids) >= 2:
            sites.append(RuleSite("parallel_merge", (), (eids[0], eids[1])))
    return sites


def match_colour_flip(d: Diagram) -> list[RuleSite]:
    return [RuleSite("colour_flip", (v,)) for v in sorted(d.spider_ids())]


def match_mul_spider(d: Diagram) -> list[RuleSite]:
    sites = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.kind.kind != MULKIND or e.a == e.b:
            continue
        for v in (e.a, e.b):
            if _spider_kind(d, v) == Z:
                sites.append(RuleSite("mul_spider", (v,), (eid,)))
                break
    return sites


def match_m_elim(d: Diagram) -> list[RuleSite]:
    sites = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.kind.kind != MULKIND or e.a == e.b:
            continue
        for v in (e.a, e.b):
            if (_spider_kind(d, v) == X and d.vertex_edges(v) == [eid]):
                sites.append(RuleSite("m_elim", (v,), (eid,)))
    return sites


def match_lc_elim(d: Diagram, internal_only: set[int] | None = None) -> list[RuleSite]:
    sites = []
    for v in sorted(d.spider_ids()):
        k = d.vertices[v]
        if k.kind != Z or k.phase.y % d.p.p == 0 or _self_loops(d, v):
            continue
        if internal_only is not None and v not in internal_only:
            continue
        ok = True
        for eid in d.vertex_edges(v):
            e = d.edges[eid]
            u = e.other(v)
            if (e.kind.kind != HKIND or _spider_kind(d, u) != Z
                    or len(_edges_between(d, v, u)) != 1):
                ok = False
                break
        if ok:
            sites.append(RuleSite("lc_elim", (v,)))
    return sites


def match_char_collapse(d: Diagram) -> list[RuleSite]:
    sites = []
    done = set()
    for eid in sorted(d.edges):
        e = d.edges[eid]
        key = frozenset((e.a, e.b))
        if e.a == e.b or key in done:
            continue
        done.add(key)
        if {_spider_kind(d, e.a), _spider_kind(d, e.b)} != {Z, X}:
            continue
        plains = [i for i in _edges_between(d, e.a, e.b)
                  if d.edges[i].kind.kind == PLAIN]
        if len(plains) >= d.p.p:
            u, v = sorted((e.a, e.b))
            sites.append(RuleSite("char_collapse", (u, v)))
    return sites


def match_hopf(d: Diagram) -> list[RuleSite]:
    sites = []
    done = set()
    for eid in sorted(d.edges):
        e = d.edges[eid]
        key = frozenset((e.a, e.b))
        if e.a == e.b or key in done:
            continue
        done.add(key)
        if {_spider_kind(d, e.a), _spider_kind(d, e.b)} != {Z, X}:
            continue
        es = _edges_between(d, e.a, e.b)
        plains = [i for i in es if d.edges[i].kind.kind == PLAIN]
        antis = [i for i in es if d.edges[i].kind.kind == MULKIND
                 and d.edges[i].kind.weight == 1]
        if plains and antis:
            u, v = sorted((e.a, e.b))
            sites.append(RuleSite("hopf", (u, v)))
    return sites


_MATCHERS: dict[str, Callable[[Diagram], list[RuleSite]]] = {
    "fusion": match_fusion,
    "g_elim": match_g_elim,
    "r_elim": match_r_elim,
    "gauss": match_gauss,
    "parallel_merge": match_parallel_merge,
    "colour_flip": match_colour_flip,
    "mul_spider": match_mul_spider,
    "m_elim": match_m_elim,
    "lc_elim": match_lc_elim,
    "char_collapse": match_char_collapse,
    "hopf": match_hopf,
}


def match(d: Diagram, rule: str) -> list[RuleSite]:
    """All sites where `rule` applies; loop rules share the `loops` matcher."""
    if rule in ("plain_loop", "h_loop", "mul_loop"):
        return [s for s in match_loops(d) if s.rule == rule]
    if rule in _MATCHERS:
        return _MATCHERS[rule](d)
    return []


# --------------------------------------------------------------------------
# whole-diagram colour change


def boundary_plain_normalize(state: RewriteState):
    """Ensure every boundary attaches to a spider through a plain wire.

    Decorated or spider-free boundary wires get identity spiders spliced
    in; exact, no scalar.
    """
    d = state.graph
    for b in list(d.inputs) + list(d.outputs):
        eid = d.vertex_edges(b)[0]
        e = d.edges[eid]
        other = e.other(b)
        if d.vertices[other].is_spider() and e.kind.kind == PLAIN:
            continue
        _splice_vertex_on_edge(d, eid, Z, 0, 0, b)


def colour_change_meta(d: Diagram) -> Diagram:
    """The global colour-swap transform S.

    Swaps the colour of every spider, negates the Pauli label of the
    originally-green ones, and rewrites internal edges by
    plain -> mul(1), h(w) -> h(-w^{-1}), mul(z) -> mul(-z^{-1}); boundary
    wires keep their decoration.  Satisfies
    interp(S(A)) = H^{x m} . interp(A) . H^{x n} exactly.
    """
    st = RewriteState(d.copy())
    boundary_plain_normalize(st)
    out = st.graph
    pm = out.p.p
    boundary = {v for v, k in out.vertices.items() if k.is_boundary()}
    for v, k in list(out.vertices.items()):
        if not k.is_spider():
            continue
        if k.kind == Z:
            out.vertices[v] = VertexKind(X, Phase((-k.phase.x) % pm, k.phase.y))
        else:
            out.vertices[v] = VertexKind(Z, k.phase)
    for eid, e in list(out.edges.items()):
        if e.a in boundary or e.b in boundary:
            continue
        k = e.kind
        if k.kind == PLAIN:
            nk = mul(1)
        elif k.kind == HKIND:
            nk = hbox((-out.p.inv(k.weight)) % pm)
        else:
            nk = mul((-out.p.inv(k.weight)) % pm)
        out.edges[eid] = Edge(e.a, e.b, kind_reduce(nk, out.p))
    return out


# --------------------------------------------------------------------------
# registry, dispatch, instance generators


@dataclass
class Rule:
    name: str
    apply: Callable[[RewriteState, RuleSite], None]
    instance: Callable[[Prime, random.Random], tuple[Diagram, RuleSite]]
    doc: str = ""


def _rand_phase(pm: int, rng: random.Random) -> tuple[int, int]:
    return rng.randrange(pm), rng.randrange(pm)


def _legs(pm: int, rng: random.Random, lo: int, hi: int) -> int:
    """Random leg count, capped for larger primes to keep checks fast."""
    if pm >= 7:
        hi = min(hi, lo + 1)
    return rng.randrange(lo, hi)


def _decorate_host(d: Diagram, rng: random.Random,
                   protect_edges: tuple[int, ...] = (),
                   protect_vertices: tuple[int, ...] = ()):
    """Attach random single-wire Clifford clutter to the open boundaries.

    Boundary wires belonging to the rule pattern itself are left alone.
    """
    pm = d.p.p
    for b in list(d.inputs) + list(d.outputs):
        eid = d.vertex_edges(b)[0]
        if eid in protect_edges:
            continue
        e = d.edges[eid]
        if e.other(b) in protect_vertices:
            continue
        roll = rng.random()
        if roll < 0.3:
            x, y = _rand_phase(pm, rng)
            _splice_vertex_on_edge(d, eid, rng.choice([Z, X]), x, y, b)
        elif roll < 0.45:
            kind = rng.choice([hbox(1 + rng.randrange(pm - 1)),
                               mul(1 + rng.randrange(pm - 1))])
            d.edges[eid] = Edge(e.a, e.b, kind_compose(kind, e.kind, d.p))


def _leggy(p: Prime, rng: random.Random, colour: str, x: int, y: int,
           nlegs: int) -> tuple[Diagram, int]:
    """A spider with nlegs boundary legs, for embedding patterns."""
    d = Diagram(p)
    v = d.add_spider(colour, x, y)
    for _ in range(nlegs):
        b = d.add_output()
        d.add_edge(v, b)
    return d, v


def _inst_fusion(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    colour = rng.choice([Z, X])
    u = d.add_spider(colour, *_rand_phase(pm, rng))
    v = d.add_spider(colour, *_rand_phase(pm, rng))
    eid = d.add_edge(u, v, plain() if colour == Z else mul(1))
    for t, n in ((u, _legs(pm, rng, 0, 3)), (v, _legs(pm, rng, 0, 3))):
        for _ in range(n):
            b = d.add_output()
            kind = rng.choice([plain(), hbox(1 + rng.randrange(pm - 1)),
                               mul(1 + rng.randrange(pm - 1))])
            d.add_edge(t, b, kind)
    if rng.random() < 0.3:
        d.add_edge(u, v, hbox(1 + rng.randrange(pm - 1)))
    _decorate_host(d, rng)
    return d, RuleSite("fusion", (u, v), (eid,))


def _inst_colour_flip(p: Prime, rng: random.Random):
    pm = p.p
    d, v = _leggy(p, rng, rng.choice([Z, X]), *_rand_phase(pm, rng),
                  nlegs=_legs(pm, rng, 1, 4))
    if rng.random() < 0.4:
        d.add_edge(v, v, rng.choice([hbox(1 + rng.randrange(pm - 1)), plain()]))
    _decorate_host(d, rng)
    return d, RuleSite("colour_flip", (v,))


def _inst_identity_elim(p: Prime, rng: random.Random, colour: str):
    pm = p.p
    d = Diagram(p)
    v = d.add_spider(colour, 0, 0)
    b1, b2 = d.add_input(), d.add_output()
    k1 = rng.choice([plain(), hbox(1 + rng.randrange(pm - 1)),
                     mul(1 + rng.randrange(pm - 1))])
    k2 = rng.choice([plain(), hbox(1 + rng.randrange(pm - 1)),
                     mul(1 + rng.randrange(pm - 1))])
    d.add_edge(b1, v, k1)
    d.add_edge(v, b2, k2)
    _decorate_host(d, rng)
    return d, RuleSite("g_elim" if colour == Z else "r_elim", (v,))


def _inst_shear(p: Prime, rng: random.Random):
    pm = p.p
    a = rng.randrange(pm)
    c, dd = _rand_phase(pm, rng)
    d = Diagram(p)
    b1, b2 = d.add_input(), d.add_output()
    z1 = d.add_spider(Z, a, 0)
    xv = d.add_spider(X, c, dd)
    z2 = d.add_spider(Z, a, 0)
    d.add_edge(b1, z1)
    d.add_edge(z1, xv)
    d.add_edge(xv, z2)
    d.add_edge(z2, b2)
    _decorate_host(d, rng)
    return d, RuleSite("shear", (z1, xv, z2))


def _inst_char(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    u = d.add_spider(X, *_rand_phase(pm, rng))
    v = d.add_spider(Z, *_rand_phase(pm, rng))
    for _ in range(pm):
        d.add_edge(u, v)
    for t in (u, v):
        for _ in range(rng.randrange(1, 3)):
            b = d.add_output()
            d.add_edge(t, b)
    _decorate_host(d, rng)
    return d, RuleSite("char_collapse", tuple(sorted((u, v))))


def _inst_hopf(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    u = d.add_spider(X, *_rand_phase(pm, rng))
    v = d.add_spider(Z, *_rand_phase(pm, rng))
    d.add_edge(u, v, plain())
    d.add_edge(u, v, mul(1))
    for t in (u, v):
        for _ in range(rng.randrange(1, 3)):
            b = d.add_output()
            d.add_edge(t, b)
    _decorate_host(d, rng)
    return d, RuleSite("hopf", tuple(sorted((u, v))))


def _inst_bigebra(p: Prime, rng: random.Random):
    m, n = _legs(p.p, rng, 1, 4), _legs(p.p, rng, 1, 4)
    d = Diagram(p)
    greens = [d.add_spider(Z) for _ in range(m)]
    reds = [d.add_spider(X) for _ in range(n)]
    for g in greens:
        for r in reds:
            d.add_edge(g, r)
    for g in greens:
        b = d.add_input()
        d.add_edge(b, g)
    for r in reds:
        b = d.add_output()
        d.add_edge(r, b)
    _decorate_host(d, rng)
    return d, RuleSite("bigebra", params={"greens": tuple(greens),
                                          "reds": tuple(reds)})


def _inst_copy(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    zv = d.add_spider(Z, rng.randrange(pm), rng.randrange(pm))
    sv = d.add_spider(X, rng.randrange(pm), 0)
    d.add_edge(sv, zv)
    for _ in range(_legs(pm, rng, 1, 4)):
        b = d.add_output()
        kind = rng.choice([plain(), hbox(1 + rng.randrange(pm - 1)),
                           mul(1 + rng.randrange(pm - 1))])
        d.add_edge(zv, b, kind)
    _decorate_host(d, rng)
    return d, RuleSite("copy", (sv, zv))


def _inst_gauss(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    if rng.random() < 0.15:
        v = d.add_spider(rng.choice([Z, X]), 1 + rng.randrange(pm - 1), 0)
    else:
        v = d.add_spider(rng.choice([Z, X]), rng.randrange(pm),
                         1 + rng.randrange(pm - 1))
    w = d.add_spider(Z, *_rand_phase(pm, rng))
    b = d.add_output()
    d.add_edge(w, b)
    return d, RuleSite("gauss", (v,))


def _inst_star(p: Prime, rng: random.Random):
    d = Diagram(p)
    d.add_star()
    b = d.add_output()
    v = d.add_spider(Z, *_rand_phase(p.p, rng))
    d.add_edge(v, b)
    return d, RuleSite("star_absorb")


def _inst_m_elim(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    v = d.add_spider(X, rng.randrange(pm), rng.randrange(pm))
    b = d.add_output()
    z = 1 + rng.randrange(max(pm - 2, 1))
    if rng.random() < 0.5:
        eid = d.add_edge(b, v, mul(z))
    else:
        eid = d.add_edge(v, b, mul(z))
    _decorate_host(d, rng, protect_edges=(eid,))
    return d, RuleSite("m_elim", (v,), (eid,))


def _inst_mul_spider(p: Prime, rng: random.Random):
    pm = p.p
    d, v = _leggy(p, rng, Z, *_rand_phase(pm, rng), nlegs=_legs(pm, rng, 1, 4))
    b = d.add_output()
    z = 1 + rng.randrange(max(pm - 2, 1))
    if rng.random() < 0.5:
        eid = d.add_edge(v, b, mul(z))
    else:
        eid = d.add_edge(b, v, mul(z))
    _decorate_host(d, rng, protect_edges=(eid,))
    return d, RuleSite("mul_spider", (v,), (eid,))


def _inst_antipode_spider(p: Prime, rng: random.Random):
    d, v = _leggy(p, rng, Z, *_rand_phase(p.p, rng),
                  nlegs=_legs(p.p, rng, 1, 4))
    _decorate_host(d, rng)
    return d, RuleSite("antipode_spider", (v,))


def _inst_loop(p: Prime, rng: random.Random, which: str):
    pm = p.p
    d, v = _leggy(p, rng, Z, *_rand_phase(pm, rng), nlegs=rng.randrange(1, 3))
    if which == "plain_loop":
        eid = d.add_edge(v, v, plain())
    elif which == "h_loop":
        eid = d.add_edge(v, v, hbox(1 + rng.randrange(pm - 1)))
    else:
        z = 1 + rng.randrange(pm - 1)
        if z == pm - 1:
            z = 1
        eid = d.add_edge(v, v, mul(z))
    _decorate_host(d, rng)
    return d, RuleSite(which, (v,), (eid,))


def _inst_parallel(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    u = d.add_spider(Z, *_rand_phase(pm, rng))
    v = d.add_spider(Z, *_rand_phase(pm, rng))
    kinds = [plain(), hbox(1 + rng.randrange(pm - 1)),
             mul(1 + rng.randrange(pm - 1))]
    e1 = d.add_edge(u, v, rng.choice(kinds))
    e2 = d.add_edge(u, v, rng.choice(kinds))
    for t in (u, v):
        for _ in range(rng.randrange(1, 3)):
            b = d.add_output()
            d.add_edge(t, b)
    _decorate_host(d, rng)
    return d, RuleSite("parallel_merge", (), (e1, e2))


def _inst_euler_expand(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    b1, b2 = d.add_input(), d.add_output()
    eid = d.add_edge(b1, b2, hbox(1 + rng.randrange(pm - 1)))
    _decorate_host(d, rng, protect_edges=(eid,))
    return d, RuleSite("euler_expand", (), (eid,))


def _inst_euler_contract(p: Prime, rng: random.Random):
    pm = p.p
    t = 1 + rng.randrange(pm - 1)
    s = p.inv(t)
    d = Diagram(p)
    b1, b2 = d.add_input(), d.add_output()
    z1 = d.add_spider(Z, 0, t)
    xm = d.add_spider(X, 0, s)
    z2 = d.add_spider(Z, 0, t)
    d.add_edge(b1, z1)
    d.add_edge(z1, xm)
    d.add_edge(xm, z2)
    d.add_edge(z2, b2)
    _decorate_host(d, rng)
    return d, RuleSite("euler_contract", (z1, xm, z2))


def _inst_pauli_copy(p: Prime, rng: random.Random):
    pm = p.p
    d, zv = _leggy(p, rng, Z, *_rand_phase(pm, rng),
                   nlegs=_legs(pm, rng, 1, 4))
    b = d.add_output()
    wv = d.add_spider(X, rng.randrange(pm), 0)
    d.add_edge(zv, wv)
    d.add_edge(wv, b)
    _decorate_host(d, rng, protect_vertices=(wv,))
    return d, RuleSite("pauli_copy", (wv, zv))


def _inst_lc_elim(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    v = d.add_spider(Z, rng.randrange(pm), 1 + rng.randrange(pm - 1))
    nbrs = []
    for _ in range(_legs(pm, rng, 0, 4)):
        u = d.add_spider(Z, *_rand_phase(pm, rng))
        b = d.add_output()
        d.add_edge(u, b)
        d.add_edge(v, u, hbox(1 + rng.randrange(pm - 1)))
        nbrs.append(u)
    for i in range(len(nbrs)):
        for j in range(i + 1, len(nbrs)):
            if rng.random() < 0.4:
                d.add_edge(nbrs[i], nbrs[j], hbox(1 + rng.randrange(pm - 1)))
    return d, RuleSite("lc_elim", (v,))


def _inst_pivot_elim(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    u = d.add_spider(Z, rng.randrange(pm), 0)
    v = d.add_spider(Z, rng.randrange(pm), 0)
    d.add_edge(u, v, hbox(1 + rng.randrange(pm - 1)))
    pool = []
    for _ in range(rng.randrange(0, 3)):
        q = d.add_spider(Z, *_rand_phase(pm, rng))
        b = d.add_output()
        d.add_edge(q, b)
        pool.append(q)
    for q in pool:
        wired = False
        if rng.random() < 0.8:
            d.add_edge(u, q, hbox(1 + rng.randrange(pm - 1)))
            wired = True
        if rng.random() < 0.8 or not wired:
            d.add_edge(v, q, hbox(1 + rng.randrange(pm - 1)))
    for i in range(len(pool)):
        for j in range(i + 1, len(pool)):
            if rng.random() < 0.3:
                d.add_edge(pool[i], pool[j], hbox(1 + rng.randrange(pm - 1)))
    return d, RuleSite("pivot_elim", (u, v))


def _inst_state_flip(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    v = d.add_spider(rng.choice([Z, X]), rng.randrange(pm),
                     1 + rng.randrange(pm - 1))
    b = d.add_output()
    kind = rng.choice([plain(), hbox(1 + rng.randrange(pm - 1)),
                       mul(1 + rng.randrange(pm - 1))])
    d.add_edge(v, b, kind)
    _decorate_host(d, rng)
    return d, RuleSite("state_flip", (v,))


def _inst_mul_flip(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    b1, b2 = d.add_input(), d.add_output()
    eid = d.add_edge(b1, b2, mul(1 + rng.randrange(max(pm - 2, 1))))
    _decorate_host(d, rng, protect_edges=(eid,))
    return d, RuleSite("mul_flip", (), (eid,))


def _inst_mul_split(p: Prime, rng: random.Random):
    pm = p.p
    d = Diagram(p)
    b1, b2 = d.add_input(), d.add_output()
    eid = d.add_edge(b1, b2, mul(1 + rng.randrange(max(pm - 2, 1))))
    _decorate_host(d, rng, protect_edges=(eid,))
    return d, RuleSite("mul_split", (), (eid,))


RULES: dict[str, Rule] = {
    "fusion": Rule("fusion", _apply_fusion, _inst_fusion,
                   "same-colour spiders merge; phases add"),
    "colour_flip": Rule("colour_flip", _apply_colour_flip, _inst_colour_flip,
                        "swap a spider's colour, Hadamards onto its legs"),
    "g_elim": Rule("g_elim", _apply_g_elim,
                   lambda p, r: _inst_identity_elim(p, r, Z),
                   "remove identity green spiders of degree 2"),
    "r_elim": Rule("r_elim", _apply_r_elim,
                   lambda p, r: _inst_identity_elim(p, r, X),
                   "remove antipode vertices of degree 2"),
    "shear": Rule("shear", _apply_shear, _inst_shear,
                  "commute green Pauli phases through a red phase"),
    "char_collapse": Rule("char_collapse", _apply_char_collapse, _inst_char,
                          "p parallel plain edges between colours vanish"),
    "hopf": Rule("hopf", _apply_hopf, _inst_hopf,
                 "plain + antipode edge pair between colours disconnects"),
    "bigebra": Rule("bigebra", _apply_bigebra, _inst_bigebra,
                    "complete bipartite wall contracts to a single pair"),
    "copy": Rule("copy", _apply_copy, _inst_copy,
                 "red Pauli states copy through green spiders"),
    "gauss": Rule("gauss", _apply_gauss, _inst_gauss,
                  "isolated spiders evaluate to Gauss sums"),
    "star_absorb": Rule("star_absorb", _apply_star_absorb, _inst_star,
                        "the star generator is the scalar -1"),
    "m_elim": Rule("m_elim", _apply_m_elim, _inst_m_elim,
                   "multipliers absorb into degree-1 red spiders"),
    "mul_spider": Rule("mul_spider", _apply_mul_spider, _inst_mul_spider,
                       "multipliers push through green spiders"),
    "antipode_spider": Rule("antipode_spider", _apply_antipode_spider,
                            _inst_antipode_spider,
                            "negate a green spider's variable"),
    "plain_loop": Rule("plain_loop", _apply_plain_loop,
                       lambda p, r: _inst_loop(p, r, "plain_loop"),
                       "plain self-loops vanish"),
    "h_loop": Rule("h_loop", _apply_h_loop,
                   lambda p, r: _inst_loop(p, r, "h_loop"),
                   "h self-loops fold into the quadratic phase"),
    "mul_loop": Rule("mul_loop", _apply_mul_loop,
                     lambda p, r: _inst_loop(p, r, "mul_loop"),
                     "mul self-loops pin the spider to zero"),
    "parallel_merge": Rule("parallel_merge", _apply_parallel_merge,
                           _inst_parallel,
                           "parallel edges between green spiders merge"),
    "euler_expand": Rule("euler_expand", _apply_euler_expand,
                         _inst_euler_expand,
                         "h-edges expand into phase chains"),
    "euler_contract": Rule("euler_contract", _apply_euler_contract,
                           _inst_euler_contract,
                           "phase chains contract to h-edges"),
    "pauli_copy": Rule("pauli_copy", _apply_pauli_copy, _inst_pauli_copy,
                       "red Pauli operators copy through green spiders"),
    "lc_elim": Rule("lc_elim", _apply_lc_elim, _inst_lc_elim,
                    "local-complementation elimination of a vertex"),
    "pivot_elim": Rule("pivot_elim", _apply_pivot_elim, _inst_pivot_elim,
                       "pivot elimination of a Pauli pair"),
    "state_flip": Rule("state_flip", _apply_state_flip, _inst_state_flip,
                       "degree-1 spiders change colour via Gauss sums"),
    "mul_flip": Rule("mul_flip", _apply_mul_flip, _inst_mul_flip,
                     "reverse a multiplier, inverting its label"),
    "mul_split": Rule("mul_split", _apply_mul_split, _inst_mul_split,
                      "decompose a multiplier into two h-edges"),
}


def apply(state: RewriteState, site: RuleSite) -> RewriteState:
    """Apply one rule at a named site, updating the scalar accumulator.

    Mutates and returns `state` (states are single-owner).  Raises
    RuleError if the site does not match the rule's pattern.
    """
    rule = RULES.get(site.rule)
    if rule is None:
        raise RuleError(f"unknown rule {site.rule!r}")
    rule.apply(state, site)
    return state


# --------------------------------------------------------------------------
# strategies


def simplify(state: RewriteState, strategy: str = "fuse") -> RewriteState:
    """Run a terminating rewrite strategy in place.

    - 'fuse': fusion, identity/loop/parallel cleanup, isolated absorption.
    - 'green': first flip every red spider, then 'fuse'.

    Each pass strictly shrinks (vertices, then edges), so this terminates.
    """
    if strategy not in ("fuse", "green"):
        raise RuleError(f"unknown strategy {strategy!r}")
    d = state.graph
    if strategy == "green":
        for s in match_colour_flip(d):
            if d.vertices[s.vertices[0]].kind == X:
                apply(state, s)
    progress = True
    order = ["plain_loop", "h_loop", "mul_loop", "fusion", "parallel_merge",
             "g_elim", "gauss"]
    while progress:
        progress = False
        for name in order:
            sites = match(d, name)
            while sites:
                apply(state, sites[0])
                progress = True
                sites = match(d, name)
    return state


# --------------------------------------------------------------------------
# random Clifford diagrams and calibration


def random_clifford_diagram(p: Prime, wires: int, depth: int,
                            seed: int) -> Diagram:
    """A random stabiliser diagram built from the Clifford gate set.

    Layers are sampled from single-wire phases, Hadamard boxes,
    multipliers, two-wire entangling h-edges, cups/caps (which change the
    wire count transiently) and the star; deterministic in `seed`.
    """
    from .diagram import compose as d_compose, e_gate, h_gate, mul_gate, \
        identity_diagram, spider as d_spider, tensor as d_tensor

    rng = random.Random(seed)
    pm = p.p
    d = identity_diagram(p, wires)
    for _ in range(depth):
        kind = rng.randrange(7)
        if kind == 0:
            layer = [d_spider(p, rng.choice([Z, X]), 1, 1, rng.randrange(pm),
                              rng.randrange(pm))]
            layer += [identity_diagram(p, 1) for _ in range(wires - 1)]
            rng.shuffle(layer)
            gate = layer[0]
            for g in layer[1:]:
                gate = d_tensor(gate, g)
        elif kind == 1:
            w = rng.randrange(wires)
            gate = identity_diagram(p, 0)
            for i in range(wires):
                g = h_gate(p, 1 + rng.randrange(pm - 1)) if i == w \
                    else identity_diagram(p, 1)
                gate = d_tensor(gate, g)
        elif kind == 2:
            w = rng.randrange(wires)
            gate = identity_diagram(p, 0)
            for i in range(wires):
                g = mul_gate(p, 1 + rng.randrange(pm - 1)) if i == w \
                    else identity_diagram(p, 1)
                gate = d_tensor(gate, g)
        elif kind == 3 and wires >= 2:
            a = rng.randrange(wires - 1)
            gate = identity_diagram(p, a)
            gate = d_tensor(gate, e_gate(p, 1 + rng.randrange(pm - 1)))
            gate = d_tensor(gate, identity_diagram(p, wires - a - 2))
        elif kind == 4:
            gate = identity_diagram(p, wires)
            gate.add_star()
        elif kind == 5:
            # basis effect then fresh state on one wire: |x><y| insertion
            w = rng.randrange(wires)
            gate = identity_diagram(p, 0)
            for i in range(wires):
                if i == w:
                    g = d_spider(p, X, 1, 0, 2 * rng.randrange(pm), 0)
                    g = d_compose(g, d_spider(p, X, 0, 1, 2 * rng.randrange(pm), 0))
                else:
                    g = identity_diagram(p, 1)
                gate = d_tensor(gate, g)
        else:
            gate = identity_diagram(p, wires)
        d = d_compose(d, gate)
    return d


class CalibrationError(AssertionError):
    pass


def check_rule_once(name: str, p: Prime, rng: random.Random) -> None:
    """One randomized exactness check: scalar * interp is preserved."""
    from ._tensor import factors_equal
    from .interp import interp_factor

    rule = RULES[name]
    d, site = rule.instance(p, rng)
    state = RewriteState(d.copy())
    before = interp_factor(d, state.scalar)
    apply(state, site)
    after = interp_factor(state.graph, state.scalar)
    if not factors_equal(before, after):
        raise CalibrationError(
            f"rule {name} broke the semantic invariant on p={p.p}; "
            f"site={site}, diagram={d!r}"
        )


def calibrate(rules: list[str] | None = None,
              p_values: tuple[int, ...] = (3, 5),
              trials: int = 20, seed: int = 0) -> dict[str, int]:
    """Randomised exact-soundness verification of the rule catalogue.

    Raises CalibrationError with the offending instance on any failure;
    returns per-rule pass counts otherwise.
    """
    from .modp import prime as mk

    names = sorted(RULES) if rules is None else rules
    counts: dict[str, int] = {}
    for name in names:
        rng = random.Random(seed ^ hash(name) & 0xFFFF)
        n = 0
        for pv in p_values:
            for _ in range(trials):
                check_rule_once(name, mk(pv), rng)
                n += 1
        counts[name] = n
    return counts


# default rule mix for random sound-rewrite walks: excludes the two
# eliminations that densify graphs (they are exercised separately) and the
# star rule (only applicable once).
WALK_RULES = [
    "fusion", "colour_flip", "g_elim", "r_elim", "gauss", "parallel_merge",
    "mul_spider", "m_elim", "char_collapse", "hopf",
    "plain_loop", "h_loop", "mul_loop",
]


def random_sound_rewrites(state: RewriteState, steps: int, seed: int,
                          rules: list[str] | None = None) -> RewriteState:
    """Apply `steps` randomly chosen applicable rules from the catalogue.

    Also mixes in the always-applicable growth moves (variable negation,
    Euler expansion, multiplier splitting) so walks do not just shrink.
    Deterministic in `seed`; preserves scalar * interp exactly.
    """
    rng = random.Random(seed)
    names = list(WALK_RULES if rules is None else rules)
    d = state.graph
    for _ in range(steps):
        rng.shuffle(names)
        applied = False
        for name in names:
            sites = match(d, name)
            if sites:
                apply(state, rng.choice(sites))
                applied = True
                break
        if not applied:
            # growth moves
            spiders = sorted(d.spider_ids())
            if spiders and rng.random() < 0.6:
                apply(state, RuleSite("antipode_spider",
                                      (rng.choice(spiders),)))
            else:
                hs = [eid for eid, e in sorted(d.edges.items())
                      if e.kind.kind == HKIND and e.a != e.b]
                if hs:
                    apply(state, RuleSite("euler_expand", (),
                                          (rng.choice(hs),)))
    return state
