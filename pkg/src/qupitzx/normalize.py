"""Normal forms and the equality decision procedure.

The pipeline mirrors the completeness argument for the stabiliser
fragment: any state rewrites to a graph state with single-qupit Clifford
vertex operators on its outputs (GS+LC), the operators reduce to a small
set R with no two adjacent "marked" ones (rGS+LC), and equality of two
diagrams is decided by unbuilding one diagram's form from both and
comparing the resulting product states wire by wire, together with the
exact scalars.  Every step preserves ``scalar * interp`` exactly, so the
whole pipeline is oracle-checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

from .c1 import (
    C1Element,
    C1Error,
    C1NormalForm,
    GreenPhase,
    HBox,
    Multiplier,
    RedPhase,
    _pauli_xz,
    c1_normalize,
    c1_normalize_matrix,
    clifford_inverse,
    element_matrix,
    symplectic_of_matrix,
    word_inverse,
    word_matrix,
)
from .cyclo import Cyclo, CycloMatrix, i_pow, omega_pow, sqrt_p_pow
from .diagram import (
    BOUNDARY_IN,
    BOUNDARY_OUT,
    Diagram,
    DiagramError,
    Edge,
    HKIND,
    MULKIND,
    PLAIN,
    Phase,
    VertexKind,
    X,
    Z,
    choi,
    compose,
    hbox,
    identity_diagram,
    mul,
    plain,
    spider,
)
from .graphstate import WeightedGraph, absorb_red_gadget, splice_gadget, to_diagram
from .interp import interp, interp_scalar
from .modp import ModError, Prime, prime
from .rules import (
    RewriteState,
    RuleError,
    RuleSite,
    apply,
    match,
    match_colour_flip,
    _edges_between,
    _self_loops,
    _splice_vertex_on_edge,
)


class NormalizeError(ValueError):
    pass


# --------------------------------------------------------------------------
# zero forms and scalar normal forms


def zero_form(p: Prime, m: int, n: int) -> Diagram:
    """The canonical zero diagram of type m -> n.

    An isolated green spider with phase (1, 0) (value 0) tensored with a
    bare green unit on every wire; its interpretation is the zero matrix.
    """
    d = Diagram(p)
    d.add_spider(Z, 1, 0)
    for _ in range(m):
        b = d.add_input()
        v = d.add_spider(Z)
        d.add_edge(b, v)
    for _ in range(n):
        b = d.add_output()
        v = d.add_spider(Z)
        d.add_edge(v, b)
    return d


def is_zero_form(d: Diagram) -> bool:
    spiders = d.spider_ids()
    isolated = [v for v in spiders if not d.vertex_edges(v)]
    if len(isolated) != 1:
        return False
    k = d.vertices[isolated[0]]
    if k.kind != Z or (k.phase.x, k.phase.y) != (1, 0):
        return False
    for v in spiders:
        if v == isolated[0]:
            continue
        kk = d.vertices[v]
        if kk.kind != Z or not kk.phase.is_zero() or d.degree(v) != 1:
            return False
        (eid,) = d.vertex_edges(v)
        e = d.edges[eid]
        if e.kind.kind != PLAIN or not d.vertices[e.other(v)].is_boundary():
            return False
    return True


def canonicalize_zero(state: RewriteState) -> RewriteState:
    """Replace a zero-scalar state's graph by the canonical zero form."""
    if not state.scalar.is_zero():
        raise NormalizeError("state is not zero")
    m, n = state.graph.arity()
    state.graph = zero_form(state.graph.p, m, n)
    state.trace.append("zero_form")
    return state


@dataclass(frozen=True)
class ScalarNF:
    """Canonical descriptor of an invertible scalar of the fragment.

    value = i^o * omega^s * sqrt(p)^r; `zero` flags the zero scalar.  For
    p = 1 mod 4 only o in {0, 2} occurs (signs); for p = 3 mod 4 all four
    powers of i occur.
    """

    p: Prime
    zero: bool
    o: int = 0
    s: int = 0
    r: int = 0

    def value(self) -> Cyclo:
        if self.zero:
            return Cyclo.zero(self.p)
        return i_pow(self.p, self.o) * omega_pow(self.p, self.s) * sqrt_p_pow(
            self.p, self.r
        )

    def text(self) -> str:
        if self.zero:
            return "zero"
        return f"i^{self.o} * w^{self.s} * sqrt(p)^{self.r}"


def scalar_normal_form(c: Cyclo) -> ScalarNF:
    """Factor a scalar of the fragment as unit * omega-power * sqrt(p)-power.

    Membership is checked by factoring: the squared magnitude must be an
    exact power of p and the remaining unit must lie in the finite phase
    group; anything else raises NormalizeError.
    """
    p = c.p
    if c.is_zero():
        return ScalarNF(p, zero=True)
    norm = c * c.conj()
    if not norm.is_rational():
        raise NormalizeError("scalar is not in the fragment's monoid")
    num, den = norm.rational_parts()
    if num <= 0:
        raise NormalizeError("scalar is not in the fragment's monoid")

    def p_power(k: int):
        r = 0
        while k % p.p == 0:
            k //= p.p
            r += 1
        return (r, k)

    rn, restn = p_power(num)
    rd, restd = p_power(den)
    if restn != 1 or restd != 1:
        raise NormalizeError("scalar magnitude is not a power of sqrt(p)")
    r = rn - rd
    unit = c * sqrt_p_pow(p, -r)
    o_range = (0, 2) if p.p % 4 == 1 else (0, 1, 2, 3)
    for o in o_range:
        for s in range(p.p):
            if unit == i_pow(p, o) * omega_pow(p, s):
                return ScalarNF(p, zero=False, o=o, s=s, r=r)
    raise NormalizeError("scalar unit part is outside the phase group")


# --------------------------------------------------------------------------
# graph-like reduction


def _boundary_ids(d: Diagram) -> set[int]:
    return {v for v, k in d.vertices.items() if k.is_boundary()}


def _wire_edge_of(d: Diagram, v: int) -> int | None:
    """The plain edge from spider v onto its output wire, if any.

    A wire is a chain of plain edges through degree-2 red gadgets ending
    at a boundary, so the first hop may reach either a boundary or a
    gadget.
    """
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        if e.kind.kind != PLAIN:
            continue
        k = d.vertices[e.other(v)]
        if k.is_boundary() or k.kind == X:
            return eid
    return None


def _wire_attached(d: Diagram) -> set[int]:
    """Green spiders reachable from a boundary along a gadget wire."""
    out: set[int] = set()
    for b in _boundary_ids(d):
        prev = b
        cur = d.edges[d.vertex_edges(b)[0]].other(b)
        for _ in range(len(d.vertices)):
            k = d.vertices[cur]
            if k.kind == Z:
                out.add(cur)
                break
            if k.kind != X:
                break
            nxt = [d.edges[e].other(cur) for e in d.vertex_edges(cur)
                   if d.edges[e].other(cur) != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
    return out


def _run_pass(state: RewriteState, names: list[str]) -> bool:
    d = state.graph
    progressed = False
    for name in names:
        sites = match(d, name)
        while sites:
            apply(state, sites[0])
            progressed = True
            sites = match(d, name)
    return progressed


def _split_mul_edges(state: RewriteState) -> bool:
    d = state.graph
    progressed = False
    for eid in sorted(d.edges):
        e = d.edges.get(eid)
        if e is None or e.kind.kind != MULKIND or e.a == e.b:
            continue
        apply(state, RuleSite("mul_split", (), (eid,)))
        progressed = True
    return progressed


def to_graph_like(state: RewriteState | Diagram) -> RewriteState:
    """Rewrite to graph-like form, preserving scalar * interp exactly.

    Afterwards: only green spiders; spiders are joined only by single
    weighted h-edges; no self-loops; every boundary attaches by a plain
    wire to its own spider.
    """
    if isinstance(state, Diagram):
        state = RewriteState(state.copy())
    d = state.graph
    if d.has_discard():
        raise NormalizeError("discards have no graph-like form")
    if d.star_count:
        apply(state, RuleSite("star_absorb"))
    for _ in range(100_000):
        progressed = False
        # colours first: everything downstream expects green spiders
        for s in match_colour_flip(d):
            v = s.vertices[0]
            if v in d.vertices and d.vertices[v].kind == X:
                apply(state, s)
                progressed = True
        progressed |= _run_pass(
            state, ["plain_loop", "h_loop", "mul_loop"])
        progressed |= _split_mul_edges(state)
        progressed |= _run_pass(state, ["fusion", "parallel_merge", "gauss"])
        if state.scalar.is_zero():
            return canonicalize_zero(state)
        if not progressed:
            break
    else:
        raise NormalizeError("graph-like normalisation did not converge")
    # boundary wiring
    changed = True
    while changed:
        changed = False
        for b in sorted(_boundary_ids(d)):
            eid = d.vertex_edges(b)[0]
            e = d.edges[eid]
            other = e.other(b)
            if e.kind.kind != PLAIN or not d.vertices[other].is_spider():
                _splice_vertex_on_edge(d, eid, Z, 0, 0, b)
                changed = True
        if changed:
            for _ in range(100_000):
                if not (_split_mul_edges(state)
                        or _run_pass(state, ["plain_loop", "h_loop", "mul_loop",
                                             "parallel_merge"])):
                    break
        # one spider per boundary: split extras through h(1)/h(-1) pairs
        for v in sorted(d.spider_ids()):
            legs = [eid for eid in d.vertex_edges(v)
                    if d.vertices[d.edges[eid].other(v)].is_boundary()]
            for eid in legs[1:]:
                b = d.edges[eid].other(v)
                t1 = d.add_spider(Z)
                t2 = d.add_spider(Z)
                del d.edges[eid]
                d.add_edge(v, t1, hbox(1))
                d.add_edge(t1, t2, hbox(d.p.p - 1))
                d.add_edge(t2, b, plain())
                changed = True
    _assert_graph_like(d)
    return state


def _assert_graph_like(d: Diagram):
    for v in d.spider_ids():
        if d.vertices[v].kind != Z:
            raise NormalizeError("graph-like form must be all green")
        if _self_loops(d, v):
            raise NormalizeError("graph-like form has a self-loop")
    for eid, e in d.edges.items():
        ka, kb = d.vertices[e.a], d.vertices[e.b]
        if ka.is_boundary() or kb.is_boundary():
            if e.kind.kind != PLAIN:
                raise NormalizeError("boundary wires must be plain")
            continue
        if e.kind.kind != HKIND:
            raise NormalizeError("inter-spider edges must be h-edges")
        if len(_edges_between(d, e.a, e.b)) != 1:
            raise NormalizeError("parallel edges remain")
    for b in _boundary_ids(d):
        if d.degree(b) != 1:
            raise NormalizeError("boundary degree must be 1")
    counts: dict[int, int] = {}
    for b in _boundary_ids(d):
        v = d.edges[d.vertex_edges(b)[0]].other(b)
        counts[v] = counts.get(v, 0) + 1
    if any(c > 1 for c in counts.values()):
        raise NormalizeError("a spider still serves two boundaries")


def _internal_vertices(d: Diagram) -> list[int]:
    attached = _wire_attached(d)
    return [v for v in sorted(d.spider_ids())
            if d.vertices[v].kind == Z and v not in attached]


def eliminate_internal(state: RewriteState) -> RewriteState:
    """Remove every vertex not connected to a boundary wire.

    Vertices with invertible quadratic phase are removed by
    local-complementation elimination; adjacent internal Pauli pairs by
    pivoting; an internal Pauli vertex whose neighbours all sit on wires
    is first boosted by a red-phase gadget pair spliced onto a
    neighbour's wire (a local complementation at that neighbour), which
    makes its quadratic phase invertible.
    """
    d = state.graph
    guard = 0
    while True:
        guard += 1
        if guard > 100_000:
            raise NormalizeError("internal elimination did not converge")
        if state.scalar.is_zero():
            return canonicalize_zero(state)
        internals = _internal_vertices(d)
        if not internals:
            return state
        u = internals[0]
        k = d.vertices[u]
        if not d.vertex_edges(u):
            apply(state, RuleSite("gauss", (u,)))
            continue
        if k.phase.y % d.p.p != 0:
            apply(state, RuleSite("lc_elim", (u,)))
            continue
        nbrs = sorted(d.neighbours(u))
        internal_nbrs = [v for v in nbrs if v in internals]
        if internal_nbrs:
            v = internal_nbrs[0]
            if d.vertices[v].phase.y % d.p.p != 0:
                apply(state, RuleSite("lc_elim", (v,)))
            else:
                apply(state, RuleSite("pivot_elim", (u, v)))
            continue
        # all neighbours are on wires: boost u's quadratic phase through a
        # gadget pair on a neighbour's wire
        v = nbrs[0]
        t = d.vertices[v].phase.y % d.p.p
        y = 1 if (t * 1) % d.p.p != 1 else 2
        wire = _wire_edge_of(d, v)
        g1 = _splice_vertex_on_edge(d, wire, X, 0, y, v)
        # now v -- plain -- g1 -- plain -- (old wire); add the compensator
        between = _edges_between(d, g1, v)
        comp_edge = [eid for eid in d.vertex_edges(g1) if eid not in between][0]
        _splice_vertex_on_edge(d, comp_edge, X, 0, (-y) % d.p.p, g1)
        state.trace.append(f"boost v[{v}] y={y}")
        absorb_red_gadget(state, g1)
        if d.vertices[u].phase.y % d.p.p == 0:
            raise NormalizeError("boost failed to make the phase invertible")


# --------------------------------------------------------------------------
# GS+LC and rGS+LC forms


@dataclass
class GsLc:
    """Graph state plus one vertex operator per output and an exact scalar.

    Vertex k of the graph sits on output port k.  `zero` marks the
    collapsed zero state, in which case the rest is meaningless.
    """

    graph: WeightedGraph
    ops: list[C1NormalForm]
    scalar: Cyclo
    zero: bool = False
    trace: list[str] = None  # rewrite log from the reduction

    def __post_init__(self):
        if self.trace is None:
            self.trace = []

    @property
    def p(self) -> Prime:
        return self.graph.p

    def n(self) -> int:
        return self.graph.n

    def state(self) -> RewriteState:
        """Rebuild the diagram this form denotes."""
        if self.zero:
            st = RewriteState(zero_form(self.p, 0, self.graph.n))
            st.scalar = Cyclo.zero(self.p)
            return st
        d = to_diagram(self.graph)
        st = RewriteState(d, self.scalar)
        for port, op in enumerate(self.ops):
            for el in op.word():
                _splice_wire_element(d, port, el)
        return st

    def marked(self) -> set[int]:
        return {v for v, op in enumerate(self.ops) if op.is_marked()}


class RGsLc(GsLc):
    """A GsLc whose operators lie in the reduced set R with no two adjacent
    marked vertices."""


def _splice_wire_element(d: Diagram, port: int, el: C1Element):
    from .diagram import kind_compose

    b = d.outputs[port]
    eid = d.vertex_edges(b)[0]
    if isinstance(el, GreenPhase):
        splice_gadget(d, port, Z, el.x, el.y)
    elif isinstance(el, RedPhase):
        splice_gadget(d, port, X, el.x, el.y)
    else:
        kind = hbox(el.w) if isinstance(el, HBox) else mul(el.z)
        e = d.edges[eid]
        if e.b == b:
            d.edges[eid] = Edge(e.a, e.b, kind_compose(kind, e.kind, d.p))
        else:
            d.edges[eid] = Edge(e.a, e.b, kind_compose(e.kind, kind, d.p))


def to_gs_lc(d: Diagram | RewriteState) -> GsLc:
    """Reduce a stabiliser diagram to GS+LC form (through its state form)."""
    if isinstance(d, Diagram):
        state = RewriteState(d.copy())
    else:
        state = d
    if state.graph.inputs:
        state = RewriteState(choi(state.graph), state.scalar)
    state = to_graph_like(state)
    state = eliminate_internal(state)
    g = state.graph
    p = g.p
    n = len(g.outputs)
    if state.scalar.is_zero() or is_zero_form(g):
        return GsLc(WeightedGraph(p, n), [_identity_form(p)] * n,
                    Cyclo.zero(p), zero=True)
    # walk each output wire: collect gadgets boundary-to-vertex
    port_vertex: dict[int, int] = {}
    words: dict[int, list[C1Element]] = {}
    for port in range(n):
        b = g.outputs[port]
        prev = b
        cur = g.edges[g.vertex_edges(b)[0]].other(b)
        gadgets: list[tuple[int, int]] = []
        while True:
            k = g.vertices[cur]
            if k.kind == X:
                gadgets.append((k.phase.x, k.phase.y))
                nxt = [g.edges[e].other(cur) for e in g.vertex_edges(cur)
                       if g.edges[e].other(cur) != prev]
                prev, cur = cur, nxt[0]
                continue
            break
        port_vertex[port] = cur
        kz = g.vertices[cur]
        word: list[C1Element] = []
        if not kz.phase.is_zero():
            word.append(GreenPhase(kz.phase.x, kz.phase.y))
        word += [RedPhase(x, y) for (x, y) in reversed(gadgets)]
        words[port] = word
    verts = [port_vertex[i] for i in range(n)]
    if len(set(verts)) != n:
        raise NormalizeError("two outputs share a graph vertex")
    wg = WeightedGraph(p, n)
    index = {v: i for i, v in enumerate(verts)}
    for eid, e in g.edges.items():
        if e.kind.kind != HKIND:
            continue
        if e.a in index and e.b in index:
            wg.set_edge(index[e.a], index[e.b], e.kind.weight)
    ops = []
    scalar = state.scalar
    for port in range(n):
        form = c1_normalize(p, words[port])
        scalar = scalar * form.scalar
        ops.append(replace(form, scalar=Cyclo.one(p)))
    out = GsLc(wg, ops, scalar)
    out.trace = list(state.trace)
    return out


@lru_cache(maxsize=None)
def _identity_form(p: Prime) -> C1NormalForm:
    return replace(c1_normalize(p, []), scalar=Cyclo.one(p))


# -- operator absorption on GsLc forms ---------------------------------------


@lru_cache(maxsize=None)
def _shear_gadget_label(pval: int, target: int) -> int:
    """The red label y whose antipode-free gadget X(0,y).mul(1) has
    symplectic [[1, target], [0, 1]] (an upper shear)."""
    from .c1 import _mul_matrix, _red_matrix

    p = prime(pval)
    for y in range(1, pval):
        m = _red_matrix(pval, 0, y).mat_mul(_mul_matrix(pval, 1))
        a = symplectic_of_matrix(p, m)
        if a == ((1, target % pval), (0, 1)):
            return y
    raise NormalizeError("no shear gadget with the requested symplectic part")


@lru_cache(maxsize=None)
def _mul_gadget_label(pval: int, target: int) -> int:
    """The multiplier z whose matrix has symplectic diag(target, target^-1)."""
    from .c1 import _mul_matrix

    p = prime(pval)
    tgt = target % pval
    for z in range(1, pval):
        a = symplectic_of_matrix(p, _mul_matrix(pval, z))
        if a == ((tgt, 0), (0, p.inv(tgt))):
            return z
    raise NormalizeError("no multiplier with the requested symplectic part")


def _set_op(gslc: GsLc, v: int, m: CycloMatrix):
    form = c1_normalize_matrix(gslc.p, m)
    gslc.scalar = gslc.scalar * form.scalar
    gslc.ops[v] = replace(form, scalar=Cyclo.one(gslc.p))


def _op_right_multiply(gslc: GsLc, v: int, m: CycloMatrix):
    _set_op(gslc, v, gslc.ops[v].matrix().mat_mul(m))


def _absorb_mul(gslc: GsLc, v: int, z: int):
    """ops[v] sheds mul(z) into a local scaling of the graph.  Exact."""
    from .c1 import _mul_matrix

    p = gslc.p
    c = (-p.inv(z)) % p.p
    for u in range(gslc.graph.n):
        if u != v and gslc.graph.adj[v][u]:
            gslc.graph.set_edge(v, u, gslc.graph.adj[v][u] * c)
    _op_right_multiply(gslc, v, clifford_inverse(_mul_matrix(p.p, z)))


def _absorb_shear(gslc: GsLc, v: int, y: int):
    """ops[v] sheds the antipode-free red gadget X(0,y).mul(1): a local
    complementation with weight y.  Exact, with sqrt(p) bookkeeping for
    created/deleted edges."""
    from .c1 import _mul_matrix, _red_matrix

    p = gslc.p
    pm = p.p
    g = gslc.graph
    nbrs = [(u, g.adj[v][u]) for u in range(g.n) if u != v and g.adj[v][u]]
    shift = 0
    for i, (u, e_u) in enumerate(nbrs):
        green = _green_phase_matrix(pm, 0, (y * e_u * e_u) % pm)
        _op_right_multiply(gslc, u, green)
        for j in range(i + 1, len(nbrs)):
            w, e_w = nbrs[j]
            old = g.adj[u][w]
            new = (old + y * e_u * e_w) % pm
            g.set_edge(u, w, new)
            if old == 0 and new != 0:
                shift += 1
            elif old != 0 and new == 0:
                shift -= 1
    gslc.scalar = gslc.scalar * sqrt_p_pow(p, shift)
    gadget = _red_matrix(pm, 0, y).mat_mul(_mul_matrix(pm, 1))
    _op_right_multiply(gslc, v, clifford_inverse(gadget))


def _absorb_x_translation(gslc: GsLc, v: int, gamma: int):
    """ops[v] sheds X^gamma via the graph's Pauli stabiliser at v."""
    p = gslc.p
    pm = p.p
    g = gslc.graph
    for u in range(g.n):
        if u != v and g.adj[v][u]:
            green = _green_phase_matrix(pm, (-2 * gamma * g.adj[v][u]) % pm, 0)
            _op_right_multiply(gslc, u, green)
    _op_right_multiply(gslc, v, clifford_inverse(_pauli_xz(p, gamma % pm, 0)))


@lru_cache(maxsize=None)
def _green_phase_matrix(pval: int, x: int, y: int) -> CycloMatrix:
    from .c1 import _green_matrix

    return _green_matrix(pval, x, y)


def _in_reduced_set(form: C1NormalForm) -> bool:
    """Membership in R.

    Unmarked members are pure green phases: lower-unitriangular
    symplectic part with no X-translation.  Marked members are the single
    irreducible class [[0,1],[-1,0]] with no residual Z-translation (an
    X-translation pushed through it becomes the Z kind, so that is the
    component the graph can still absorb).
    """
    a = form.symplectic()
    pm = form.p.p
    if a[0][1] == 0 and a[0][0] == 1 and a[1][1] == 1:
        return form.s == 0
    return a == ((0, 1), (pm - 1, 0)) and form.t == 0


def _reduce_vertex_op(gslc: GsLc, v: int):
    """Bring ops[v] into the reduced set R by absorbing its scaling,
    lower-shear, and X-translation parts into the graph."""
    p = gslc.p
    pm = p.p
    for _ in range(8):
        form = gslc.ops[v]
        if _in_reduced_set(form):
            return
        a = form.symplectic()
        if a[0][0] != 0:
            targets = [((1, 0), (t, 1)) for t in range(pm)]
        else:
            targets = [((0, 1), (pm - 1, 0))]
        done = False
        for ar in targets:
            inv_ar = (
                (ar[1][1], (-ar[0][1]) % pm),
                ((-ar[1][0]) % pm, ar[0][0]),
            )
            # W = inv(ar) . a must be upper triangular: a = ar . W
            w00 = (inv_ar[0][0] * a[0][0] + inv_ar[0][1] * a[1][0]) % pm
            w01 = (inv_ar[0][0] * a[0][1] + inv_ar[0][1] * a[1][1]) % pm
            w10 = (inv_ar[1][0] * a[0][0] + inv_ar[1][1] * a[1][0]) % pm
            w11 = (inv_ar[1][0] * a[0][1] + inv_ar[1][1] * a[1][1]) % pm
            if w10 != 0 or w00 == 0 or (w00 * w11) % pm != 1:
                continue
            # W = diag(w00, w00^{-1}) . shear(u): absorb the shear first
            u = (w01 * p.inv(w00)) % pm
            if u:
                _absorb_shear(gslc, v, _shear_gadget_label(pm, u))
            if w00 != 1:
                _absorb_mul(gslc, v, _mul_gadget_label(pm, w00))
            done = True
            break
        if not done:
            raise NormalizeError("could not factor the vertex operator")
        form = gslc.ops[v]
        a = form.symplectic()
        # peel the absorbable translation from the right: X^gamma pushed
        # through A shifts the left translation by A . (gamma, 0)
        if a[0][0] != 0 and form.s:
            _absorb_x_translation(gslc, v, (form.s * p.inv(a[0][0])) % pm)
        elif a[0][0] == 0 and form.t:
            _absorb_x_translation(gslc, v, (form.t * p.inv(a[1][0])) % pm)
    if not _in_reduced_set(gslc.ops[v]):
        raise NormalizeError("vertex operator did not reach the reduced set")


def _lc_at(gslc: GsLc, v: int, y: int = 1):
    """Apply a compensated local complementation at v: the graph (and the
    neighbouring operators) transform, ops[v] picks up the inverse gadget."""
    from .c1 import _mul_matrix, _red_matrix

    pm = gslc.p.p
    gadget = _red_matrix(pm, 0, y).mat_mul(_mul_matrix(pm, 1))
    _op_right_multiply(gslc, v, clifford_inverse(gadget))
    # undo: now shed the same gadget into the graph
    _absorb_shear_only_graph(gslc, v, y)


def _absorb_shear_only_graph(gslc: GsLc, v: int, y: int):
    """The graph/neighbour part of `_absorb_shear` (ops[v] untouched)."""
    p = gslc.p
    pm = p.p
    g = gslc.graph
    nbrs = [(u, g.adj[v][u]) for u in range(g.n) if u != v and g.adj[v][u]]
    shift = 0
    for i, (u, e_u) in enumerate(nbrs):
        _op_right_multiply(gslc, u, _green_phase_matrix(pm, 0, (y * e_u * e_u) % pm))
        for j in range(i + 1, len(nbrs)):
            w, e_w = nbrs[j]
            old = g.adj[u][w]
            new = (old + y * e_u * e_w) % pm
            g.set_edge(u, w, new)
            shift += (old == 0 and new != 0) - (old != 0 and new == 0)
    gslc.scalar = gslc.scalar * sqrt_p_pow(p, shift)


def to_rgs_lc(d: Diagram | GsLc) -> RGsLc:
    """Reduce to rGS+LC: operators in R, no two adjacent marked vertices."""
    gslc = d if isinstance(d, GsLc) else to_gs_lc(d)
    if gslc.zero:
        return RGsLc(gslc.graph, gslc.ops, gslc.scalar, zero=True,
                     trace=list(gslc.trace))
    n = gslc.graph.n
    for _ in range(100_000):
        pending = [v for v in range(n) if not _in_reduced_set(gslc.ops[v])]
        if not pending:
            break
        _reduce_vertex_op(gslc, pending[0])
    else:
        raise NormalizeError("rGS+LC reduction did not converge")
    # condition 2: no adjacent marked pair
    for _ in range(100_000):
        marked = gslc.marked()
        pair = None
        for v in sorted(marked):
            for u in sorted(gslc.graph.neighbours(v)):
                if u in marked:
                    pair = (u, v)
                    break
            if pair:
                break
        if pair is None:
            break
        _lc_at(gslc, pair[1], 1)
        _renormalize(gslc, priority=(pair[0],))
    else:
        raise NormalizeError("marked-pair elimination did not converge")
    return RGsLc(gslc.graph, gslc.ops, gslc.scalar, trace=list(gslc.trace))


def simplify_pair(a: RGsLc, b: RGsLc) -> tuple[RGsLc, RGsLc]:
    """Remove offending marked/unmarked vertex pairs across two forms.

    A pair (q, r) offends when q is marked in one diagram only, r is
    marked in the other only, and q, r are adjacent in at least one of
    the graphs.  A local complementation at the unmarked partner clears
    the mark; the total number of marked vertices never increases.
    """
    if a.p != b.p or a.graph.n != b.graph.n:
        raise NormalizeError("pair must share type")
    if a.zero or b.zero:
        return a, b

    def offending():
        ma, mb = a.marked(), b.marked()
        for q in sorted(ma - mb):
            for r in sorted(mb - ma):
                if a.graph.adj[q][r] or b.graph.adj[q][r]:
                    return q, r
        return None

    for _ in range(100_000):
        pair = offending()
        if pair is None:
            return a, b
        q, r = pair
        if a.graph.adj[q][r]:
            _lc_at(a, r, 1)  # r is unmarked in a; q loses its mark in a
            _renormalize(a, priority=(q,))
        else:
            _lc_at(b, q, 1)  # q is unmarked in b; r loses its mark in b
            _renormalize(b, priority=(r,))
    raise NormalizeError("pair simplification did not converge")


def _renormalize(gslc: GsLc, priority: tuple[int, ...] = ()):
    """Reduce every operator back into R.

    Vertices in `priority` are reduced first: a vertex whose symplectic
    part currently has an invertible upper-left entry lands in the stable
    green family, which later shears cannot dislodge.  Callers that just
    unmarked a vertex pass it here so the unmarking is permanent.
    """
    for _ in range(100_000):
        pending = [v for v in range(gslc.graph.n)
                   if not _in_reduced_set(gslc.ops[v])]
        if not pending:
            return
        front = [v for v in priority if v in pending]
        _reduce_vertex_op(gslc, front[0] if front else pending[0])
    raise NormalizeError("renormalisation did not converge")


# --------------------------------------------------------------------------
# equality decision


def _ones_vector(p: Prime) -> CycloMatrix:
    one = Cyclo.one(p)
    return CycloMatrix(p, p.p, 1, [[one] for _ in range(p.p)])


@dataclass
class Verdict:
    equal: bool
    trace: list[str]

    def __bool__(self):
        return self.equal


def _unbuild_diagram(form: RGsLc) -> tuple[Diagram, Cyclo]:
    """An n -> n diagram undoing `form`'s edges and operators, with the
    scalar that keeps the composition exact.

    Composing it after the form's state yields (up to the returned
    scalar) a bare product of green units when the states match.
    """
    p = form.p
    n = form.graph.n
    d = identity_diagram(p, n)
    scal = Cyclo.one(p)
    for port, op in enumerate(form.ops):
        for el in word_inverse(p, op.word()):
            _splice_wire_element_on(d, port, el)
    for u, v, w in form.graph.edges():
        # E^{-w} on wires u, v: two spiders joined by h(-w), times sqrt(p)
        su = _splice_wire_spider(d, u)
        sv = _splice_wire_spider(d, v)
        d.edges[d._next_e] = Edge(su, sv, hbox((-w) % p.p))
        d._next_e += 1
        scal = scal * sqrt_p_pow(p, 1)
    return d, scal


def _splice_wire_spider(d: Diagram, port: int) -> int:
    b = d.outputs[port]
    eid = d.vertex_edges(b)[0]
    return _splice_vertex_on_edge(d, eid, Z, 0, 0, b)


def _splice_wire_element_on(d: Diagram, port: int, el: C1Element):
    from .diagram import kind_compose

    b = d.outputs[port]
    eid = d.vertex_edges(b)[0]
    e = d.edges[eid]
    if isinstance(el, GreenPhase):
        _splice_vertex_on_edge(d, eid, Z, el.x, el.y, b)
    elif isinstance(el, RedPhase):
        _splice_vertex_on_edge(d, eid, X, el.x, el.y, b)
    else:
        kind = hbox(el.w) if isinstance(el, HBox) else mul(el.z)
        if e.b == b:
            d.edges[eid] = Edge(e.a, e.b, kind_compose(kind, e.kind, d.p))
        else:
            d.edges[eid] = Edge(e.a, e.b, kind_compose(e.kind, kind, d.p))


def decide_equal(a: Diagram, b: Diagram) -> Verdict:
    """Decide whether two stabiliser diagrams have equal interpretations.

    Both diagrams are reduced to rGS+LC form; the first form's edges and
    vertex operators are then undone on both sides, which must leave two
    edgeless forms, and those are compared as products of single-qupit
    states together with the exact accumulated scalars.  The trace lists
    every rewrite used, as a derivation certificate.
    """
    if a.p != b.p:
        raise NormalizeError("diagrams must share the prime")
    if a.arity() != b.arity():
        raise NormalizeError(
            f"type mismatch: {a.arity()} vs {b.arity()}")
    if a.has_discard() or b.has_discard():
        raise NormalizeError("equality decision covers discard-free diagrams")
    p = a.p
    trace: list[str] = []
    ra = to_rgs_lc(a)
    rb = to_rgs_lc(b)
    trace += [f"lhs {line}" for line in ra.trace]
    trace += [f"rhs {line}" for line in rb.trace]
    trace.append(f"lhs reduced: {ra.graph.edges()} scalar {ra.scalar.text()}")
    trace.append(f"rhs reduced: {rb.graph.edges()} scalar {rb.scalar.text()}")
    if ra.zero or rb.zero:
        return Verdict(ra.zero and rb.zero, trace + ["zero comparison"])
    n = ra.graph.n
    if n == 0:
        eq = ra.scalar == rb.scalar
        return Verdict(eq, trace + ["scalar comparison"])
    ra, rb = simplify_pair(ra, rb)
    if ra.marked() != rb.marked():
        return Verdict(False, trace + ["marked vertex sets differ"])
    inv_d, inv_scal = _unbuild_diagram(ra)
    final = []
    for form in (ra, rb):
        st = form.state()
        comp = compose(st.graph, inv_d)
        st2 = RewriteState(comp, st.scalar * inv_scal)
        final.append(to_rgs_lc(to_gs_lc(st2)))
    fa, fb = final
    if fa.zero or fb.zero:
        return Verdict(fa.zero and fb.zero, trace + ["zero after unbuild"])
    if fa.graph.edges():
        raise NormalizeError("unbuilding the first form left edges behind")
    if fb.graph.edges():
        return Verdict(False, trace + ["residual entanglement differs"])
    ones = _ones_vector(p)
    ratio = Cyclo.one(p)
    for port in range(n):
        va = fa.ops[port].matrix().mat_mul(ones)
        vb = fb.ops[port].matrix().mat_mul(ones)
        pos = vb.first_nonzero()
        if pos is None:
            raise NormalizeError("vertex operator produced a zero state")
        lam = va.data[pos[0]][0] / vb.data[pos[0]][0] if not va.data[pos[0]][
            0].is_zero() else None
        if lam is None or not va == vb.scalar_mul(lam):
            return Verdict(False, trace + [f"wire {port} states differ"])
        ratio = ratio * lam
    # state_a = fa.scalar * prod(ratio) * (x) vb;  state_b = fb.scalar * (x) vb
    eq = fa.scalar * ratio == fb.scalar
    trace.append("wirewise comparison")
    return Verdict(eq, trace)


# --------------------------------------------------------------------------
# realizing scalars as closed diagrams


def _brick(p: Prime, builder) -> tuple[Diagram, ScalarNF]:
    d = builder(p)
    from .interp import interp_scalar as _isc

    return d, scalar_normal_form(_isc(d))


def _brick_p(p: Prime) -> Diagram:
    d = Diagram(p)
    d.add_spider(Z, 0, 0)
    return d


def _brick_sqrtp(p: Prime) -> Diagram:
    # a green and a red Pauli unit joined by a wire: value sqrt(p)
    d = Diagram(p)
    u = d.add_spider(Z, 0, 0)
    v = d.add_spider(X, 0, 0)
    d.add_edge(u, v)
    return d


def _brick_inv(p: Prime) -> Diagram:
    # one spider, two h-loops: value G(4)/p, magnitude p^{-1/2}
    d = Diagram(p)
    v = d.add_spider(Z, 0, 0)
    d.add_edge(v, v, hbox(1))
    d.add_edge(v, v, hbox(1))
    return d


def _brick_star(p: Prime) -> Diagram:
    d = Diagram(p)
    d.add_star()
    return d


def _brick_i(p: Prime, w: int) -> Diagram:
    # single h-loop: value G(2w)/sqrt(p), a unit
    d = Diagram(p)
    v = d.add_spider(Z, 0, 0)
    d.add_edge(v, v, hbox(w))
    return d


def _brick_omega(p: Prime, s: int) -> Diagram:
    # green/red Pauli pair (value sqrt(p) w^s) times an inverse brick
    d = Diagram(p)
    u = d.add_spider(Z, 2, 0)
    v = d.add_spider(X, (2 * s) % p.p, 0)
    d.add_edge(u, v)
    w = d.add_spider(Z, 0, 0)
    d.add_edge(w, w, hbox(1))
    d.add_edge(w, w, hbox(1))
    return d


def scalar_diagram(c: Cyclo) -> Diagram:
    """A closed diagram whose exact value is `c` (which must lie in the
    scalar monoid of the fragment, or be zero)."""
    from .diagram import tensor as d_tensor
    from .interp import interp_scalar as _isc

    p = c.p
    if c.is_zero():
        return zero_form(p, 0, 0)
    nf = scalar_normal_form(c)
    d = Diagram(p)
    if nf.r >= 0:
        for _ in range(nf.r):
            d = d_tensor(d, _brick_sqrtp(p))
    else:
        for _ in range(-nf.r):
            d = d_tensor(d, _brick_inv(p))
    # now fix the omega power in one shot
    cur = scalar_normal_form(_isc(d))
    d = d_tensor(d, _brick_omega(p, (nf.s - cur.s - _omega_brick_dirt(p)) % p.p))
    # remaining unit: a power of i (or -1)
    cur_val = _isc(d)
    residual = c / cur_val
    guard = 0
    while not residual == Cyclo.one(p):
        guard += 1
        if guard > 8:
            raise NormalizeError("scalar realisation did not close")
        nfr = scalar_normal_form(residual)
        if nfr.r != 0 or nfr.s != 0:
            raise NormalizeError("scalar realisation drifted")
        if nfr.o == 2 or p.p % 4 == 1:
            d = d_tensor(d, _brick_star(p))
        else:
            d = d_tensor(d, _pick_i_brick(p, nfr.o))
        residual = c / _isc(d)
    return d


@lru_cache(maxsize=None)
def _omega_brick_dirt(p: Prime) -> int:
    """The omega power contributed by `_brick_omega(p, 0)` itself."""
    from .interp import interp_scalar as _isc

    return scalar_normal_form(_isc(_brick_omega(p, 0))).s


@lru_cache(maxsize=None)
def _pick_i_brick(p: Prime, o: int) -> Diagram:
    """A closed diagram whose value is exactly i^o (p = 3 mod 4 only)."""
    from .diagram import tensor as d_tensor
    from .interp import interp_scalar as _isc

    target = i_pow(p, o)
    candidates = []
    for w in range(1, p.p):
        candidates.append(_brick_i(p, w))
        candidates.append(d_tensor(_brick_i(p, w), _brick_star(p)))
    for cand in candidates:
        if _isc(cand) == target:
            return cand
    raise NormalizeError("no imaginary-unit brick found")
