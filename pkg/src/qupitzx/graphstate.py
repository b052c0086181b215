"""Z_p-edge-weighted graphs, graph states, and local operations.

A weighted graph is identified with its symmetric adjacency matrix over
Z_p (zero diagonal).  Its state diagram has one phaseless green spider per
vertex, each on its own output wire, and an h(G_uv) edge per nonzero
entry; `to_state` also supplies the normalisation scalar that makes the
interpretation a unit vector.

Local scaling multiplies a vertex's row and column; local complementation
adds gamma * G_uw * G_wv to every off-diagonal pair.  Both, together with
Pauli dressings and red-phase rotations, exist in two forms here: as pure
graph operations and as exact rewrites on graph-state-like diagrams that
consume an operator gadget sitting on an output wire.
"""

from __future__ import annotations

from .cyclo import Cyclo, omega_pow, quadratic_gauss_sum, sqrt_p_pow
from .diagram import (
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
    hbox,
    plain,
)
from .modp import ModError, Prime, prime
from .rules import RewriteState, RuleError, RuleSite, _add_h_weight, _edges_between


class WeightedGraph:
    """Symmetric Z_p adjacency matrix with zero diagonal."""

    def __init__(self, p: Prime, n: int, adj=None):
        self.p = p
        self.n = n
        if adj is None:
            self.adj = [[0] * n for _ in range(n)]
        else:
            self.adj = [[adj[i][j] % p.p for j in range(n)] for i in range(n)]
        self.validate()

    def validate(self):
        for i in range(self.n):
            if self.adj[i][i] != 0:
                raise DiagramError("adjacency diagonal must be zero")
            for j in range(self.n):
                if self.adj[i][j] != self.adj[j][i]:
                    raise DiagramError("adjacency must be symmetric")

    def set_edge(self, u: int, v: int, w: int):
        if u == v:
            raise DiagramError("no self-loops in weighted graphs")
        w %= self.p.p
        self.adj[u][v] = w
        self.adj[v][u] = w

    def edges(self) -> list[tuple[int, int, int]]:
        return [
            (u, v, self.adj[u][v])
            for u in range(self.n)
            for v in range(u + 1, self.n)
            if self.adj[u][v]
        ]

    def neighbours(self, v: int) -> list[int]:
        return [u for u in range(self.n) if self.adj[v][u]]

    def copy(self) -> "WeightedGraph":
        return WeightedGraph(self.p, self.n, self.adj)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightedGraph)
            and self.p == other.p
            and self.n == other.n
            and self.adj == other.adj
        )

    def __repr__(self):
        return f"WeightedGraph(p={self.p.p}, n={self.n}, edges={self.edges()})"

    def dumps(self) -> str:
        """Text form: first line `p n`, then the adjacency rows."""
        lines = [f"{self.p.p} {self.n}"]
        lines += [" ".join(str(x) for x in row) for row in self.adj]
        return "\n".join(lines) + "\n"

    @staticmethod
    def loads(text: str) -> "WeightedGraph":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        try:
            pv, n = map(int, lines[0].split())
            rows = [[int(x) for x in ln.split()] for ln in lines[1 : n + 1]]
        except (ValueError, IndexError) as exc:
            raise DiagramError(f"bad adjacency text: {exc}") from exc
        return WeightedGraph(prime(pv), n, rows)


def local_scale(g: WeightedGraph, w: int, gamma: int) -> WeightedGraph:
    """Multiply row and column w by gamma (gamma invertible)."""
    gamma %= g.p.p
    if gamma == 0:
        raise ModError("local scaling needs gamma != 0")
    out = g.copy()
    for u in range(g.n):
        if u != w:
            out.adj[u][w] = (g.adj[u][w] * gamma) % g.p.p
            out.adj[w][u] = out.adj[u][w]
    return out


def local_complement(g: WeightedGraph, w: int, gamma: int) -> WeightedGraph:
    """adj[u][v] += gamma * adj[u][w] * adj[w][v] for all u != v."""
    gamma %= g.p.p
    if gamma == 0:
        raise ModError("local complementation needs gamma != 0")
    out = g.copy()
    for u in range(g.n):
        for v in range(g.n):
            if u != v:
                out.adj[u][v] = (
                    g.adj[u][v] + gamma * g.adj[u][w] * g.adj[w][v]
                ) % g.p.p
    return out


def to_diagram(g: WeightedGraph) -> Diagram:
    """The graph-state diagram: one green spider per vertex, h-weighted edges.

    Vertex k of the graph is spider id k and owns output port k.
    """
    d = Diagram(g.p)
    spiders = [d.add_spider(Z) for _ in range(g.n)]
    for v in spiders:
        b = d.add_output()
        d.add_edge(v, b)
    for u, v, w in g.edges():
        d.add_edge(spiders[u], spiders[v], hbox(w))
    return d


def to_state(g: WeightedGraph) -> RewriteState:
    """Graph-state diagram plus the scalar making its value unit-norm.

    The bare diagram evaluates to p^{(n - |E|)/2} |G>, so the accumulator
    starts at p^{(|E| - n)/2}.
    """
    d = to_diagram(g)
    scal = sqrt_p_pow(g.p, len(g.edges()) - g.n)
    return RewriteState(d, scal)


# -- wire-level structure ----------------------------------------------------


def output_wire_vertex(d: Diagram, port: int) -> int:
    """The graph vertex reached from an output port along plain wires,
    skipping any degree-2 operator gadgets sitting on the wire."""
    b = d.outputs[port]
    prev = b
    cur_edge = d.vertex_edges(b)[0]
    cur = d.edges[cur_edge].other(b)
    while True:
        k = d.vertices[cur]
        if not k.is_spider():
            raise DiagramError("output wire hits a non-spider")
        es = d.vertex_edges(cur)
        if len(es) != 2 or k.kind != X:
            return cur
        # degree-2 red gadget: keep walking
        nxt = [d.edges[e].other(cur) for e in es if d.edges[e].other(cur) != prev]
        if not nxt:
            return cur
        prev, cur = cur, nxt[0]


def _wire_edge(d: Diagram, port: int) -> int:
    b = d.outputs[port]
    return d.vertex_edges(b)[0]


def splice_gadget(d: Diagram, port: int, colour: str, x: int, y: int) -> int:
    """Put a degree-2 spider gadget onto an output wire, next to the boundary."""
    b = d.outputs[port]
    eid = _wire_edge(d, port)
    e = d.edges[eid]
    other = e.other(b)
    kind = e.kind
    v = d.add_spider(colour, x, y)
    del d.edges[eid]
    if e.a == b:
        d.add_edge(b, v, plain())
        d.add_edge(v, other, kind)
    else:
        d.add_edge(other, v, kind)
        d.add_edge(v, b, plain())
    return v


def splice_multiplier(d: Diagram, port: int, z: int) -> None:
    """Compose mul(z) onto an output wire (boundary side is the head)."""
    from .diagram import kind_compose, mul

    eid = _wire_edge(d, port)
    e = d.edges[eid]
    b = d.outputs[port]
    if e.b == b:
        d.edges[eid] = Edge(e.a, e.b, kind_compose(mul(z), e.kind, d.p))
    else:
        d.edges[eid] = Edge(e.a, e.b, kind_compose(e.kind, mul(z), d.p))


# -- exact absorptions -------------------------------------------------------


def _graphlike_neighbours(d: Diagram, v: int) -> list[tuple[int, int]]:
    """(neighbour, weight) pairs; requires a locally graph-like patch.

    Plain edges leading to a boundary or to a red wire gadget are the
    vertex's output wire and are skipped.
    """
    out = []
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        u = e.other(v)
        if u == v:
            raise RuleError("self-loop in graph-like patch")
        k = d.vertices[u]
        if e.kind.kind == PLAIN and (k.is_boundary() or k.kind == X):
            continue
        if e.kind.kind != HKIND or k.kind != Z:
            raise RuleError("patch is not graph-like")
        if len(_edges_between(d, v, u)) != 1:
            raise RuleError("parallel edges in graph-like patch")
        out.append((u, e.kind.weight))
    return out


def _boundary_legs(d: Diagram, v: int) -> list[int]:
    return [
        eid
        for eid in d.vertex_edges(v)
        if d.vertices[d.edges[eid].other(v)].is_boundary()
    ]


def absorb_multiplier(state: RewriteState, v: int, z: int):
    """Absorb mul(z) sitting on v's output wire into the graph.

    Rescales v's row/column by -z^{-1} and its phase by the matching
    substitution; exact, scalar 1.  The caller removes the wire
    decoration itself.
    """
    d = state.graph
    pm = d.p.p
    c = (-d.p.inv(z)) % pm
    k = d.vertices[v]
    nbrs = _graphlike_neighbours(d, v)
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        u = e.other(v)
        if e.kind.kind == HKIND:
            d.edges[eid] = Edge(e.a, e.b, hbox((e.kind.weight * c) % pm))
    d.set_phase(v, Phase(c * k.phase.x, c * c * k.phase.y))
    state.trace.append(f"local_scaling v[{v}] z={z}")


def absorb_pauli_x(state: RewriteState, v: int, gamma: int):
    """Absorb an X^gamma translation on v's wire into neighbour phases.

    Exact: each neighbour u gains phase (-2 gamma G_vu, 0), v's own phase
    shifts, and the accumulator picks up omega^{2^{-1}(-s gamma + t gamma^2)}.
    """
    d = state.graph
    pm = d.p.p
    gamma %= pm
    k = d.vertices[v]
    s, t = k.phase.x, k.phase.y
    for u, w in _graphlike_neighbours(d, v):
        d.add_to_phase(u, (-2 * gamma * w) % pm, 0)
    d.set_phase(v, Phase((s - 2 * t * gamma) % pm, t))
    expo = (d.p.half * (-s * gamma + t * gamma * gamma)) % pm
    state.scalar = state.scalar * omega_pow(d.p, expo)
    state.trace.append(f"pauli_x v[{v}] gamma={gamma}")


def absorb_antipode(state: RewriteState, v: int):
    """Absorb a variable negation at v: edges and Pauli phase flip sign."""
    d = state.graph
    pm = d.p.p
    k = d.vertices[v]
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        if e.kind.kind == HKIND:
            d.edges[eid] = Edge(e.a, e.b, hbox((-e.kind.weight) % pm))
    d.set_phase(v, Phase((-k.phase.x) % pm, k.phase.y))
    state.trace.append(f"antipode v[{v}]")


def absorb_red_phase(state: RewriteState, v: int, x: int, y: int):
    """Absorb the antipode-free red phase W'(x, y) acting on v's wire.

    W' is the 1 -> 1 red spider composed with mul(1); for y != 0 this is
    the diagram form of a gamma-weighted local complementation at v.  The
    neighbourhood must be graph-like.  Precondition: y != 0 and
    v's quadratic phase t satisfies t != y^{-1} (always true when t = 0).
    """
    d = state.graph
    pm = d.p.p
    x %= pm
    y %= pm
    if y == 0:
        absorb_pauli_x(state, v, (d.p.half * x) % pm)
        return
    k = d.vertices[v]
    s, t = k.phase.x, k.phase.y
    yinv = d.p.inv(y)
    tp = (t - yinv) % pm
    if tp == 0:
        raise RuleError("red phase gadget needs t != y^{-1} at the target")
    tpinv = d.p.inv(tp)
    nbrs = _graphlike_neighbours(d, v)
    sp = (s - yinv * x) % pm
    # new phase at v
    t_new = (-yinv - tpinv * yinv * yinv) % pm
    s_new = (yinv * x - tpinv * sp * yinv) % pm
    d.set_phase(v, Phase(s_new, t_new))
    # neighbour phases and rescaled star edges
    for eid in d.vertex_edges(v):
        e = d.edges[eid]
        if e.kind.kind == HKIND:
            d.edges[eid] = Edge(
                e.a, e.b, hbox((-tpinv * yinv * e.kind.weight) % pm)
            )
    root_shift = 0
    for i, (u, e_u) in enumerate(nbrs):
        d.add_to_phase(u, (-tpinv * sp * e_u) % pm, (-tpinv * e_u * e_u) % pm)
        for j in range(i + 1, len(nbrs)):
            w, e_w = nbrs[j]
            root_shift += _add_h_weight(d, u, w, (-tpinv * e_u * e_w) % pm)
    half = d.p.half
    expo = (-(half**3) * yinv * x * x - (half**3) * tpinv * sp * sp) % pm
    factor = (
        quadratic_gauss_sum(d.p, y)
        * quadratic_gauss_sum(d.p, tp)
        * omega_pow(d.p, expo)
        * sqrt_p_pow(d.p, root_shift)
    ).divide_by_int(pm)
    state.scalar = state.scalar * factor
    state.trace.append(f"local_complementation v[{v}] phase=({x},{y})")


def absorb_red_gadget(state: RewriteState, gadget: int):
    """Remove a degree-2 red gadget from an output wire and absorb it.

    The gadget is the full 1 -> 1 red spider X(x, y), i.e. antipode times
    the antipode-free part; both halves are absorbed in turn.
    """
    d = state.graph
    k = d.vertices.get(gadget)
    if k is None or k.kind != X:
        raise RuleError("gadget must be a red spider")
    es = d.vertex_edges(gadget)
    if len(es) != 2 or any(d.edges[e].kind.kind != PLAIN for e in es):
        raise RuleError("gadget must have two plain legs")
    ends = [d.edges[e].other(gadget) for e in es]
    greens = [u for u in ends if d.vertices[u].is_spider()
              and d.vertices[u].kind == Z]
    if len(greens) != 1:
        raise RuleError("gadget must sit next to exactly one green vertex")
    v = greens[0]
    b = next(u for u in ends if u != v)
    # contract the gadget out of the wire
    for e in es:
        del d.edges[e]
    del d.vertices[gadget]
    d.add_edge(v, b, plain())
    absorb_antipode(state, v)
    absorb_red_phase(state, v, k.phase.x, k.phase.y)


def pauli_stabiliser_diagram(g: WeightedGraph, v: int, gamma: int) -> Diagram:
    """The graph-state diagram dressed with X_v^gamma prod_w Z_w^{gamma G_vw}.

    Its interpretation equals the bare graph-state diagram's exactly.
    """
    d = to_diagram(g)
    gamma %= g.p.p
    # Z^s on wire w is a green phase (2s, 0); X^gamma at v is the gadget
    # X(-2 gamma, 0) followed by an antipode, i.e. mul(1) then the gadget.
    for w in g.neighbours(v):
        splice_gadget(d, w, Z, (2 * gamma * g.adj[v][w]) % g.p.p, 0)
    splice_gadget(d, v, X, (-2 * gamma) % g.p.p, 0)
    splice_multiplier(d, v, 1)
    return d


def apply_local_scaling(state: RewriteState, port: int):
    """Consume a multiplier decoration on an output wire: local scaling."""
    d = state.graph
    eid = _wire_edge(d, port)
    e = d.edges[eid]
    if e.kind.kind != MULKIND:
        raise RuleError("no multiplier on this wire")
    b = d.outputs[port]
    z = e.kind.weight if e.b == b else d.p.inv(e.kind.weight)
    v = e.other(b)
    if not d.vertices[v].is_spider() or d.vertices[v].kind != Z:
        raise RuleError("wire must attach to a green spider")
    d.edges[eid] = Edge(e.a, e.b, plain())
    absorb_multiplier(state, v, z)


def apply_local_complementation(state: RewriteState, port: int):
    """Consume a degree-2 red gadget on an output wire: the diagram form
    of local complementation (plus Pauli/antipode corrections)."""
    d = state.graph
    b = d.outputs[port]
    eid = _wire_edge(d, port)
    gadget = d.edges[eid].other(b)
    k = d.vertices[gadget]
    if not (k.is_spider() and k.kind == X and len(d.vertex_edges(gadget)) == 2):
        raise RuleError("no red gadget on this wire")
    absorb_red_gadget(state, gadget)


def red_rotation(state: RewriteState, port: int):
    """Alias of `apply_local_complementation` for arbitrary red phases."""
    apply_local_complementation(state, port)
