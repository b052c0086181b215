"""Open multigraphs of spiders with typed edges.

A diagram is a graph whose vertices are green (Z) or red (X) spiders with a
phase pair (x, y) in Z_p^2, boundary markers, or discards, and whose edges
carry one of three decorations:

- plain wires,
- weighted Hadamard boxes ``h(w)`` with w != 0 (flexsymmetric), or
- directed multipliers ``mul(z)`` with z != 0, with the convention that a
  multiplier maps the value j at its tail to -z*j at its head.  Reversing
  a multiplier's orientation is the same edge with z replaced by z^{-1}.

Plain wires behave exactly like ``mul(-1)``, and the three kinds form a
little group under serial composition, which is what makes identity-spider
removal and colour changes purely combinatorial.

Boundary vertices have degree exactly one and are listed in `inputs` /
`outputs` in wire order.  A global star counter (mod 2) records factors of
-1.  Self-loops and parallel edges are allowed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .modp import ModError, Prime, prime

# -- vertex and edge kinds ---------------------------------------------------

Z = "Z"
X = "X"
BOUNDARY_IN = "in"
BOUNDARY_OUT = "out"
DISCARD = "discard"

PLAIN = "plain"
HKIND = "h"
MULKIND = "mul"


@dataclass(frozen=True)
class Phase:
    """Spider phase pair (x, y); the exponent at leg value k is 2^{-1}(xk + yk^2)."""

    x: int
    y: int

    def reduce(self, p: Prime) -> "Phase":
        return Phase(self.x % p.p, self.y % p.p)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0


@dataclass(frozen=True)
class EdgeKind:
    """Edge decoration: ('plain', 0) | ('h', w) | ('mul', z)."""

    kind: str
    weight: int = 0

    def __post_init__(self):
        if self.kind not in (PLAIN, HKIND, MULKIND):
            raise ValueError(f"unknown edge kind {self.kind}")

    def validate(self, p: Prime):
        if self.kind in (HKIND, MULKIND) and self.weight % p.p == 0:
            raise ValueError(f"{self.kind} edge weight must be nonzero mod {p.p}")


def plain() -> EdgeKind:
    return EdgeKind(PLAIN)


def hbox(w: int) -> EdgeKind:
    return EdgeKind(HKIND, w)


def mul(z: int) -> EdgeKind:
    return EdgeKind(MULKIND, z)


def kind_reduce(k: EdgeKind, p: Prime) -> EdgeKind:
    if k.kind == PLAIN:
        return k
    w = k.weight % p.p
    if w == 0:
        raise ValueError("h/mul weight reduced to zero")
    if k.kind == MULKIND and w == p.p - 1:
        return plain()  # mul(-1) is the identity wire
    return EdgeKind(k.kind, w)


def kind_compose(second: EdgeKind, first: EdgeKind, p: Prime) -> EdgeKind:
    """Serial composition: apply `first`, then `second` (matrix product).

    Closed: mul(z2).mul(z1) = mul(-z1 z2); h(w2).h(w1) = mul(w2^{-1} w1);
    h(w).mul(z) = h(-wz); mul(z).h(w) = h(-z^{-1} w).  Plain is mul(-1).
    """
    pm = p.p
    a = EdgeKind(MULKIND, pm - 1) if first.kind == PLAIN else first
    b = EdgeKind(MULKIND, pm - 1) if second.kind == PLAIN else second
    if a.kind == MULKIND and b.kind == MULKIND:
        out = EdgeKind(MULKIND, (-a.weight * b.weight) % pm)
    elif a.kind == HKIND and b.kind == HKIND:
        out = EdgeKind(MULKIND, (prime(pm).inv(b.weight) * a.weight) % pm)
    elif a.kind == MULKIND and b.kind == HKIND:
        out = EdgeKind(HKIND, (-b.weight * a.weight) % pm)
    else:  # a h, b mul
        out = EdgeKind(HKIND, (-prime(pm).inv(b.weight) * a.weight) % pm)
    return kind_reduce(out, p)


def kind_transpose(k: EdgeKind, p: Prime) -> EdgeKind:
    """Orientation reversal: mul(z) -> mul(z^{-1}); plain and h are symmetric."""
    if k.kind == MULKIND:
        return kind_reduce(EdgeKind(MULKIND, p.inv(k.weight)), p)
    return k


@dataclass(frozen=True)
class VertexKind:
    """kind in {Z, X, in, out, discard}; phase for spiders, port for boundaries."""

    kind: str
    phase: Phase = Phase(0, 0)
    port: int = 0

    def is_spider(self) -> bool:
        return self.kind in (Z, X)

    def is_boundary(self) -> bool:
        return self.kind in (BOUNDARY_IN, BOUNDARY_OUT)


@dataclass
class Edge:
    a: int
    b: int
    kind: EdgeKind

    def other(self, v: int) -> int:
        return self.b if v == self.a else self.a


class DiagramError(ValueError):
    pass


class Diagram:
    """A ZX diagram over a fixed odd prime p.

    Vertices live in `vertices` (id -> VertexKind), edges in `edges`
    (id -> Edge); `inputs` / `outputs` list boundary vertex ids in wire
    order.  `star_count` in {0, 1} tracks the -1 scalar generator.
    Diagrams carrying discards must be created with `cpm=True`.
    """

    def __init__(self, p: Prime, cpm: bool = False):
        self.p = p
        self.vertices: dict[int, VertexKind] = {}
        self.edges: dict[int, Edge] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self.star_count = 0
        self.cpm = cpm
        self._next_v = 0
        self._next_e = 0

    # -- construction ------------------------------------------------------

    def add_vertex(self, kind: VertexKind) -> int:
        if kind.kind == DISCARD and not self.cpm:
            raise DiagramError("discard requires a CPM-enabled diagram")
        vid = self._next_v
        self._next_v += 1
        if kind.is_spider():
            kind = VertexKind(kind.kind, kind.phase.reduce(self.p))
        self.vertices[vid] = kind
        return vid

    def add_spider(self, colour: str, x: int = 0, y: int = 0) -> int:
        if colour not in (Z, X):
            raise DiagramError("spider colour must be Z or X")
        return self.add_vertex(VertexKind(colour, Phase(x, y).reduce(self.p)))

    def add_edge(self, a: int, b: int, kind: EdgeKind = EdgeKind(PLAIN)) -> int:
        if a not in self.vertices or b not in self.vertices:
            raise DiagramError("edge endpoint does not exist")
        kind.validate(self.p)
        kind = kind_reduce(kind, self.p)
        eid = self._next_e
        self._next_e += 1
        self.edges[eid] = Edge(a, b, kind)
        return eid

    def add_input(self, port: Optional[int] = None) -> int:
        port = len(self.inputs) if port is None else port
        vid = self.add_vertex(VertexKind(BOUNDARY_IN, port=port))
        self.inputs.append(vid)
        return vid

    def add_output(self, port: Optional[int] = None) -> int:
        port = len(self.outputs) if port is None else port
        vid = self.add_vertex(VertexKind(BOUNDARY_OUT, port=port))
        self.outputs.append(vid)
        return vid

    def add_star(self):
        self.star_count = (self.star_count + 1) % 2

    # -- views ---------------------------------------------------------------

    def vertex_edges(self, v: int) -> list[int]:
        return [eid for eid, e in self.edges.items() if e.a == v or e.b == v]

    def degree(self, v: int) -> int:
        d = 0
        for e in self.edges.values():
            if e.a == v:
                d += 1
            if e.b == v:
                d += 1
        return d

    def neighbours(self, v: int) -> set[int]:
        out = set()
        for e in self.edges.values():
            if e.a == v and e.b != v:
                out.add(e.b)
            elif e.b == v and e.a != v:
                out.add(e.a)
        return out

    def spider_ids(self) -> list[int]:
        return [v for v, k in self.vertices.items() if k.is_spider()]

    def arity(self) -> tuple[int, int]:
        return len(self.inputs), len(self.outputs)

    def validate(self):
        """Check structural invariants; raises DiagramError on violation."""
        for v in self.inputs + self.outputs:
            if v not in self.vertices or not self.vertices[v].is_boundary():
                raise DiagramError("boundary list entry is not a boundary vertex")
            if self.degree(v) != 1:
                raise DiagramError(f"boundary vertex {v} has degree {self.degree(v)}")
        boundaries = {v for v, k in self.vertices.items() if k.is_boundary()}
        if boundaries != set(self.inputs) | set(self.outputs):
            raise DiagramError("boundary vertex missing from inputs/outputs")
        for v, k in self.vertices.items():
            if k.kind == DISCARD and not self.cpm:
                raise DiagramError("discard in a non-CPM diagram")
            if k.kind == DISCARD and self.degree(v) != 1:
                raise DiagramError("discard must have degree 1")
        for e in self.edges.values():
            if e.a not in self.vertices or e.b not in self.vertices:
                raise DiagramError("dangling edge")
            e.kind.validate(self.p)
        if self.star_count not in (0, 1):
            raise DiagramError("star_count must be reduced mod 2")

    def copy(self) -> "Diagram":
        d = Diagram(self.p, cpm=self.cpm)
        d.vertices = dict(self.vertices)
        d.edges = {eid: Edge(e.a, e.b, e.kind) for eid, e in self.edges.items()}
        d.inputs = list(self.inputs)
        d.outputs = list(self.outputs)
        d.star_count = self.star_count
        d._next_v = self._next_v
        d._next_e = self._next_e
        return d

    def set_phase(self, v: int, phase: Phase):
        k = self.vertices[v]
        if not k.is_spider():
            raise DiagramError("phase on a non-spider")
        self.vertices[v] = VertexKind(k.kind, phase.reduce(self.p))

    def add_to_phase(self, v: int, dx: int, dy: int):
        k = self.vertices[v]
        self.set_phase(v, Phase(k.phase.x + dx, k.phase.y + dy))

    def remove_vertex(self, v: int):
        for eid in self.vertex_edges(v):
            del self.edges[eid]
        del self.vertices[v]

    def has_discard(self) -> bool:
        return any(k.kind == DISCARD for k in self.vertices.values())

    def __repr__(self):
        m, n = self.arity()
        return (
            f"Diagram(p={self.p.p}, {m}->{n}, {len(self.spider_ids())} spiders, "
            f"{len(self.edges)} edges, star={self.star_count})"
        )


# -- generator constructors ---------------------------------------------------


def identity_diagram(p: Prime, wires: int = 1) -> Diagram:
    d = Diagram(p)
    for _ in range(wires):
        i = d.add_input()
        o = d.add_output()
        d.add_edge(i, o)
    return d


def spider(p: Prime, colour: str, m: int, n: int, x: int = 0, y: int = 0) -> Diagram:
    """A single m -> n spider of the given colour and phase."""
    d = Diagram(p)
    v = d.add_spider(colour, x, y)
    for _ in range(m):
        b = d.add_input()
        d.add_edge(b, v)
    for _ in range(n):
        b = d.add_output()
        d.add_edge(v, b)
    return d


def cup(p: Prime) -> Diagram:
    """0 -> 2 Bell-pair generator: sum_k |kk>."""
    d = Diagram(p)
    o1, o2 = d.add_output(), d.add_output()
    v = d.add_spider(Z)
    d.add_edge(v, o1)
    d.add_edge(v, o2)
    return d


def cap(p: Prime) -> Diagram:
    """2 -> 0 generator: sum_k <kk|."""
    d = Diagram(p)
    i1, i2 = d.add_input(), d.add_input()
    v = d.add_spider(Z)
    d.add_edge(i1, v)
    d.add_edge(i2, v)
    return d


def swap(p: Prime) -> Diagram:
    d = Diagram(p)
    i1, i2 = d.add_input(), d.add_input()
    o1, o2 = d.add_output(), d.add_output()
    d.add_edge(i1, o2)
    d.add_edge(i2, o1)
    return d


def h_gate(p: Prime, w: int = 1) -> Diagram:
    """1 -> 1 weighted Hadamard box as a bare decorated wire."""
    d = Diagram(p)
    i, o = d.add_input(), d.add_output()
    d.add_edge(i, o, hbox(w))
    return d


def mul_gate(p: Prime, z: int) -> Diagram:
    """1 -> 1 multiplier; tail at the input, so it maps |j> to |-z j>."""
    d = Diagram(p)
    i, o = d.add_input(), d.add_output()
    d.add_edge(i, o, mul(z))
    return d


def star_diagram(p: Prime) -> Diagram:
    d = Diagram(p)
    d.add_star()
    return d


def empty_diagram(p: Prime) -> Diagram:
    return Diagram(p)


def discard_diagram(p: Prime) -> Diagram:
    """1 -> 0 discard (trace); only meaningful under the CPM semantics."""
    d = Diagram(p, cpm=True)
    i = d.add_input()
    v = d.add_vertex(VertexKind(DISCARD))
    d.add_edge(i, v)
    return d


def e_gate(p: Prime, w: int = 1) -> Diagram:
    """2 -> 2 controlled-phase E^w = sqrt(p) * (two spiders joined by h(w))."""
    d = Diagram(p)
    i1, i2 = d.add_input(), d.add_input()
    o1, o2 = d.add_output(), d.add_output()
    v1, v2 = d.add_spider(Z), d.add_spider(Z)
    d.add_edge(i1, v1)
    d.add_edge(v1, o1)
    d.add_edge(i2, v2)
    d.add_edge(v2, o2)
    d.add_edge(v1, v2, hbox(w))
    return d


def s_gate(p: Prime) -> Diagram:
    """1 -> 1 phase gate S: |m> -> omega^{2^{-1} m(m+1)} |m>."""
    return spider(p, Z, 1, 1, 1, 1)


# -- composition ---------------------------------------------------------------


def _merge_into(dst: Diagram, src: Diagram) -> dict[int, int]:
    """Copy src's vertices/edges into dst; returns the vertex id map."""
    vmap: dict[int, int] = {}
    for vid, kind in src.vertices.items():
        nid = dst._next_v
        dst._next_v += 1
        dst.vertices[nid] = kind
        vmap[vid] = nid
    for e in src.edges.values():
        eid = dst._next_e
        dst._next_e += 1
        dst.edges[eid] = Edge(vmap[e.a], vmap[e.b], e.kind)
    dst.star_count = (dst.star_count + src.star_count) % 2
    return vmap


def tensor(d1: Diagram, d2: Diagram) -> Diagram:
    """Disjoint union; boundary orders concatenate (d1's wires first)."""
    if d1.p != d2.p:
        raise DiagramError("tensor across different primes")
    out = Diagram(d1.p, cpm=d1.cpm or d2.cpm)
    m1 = _merge_into(out, d1)
    m2 = _merge_into(out, d2)
    out.inputs = [m1[v] for v in d1.inputs] + [m2[v] for v in d2.inputs]
    out.outputs = [m1[v] for v in d1.outputs] + [m2[v] for v in d2.outputs]
    _renumber_ports(out)
    return out


def _renumber_ports(d: Diagram):
    for i, v in enumerate(d.inputs):
        d.vertices[v] = VertexKind(BOUNDARY_IN, port=i)
    for i, v in enumerate(d.outputs):
        d.vertices[v] = VertexKind(BOUNDARY_OUT, port=i)


def _boundary_edge(d: Diagram, v: int) -> int:
    es = d.vertex_edges(v)
    if len(es) != 1:
        raise DiagramError("boundary vertex degree != 1")
    return es[0]


def _fuse_wire(d: Diagram, out_b: int, in_b: int):
    """Join an output boundary to an input boundary inside one diagram.

    Composes the two incident edge decorations serially.  A wire that
    closes into a spider-free loop would be a floating scalar the graph
    cannot carry, so an identity spider with a self-loop is kept instead
    (its interpretation is the trace of the loop's matrix).
    """
    e_out = d.edges[_boundary_edge(d, out_b)]
    e_in = d.edges[_boundary_edge(d, in_b)]
    # orient: u --k1--> out_b, then in_b --k2--> w
    k1 = e_out.kind if e_out.b == out_b else kind_transpose(e_out.kind, d.p)
    u = e_out.other(out_b)
    k2 = e_in.kind if e_in.a == in_b else kind_transpose(e_in.kind, d.p)
    w = e_in.other(in_b)
    kind = kind_compose(k2, k1, d.p)
    for eid in list(d.edges):
        e = d.edges[eid]
        if e.a in (out_b, in_b) or e.b in (out_b, in_b):
            del d.edges[eid]
    del d.vertices[out_b]
    del d.vertices[in_b]
    if u == in_b and w == out_b:
        # the two boundaries were joined by a single bare wire: closing it
        # yields a loop; pin it on a fresh identity spider.
        mid = d.add_spider(Z)
        d.add_edge(mid, mid, kind)
        return
    d.edges[d._next_e] = Edge(u, w, kind)
    d._next_e += 1


def compose(d1: Diagram, d2: Diagram) -> Diagram:
    """d2 after d1: connect outputs of d1 to inputs of d2 in wire order."""
    if d1.p != d2.p:
        raise DiagramError("compose across different primes")
    if len(d1.outputs) != len(d2.inputs):
        raise DiagramError(
            f"arity mismatch: {len(d1.outputs)} outputs vs {len(d2.inputs)} inputs"
        )
    out = Diagram(d1.p, cpm=d1.cpm or d2.cpm)
    m1 = _merge_into(out, d1)
    m2 = _merge_into(out, d2)
    out.inputs = [m1[v] for v in d1.inputs]
    out.outputs = [m2[v] for v in d2.outputs]
    for ob, ib in [(m1[o], m2[i]) for o, i in zip(d1.outputs, d2.inputs)]:
        _fuse_wire(out, ob, ib)
    _renumber_ports(out)
    return out


def dagger(d: Diagram) -> Diagram:
    """Adjoint: swap inputs/outputs, negate phases, h(w) -> h(-w), flip muls."""
    out = Diagram(d.p, cpm=d.cpm)
    out._next_v = d._next_v
    out._next_e = d._next_e
    for vid, k in d.vertices.items():
        if k.is_spider():
            out.vertices[vid] = VertexKind(
                k.kind, Phase(-k.phase.x % d.p.p, -k.phase.y % d.p.p)
            )
        elif k.kind == BOUNDARY_IN:
            out.vertices[vid] = VertexKind(BOUNDARY_OUT, port=k.port)
        elif k.kind == BOUNDARY_OUT:
            out.vertices[vid] = VertexKind(BOUNDARY_IN, port=k.port)
        else:
            out.vertices[vid] = k
    for eid, e in d.edges.items():
        if e.kind.kind == HKIND:
            nk = hbox((-e.kind.weight) % d.p.p)
        elif e.kind.kind == MULKIND:
            nk = e.kind
        else:
            nk = e.kind
        if e.kind.kind == MULKIND:
            out.edges[eid] = Edge(e.b, e.a, nk)  # conjugate of a real map: transpose
        else:
            out.edges[eid] = Edge(e.a, e.b, nk)
    out.inputs = list(d.outputs)
    out.outputs = list(d.inputs)
    out.star_count = d.star_count
    _renumber_ports(out)
    return out


def conjugate(d: Diagram) -> Diagram:
    """Entrywise complex conjugate: phases negate, h(w) -> h(-w), muls fixed."""
    out = d.copy()
    for vid, k in list(out.vertices.items()):
        if k.is_spider():
            out.vertices[vid] = VertexKind(
                k.kind, Phase(-k.phase.x % d.p.p, -k.phase.y % d.p.p)
            )
    for eid, e in list(out.edges.items()):
        if e.kind.kind == HKIND:
            out.edges[eid] = Edge(e.a, e.b, hbox((-e.kind.weight) % d.p.p))
    return out


def choi(d: Diagram) -> Diagram:
    """State form of a map: bend every input up to a fresh leading output.

    The bent wires appear first in the output order, in input order; on
    matrices this is a pure index reshuffle against cup states.
    """
    out = d.copy()
    new_outputs = []
    for b in out.inputs:
        k = out.vertices[b]
        eid = _boundary_edge(out, b)
        e = out.edges[eid]
        # a cup: spider joining the bent end to the new output
        v = out.add_spider(Z)
        nb = out.add_vertex(VertexKind(BOUNDARY_OUT, port=0))
        other = e.other(b)
        kind = e.kind if e.b == b else kind_transpose(e.kind, out.p)
        del out.edges[eid]
        del out.vertices[b]
        if other == b:  # self-wire input->input impossible (degree 1), skip
            raise DiagramError("malformed boundary")
        out.add_edge(other, v, kind_transpose(kind, out.p))
        out.add_edge(v, nb)
        new_outputs.append(nb)
    out.inputs = []
    out.outputs = new_outputs + out.outputs
    _renumber_ports(out)
    return out


# -- serialization --------------------------------------------------------------


def serialize(d: Diagram) -> str:
    """Canonical JSON text for a diagram; bit-exact round trip with `parse`."""
    verts = []
    for vid in sorted(d.vertices):
        k = d.vertices[vid]
        if k.is_spider():
            verts.append({"id": vid, "kind": k.kind, "phase": [k.phase.x, k.phase.y]})
        elif k.kind == DISCARD:
            verts.append({"id": vid, "kind": DISCARD})
        else:
            verts.append({"id": vid, "kind": k.kind, "port": k.port})
    edges = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        item: dict = {"a": e.a, "b": e.b}
        if e.kind.kind == PLAIN:
            item["kind"] = "plain"
        elif e.kind.kind == HKIND:
            item["kind"] = "h"
            item["w"] = e.kind.weight
        else:
            item["kind"] = "mul"
            item["z"] = e.kind.weight
        edges.append(item)
    doc = {
        "p": d.p.p,
        "vertices": verts,
        "edges": edges,
        "inputs": d.inputs,
        "outputs": d.outputs,
        "star": d.star_count,
    }
    if d.cpm:
        doc["cpm"] = True
    return json.dumps(doc)


class ParseError(ValueError):
    pass


def parse(text: str) -> Diagram:
    """Parse the JSON diagram format; raises ParseError with field context."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    try:
        p = prime(int(doc["p"]))
    except (KeyError, ModError, ValueError) as exc:
        raise ParseError(f"bad or missing modulus 'p': {exc}") from exc
    d = Diagram(p, cpm=bool(doc.get("cpm", False)))
    seen: set[int] = set()
    for i, v in enumerate(doc.get("vertices", [])):
        try:
            vid = int(v["id"])
            kind = v["kind"]
            if vid in seen:
                raise ParseError(f"vertex {i}: duplicate id {vid}")
            seen.add(vid)
            if kind in (Z, X):
                x, y = v.get("phase", [0, 0])
                d.vertices[vid] = VertexKind(kind, Phase(x % p.p, y % p.p))
            elif kind in (BOUNDARY_IN, BOUNDARY_OUT):
                d.vertices[vid] = VertexKind(kind, port=int(v.get("port", 0)))
            elif kind == DISCARD:
                if not d.cpm:
                    raise ParseError(f"vertex {i}: discard requires \"cpm\": true")
                d.vertices[vid] = VertexKind(DISCARD)
            else:
                raise ParseError(f"vertex {i}: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"vertex {i}: {exc}") from exc
    d._next_v = max(seen, default=-1) + 1
    for i, e in enumerate(doc.get("edges", [])):
        try:
            a, b = int(e["a"]), int(e["b"])
            kind = e.get("kind", "plain")
            if kind == "plain":
                ek = plain()
            elif kind == "h":
                ek = hbox(int(e["w"]) % p.p)
            elif kind == "mul":
                ek = mul(int(e["z"]) % p.p)
            else:
                raise ParseError(f"edge {i}: unknown kind {kind!r}")
            ek.validate(p)
            if a not in d.vertices or b not in d.vertices:
                raise ParseError(f"edge {i}: endpoint does not exist")
            d.edges[d._next_e] = Edge(a, b, kind_reduce(ek, p))
            d._next_e += 1
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"edge {i}: {exc}") from exc
    d.inputs = [int(v) for v in doc.get("inputs", [])]
    d.outputs = [int(v) for v in doc.get("outputs", [])]
    d.star_count = int(doc.get("star", 0)) % 2
    try:
        d.validate()
    except DiagramError as exc:
        raise ParseError(str(exc)) from exc
    return d


def to_dot(d: Diagram) -> str:
    """GraphViz rendering: green/red spiders, dashed blue h-edges, arrowed muls."""
    lines = ["graph diagram {", "  rankdir=LR;"]
    for vid in sorted(d.vertices):
        k = d.vertices[vid]
        if k.kind == Z:
            lbl = f"({k.phase.x},{k.phase.y})" if not k.phase.is_zero() else ""
            lines.append(
                f'  v{vid} [label="{lbl}", shape=circle, style=filled, fillcolor=green];'
            )
        elif k.kind == X:
            lbl = f"({k.phase.x},{k.phase.y})" if not k.phase.is_zero() else ""
            lines.append(
                f'  v{vid} [label="{lbl}", shape=circle, style=filled, fillcolor=red];'
            )
        elif k.kind == DISCARD:
            lines.append(f'  v{vid} [label="discard", shape=box];')
        else:
            tag = "in" if k.kind == BOUNDARY_IN else "out"
            lines.append(f'  v{vid} [label="{tag}{k.port}", shape=plaintext];')
    for eid in sorted(d.edges):
        e = d.edges[eid]
        if e.kind.kind == PLAIN:
            lines.append(f"  v{e.a} -- v{e.b};")
        elif e.kind.kind == HKIND:
            lines.append(
                f'  v{e.a} -- v{e.b} [style=dashed, color=blue, label="{e.kind.weight}"];'
            )
        else:
            lines.append(
                f'  v{e.a} -- v{e.b} [dir=forward, arrowhead=normal, label="{e.kind.weight}"];'
            )
    if d.star_count:
        lines.append('  star [label="*", shape=plaintext];')
    lines.append("}")
    return "\n".join(lines)
