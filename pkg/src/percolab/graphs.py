"""Finite graphs with mixed edge orientations and per-edge open probabilities.

Edge subsets are plain ``int`` bitmasks over the graph's canonical edge order:
bit ``i`` set means edge ``i`` is in the set.  Vertex sets are ``frozenset``s of
vertex ids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator

DEFAULT_EDGE_CAP = 20
HARD_EDGE_CAP = 24


class GraphError(ValueError):
    """Malformed graph or invalid graph-surgery request."""


class UnsupportedOperation(GraphError):
    pass


def parse_probability(value) -> Fraction:
    """Accept ``"1/3"``, ``"0.25"``, ints, floats or Fractions; return an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"bad probability {value!r}") from exc
    raise GraphError(f"bad probability {value!r}")


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    oriented: bool = False
    p: Fraction = Fraction(1, 2)

    def ends(self) -> tuple[str, str]:
        return (self.tail, self.head)

    def label(self) -> str:
        return f"{self.tail}{'>' if self.oriented else '-'}{self.head}"


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    edges: tuple
    edge_cap: int = field(default=DEFAULT_EDGE_CAP, compare=False)

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(set(verts)) != len(verts):
            raise GraphError("duplicate vertex ids")
        if not 0 < self.edge_cap <= HARD_EDGE_CAP:
            raise GraphError(f"edge cap must lie in 1..{HARD_EDGE_CAP}")
        pos = {v: i for i, v in enumerate(verts)}
        canon = []
        for e in self.edges:
            if not isinstance(e, Edge):
                e = Edge(*e)
            if e.tail not in pos or e.head not in pos:
                raise GraphError(f"edge {e.label()} has an undeclared endpoint")
            if e.tail == e.head:
                raise GraphError(f"self-loop at {e.tail!r} rejected")
            p = parse_probability(e.p)
            if not 0 < p < 1:
                raise GraphError(f"edge {e.label()}: need 0 < p < 1, got {p}")
            tail, head = e.tail, e.head
            if not e.oriented and pos[tail] > pos[head]:
                tail, head = head, tail
            canon.append(Edge(tail, head, bool(e.oriented), p))
        if len(canon) > self.edge_cap:
            raise GraphError(f"{len(canon)} edges exceeds the edge cap {self.edge_cap}")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(canon))

    # -- basic views ---------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_configs(self) -> int:
        return 1 << len(self.edges)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.edges)) - 1

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def directedness(self) -> str:
        kinds = {e.oriented for e in self.edges}
        if kinds == {True}:
            return "directed"
        if kinds == {True, False}:
            return "mixed"
        return "undirected"

    @property
    def is_undirected(self) -> bool:
        """No oriented edge (vacuously true without edges)."""
        return not any(e.oriented for e in self.edges)

    @property
    def is_directed(self) -> bool:
        """Every edge oriented (vacuously true without edges)."""
        return all(e.oriented for e in self.edges)

    @cached_property
    def out_steps(self) -> tuple:
        """Per vertex index: tuple of (edge index, neighbour index) traversable from it."""
        steps = [[] for _ in self.vertices]
        for i, e in enumerate(self.edges):
            a, b = self.index[e.tail], self.index[e.head]
            steps[a].append((i, b))
            if not e.oriented:
                steps[b].append((i, a))
        return tuple(tuple(s) for s in steps)

    @cached_property
    def leaving_mask(self) -> tuple:
        """Per vertex index: bitmask of edges that can be traversed starting at that vertex."""
        return tuple(sum(1 << i for i, _ in s) for s in self.out_steps)

    @cached_property
    def incident_mask(self) -> tuple:
        masks = [0] * len(self.vertices)
        for i, e in enumerate(self.edges):
            masks[self.index[e.tail]] |= 1 << i
            masks[self.index[e.head]] |= 1 << i
        return tuple(masks)

    def check_vertices(self, vs: Iterable) -> frozenset:
        vs = frozenset(vs)
        unknown = vs - set(self.vertices)
        if unknown:
            raise GraphError(f"unknown vertex ids: {sorted(map(str, unknown))}")
        return vs

    def edge_index(self, spec) -> int:
        """Resolve an edge given as an index or as ``"u-v"`` / ``"u>v"``."""
        if isinstance(spec, int):
            if not 0 <= spec < self.n_edges:
                raise GraphError(f"edge index {spec} out of range")
            return spec
        text = str(spec).strip()
        sep = ">" if ">" in text else "-"
        u, _, v = text.partition(sep)
        u, v = u.strip(), v.strip()
        for i, e in enumerate(self.edges):
            if (e.tail, e.head) == (u, v) or (not e.oriented and (e.head, e.tail) == (u, v)):
                return i
        raise GraphError(f"no edge {text!r}")

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "edges": [
                {"tail": e.tail, "head": e.head, "oriented": e.oriented, "p": str(e.p)}
                for e in self.edges
            ],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict, edge_cap: int = DEFAULT_EDGE_CAP) -> "Graph":
        try:
            verts = tuple(str(v) for v in data["vertices"])
            edges = tuple(
                Edge(str(e["tail"]), str(e["head"]), bool(e.get("oriented", False)),
                     parse_probability(e.get("p", "1/2")))
                for e in data["edges"]
            )
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc
        return cls(verts, edges, edge_cap=edge_cap)

    @classmethod
    def from_json(cls, text: str, edge_cap: int = DEFAULT_EDGE_CAP) -> "Graph":
        return cls.from_dict(json.loads(text), edge_cap=edge_cap)


def graph(vertices, edges, p=Fraction(1, 2), oriented=False, edge_cap=DEFAULT_EDGE_CAP) -> Graph:
    """Shorthand: ``graph("svt", ["sv", "vt"])`` builds the path s-v-t.

    Each edge may be a 2-string/2-tuple (uses the default ``p``/``oriented``) or an ``Edge``.
    """
    es = []
    for e in edges:
        if isinstance(e, Edge):
            es.append(e)
        else:
            es.append(Edge(e[0], e[1], oriented, parse_probability(p)))
    return Graph(tuple(vertices), tuple(es), edge_cap=edge_cap)


# -- edge-set helpers ------------------------------------------------------------

def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def edge_mask(g: Graph, edges: Iterable) -> int:
    m = 0
    for e in edges:
        m |= 1 << g.edge_index(e)
    return m


def edges_meeting(g: Graph, X: Iterable) -> int:
    """E_X: edges with at least one endpoint in X."""
    m = 0
    for v in g.check_vertices(X):
        m |= g.incident_mask[g.index[v]]
    return m


def vertex_support(g: Graph, F: int) -> frozenset:
    out = set()
    for i in iter_bits(F):
        out.update(g.edges[i].ends())
    return frozenset(out)


def closure(g: Graph, F: int) -> int:
    """F together with every edge sharing a vertex with some edge of F (one step, not iterated)."""
    return F | edges_meeting(g, vertex_support(g, F))


def _check_subset(g: Graph, F: int):
    if F < 0 or F & ~g.full_mask:
        raise GraphError("edge set refers to edges outside the graph")


def delete_edges(g: Graph, F: int) -> tuple[Graph, tuple]:
    """Remove the edges in F. Returns the new graph and, per new edge, its old index."""
    _check_subset(g, F)
    kept = tuple(i for i in range(g.n_edges) if not F >> i & 1)
    return Graph(g.vertices, tuple(g.edges[i] for i in kept), edge_cap=g.edge_cap), kept


def contract_edges(g: Graph, F: int) -> tuple[Graph, tuple]:
    """Identify the endpoints of every edge of F.

    Each merged class is named after its first vertex in canonical order. Edges that become
    self-loops are dropped, parallel edges survive with their own p.
    """
    _check_subset(g, F)
    if any(g.edges[i].oriented for i in iter_bits(F)):
        raise UnsupportedOperation("contraction of oriented edges is not supported")
    parent = list(range(len(g.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in iter_bits(F):
        a, b = find(g.index[g.edges[i].tail]), find(g.index[g.edges[i].head])
        if a != b:
            parent[max(a, b)] = min(a, b)
    rep = [g.vertices[find(i)] for i in range(len(g.vertices))]
    verts = tuple(v for i, v in enumerate(g.vertices) if find(i) == i)
    kept, new_edges = [], []
    for i, e in enumerate(g.edges):
        if F >> i & 1:
            continue
        a, b = rep[g.index[e.tail]], rep[g.index[e.head]]
        if a == b:
            continue
        kept.append(i)
        new_edges.append(Edge(a, b, e.oriented, e.p))
    return Graph(verts, tuple(new_edges), edge_cap=g.edge_cap), tuple(kept)


def identify_vertices(g: Graph, X: Iterable, name=None) -> tuple[Graph, tuple]:
    """Merge the vertex set X into one vertex, dropping edges internal to X.

    Unlike ``contract_edges`` this needs no edge between the members of X and works for
    oriented edges too. Returns the new graph and the old index of every surviving edge.
    """
    X = g.check_vertices(X)
    if not X:
        return g, tuple(range(g.n_edges))
    first = min(X, key=g.index.__getitem__)
    name = first if name is None else name
    if name in g.vertices and name not in X:
        raise GraphError(f"merged name {name!r} clashes with an existing vertex")
    verts = []
    for v in g.vertices:
        if v in X:
            if v == first:
                verts.append(name)
        else:
            verts.append(v)
    kept, new_edges = [], []
    for i, e in enumerate(g.edges):
        a = name if e.tail in X else e.tail
        b = name if e.head in X else e.head
        if a == b:
            continue
        kept.append(i)
        new_edges.append(Edge(a, b, e.oriented, e.p))
    return Graph(tuple(verts), tuple(new_edges), edge_cap=g.edge_cap), tuple(kept)


# -- named fixtures ------------------------------------------------------------

FIXTURES = {
    "edge": lambda: graph("st", ["st"]),
    "path": lambda: graph("svt", ["sv", "vt"]),
    "triangle": lambda: graph("stu", ["st", "tu", "su"]),
    "cycle4": lambda: graph("satb", ["sa", "at", "tb", "bs"]),
    "k4": lambda: graph("stab", ["st", "sa", "sb", "ta", "tb", "ab"]),
    "star": lambda: graph("stab", ["sa", "sb", "st"]),
    "counterexample": lambda: graph("stva", ["sv", "tv", "va"], oriented=True),
    "layered": lambda: graph("swzxy", ["sw", "sz", "wx", "wy", "zx", "zy"], oriented=True),
}


def fixture(name: str) -> Graph:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise GraphError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
