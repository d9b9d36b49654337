"""Configurations, open clusters, events and monotone-structure certificates.

A configuration is an ``int`` whose bit ``i`` says whether edge ``i`` is open.  An
:class:`Event` is a bitset over all ``2**|E|`` configurations; a :class:`RealFunction`
is a dense tuple of values indexed by configuration.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional

from .graphs import Graph, GraphError, UnsupportedOperation, edges_meeting, iter_bits


class HypothesisError(ValueError):
    """A theorem hypothesis (monotonicity, positivity, graph type, ...) is not met."""


# -- clusters ------------------------------------------------------------------------------

def _source_mask(g: Graph, S) -> int:
    m = 0
    for v in g.check_vertices(S):
        m |= 1 << g.index[v]
    return m


def reached_vertices(g: Graph, omega: int, S) -> int:
    """Vertex bitmask of everything reachable from S by open, orientation-respecting paths."""
    seen = S if isinstance(S, int) else _source_mask(g, S)
    stack = list(iter_bits(seen))
    steps = g.out_steps
    while stack:
        v = stack.pop()
        for e, w in steps[v]:
            if omega >> e & 1 and not seen >> w & 1:
                seen |= 1 << w
                stack.append(w)
    return seen


def _cluster_from_reached(g: Graph, omega: int, seen: int) -> int:
    out = 0
    leaving = g.leaving_mask
    for v in iter_bits(seen):
        out |= leaving[v]
    return out & omega


def open_cluster(g: Graph, omega: int, S) -> int:
    """C_S(omega): open edges lying on open paths that start in S (edge bitmask)."""
    src = _source_mask(g, S)
    if not src:
        return 0
    return _cluster_from_reached(g, omega, reached_vertices(g, omega, src))


@lru_cache(maxsize=2048)
def _tables(g: Graph, S: frozenset) -> tuple[tuple, tuple]:
    src = _source_mask(g, S)
    reach, clus = [], []
    for omega in range(g.n_configs):
        seen = reached_vertices(g, omega, src) if src else 0
        reach.append(seen)
        clus.append(_cluster_from_reached(g, omega, seen) if src else 0)
    return tuple(reach), tuple(clus)


def cluster_table(g: Graph, S) -> tuple:
    """C_S for every configuration, as a tuple of edge bitmasks."""
    return _tables(g, g.check_vertices(S))[1]


def reach_table(g: Graph, S) -> tuple:
    """Vertex bitmask reached from S, for every configuration."""
    return _tables(g, g.check_vertices(S))[0]


def support_mask(g: Graph, F: int) -> int:
    """V(F) as a vertex bitmask."""
    out = 0
    for i in iter_bits(F):
        e = g.edges[i]
        out |= (1 << g.index[e.tail]) | (1 << g.index[e.head])
    return out


def _union_find(g: Graph, omega: int) -> tuple[list, int]:
    parent = list(range(len(g.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    k = len(parent)
    for i in iter_bits(omega):
        e = g.edges[i]
        a, b = find(g.index[e.tail]), find(g.index[e.head])
        if a != b:
            parent[b] = a
            k -= 1
    return [find(x) for x in range(len(parent))], k


def count_components(g: Graph, omega: int) -> int:
    """Connected components of (V, open edges), orientations ignored, isolated vertices counted."""
    return _union_find(g, omega)[1]


def component_masks(g: Graph, omega: int) -> list:
    """Vertex bitmasks of the components of (V, open edges), ordered by smallest vertex."""
    roots, _ = _union_find(g, omega)
    comps = {}
    for x, r in enumerate(roots):
        comps[r] = comps.get(r, 0) | 1 << x
    return sorted(comps.values(), key=lambda m: m & -m)


# -- events and functions --------------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    n_edges: int
    mask: int
    tag: str = "event"

    @property
    def n_configs(self) -> int:
        return 1 << self.n_edges

    def _full(self) -> int:
        return (1 << self.n_configs) - 1

    def __contains__(self, omega: int) -> bool:
        return bool(self.mask >> omega & 1)

    def _same(self, other: "Event"):
        if other.n_edges != self.n_edges:
            raise ValueError("events live on different configuration spaces")

    def __and__(self, other: "Event") -> "Event":
        self._same(other)
        return Event(self.n_edges, self.mask & other.mask, f"({self.tag} & {other.tag})")

    def __or__(self, other: "Event") -> "Event":
        self._same(other)
        return Event(self.n_edges, self.mask | other.mask, f"({self.tag} | {other.tag})")

    def __invert__(self) -> "Event":
        return Event(self.n_edges, self._full() & ~self.mask, f"~{self.tag}")

    def count(self) -> int:
        return bin(self.mask).count("1")

    def members(self):
        return iter_bits(self.mask)

    def indicator(self) -> "RealFunction":
        m = self.mask
        return RealFunction(self.n_edges, tuple((m >> i) & 1 for i in range(self.n_configs)),
                            f"1[{self.tag}]")

    def is_sure(self) -> bool:
        return self.mask == self._full()

    def named(self, tag: str) -> "Event":
        return replace(self, tag=tag)


def sure_event(g: Graph) -> Event:
    return Event(g.n_edges, (1 << g.n_configs) - 1, "Omega")


def event_from_predicate(g: Graph, pred: Callable[[int], bool], tag: str = "predicate") -> Event:
    m = 0
    for omega in range(g.n_configs):
        if pred(omega):
            m |= 1 << omega
    return Event(g.n_edges, m, tag)


def _event_from_table(n_edges: int, table, pred, tag: str) -> Event:
    m = 0
    for omega, val in enumerate(table):
        if pred(val):
            m |= 1 << omega
    return Event(n_edges, m, tag)


def event_reach(g: Graph, a, b) -> Event:
    """{a -> b}: an open orientation-respecting path from a to b (a == b gives Omega)."""
    g.check_vertices([a, b])
    bit = 1 << g.index[b]
    table = reach_table(g, [a])
    return _event_from_table(g.n_edges, table, lambda seen: seen & bit, f"reach({a},{b})")


def event_R(g: Graph, S, X) -> Event:
    """R_X for the source set S: no open path from S to any vertex of X."""
    xs = 0
    for x in g.check_vertices(X):
        xs |= 1 << g.index[x]
    S = g.check_vertices(S)
    table = reach_table(g, S)
    tag = f"R({','.join(sorted(map(str, S)))};{','.join(sorted(map(str, X)))})"
    return _event_from_table(g.n_edges, table, lambda seen: not seen & xs, tag)


def event_Q_disjoint_clusters(g: Graph, s, t) -> Event:
    """Q = {V(C_s) and V(C_t) disjoint}; only defined here for all-directed graphs."""
    if not g.is_directed:
        raise UnsupportedOperation("Q(s,t) is only supported on all-directed graphs")
    if s == t:
        raise GraphError("Q(s,t) needs distinct s and t")
    cs, ct = cluster_table(g, [s]), cluster_table(g, [t])
    m = 0
    for omega in range(g.n_configs):
        if not support_mask(g, cs[omega]) & support_mask(g, ct[omega]):
            m |= 1 << omega
    return Event(g.n_edges, m, f"Q({s},{t})")


def event_cluster_contains(g: Graph, S, edge) -> Event:
    i = g.edge_index(edge)
    table = cluster_table(g, S)
    return _event_from_table(g.n_edges, table, lambda c: c >> i & 1,
                             f"cluster_contains({','.join(map(str, S))};{g.edges[i].label()})")


def event_support_contains(g: Graph, S, v) -> Event:
    """{v in V(C_S)}."""
    bit = 1 << g.index[v]
    table = cluster_table(g, S)
    return _event_from_table(g.n_edges, table, lambda c: support_mask(g, c) & bit,
                             f"support_contains({','.join(map(str, S))};{v})")


def event_edge_open(g: Graph, edge) -> Event:
    i = g.edge_index(edge)
    return event_from_predicate(g, lambda w: w >> i & 1, f"open({g.edges[i].label()})")


@dataclass(frozen=True)
class RealFunction:
    n_edges: int
    values: tuple
    tag: str = "f"

    def __neg__(self) -> "RealFunction":
        return RealFunction(self.n_edges, tuple(-v for v in self.values), f"-{self.tag}")

    def __add__(self, other: "RealFunction") -> "RealFunction":
        return RealFunction(self.n_edges, tuple(a + b for a, b in zip(self.values, other.values)),
                            f"({self.tag}+{other.tag})")

    def __mul__(self, other: "RealFunction") -> "RealFunction":
        return RealFunction(self.n_edges, tuple(a * b for a, b in zip(self.values, other.values)),
                            f"({self.tag}*{other.tag})")

    def scale(self, c) -> "RealFunction":
        return RealFunction(self.n_edges, tuple(c * v for v in self.values), f"{c}*{self.tag}")


def constant_function(g: Graph, c=0) -> RealFunction:
    return RealFunction(g.n_edges, (c,) * g.n_configs, f"const({c})")


def cluster_function(g: Graph, S, fn: Callable[[int], object], tag: str = "h(C)") -> RealFunction:
    table = cluster_table(g, S)
    cache = {}
    vals = []
    for c in table:
        if c not in cache:
            cache[c] = fn(c)
        vals.append(cache[c])
    return RealFunction(g.n_edges, tuple(vals), tag)


def cluster_size(g: Graph, S) -> RealFunction:
    return cluster_function(g, S, lambda c: bin(c).count("1"), f"|C_{','.join(map(str, S))}|")


def as_function(x) -> RealFunction:
    return x.indicator() if isinstance(x, Event) else x


# -- monotone certificates ---------------------------------------------------------------------

CLAIMS = ("increasing", "decreasing", "cluster-increasing", "cluster-decreasing", "pair-monotone")


@dataclass(frozen=True)
class MonotoneCertificate:
    """A claimed monotone structure for an event or function.

    ``claim`` is one of :data:`CLAIMS`; ``S`` (and ``T`` for pair-monotone) name the source
    sets.  ``verified`` is None until :func:`verify_monotone` has run.
    """
    subject: object
    claim: str
    S: frozenset = frozenset()
    T: frozenset = frozenset()
    verified: Optional[bool] = None
    witness: Optional[tuple] = None
    reason: str = ""

    def require(self):
        if not self.verified:
            raise HypothesisError(
                f"{_subject_tag(self.subject)} is not certified {self.claim}"
                + (f" ({self.reason})" if self.reason else ""))
        return self


def _subject_tag(x) -> str:
    return getattr(x, "tag", repr(x))


def certify(subject, claim: str, S=(), T=()) -> MonotoneCertificate:
    if claim not in CLAIMS:
        raise ValueError(f"unknown claim {claim!r}")
    return MonotoneCertificate(subject, claim, frozenset(S), frozenset(T))


def _subset(a: int, b: int) -> bool:
    return not a & ~b


def verify_monotone(g: Graph, cert: MonotoneCertificate) -> MonotoneCertificate:
    """Exhaustively check the claimed structure; return the certificate with ``verified`` set."""
    vals = as_function(cert.subject).values
    if len(vals) != g.n_configs:
        raise ValueError("subject does not live on this graph's configuration space")
    claim = cert.claim
    if claim in ("increasing", "decreasing"):
        sign = 1 if claim == "increasing" else -1
        for omega in range(g.n_configs):
            for i in range(g.n_edges):
                if not omega >> i & 1:
                    up = omega | 1 << i
                    if sign * (vals[up] - vals[omega]) < 0:
                        return replace(cert, verified=False, witness=(omega, up),
                                       reason=f"value moves the wrong way from {omega} to {up}")
        return replace(cert, verified=True, witness=None, reason="")

    full = g.full_mask
    E = g.n_edges
    if claim == "cluster-increasing":
        keys = cluster_table(g, cert.S)
    elif claim == "cluster-decreasing":
        keys = tuple(full & ~k for k in cluster_table(g, cert.S))
    elif claim == "pair-monotone":
        cs, ct = cluster_table(g, cert.S), cluster_table(g, cert.T)
        keys = tuple(a | (full & ~b) << E for a, b in zip(cs, ct))
    else:
        raise ValueError(claim)

    # keys are encoded so that the claimed order is inclusion of bitmasks
    fibre = {}
    for omega, k in enumerate(keys):
        if k in fibre:
            first = fibre[k]
            if vals[first] != vals[omega]:
                return replace(cert, verified=False, witness=(first, omega),
                               reason="not determined by the cluster value")
        else:
            fibre[k] = omega
    reps = list(fibre.items())
    width = 2 * E if claim == "pair-monotone" else E
    having = [0] * width
    for j, (k, _) in enumerate(reps):
        for i in iter_bits(k):
            having[i] |= 1 << j
    everyone = (1 << len(reps)) - 1
    below = {}
    order = sorted(range(len(reps)), key=lambda j: vals[reps[j][1]])
    acc = 0
    for j in order:
        v = vals[reps[j][1]]
        below.setdefault(v, acc)
        acc |= 1 << j
    for k, w in reps:
        above = everyone
        for i in iter_bits(k):
            above &= having[i]
        bad = above & below[vals[w]]
        if bad:
            other = reps[(bad & -bad).bit_length() - 1][1]
            return replace(cert, verified=False, witness=(w, other),
                           reason="decreases along a comparable pair of cluster values")
    return replace(cert, verified=True, witness=None, reason="")


def reduce_event_off_EX(g: Graph, A: Event, s, X) -> Event:
    """The largest sub-event of A that ignores edges meeting X and agrees with A on R_X.

    Built as {omega : omega with the E_X edges forced closed lies in A}, then validated.
    """
    verify_monotone(g, certify(A, "cluster-increasing", [s])).require()
    ex = edges_meeting(g, X)
    keep = ~ex
    m = 0
    for omega in range(g.n_configs):
        if A.mask >> (omega & keep) & 1:
            m |= 1 << omega
    red = Event(g.n_edges, m, f"reduce({A.tag};{','.join(map(str, X))})")
    R = event_R(g, [s], X)
    ok = (not red.mask & ~A.mask
          and (red.mask & R.mask) == (A.mask & R.mask)
          and verify_monotone(g, certify(red, "cluster-increasing", [s])).verified)
    if not ok:
        raise AssertionError("reduced event failed validation")
    return red


# -- string expressions used by the command line --------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z_0-9]*)\s*\((?P<args>[^()]*)\)|(?P<op>[&|~()!-]))")


def _split_args(text: str):
    head, _, tail = text.partition(";")
    first = [a.strip() for a in head.split(",") if a.strip()]
    rest = [a.strip() for a in tail.split(",") if a.strip()] if tail else []
    return first, rest, ";" in text


def _atom(g: Graph, name: str, argtext: str):
    first, rest, semi = _split_args(argtext)
    if name == "reach":
        if len(first) != 2:
            raise ValueError("reach(a,b) takes two vertices")
        return event_reach(g, first[0], first[1])
    if name == "R":
        return event_R(g, first, rest)
    if name == "Q":
        return event_Q_disjoint_clusters(g, first[0], first[1])
    if name == "cluster_contains":
        return event_cluster_contains(g, first, rest[0])
    if name == "support_contains":
        return event_support_contains(g, first, rest[0])
    if name == "open":
        return event_edge_open(g, first[0])
    if name == "cluster_size":
        return cluster_size(g, first)
    raise ValueError(f"unknown event constructor {name!r}")


def parse_expression(g: Graph, text: str):
    """Parse ``reach(s,a) & ~R(s;t,b)``-style text into an Event (or RealFunction).

    Grammar: ``expr := term ('|' term)*``, ``term := factor ('&' factor)*``,
    ``factor := ('~'|'!') factor | '-' factor | '(' expr ')' | name(args)``.
    ``Omega`` is accepted as the sure event; ``-`` negates a function.
    """
    text = text.replace("Omega", "omega_()")
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse expression at {text[pos:]!r}")
        tokens.append(("atom", m.group("name"), m.group("args")) if m.group("name")
                      else ("op", m.group("op")))
        pos = m.end()
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else None

    def take():
        nonlocal i
        if i >= len(tokens):
            raise ValueError("expression ends too early")
        i += 1
        return tokens[i - 1]

    def factor():
        tok = take()
        if tok[0] == "op" and tok[1] in "~!":
            return ~_as_event(factor())
        if tok[0] == "op" and tok[1] == "-":
            return -as_function(factor())
        if tok[0] == "op" and tok[1] == "(":
            val = expr()
            if take() != ("op", ")"):
                raise ValueError("unbalanced parentheses")
            return val
        if tok[0] == "atom":
            if tok[1] == "omega_":
                return sure_event(g)
            return _atom(g, tok[1], tok[2])
        raise ValueError(f"unexpected token {tok}")

    def term():
        val = factor()
        while peek() == ("op", "&"):
            take()
            val = _as_event(val) & _as_event(factor())
        return val

    def expr():
        val = term()
        while peek() == ("op", "|"):
            take()
            val = _as_event(val) | _as_event(term())
        return val

    out = expr()
    if i != len(tokens):
        raise ValueError("trailing tokens in expression")
    return out


def _as_event(x) -> Event:
    if not isinstance(x, Event):
        raise ValueError("boolean operators need events, not functions")
    return x
