"""Dense measures on {0,1}^n: product percolation, random-cluster measures, conditioning.

Rational measures keep *integer* unnormalised weights plus their total, so every
probability is ``Fraction(partial_sum, total)`` and nothing is ever rounded.  Float
measures keep float weights; they exist for fast pre-screening only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Callable, Iterable, Optional

from .configs import (Event, RealFunction, as_function, cluster_table, count_components,
                      event_R)
from .graphs import Graph, delete_edges, edges_meeting, iter_bits, vertex_support


class ZeroProbabilityError(ValueError):
    """Conditioning on an event of probability zero."""


@dataclass(frozen=True)
class Measure:
    """Probability measure on {0,1}^n_bits stored as unnormalised weights.

    ``graph`` is set when the coordinates are the edges of that graph (in order).
    ``labels`` optionally names the coordinates.
    """
    n_bits: int
    weights: tuple
    total: object
    graph: Optional[Graph] = field(default=None, compare=False)
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.weights) != 1 << self.n_bits:
            raise ValueError("weight vector has the wrong length")
        if not self.total > 0:
            raise ZeroProbabilityError("measure has zero total mass")

    @property
    def backend(self) -> str:
        return "float" if isinstance(self.total, float) else "rational"

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    def _ratio(self, num):
        if self.backend == "float":
            return num / self.total
        return Fraction(num, self.total) if isinstance(num, int) else Fraction(num) / self.total

    def p(self, omega: int):
        return self._ratio(self.weights[omega])

    def probabilities(self) -> list:
        return [self._ratio(w) for w in self.weights]

    def mass(self, mask: int):
        """Unnormalised weight of a configuration bitset."""
        w = self.weights
        return sum(w[i] for i in iter_bits(mask))

    def prob(self, event) -> object:
        mask = event.mask if isinstance(event, Event) else event
        return self._ratio(self.mass(mask))

    def support(self) -> int:
        m = 0
        for i, w in enumerate(self.weights):
            if w:
                m |= 1 << i
        return m

    def to_float(self) -> "Measure":
        if self.backend == "float":
            return self
        t = float(self.total)
        return Measure(self.n_bits, tuple(w / t for w in self.weights), 1.0, self.graph, self.labels)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict() if self.graph is not None else None,
            "backend": self.backend,
            "n_bits": self.n_bits,
            "weights": [str(x) for x in self.probabilities()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def from_probabilities(probs: Iterable, graph: Optional[Graph] = None, labels: tuple = ()) -> Measure:
    """Build a measure from per-configuration probabilities (Fractions, ints or floats)."""
    probs = list(probs)
    n = (len(probs) - 1).bit_length()
    if 1 << n != len(probs):
        raise ValueError("need 2**n probabilities")
    if any(isinstance(x, float) for x in probs):
        tot = float(sum(probs))
        return Measure(n, tuple(float(x) for x in probs), tot, graph, labels)
    fr = [Fraction(x) for x in probs]
    if any(x < 0 for x in fr):
        raise ValueError("negative weight")
    den = lcm(*(x.denominator for x in fr)) if fr else 1
    ints = tuple(int(x * den) for x in fr)
    return Measure(n, ints, sum(ints), graph, labels)


def measure_from_json(text: str) -> Measure:
    data = json.loads(text)
    g = Graph.from_dict(data["graph"]) if data.get("graph") else None
    vals = [Fraction(w) for w in data["weights"]]
    if data.get("backend") == "float":
        vals = [float(v) for v in vals]
    return from_probabilities(vals, graph=g)


def same_distribution(a: Measure, b: Measure) -> bool:
    """Exact equality of the normalised distributions."""
    if a.n_bits != b.n_bits:
        return False
    ta, tb = a.total, b.total
    return all(x * tb == y * ta for x, y in zip(a.weights, b.weights))


# -- constructions ---------------------------------------------------------------------------

def product_measure(g: Graph, backend: str = "rational") -> Measure:
    """Independent bond percolation: edge e open with probability p_e."""
    ws = [1]
    if backend == "float":
        ws = [1.0]
        for e in g.edges:
            p = float(e.p)
            ws = [w * (1 - p) for w in ws] + [w * p for w in ws]
        return Measure(g.n_edges, tuple(ws), float(sum(ws)), g)
    total = 1
    for e in g.edges:
        n, d = e.p.numerator, e.p.denominator
        ws = [w * (d - n) for w in ws] + [w * n for w in ws]
        total *= d
    return Measure(g.n_edges, tuple(ws), total, g)


@lru_cache(maxsize=1024)
def components_table(g: Graph) -> tuple:
    return tuple(count_components(g, omega) for omega in range(g.n_configs))


def random_cluster_measure(g: Graph, q, backend: str = "rational") -> Measure:
    """phi_{G,q}(omega) proportional to q^k(omega) * prod p_e^omega_e (1-p_e)^(1-omega_e)."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("q must be positive")
    base = product_measure(g, backend)
    ks = components_table(g)
    if backend == "float":
        qf = float(q)
        ws = tuple(w * qf ** k for w, k in zip(base.weights, ks))
        return Measure(g.n_edges, ws, float(sum(ws)), g)
    a, b = q.numerator, q.denominator
    nv = len(g.vertices)
    apow = [a ** k for k in range(nv + 1)]
    bpow = [b ** k for k in range(nv + 1)]
    ws = tuple(w * apow[k] * bpow[nv - k] for w, k in zip(base.weights, ks))
    return Measure(g.n_edges, ws, sum(ws), g)


def condition(mu: Measure, A) -> Measure:
    """mu( . | A)."""
    mask = A.mask if isinstance(A, Event) else A
    zero = 0.0 if mu.backend == "float" else 0
    ws = tuple(w if mask >> i & 1 else zero for i, w in enumerate(mu.weights))
    tot = sum(ws)
    if not tot > 0:
        raise ZeroProbabilityError(f"conditioning event {getattr(A, 'tag', '')} has probability 0")
    return Measure(mu.n_bits, ws, tot, mu.graph, mu.labels)


def expectation(mu: Measure, f) -> object:
    vals = as_function(f).values
    return mu._ratio(sum(w * v for w, v in zip(mu.weights, vals) if w))


def covariance(mu: Measure, f, g_fn) -> object:
    f, g_fn = as_function(f), as_function(g_fn)
    fg = RealFunction(f.n_edges, tuple(a * b for a, b in zip(f.values, g_fn.values)))
    return expectation(mu, fg) - expectation(mu, f) * expectation(mu, g_fn)


def pushforward(mu: Measure, key: Callable[[int], object]) -> dict:
    """Distribution of key(omega) under mu, as {value: probability}."""
    acc = {}
    for omega, w in enumerate(mu.weights):
        if w:
            k = key(omega)
            acc[k] = acc.get(k, 0) + w
    return {k: mu._ratio(v) for k, v in acc.items()}


def cluster_marginal(mu: Measure, S) -> dict:
    """Law of C_S under mu: {edge bitmask: probability}."""
    table = cluster_table(mu.graph, S)
    return pushforward(mu, table.__getitem__)


def marginal(mu: Measure, coords: Iterable[int], graph: Optional[Graph] = None,
             labels: tuple = ()) -> Measure:
    """Law of (omega_c : c in coords); new bit j is old bit coords[j]."""
    coords = tuple(coords)
    zero = 0.0 if mu.backend == "float" else 0
    ws = [zero] * (1 << len(coords))
    for omega, w in enumerate(mu.weights):
        if w:
            key = 0
            for j, c in enumerate(coords):
                key |= (omega >> c & 1) << j
            ws[key] += w
    return Measure(len(coords), tuple(ws), mu.total, graph, labels)


def indicator_measure(mu: Measure, events: list, labels: tuple = ()) -> Measure:
    """Joint law of the indicators of ``events`` as a measure on {0,1}^len(events)."""
    masks = [e.mask if isinstance(e, Event) else e for e in events]
    zero = 0.0 if mu.backend == "float" else 0
    ws = [zero] * (1 << len(masks))
    for omega, w in enumerate(mu.weights):
        if w:
            key = 0
            for j, m in enumerate(masks):
                key |= (m >> omega & 1) << j
            ws[key] += w
    return Measure(len(masks), tuple(ws), mu.total, None, labels)


def cluster_boundary(g: Graph, S, F: int) -> int:
    """Edges fixed by the event {C_S = F}: everything meeting V(F) or S."""
    return edges_meeting(g, set(vertex_support(g, F)) | set(S))


def conditional_given_cluster(mu: Measure, S, F: int) -> Measure:
    """Law under mu( . | C_S = F) of the edges away from the cluster and its boundary.

    The result lives on ``delete_edges(g, B)`` with B from :func:`cluster_boundary`.
    """
    g = mu.graph
    table = cluster_table(g, S)
    ev = 0
    for omega, c in enumerate(table):
        if c == F:
            ev |= 1 << omega
    cond = condition(mu, ev)
    B = cluster_boundary(g, S, F)
    h, kept = delete_edges(g, B)
    return marginal(cond, kept, graph=h)


def conditional_given_closed(mu: Measure, B: int) -> Measure:
    """Law of the edges outside B under mu( . | every edge of B closed)."""
    g = mu.graph
    ev = 0
    for omega in range(mu.size):
        if not omega & B:
            ev |= 1 << omega
    h, kept = delete_edges(g, B)
    return marginal(condition(mu, ev), kept, graph=h)


def condition_on_edge(mu: Measure, i: int, value: int) -> Measure:
    """Law of the other edges given omega_i = value."""
    ev = 0
    for omega in range(mu.size):
        if (omega >> i & 1) == value:
            ev |= 1 << omega
    kept = [j for j in range(mu.n_bits) if j != i]
    return marginal(condition(mu, ev), kept)


# -- the boundary-set decomposition ---------------------------------------------------------

def boundary_neighbours(g: Graph, Z) -> frozenset:
    """Vertices outside Z with an edge into Z (for oriented edges: pointing into Z)."""
    Z = g.check_vertices(Z)
    out = set()
    for e in g.edges:
        if e.head in Z and e.tail not in Z:
            out.add(e.tail)
        if not e.oriented and e.tail in Z and e.head not in Z:
            out.add(e.head)
    return frozenset(out)


def boundary_set_key(g: Graph, Z) -> Callable[[int], frozenset]:
    """omega -> the set of boundary vertices joined to Z by an open edge."""
    Z = g.check_vertices(Z)
    links = []
    for i, e in enumerate(g.edges):
        if e.head in Z and e.tail not in Z:
            links.append((i, e.tail))
        elif not e.oriented and e.tail in Z and e.head not in Z:
            links.append((i, e.head))

    def key(omega: int) -> frozenset:
        return frozenset(v for i, v in links if omega >> i & 1)
    return key


def boundary_set_distribution(g: Graph, Z) -> dict:
    """Law of the random boundary set under the product measure, over all subsets of N."""
    N = sorted(boundary_neighbours(g, Z), key=g.index.__getitem__)
    dist = pushforward(product_measure(g), boundary_set_key(g, Z))
    out = {}
    for m in range(1 << len(N)):
        sub = frozenset(v for j, v in enumerate(N) if m >> j & 1)
        out[sub] = dist.get(sub, Fraction(0))
    return out


def check_log_modular(dist: dict) -> Optional[tuple]:
    """Return a violating pair (S, T) of P(S)P(T) = P(S&T)P(S|T), or None."""
    keys = list(dist)
    for a in keys:
        for b in keys:
            if dist[a] * dist[b] != dist[a & b] * dist[a | b]:
                return (a, b)
    return None


def no_path_event(g: Graph, S, T) -> Event:
    """{S -/-> T}."""
    return event_R(g, S, T)
