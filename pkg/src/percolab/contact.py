"""Finite contact processes: exact transient laws and a layered space-time approximation.

States are site bitmasks (bit i set means ``sites[i]`` is infected).  Transient laws are
float vectors computed by uniformization with a certified bound on the truncated Poisson
tail, so every check here carries an explicit numerical tolerance.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .configs import HypothesisError, event_R, event_reach, reach_table
from .graphs import Edge, Graph
from .measures import Measure, condition, indicator_measure, marginal, product_measure
from .order import Verdict, check_positive_association
from .theorems import Report

SITE_CAP = 10
TAIL_BOUND = 1e-12
RATIONAL_DENOMINATOR = 10 ** 6


def _rate(x) -> Fraction:
    r = Fraction(x) if not isinstance(x, str) else Fraction(x.strip())
    if r < 0:
        raise ValueError("rates must be non-negative")
    return r


@dataclass(frozen=True)
class ContactSpec:
    """Recovery rates ``delta[x]``; ``lam[(x, y)]`` is the rate at which an infected y infects x."""
    sites: tuple
    delta: dict
    lam: dict
    eta0: int

    def __post_init__(self):
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("duplicate sites")
        if len(self.sites) > SITE_CAP:
            raise ValueError(f"{len(self.sites)} sites exceeds the budget {SITE_CAP}")
        for x in self.sites:
            if x not in self.delta:
                raise ValueError(f"no recovery rate for site {x!r}")
        for (x, y), r in self.lam.items():
            if x not in self.index or y not in self.index or x == y:
                raise ValueError(f"bad infection pair {(x, y)!r}")
        if not 0 <= self.eta0 < 1 << len(self.sites):
            raise ValueError("initial configuration out of range")

    @property
    def index(self) -> dict:
        return {x: i for i, x in enumerate(self.sites)}

    @property
    def n_states(self) -> int:
        return 1 << len(self.sites)

    def mask(self, xs: Iterable) -> int:
        idx = self.index
        m = 0
        for x in xs:
            if x not in idx:
                raise ValueError(f"unknown site {x!r}")
            m |= 1 << idx[x]
        return m

    def to_dict(self) -> dict:
        return {
            "sites": list(self.sites),
            "delta": {x: str(self.delta[x]) for x in self.sites},
            "lambda": [[x, y, str(r)] for (x, y), r in sorted(self.lam.items()) if r],
            "eta0": [x for i, x in enumerate(self.sites) if self.eta0 >> i & 1],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ContactSpec":
        sites = tuple(str(x) for x in data["sites"])
        delta = {str(x): _rate(r) for x, r in data["delta"].items()}
        lam = {}
        for x, y, r in data.get("lambda", []):
            lam[(str(x), str(y))] = _rate(r)
        idx = {x: i for i, x in enumerate(sites)}
        eta0 = 0
        for x in data.get("eta0", sites):
            eta0 |= 1 << idx[str(x)]
        return cls(sites, delta, lam, eta0)

    @classmethod
    def from_json(cls, text: str) -> "ContactSpec":
        return cls.from_dict(json.loads(text))


def contact_spec(sites, delta=1, lam=1, edges=None, eta0=None) -> ContactSpec:
    """Uniform rates; ``edges`` lists unordered neighbour pairs (default: a path)."""
    sites = tuple(sites)
    if edges is None:
        edges = list(zip(sites, sites[1:]))
    rates = {}
    for x, y in edges:
        rates[(x, y)] = _rate(lam)
        rates[(y, x)] = _rate(lam)
    idx = {x: i for i, x in enumerate(sites)}
    init = (1 << len(sites)) - 1 if eta0 is None else sum(1 << idx[x] for x in eta0)
    return ContactSpec(sites, {x: _rate(delta) for x in sites}, rates, init)


# -- the exact chain --------------------------------------------------------------------------

def build_generator(spec: ContactSpec) -> list:
    """Sparse rate matrix: row eta -> list of (eta', rate) with rate > 0, eta' != eta."""
    idx = spec.index
    infect = [[] for _ in spec.sites]
    for (x, y), r in spec.lam.items():
        if r:
            infect[idx[x]].append((idx[y], r))
    rows = []
    for eta in range(spec.n_states):
        row = []
        for i, x in enumerate(spec.sites):
            if eta >> i & 1:
                if spec.delta[x]:
                    row.append((eta & ~(1 << i), spec.delta[x]))
            else:
                r = sum(rate for j, rate in infect[i] if eta >> j & 1)
                if r:
                    row.append((eta | 1 << i, r))
        rows.append(row)
    return rows


@dataclass
class CtmcDistribution:
    spec: ContactSpec
    t: float
    probs: list
    error_bound: float
    terms: int = 0

    def prob(self, pred) -> float:
        return math.fsum(p for eta, p in enumerate(self.probs) if pred(eta))

    def site_marginal(self, x) -> float:
        i = self.spec.index[x]
        return self.prob(lambda eta: eta >> i & 1)

    def as_measure(self) -> Measure:
        return Measure(len(self.spec.sites), tuple(self.probs), math.fsum(self.probs),
                       labels=self.spec.sites)


def _poisson_weights(lt: float, tail: float) -> tuple[list, float]:
    """Poisson(lt) pmf up to K with a certified bound on the mass beyond K."""
    if lt == 0:
        return [1.0], 0.0
    logp = -lt
    weights = [math.exp(logp)]
    k = 0
    while True:
        k += 1
        logp += math.log(lt) - math.log(k)
        weights.append(math.exp(logp))
        if k + 2 > lt:
            # terms beyond k shrink at least geometrically by lt/(k+2)
            bound = weights[-1] * (lt / (k + 1)) / (1 - lt / (k + 2))
            if bound <= tail:
                return weights, bound


def transient_distribution(spec: ContactSpec, t, tail: float = TAIL_BOUND) -> CtmcDistribution:
    """Law of eta_t started from eta0, by uniformization."""
    t = float(t)
    rows = build_generator(spec)
    exit_rates = [float(sum(r for _, r in row)) for row in rows]
    lam = max(exit_rates + [0.0])
    pi = [0.0] * spec.n_states
    pi[spec.eta0] = 1.0
    if lam == 0 or t == 0:
        return CtmcDistribution(spec, t, pi, 0.0, 0)
    jump = [[(j, float(r) / lam) for j, r in row] for row in rows]
    stay = [1 - e / lam for e in exit_rates]
    weights, bound = _poisson_weights(lam * t, tail)
    acc = [0.0] * spec.n_states
    vec = pi
    for k, w in enumerate(weights):
        for i, v in enumerate(vec):
            acc[i] += w * v
        if k + 1 < len(weights):
            nxt = [v * s for v, s in zip(vec, stay)]
            for i, v in enumerate(vec):
                if v:
                    for j, r in jump[i]:
                        nxt[j] += v * r
            vec = nxt
    # rounding in the accumulation is far below the tail bound at these sizes
    return CtmcDistribution(spec, t, acc, bound + 1e-15 * len(weights), len(weights))


def transient_by_exponential(spec: ContactSpec, t) -> list:
    """exp(tQ) applied to the start state via scaling and squaring of a Taylor series.

    Independent of the uniformization route; dense, so meant for a handful of sites.
    """
    n = spec.n_states
    if n > 64:
        raise ValueError("dense exponential is for small instances")
    rows = build_generator(spec)
    Q = [[0.0] * n for _ in range(n)]
    for i, row in enumerate(rows):
        for j, r in row:
            Q[i][j] += float(r)
            Q[i][i] -= float(r)
    t = float(t)
    norm = max((sum(abs(v) for v in row) for row in Q), default=0.0) * t
    s = max(0, math.ceil(math.log2(norm / 0.25))) if norm > 0.25 else 0
    A = [[v * t / 2 ** s for v in row] for row in Q]

    def mul(X, Y):
        return [[math.fsum(X[i][k] * Y[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    E = [[float(i == j) for j in range(n)] for i in range(n)]
    term = [row[:] for row in E]
    for k in range(1, 30):
        term = mul(term, A)
        term = [[v / k for v in row] for row in term]
        E = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(E, term)]
    for _ in range(s):
        E = mul(E, E)
    return E[spec.eta0][:]


# -- association at finite times ----------------------------------------------------------------

def _conditioned(dist: CtmcDistribution, W: int, value: int) -> tuple[Measure, float]:
    probs = dist.probs
    keep = [p if ((eta & W) == (W if value else 0)) else 0.0 for eta, p in enumerate(probs)]
    mass = math.fsum(keep)
    if mass <= 0:
        raise ValueError("conditioning event has probability zero")
    return Measure(len(dist.spec.sites), tuple(keep), mass), mass


def check_thm_contact(spec: ContactSpec, t, W: Iterable = (), strategy: str = "exhaustive",
                      condition_on: int = 0, seed: int = 0) -> Verdict:
    """(eta_t(x) : x not in W) is positively associated given eta_t = ``condition_on`` on W.

    The tolerance scales the truncation bound by the inverse conditioning mass.
    """
    W = spec.mask(W)
    dist = transient_distribution(spec, t)
    mu, mass = _conditioned(dist, W, condition_on)
    free = [i for i in range(len(spec.sites)) if not W >> i & 1]
    if not free:
        return Verdict(True, detail="no free sites")
    nu = marginal(mu, free, labels=tuple(spec.sites[i] for i in free))
    tol = 8 * dist.error_bound / mass
    v = check_positive_association(nu, strategy, max_coords=5, seed=seed, tol=tol)
    v.data["tolerance"] = tol
    v.data["conditioning_mass"] = mass
    return v


def zero_set_probability(dist: CtmcDistribution, M: int) -> float:
    """P(eta_t = 0 on M)."""
    return dist.prob(lambda eta: not eta & M)


class ToleranceReport(Report):
    """Report whose verdict allows a numerical slack of -tol."""

    def __init__(self, *args, tol: float = 0.0, **kwargs):
        super().__init__(*args, **kwargs)
        self.extra["tolerance"] = tol

    @property
    def holds(self) -> bool:
        return self.slack >= -self.extra["tolerance"]


def _is_monotone_on(event: int, free: int, n: int, increasing: bool) -> bool:
    for eta in range(1 << n):
        if event >> eta & 1:
            for i in range(n):
                if not free >> i & 1:
                    continue
                other = eta ^ (1 << i)
                if not event >> other & 1:
                    up = other > eta
                    if up == increasing:
                        return False
    return True


def _determined_by(event: int, free: int, n: int) -> bool:
    for eta in range(1 << n):
        for i in range(n):
            if not free >> i & 1:
                other = eta ^ (1 << i)
                if (event >> eta & 1) != (event >> other & 1):
                    return False
    return True


def zero_event(spec: ContactSpec, M: Iterable) -> int:
    """Bitset over site configurations of {eta = 0 on M}."""
    m = spec.mask(M)
    out = 0
    for eta in range(spec.n_states):
        if not eta & m:
            out |= 1 << eta
    return out


def check_eq_14_15(spec: ContactSpec, t, K=None, L=None, W=None, A: Optional[int] = None,
                   B: Optional[int] = None) -> Report:
    """Finite-time forms of the zero-set inequalities, started from all sites infected.

    With K, L: nu_t(K & L) nu_t(K | L) >= nu_t(K) nu_t(L), nu_t(M) = P(eta_t = 0 on M).
    With W, A, B (site-configuration bitsets, both increasing or both decreasing off W):
    nu_t(AB | eta = 0 on W) >= nu_t(A | .) nu_t(B | .).
    """
    full = (1 << len(spec.sites)) - 1
    spec_all = ContactSpec(spec.sites, spec.delta, spec.lam, full)
    dist = transient_distribution(spec_all, t)
    n = len(spec.sites)
    if K is not None:
        k, l = spec.mask(K), spec.mask(L)
        lhs = zero_set_probability(dist, k) * zero_set_probability(dist, l)
        rhs = zero_set_probability(dist, k & l) * zero_set_probability(dist, k | l)
        params = {"form": "zero-sets", "t": str(t), "K": sorted(K), "L": sorted(L)}
        return ToleranceReport("E-contact", spec_all, params, lhs, rhs, tol=4 * dist.error_bound)
    w = spec.mask(W or ())
    free = full & ~w
    incs = [_is_monotone_on(ev, free, n, True) for ev in (A, B)]
    decs = [_is_monotone_on(ev, free, n, False) for ev in (A, B)]
    if not all(_determined_by(ev, free, n) for ev in (A, B)):
        raise HypothesisError("events must be determined by the sites outside W")
    if not (all(incs) or all(decs)):
        raise HypothesisError("events must be both increasing or both decreasing")
    mu, mass = _conditioned(dist, w, 0)
    pa = mu.prob(A)
    pb = mu.prob(B)
    pab = mu.prob(A & B)
    params = {"form": "conditional", "t": str(t), "W": sorted(W or ()), "A": hex(A), "B": hex(B)}
    return ToleranceReport("E-contact", spec_all, params, pa * pb, pab,
                           tol=8 * dist.error_bound / mass)


def limit_zero_set_report(spec: ContactSpec, K, L) -> Report:
    """The t -> infinity law on finitely many sites is the all-healthy point mass."""
    if not all(spec.delta[x] > 0 for x in spec.sites):
        raise ValueError("needs positive recovery rates everywhere")
    params = {"form": "limit", "K": sorted(K), "L": sorted(L)}
    return Report("E-contact", spec, params, Fraction(1), Fraction(1))


# -- the layered space-time approximation --------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeGraph:
    """Layers 0..n of the sites; edge probabilities as floats, p = 1 edges listed as sure."""
    spec: ContactSpec
    t: float
    n: int
    vertical: tuple          # per site: probability the site keeps its state across a step
    infection: dict          # (x index, y index) -> probability y passes infection to x in a step
    sure_edges: tuple = field(default=())

    @property
    def dt(self) -> float:
        return self.t / self.n

    def vertex(self, x: str, k: int) -> str:
        return f"{x}@{k}"

    def edge_list(self) -> list:
        """[(tail, head, p)] over all layers, sure edges included."""
        out = []
        sites = self.spec.sites
        for k in range(self.n):
            for i, x in enumerate(sites):
                out.append((self.vertex(x, k), self.vertex(x, k + 1), self.vertical[i]))
            for (i, j), p in sorted(self.infection.items()):
                out.append((self.vertex(sites[j], k), self.vertex(sites[i], k + 1), p))
        return [e for e in out if e[2] > 0]

    def as_graph(self, denominator: int = RATIONAL_DENOMINATOR, edge_cap: int = 24) -> Graph:
        """Oriented Graph with rationalised probabilities; needs every edge probability < 1."""
        edges = []
        for a, b, p in self.edge_list():
            if p >= 1:
                raise ValueError("sure edges cannot be stored in a Graph")
            r = Fraction(p).limit_denominator(denominator)
            if r <= 0 or r >= 1:
                raise ValueError("edge probability rounds out of (0, 1)")
            edges.append(Edge(a, b, True, r))
        verts = tuple(self.vertex(x, k) for k in range(self.n + 1) for x in self.spec.sites)
        return Graph(verts, tuple(edges), edge_cap=edge_cap)

    def sources(self) -> list:
        return [self.vertex(x, 0) for i, x in enumerate(self.spec.sites) if self.spec.eta0 >> i & 1]


def discretize(spec: ContactSpec, t, n: int) -> SpaceTimeGraph:
    if n < 1:
        raise ValueError("need at least one step")
    dt = float(t) / n
    idx = spec.index
    vertical = tuple(math.exp(-float(spec.delta[x]) * dt) for x in spec.sites)
    infection = {}
    for (x, y), r in spec.lam.items():
        if r:
            infection[(idx[x], idx[y])] = 1 - math.exp(-float(r) * dt)
    sure = tuple(x for x, p in zip(spec.sites, vertical) if p >= 1)
    return SpaceTimeGraph(spec, float(t), n, vertical, infection, sure)


def layer_law(stg: SpaceTimeGraph) -> list:
    """Law of the set of layer-n sites reachable from the infected layer-0 sites.

    Layer to layer the arrival events at different sites use disjoint edges, so the
    transfer is exact.
    """
    m = len(stg.spec.sites)
    into = [[(j, p) for (i2, j), p in stg.infection.items() if i2 == i] for i in range(m)]
    dist = [0.0] * (1 << m)
    dist[stg.spec.eta0] = 1.0
    for _ in range(stg.n):
        nxt = [0.0] * (1 << m)
        for A, pa in enumerate(dist):
            if not pa:
                continue
            hit = []
            for i in range(m):
                miss = 1 - stg.vertical[i] if A >> i & 1 else 1.0
                for j, p in into[i]:
                    if A >> j & 1:
                        miss *= 1 - p
                hit.append(1 - miss)
            for B in range(1 << m):
                pb = pa
                for i in range(m):
                    pb *= hit[i] if B >> i & 1 else 1 - hit[i]
                    if not pb:
                        break
                nxt[B] += pb
        dist = nxt
    return dist


def layer_law_bruteforce(stg: SpaceTimeGraph) -> list:
    """Same law by enumerating every configuration of the layered digraph."""
    g = stg.as_graph(denominator=10 ** 12)
    edges = stg.edge_list()
    mu = [1.0]
    for _, _, p in edges:
        mu = [w * (1 - p) for w in mu] + [w * p for w in mu]
    m = len(stg.spec.sites)
    src = stg.sources()
    targets = [stg.vertex(x, stg.n) for x in stg.spec.sites]
    table = reach_table(g, frozenset(src))
    tbits = [1 << g.index[v] for v in targets]
    out = [0.0] * (1 << m)
    for om, w in enumerate(mu):
        r = table[om]
        B = 0
        for i, b in enumerate(tbits):
            if r & b:
                B |= 1 << i
        out[B] += w
    return out


def site_marginals(law: list, m: int) -> list:
    return [math.fsum(p for A, p in enumerate(law) if A >> i & 1) for i in range(m)]


def check_discretization(spec: ContactSpec, t, schedule=(2, 4, 8), band=(1.5, 3.0)) -> dict:
    """Errors of the layered marginals against the exact chain, and their halving ratios."""
    exact = transient_distribution(spec, t)
    m = len(spec.sites)
    truth = [exact.site_marginal(x) for x in spec.sites]
    errors = []
    for n in schedule:
        approx = site_marginals(layer_law(discretize(spec, t, n)), m)
        errors.append(max(abs(a - b) for a, b in zip(approx, truth)))
    ratios = [a / b if b else math.inf for a, b in zip(errors, errors[1:])]
    ok = all(band[0] <= r <= band[1] for r in ratios)
    return {"schedule": list(schedule), "errors": errors, "ratios": ratios, "band": list(band),
            "exact_marginals": truth, "pass": ok}


def check_discrete_association(stg: SpaceTimeGraph, W: Iterable = (), strategy: str = "exhaustive") -> Verdict:
    """Arrival indicators at the free last-layer sites, given no arrival at W, are associated.

    Exact rational check on the layered digraph (probabilities rationalised).
    """
    g = stg.as_graph()
    src = stg.sources()
    W = list(W)
    Wv = [stg.vertex(x, stg.n) for x in W]
    free = [x for x in stg.spec.sites if x not in W]
    mu = product_measure(g)
    if Wv:
        mu = condition(mu, event_R(g, src, Wv))
    events = []
    for x in free:
        ev = 0
        tgt = stg.vertex(x, stg.n)
        for s in src:
            ev |= event_reach(g, s, tgt).mask
        events.append(ev)
    if not events or not src:
        return Verdict(True, detail="empty collection")
    nu = indicator_measure(mu, events, labels=tuple(free))
    return check_positive_association(nu, strategy, max_coords=5)
