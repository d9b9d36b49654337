"""Seeded random instances for every checker, and campaigns that sweep them.

Instance i of campaign c under seed k draws everything from ``Random(f"{k}:{c}:{i}")``,
so any single instance can be regenerated in isolation and reruns are byte-identical.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .configs import Event, RealFunction, cluster_table, event_Q_disjoint_clusters, event_R, event_reach
from .graphs import Edge, Graph
from .measures import condition, from_probabilities, product_measure
from .contact import ContactSpec, check_thm_contact
from .order import (check_dominance, check_dominance_upsets, check_lattice_condition,
                    check_positive_association, effective_coordinates)
from . import theorems as th

P_CHOICES = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4))
Q_CHOICES = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))
NAMES = ("s", "t", "a", "b", "c", "d")
MAX_VERTICES = 6
MAX_EDGES = 10


def random_graph(rng: random.Random, kind: str = "undirected", min_vertices: int = 2,
                 max_vertices: int = MAX_VERTICES, max_edges: int = MAX_EDGES) -> Graph:
    """Random multigraph on s, t, a, ...; ``kind`` is undirected, directed or mixed."""
    n = rng.randint(min_vertices, max_vertices)
    verts = NAMES[:n]
    pairs = []
    if rng.random() < 0.8:
        # start from a random spanning tree so that most instances are connected
        for i in range(1, n):
            pairs.append((verts[rng.randrange(i)], verts[i]))
    m = rng.randint(len(pairs), max(len(pairs), max_edges))
    while len(pairs) < m:
        pairs.append(tuple(rng.sample(verts, 2)))
    edges = []
    for u, v in pairs:
        if rng.random() < 0.5:
            u, v = v, u
        oriented = kind == "directed" or (kind == "mixed" and rng.random() < 0.5)
        edges.append(Edge(u, v, oriented, rng.choice(P_CHOICES)))
    return Graph(verts, tuple(edges))


def random_subset(rng: random.Random, pool, min_size: int = 0, max_size: int = None) -> frozenset:
    pool = list(pool)
    hi = len(pool) if max_size is None else min(max_size, len(pool))
    k = rng.randint(min(min_size, hi), hi)
    return frozenset(rng.sample(pool, k))


def _pull_back(keys, generators: list, n_edges: int, tag: str) -> Event:
    """{omega : keys[omega] contains some generator} as an event."""
    mask = 0
    for omega, k in enumerate(keys):
        if any(k & c == c for c in generators):
            mask |= 1 << omega
    return Event(n_edges, mask, tag)


def _generators(rng: random.Random, keys, within: Event | None = None) -> list:
    """One or two attainable keys, biased towards small ones (large keys give rare events).

    With ``within`` the keys are drawn from configurations in that event, so the generated
    event is not negligible once conditioned on it.
    """
    pool = keys if within is None else [keys[om] for om in within.members()]
    values = sorted(set(pool), key=lambda k: (bin(k).count("1"), k))
    if len(values) > 1 and values[0] == 0:
        values = values[1:]
    picks = {values[int(len(values) * rng.random() ** 3)] for _ in range(rng.randint(1, 2))}
    return sorted(picks)


def random_cluster_event(rng: random.Random, g: Graph, S, decreasing: bool = False,
                         within: Event | None = None) -> Event:
    """{C_S in U}: U the up-set (or down-set) generated by one or two attainable values."""
    table = cluster_table(g, S)
    full = g.full_mask
    keys = tuple(full & ~k for k in table) if decreasing else table
    kind = "down" if decreasing else "up"
    return _pull_back(keys, _generators(rng, keys, within), g.n_edges,
                      f"rand-{kind}(C_{''.join(sorted(S))})")


def random_pair_event(rng: random.Random, g: Graph, S, T, within: Event | None = None) -> Event:
    """{(C_S, C_T) in U}, U generated by one or two attainable pairs under growing C_S
    and shrinking C_T."""
    cs, ct = cluster_table(g, S), cluster_table(g, T)
    full, E = g.full_mask, g.n_edges
    keys = tuple(a | (full & ~b) << E for a, b in zip(cs, ct))
    return _pull_back(keys, _generators(rng, keys, within), E, "rand-pair")


def _combine(rng: random.Random, events: list, n_edges: int, tag: str, sign: int = 1) -> RealFunction:
    coeffs = [rng.randint(1, 3) for _ in events]
    const = rng.randint(-2, 2)
    vals = []
    for omega in range(1 << n_edges):
        v = const + sum(c for c, e in zip(coeffs, events) if e.mask >> omega & 1)
        vals.append(sign * v)
    return RealFunction(n_edges, tuple(vals), tag)


def random_cluster_function(rng: random.Random, g: Graph, S, decreasing: bool = False,
                            within: Event | None = None) -> RealFunction:
    """Positive combination of monotone cluster events plus a constant; or an event indicator."""
    if rng.random() < 0.4:
        return random_cluster_event(rng, g, S, decreasing, within).indicator()
    evs = [random_cluster_event(rng, g, S, within=within) for _ in range(rng.randint(1, 3))]
    return _combine(rng, evs, g.n_edges, "rand-dec-fn" if decreasing else "rand-inc-fn",
                    -1 if decreasing else 1)


def random_pair_function(rng: random.Random, g: Graph, S, T, within: Event | None = None) -> RealFunction:
    if rng.random() < 0.4:
        return random_pair_event(rng, g, S, T, within).indicator()
    evs = [random_pair_event(rng, g, S, T, within) for _ in range(rng.randint(1, 3))]
    return _combine(rng, evs, g.n_edges, "rand-pair-fn")


# -- instance generators: each returns a Report --------------------------------------------------

def _source_and_sets(rng, g):
    others = [v for v in g.vertices if v != "s"]
    return "s", random_subset(rng, others, 1), random_subset(rng, others, 1)


def _gen_1_1(kind, checker):
    def gen(rng, backend="rational"):
        g = random_graph(rng, kind)
        s, X, Y = _source_and_sets(rng, g)
        A = random_cluster_event(rng, g, {s}, within=event_R(g, s, X))
        B = random_cluster_event(rng, g, {s}, within=event_R(g, s, Y))
        return checker(g, s, A, B, X, Y, backend=backend)
    return gen


def _gen_conv(rng, backend="rational"):
    g = random_graph(rng, rng.choice(("undirected", "directed", "mixed")))
    s, X, Y = _source_and_sets(rng, g)
    others = [v for v in g.vertices if v != s]
    if len(others) >= 2 and (X <= Y or Y <= X):
        # nested X, Y give equality trivially; keep one private vertex on each side
        x, y = rng.sample(others, 2)
        X, Y = (X | {x}) - {y}, (Y | {y}) - {x}
    return th.check_conv(g, s, X, Y, backend=backend)


def _gen_1_2(rng, backend="rational"):
    g = random_graph(rng, "undirected")
    s, X, _ = _source_and_sets(rng, g)
    R = event_R(g, s, X)
    return th.check_thm_1_2(g, s, random_cluster_event(rng, g, {s}, within=R),
                            random_cluster_event(rng, g, {s}, within=R), X, backend=backend)


def _gen_1_3(kind, checker, branch):
    def gen(rng, backend="rational"):
        g = random_graph(rng, kind)
        s, X, _ = _source_and_sets(rng, g)
        b = branch if branch != "alternate" else rng.choice(("same", "mixed"))
        down_f = rng.random() < 0.5
        down_g = down_f if b == "same" else not down_f
        R = event_R(g, s, X)
        f = random_cluster_function(rng, g, {s}, down_f, R)
        h = random_cluster_function(rng, g, {s}, down_g, R)
        return checker(g, s, X, f, h, backend=backend)
    return gen


def _pair_sets(rng, g):
    rest = [v for v in g.vertices if v not in ("s", "t")]
    S = {"s"} | random_subset(rng, rest, 0, 1)
    T = {"t"} | random_subset(rng, [v for v in rest if v not in S], 0, 1)
    return frozenset(S), frozenset(T)


def _gen_1_4(rng, backend="rational"):
    g = random_graph(rng, "undirected")
    S, T = _pair_sets(rng, g)
    R = event_R(g, S, T)
    f = random_cluster_function(rng, g, S, within=R)
    h = random_cluster_function(rng, g, T, within=R)
    return th.check_thm_1_4(g, S, T, f, h, backend=backend)


def _gen_1_5(rng, backend="rational"):
    g = random_graph(rng, "undirected")
    S, T = _pair_sets(rng, g)
    R = event_R(g, S, T)
    return th.check_thm_1_5(g, S, T, random_pair_function(rng, g, S, T, R),
                            random_pair_function(rng, g, S, T, R), backend=backend)


def _gen_2_5(q):
    def gen(rng, backend="rational"):
        g = random_graph(rng, "undirected")
        S, T = _pair_sets(rng, g)
        R = event_R(g, S, T)
        f, h = random_pair_function(rng, g, S, T, R), random_pair_function(rng, g, S, T, R)
        return th.check_thm_2_5(g, S, T, q, f, h, backend=backend)
    return gen


def _gen_3_5(rng, backend="rational"):
    g = random_graph(rng, "directed")
    Q = event_Q_disjoint_clusters(g, "s", "t")
    f = random_pair_function(rng, g, {"s"}, {"t"}, Q)
    h = random_pair_function(rng, g, {"s"}, {"t"}, Q)
    return th.check_thm_3_5(g, "s", "t", f, h, backend=backend)


def _gen_false_directed_1_4(rng, backend="rational"):
    """The directed analogue of T1.4 conditioned on s -/-> t, which is false."""
    g = random_graph(rng, "directed", min_vertices=3)
    a = rng.choice([v for v in g.vertices if v not in ("s", "t")])
    mu = condition(product_measure(g, backend), event_R(g, ["s"], ["t"]))
    A, B = event_reach(g, "s", a), event_reach(g, "t", a)
    params = {"variant": "s!t", "s": "s", "t": "t", "a": a}
    return th._cov_report("F-T1.4-directed", g, params, mu, A, B, sign=-1, expect="violate")


CAMPAIGNS = {
    "T1.1": _gen_1_1("undirected", th.check_thm_1_1),
    "T1.2": _gen_1_2,
    "T1.3:same": _gen_1_3("undirected", th.check_thm_1_3, "same"),
    "T1.3:mixed": _gen_1_3("undirected", th.check_thm_1_3, "mixed"),
    "T1.4": _gen_1_4,
    "T1.5": _gen_1_5,
    "T2.5:q=1": _gen_2_5(Fraction(1)),
    "T2.5:q=3/2": _gen_2_5(Fraction(3, 2)),
    "T2.5:q=2": _gen_2_5(Fraction(2)),
    "T2.5:q=3": _gen_2_5(Fraction(3)),
    "T3.1": _gen_1_1("mixed", th.check_thm_3_1),
    "T3.3": _gen_1_3("mixed", th.check_thm_3_3, "alternate"),
    "E-conv": _gen_conv,
    "T3.5": _gen_3_5,
}

FALSE_CAMPAIGNS = {
    "F-T1.4-directed": _gen_false_directed_1_4,
}


def instance_rng(seed: int, campaign: str, i: int) -> random.Random:
    return random.Random(f"{seed}:{campaign}:{i}")


def run_campaign(name: str, n: int, seed: int = 0, start: int = 0, backend: str = "rational") -> list:
    """Reports (as dicts) for instances start..start+n-1 of one campaign.

    Verdicts always come from exact evaluation; with ``backend="float"`` each instance is
    also evaluated in floating point first and its slack recorded as ``float_slack``.
    """
    gen = CAMPAIGNS.get(name) or FALSE_CAMPAIGNS.get(name)
    if gen is None:
        raise ValueError(f"unknown campaign {name!r}")
    out = []
    for i in range(start, start + n):
        screen = gen(instance_rng(seed, name, i), "float") if backend == "float" else None
        rep = gen(instance_rng(seed, name, i))
        d = rep.to_dict()
        if screen is not None:
            d["float_slack"] = repr(float(screen.slack))
        d["campaign"] = name
        d["index"] = i
        d["seed"] = seed
        out.append(d)
    return out


def summarize(name: str, reports: list) -> dict:
    violations = [r for r in reports if r["verdict"] == "violation"]
    expect = "violate" if name in FALSE_CAMPAIGNS else "hold"
    slacks = [Fraction(r["slack"]) for r in reports]
    return {
        "campaign": name,
        "instances": len(reports),
        "violations": len(violations),
        "equalities": sum(1 for r in reports if r["equality"]),
        "strict": sum(1 for r in reports if Fraction(r["slack"]) > 0),
        "min_slack": th.fstr(min(slacks)) if slacks else None,
        "expect": expect,
        "pass": (not violations) if expect == "hold" else bool(violations),
        "first_violation": violations[0]["index"] if violations else None,
    }


# -- measure fuzzing for the order-theoretic cross-checks ----------------------------------------

def random_measure(rng: random.Random, n_bits: int, zero_rate: float = 0.2, top: int = 6):
    """Random rational measure on {0,1}^n_bits with some zero cells."""
    w = [0 if rng.random() < zero_rate else rng.randint(1, top) for _ in range(1 << n_bits)]
    if not any(w):
        w[rng.randrange(len(w))] = 1
    return from_probabilities([Fraction(x) for x in w])


def random_lattice_measure(rng: random.Random, n_bits: int):
    """Ferromagnetic Gibbs weights 2^(sum h_i x_i + sum J_ij x_i x_j), J >= 0, sometimes
    restricted to a random interval [lo, hi]; these satisfy the lattice condition."""
    h = [rng.randint(-2, 2) for _ in range(n_bits)]
    J = {(i, j): rng.randint(0, 2) for i in range(n_bits) for j in range(i + 1, n_bits)}
    lo = hi = None
    if rng.random() < 0.3:
        lo = rng.randrange(1 << n_bits)
        hi = lo | rng.randrange(1 << n_bits)
    vals = []
    for x in range(1 << n_bits):
        if lo is not None and not (x & lo == lo and x & hi == x):
            vals.append(Fraction(0))
            continue
        e = sum(h[i] for i in range(n_bits) if x >> i & 1)
        e += sum(c for (i, j), c in J.items() if x >> i & 1 and x >> j & 1)
        vals.append(Fraction(2) ** e)
    return from_probabilities(vals)


def fkg_cross_validation(n: int, seed: int = 0, n_bits: int = 4) -> dict:
    """Every fuzzed measure passing the lattice condition must pass exhaustive association."""
    passed = exceptions = 0
    first = None
    for i in range(n):
        rng = instance_rng(seed, "fkg", i)
        mu = random_lattice_measure(rng, n_bits) if i % 2 == 0 else random_measure(rng, n_bits)
        if not check_lattice_condition(mu).holds:
            continue
        passed += 1
        if len(effective_coordinates(mu)) > 4:
            continue
        if not check_positive_association(mu, "exhaustive").holds:
            exceptions += 1
            first = first if first is not None else i
    return {"instances": n, "lattice_pass": passed, "exceptions": exceptions, "first_exception": first}


def _raised(rng: random.Random, mu, n_bits: int):
    """Push mu forward through x -> x | m_x for random masks m_x; the image dominates mu."""
    w = [Fraction(0)] * (1 << n_bits)
    for x in range(1 << n_bits):
        w[x | rng.randrange(1 << n_bits) if rng.random() < 0.5 else x] += mu.prob(1 << x)
    return from_probabilities(w)


def dominance_cross_validation(n: int, seed: int = 0, n_bits: int = 4) -> dict:
    """Max-flow dominance verdicts against brute-force up-set enumeration."""
    agree = dominating = 0
    first = None
    for i in range(n):
        rng = instance_rng(seed, "dominance", i)
        nu_prime = random_measure(rng, n_bits)
        nu = _raised(rng, nu_prime, n_bits) if i % 2 == 0 else random_measure(rng, n_bits)
        flow = check_dominance(nu, nu_prime).holds
        brute = check_dominance_upsets(nu, nu_prime).holds
        dominating += flow
        if flow == brute:
            agree += 1
        elif first is None:
            first = i
    return {"pairs": n, "agree": agree, "dominating": dominating, "first_disagreement": first}


# -- contact process instances ---------------------------------------------------------------------

RATE_CHOICES = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))
TIME_CHOICES = (Fraction(1, 2), Fraction(1), Fraction(2))


def random_contact_spec(rng: random.Random, max_sites: int = 4) -> ContactSpec:
    m = rng.randint(2, max_sites)
    sites = NAMES[:m]
    delta = {x: rng.choice(RATE_CHOICES) for x in sites}
    lam = {(x, y): rng.choice(RATE_CHOICES) for x in sites for y in sites
           if x != y and rng.random() < 0.6}
    eta0 = rng.randrange(1, 1 << m)
    return ContactSpec(sites, delta, lam, eta0)


def contact_campaign(n: int, seed: int = 0, condition_on: int = 0, max_sites: int = 4) -> dict:
    """Conditional association of the infected set over random small systems.

    With ``condition_on=1`` this is a search for failures of the all-infected analogue.
    """
    failures = []
    for i in range(n):
        rng = instance_rng(seed, f"contact:{condition_on}", i)
        spec = random_contact_spec(rng, max_sites)
        t = rng.choice(TIME_CHOICES)
        W = sorted(random_subset(rng, spec.sites, 0, len(spec.sites) - 1))
        try:
            v = check_thm_contact(spec, t, W, condition_on=condition_on, seed=seed)
        except ValueError:
            continue
        if not v.holds:
            failures.append({"index": i, "spec": spec.to_dict(), "t": str(t), "W": W})
    return {"instances": n, "condition_on": condition_on, "failures": len(failures),
            "first_failure": failures[0] if failures else None}
