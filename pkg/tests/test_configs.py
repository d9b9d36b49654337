import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from percolab.configs import (HypothesisError, RealFunction, certify, cluster_table, constant_function,
                              count_components, event_Q_disjoint_clusters, event_R, event_reach,
                              event_support_contains, open_cluster, parse_expression,
                              reduce_event_off_EX, support_mask, sure_event,
                              verify_monotone)
from percolab.graphs import UnsupportedOperation, edge_mask, fixture, graph
from conftest import exact_brute_cluster, graphs


def configs_of(event):
    return sorted(event.members())


def test_cluster_examples():
    g = fixture("path")
    assert open_cluster(g, 0b11, ["s"]) == 0b11
    assert open_cluster(g, 0, ["s"]) == 0
    assert open_cluster(g, 0b11, []) == 0
    d = fixture("counterexample")
    assert open_cluster(d, 0b111, ["s"]) == edge_mask(d, ["s>v", "v>a"])


def test_reach_examples():
    assert configs_of(event_reach(fixture("edge"), "s", "t")) == [1]
    assert event_reach(fixture("path"), "v", "v").is_sure()
    assert configs_of(event_reach(fixture("path"), "s", "t")) == [3]


def test_R_examples():
    g = fixture("path")
    assert configs_of(event_R(g, ["s"], ["t"])) == [0, 1, 2]
    assert event_R(g, ["s"], []).is_sure()
    assert event_R(fixture("counterexample"), ["s"], ["t"]).is_sure()


def test_Q_examples():
    d = fixture("counterexample")
    Q = event_Q_disjoint_clusters(d, "s", "t")
    assert 0 in Q
    assert edge_mask(d, ["s>v", "t>v"]) not in Q
    two = graph("stab", ["sa", "tb"], oriented=True)
    assert 0b11 in event_Q_disjoint_clusters(two, "s", "t")
    with pytest.raises(UnsupportedOperation):
        event_Q_disjoint_clusters(fixture("path"), "s", "t")


def test_certificate_examples():
    g = fixture("cycle4")
    A = event_reach(g, "s", "t")
    assert verify_monotone(g, certify(A, "cluster-increasing", ["s"])).verified
    bad = verify_monotone(g, certify(~A, "increasing"))
    assert not bad.verified and bad.witness is not None
    with pytest.raises(HypothesisError):
        bad.require()
    for claim, S, T in [("increasing", (), ()), ("cluster-decreasing", ["s"], ()),
                        ("pair-monotone", ["s"], ["t"])]:
        assert verify_monotone(g, certify(constant_function(g, 3), claim, S, T)).verified


def test_cluster_determined_but_not_increasing():
    g = fixture("path")
    # {C_s = {sv}} is determined by C_s but not increasing in it
    ev = parse_expression(g, "reach(s,v) & ~reach(s,t)")
    cert = verify_monotone(g, certify(ev, "cluster-increasing", ["s"]))
    assert not cert.verified
    lo, hi = cert.witness
    assert lo in ev and hi not in ev


def test_reduce_example():
    g = fixture("path")
    A = event_reach(g, "s", "v")
    assert reduce_event_off_EX(g, A, "s", ["t"]).mask == A.mask
    assert reduce_event_off_EX(g, sure_event(g), "s", ["t"]).is_sure()


def test_reduce_strictly_smaller():
    g = fixture("triangle")
    A = event_reach(g, "s", "u")
    red = reduce_event_off_EX(g, A, "s", ["t"])
    # with the edges at t closed, s reaches u only through the direct edge
    assert configs_of(red) == [w for w in range(8) if w >> 2 & 1]


def test_parse_expression():
    g = fixture("path")
    assert parse_expression(g, "Omega").is_sure()
    assert parse_expression(g, "reach(s,t) | ~reach(s,t)").is_sure()
    assert parse_expression(g, "R(s;t)").mask == event_R(g, ["s"], ["t"]).mask
    assert parse_expression(g, "open(s-v) & open(v-t)").mask == event_reach(g, "s", "t").mask
    assert parse_expression(g, "support_contains(s;v)").mask == event_support_contains(g, ["s"], "v").mask
    f = parse_expression(g, "-cluster_size(s)")
    assert isinstance(f, RealFunction) and f.values == (0, -1, 0, -2)
    for bad in ["reach(s)", "bogus(s,t)", "reach(s,t) &", "(reach(s,t)"]:
        with pytest.raises(ValueError):
            parse_expression(g, bad)


def test_count_components_counts_isolated():
    g = fixture("k4")
    assert count_components(g, 0) == 4
    assert count_components(g, g.full_mask) == 1


# -- properties --------------------------------------------------------------------------------

@given(graphs(kind="mixed", max_edges=6), st.data())
def test_cluster_matches_reference(g, data):
    S = data.draw(st.sets(st.sampled_from(g.vertices), max_size=2))
    table = cluster_table(g, S)
    for omega in range(g.n_configs):
        assert table[omega] == exact_brute_cluster(g, omega, S)


@given(graphs(kind="mixed", max_edges=6), st.data())
def test_clusters_are_monotone(g, data):
    S = data.draw(st.sets(st.sampled_from(g.vertices), max_size=2))
    table = cluster_table(g, S)
    for omega in range(g.n_configs):
        for i in range(g.n_edges):
            up = omega | 1 << i
            assert table[omega] & ~table[up] == 0


@given(graphs(kind="mixed", max_edges=6), st.data())
def test_cluster_locality(g, data):
    """Closing edges outside the cluster and its closure leaves the cluster unchanged."""
    S = data.draw(st.sets(st.sampled_from(g.vertices), min_size=1, max_size=2))
    table = cluster_table(g, S)
    for omega in range(g.n_configs):
        c = table[omega]
        verts = {v for v in g.vertices if support_mask(g, c) >> g.index[v] & 1} | set(S)
        near = 0
        for i, e in enumerate(g.edges):
            if e.tail in verts or e.head in verts:
                near |= 1 << i
        assert table[omega & near] == c


@given(graphs(kind="mixed", max_edges=6), st.data())
def test_R_of_union_is_intersection(g, data):
    S = data.draw(st.sets(st.sampled_from(g.vertices), min_size=1, max_size=2))
    X = data.draw(st.sets(st.sampled_from(g.vertices)))
    Y = data.draw(st.sets(st.sampled_from(g.vertices)))
    assert event_R(g, S, X | Y).mask == (event_R(g, S, X) & event_R(g, S, Y)).mask


@given(graphs(kind="mixed", max_edges=6), st.data())
def test_reach_agrees_with_networkx(g, data):
    a = data.draw(st.sampled_from(g.vertices))
    b = data.draw(st.sampled_from(g.vertices))
    ev = event_reach(g, a, b)
    for omega in range(g.n_configs):
        D = nx.DiGraph()
        D.add_nodes_from(g.vertices)
        for i, e in enumerate(g.edges):
            if omega >> i & 1:
                D.add_edge(e.tail, e.head)
                if not e.oriented:
                    D.add_edge(e.head, e.tail)
        assert (omega in ev) == nx.has_path(D, a, b)
        if g.is_undirected:
            U = nx.Graph(D)
            assert (omega in ev) == nx.has_path(U, a, b)


def _brute_monotone(g, values, claim, S, T):
    cs = cluster_table(g, S) if S else None
    ct = cluster_table(g, T) if T else None
    for w in range(g.n_configs):
        for v in range(g.n_configs):
            if claim == "increasing":
                le = w & ~v == 0
            elif claim == "cluster-increasing":
                le = cs[w] & ~cs[v] == 0
            elif claim == "cluster-decreasing":
                le = cs[v] & ~cs[w] == 0
            else:
                le = cs[w] & ~cs[v] == 0 and ct[v] & ~ct[w] == 0
            if le and values[w] > values[v]:
                return False
    return True


@given(graphs(kind="mixed", max_edges=5), st.data())
def test_verify_monotone_matches_all_pairs(g, data):
    claim = data.draw(st.sampled_from(["increasing", "cluster-increasing", "cluster-decreasing",
                                       "pair-monotone"]))
    s = data.draw(st.sampled_from(g.vertices))
    t = data.draw(st.sampled_from([v for v in g.vertices if v != s]))
    S, T = ([s], [t]) if claim == "pair-monotone" else (([s], []) if "cluster" in claim else ([], []))
    key = cluster_table(g, S) if S else tuple(range(g.n_configs))
    if data.draw(st.booleans()):
        # up-closure style count: monotone by construction for the increasing claims
        gens = data.draw(st.lists(st.sampled_from(sorted(set(key))), max_size=3))
        vals = tuple(sum(1 for k in gens if k & ~key[w] == 0) for w in range(g.n_configs))
    else:
        lookup = {k: data.draw(st.integers(0, 2)) for k in sorted(set(key))}
        vals = tuple(lookup[key[w]] for w in range(g.n_configs))
    f = RealFunction(g.n_edges, vals)
    cert = verify_monotone(g, certify(f, claim, S, T))
    assert cert.verified == _brute_monotone(g, vals, claim, S, T)
    if not cert.verified:
        a, b = cert.witness
        assert vals[a] != vals[b]
