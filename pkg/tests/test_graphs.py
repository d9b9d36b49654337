from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from percolab.graphs import (Edge, Graph, GraphError, UnsupportedOperation, closure, contract_edges,
                             delete_edges, edge_mask, edges_meeting, fixture, graph,
                             identify_vertices, parse_probability, vertex_support, FIXTURES)
from conftest import graphs


def test_probability_parsing():
    assert parse_probability("1/3") == Fraction(1, 3)
    assert parse_probability("0.25") == Fraction(1, 4)
    assert parse_probability(Fraction(2, 3)) == Fraction(2, 3)
    with pytest.raises(GraphError):
        parse_probability("abc")


def test_rejects_bad_input():
    with pytest.raises(GraphError):
        graph("st", ["ss"])
    with pytest.raises(GraphError):
        graph("st", ["sx"])
    with pytest.raises(GraphError):
        graph("st", ["st"], p=1)
    with pytest.raises(GraphError):
        graph("ss", [])
    with pytest.raises(GraphError):
        graph("st", ["st"] * 3, edge_cap=2)
    with pytest.raises(GraphError):
        Graph(("s",), (), edge_cap=25)


def test_undirected_edges_are_canonicalised():
    g = graph("svt", ["vs", "tv"])
    assert [(e.tail, e.head) for e in g.edges] == [("s", "v"), ("v", "t")]
    h = graph("svt", ["vs"], oriented=True)
    assert (h.edges[0].tail, h.edges[0].head) == ("v", "s")


def test_directedness():
    assert fixture("path").directedness == "undirected"
    assert fixture("counterexample").directedness == "directed"
    mixed = Graph("sta", (Edge("s", "t"), Edge("t", "a", True)))
    assert mixed.directedness == "mixed"
    assert not mixed.is_directed and not mixed.is_undirected
    empty = graph("st", [])
    assert empty.is_directed and empty.is_undirected


def test_json_round_trip():
    for name in FIXTURES:
        g = fixture(name)
        assert Graph.from_json(g.canonical_json()) == g
    with pytest.raises(GraphError):
        Graph.from_dict({"vertices": ["s"]})
    with pytest.raises(GraphError):
        fixture("nope")


def test_edge_index_resolution():
    g = fixture("path")
    assert g.edge_index("v-s") == 0
    assert g.edge_index("v-t") == 1
    d = fixture("counterexample")
    assert d.edge_index("s>v") == 0
    with pytest.raises(GraphError):
        d.edge_index("v>s")


def test_contract_single_edge():
    g = fixture("edge")
    h, kept = contract_edges(g, 1)
    assert h.vertices == ("s",) and h.n_edges == 0 and kept == ()


def test_contract_triangle_edge_gives_parallel_pair():
    g = fixture("triangle")
    h, kept = contract_edges(g, edge_mask(g, ["s-t"]))
    assert h.vertices == ("s", "u")
    assert [(e.tail, e.head) for e in h.edges] == [("s", "u"), ("s", "u")]
    assert kept == (1, 2)


def test_contract_refuses_oriented():
    with pytest.raises(UnsupportedOperation):
        contract_edges(fixture("counterexample"), 1)


def test_identify_vertices():
    g = fixture("cycle4")
    h, kept = identify_vertices(g, ["s", "t"])
    assert h.vertices == ("s", "a", "b")
    assert h.n_edges == 4 and kept == (0, 1, 2, 3)
    d = fixture("counterexample")
    h, kept = identify_vertices(d, ["s", "t"], name="X")
    assert h.vertices == ("X", "v", "a")
    assert [(e.tail, e.head) for e in h.edges] == [("X", "v"), ("X", "v"), ("v", "a")]
    with pytest.raises(GraphError):
        identify_vertices(g, ["s", "t"], name="a")


def test_delete_keeps_vertices():
    g = fixture("k4")
    h, kept = delete_edges(g, 0b101)
    assert h.vertices == g.vertices and kept == (1, 3, 4, 5)


@given(graphs(kind="mixed"), st.data())
def test_closure_support_grows(g, data):
    F = data.draw(st.integers(0, g.full_mask))
    assert vertex_support(g, closure(g, F)) >= vertex_support(g, F)
    assert closure(g, F) & F == F


@given(graphs(kind="mixed"))
def test_empty_surgery_is_identity(g):
    assert delete_edges(g, 0) == (g, tuple(range(g.n_edges)))
    if g.is_undirected:
        assert contract_edges(g, 0) == (g, tuple(range(g.n_edges)))


@given(graphs(kind="mixed"), st.data())
def test_edges_meeting_is_additive(g, data):
    X = data.draw(st.sets(st.sampled_from(g.vertices)))
    Y = data.draw(st.sets(st.sampled_from(g.vertices)))
    assert edges_meeting(g, X | Y) == edges_meeting(g, X) | edges_meeting(g, Y)
