from fractions import Fraction
from itertools import product

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from percolab import theorems as th
from percolab.configs import HypothesisError, parse_expression
from percolab.fuzzy import (build_coupling_forward, build_coupling_reverse, check_fact_c, check_key_identity,
                            check_spin_association, check_spin_route, conditional_spin_measure, fuzzy_params,
                            spin_law)
from percolab.graphs import fixture
from conftest import graphs

PARAMS = [(2, 1, 1), (3, 1, 2), (3, Fraction(3, 2), Fraction(3, 2)), (4, 2, 2)]
F = Fraction


def oracle_cells(g, q, alpha, beta):
    """Forward joint law by enumeration: networkx components, each coloured independently."""
    q, alpha, beta = F(q), F(alpha), F(beta)
    cells = {}
    for bits, w in oracle.weights(g, q):
        U = nx.Graph()
        U.add_nodes_from(g.vertices)
        U.add_edges_from((e.tail, e.head) for b, e in zip(bits, g.edges) if b)
        comps = list(nx.connected_components(U))
        omega = sum(b << i for i, b in enumerate(bits))
        for colours in product((0, 1), repeat=len(comps)):
            sigma = sum(1 << g.index[v] for c, comp in zip(colours, comps) if c for v in comp)
            p = w
            for c in colours:
                p *= alpha / q if c else beta / q
            cells[(omega, sigma)] = p
    return cells


def test_single_edge_cells():
    g = fixture("edge")
    coup = build_coupling_forward(g, 2, 1, 1)
    assert sorted(coup.cells.values()) == [F(1, 6)] * 6
    assert coup.sigma_marginal().probabilities() == [F(1, 3), F(1, 6), F(1, 6), F(1, 3)]
    assert spin_law(g, 2, 1, 1) == [F(1, 3), F(1, 6), F(1, 6), F(1, 3)]


def test_params_are_validated():
    with pytest.raises(ValueError):
        fuzzy_params(3, 1, 1)
    with pytest.raises(ValueError):
        fuzzy_params(1, 0, 1)


@pytest.mark.parametrize("name", ["edge", "path", "triangle", "cycle4", "star", "k4"])
@pytest.mark.parametrize("q,alpha,beta", PARAMS)
def test_forward_equals_reverse_on_fixtures(name, q, alpha, beta):
    g = fixture(name)
    fwd = build_coupling_forward(g, q, alpha, beta)
    assert fwd.cells == oracle_cells(g, q, alpha, beta)
    assert fwd.differences(build_coupling_reverse(g, q, alpha, beta)) == []


@given(graphs(max_edges=6), st.sampled_from(PARAMS))
def test_forward_equals_reverse(g, params):
    q, alpha, beta = params
    fwd = build_coupling_forward(g, q, alpha, beta)
    assert sum(fwd.cells.values()) == 1
    assert fwd.differences(build_coupling_reverse(g, q, alpha, beta)) == []


@given(graphs(min_vertices=3, max_edges=6), st.sampled_from(PARAMS), st.data())
def test_key_identity(g, params, data):
    s, t = data.draw(st.lists(st.sampled_from(g.vertices), min_size=2, max_size=2, unique=True))
    assert check_key_identity(g, *params, s, t).holds


@given(graphs(max_vertices=5, max_edges=6), st.sampled_from(PARAMS))
def test_spin_lattice_condition(g, params):
    assert check_spin_association(g, *params).holds


def test_conditioned_spins_on_path():
    g = fixture("path")
    mu_hat = conditional_spin_measure(g, 2, 1, 1, "s", "t")
    # s is bit 0, t is bit 2: sigma in {s}, {s, v}
    assert {sg: mu_hat.p(sg) for sg in range(8) if mu_hat.weights[sg]} == {1: F(1, 2), 3: F(1, 2)}
    assert check_spin_association(g, 2, 1, 1, "s", "t").holds


def test_fact_c_restricted_and_global():
    g = fixture("path")
    f = parse_expression(g, "support_contains(s;v)")
    assert check_fact_c(g, 2, 1, 1, f, "s", "t").holds
    e = fixture("edge")
    lone = parse_expression(e, "~cluster_contains(t;s-t)")
    assert check_fact_c(e, 2, 1, 1, lone, "s", "t").holds
    v = check_fact_c(e, 2, 1, 1, lone, "s", "t", restrict=False)
    # sigma = {s} versus sigma = {s, t}: the edge is forced closed below and open with chance 1/2 above
    assert not v.holds
    assert v.witness == {"lower": 1, "upper": 3, "E_lower": "1", "E_upper": "1/2"}
    with pytest.raises(HypothesisError):
        check_fact_c(g, 3, F(1, 2), F(5, 2), f, "s", "t")


def test_spin_route_on_path():
    g = fixture("path")
    f = parse_expression(g, "support_contains(s;v)")
    h = parse_expression(g, "~support_contains(t;v)")
    v = check_spin_route(g, 2, 1, 1, "s", "t", f, h)
    assert v.holds
    # conditioned law on (sv, vt): 00, 10, 01 with 1/2, 1/4, 1/4; spins {s} and {s, v} with 1/2 each,
    # and only {s, v} lets f fire (with chance 1/2, while h = 1 there)
    assert (v.data["top"], v.data["middle"], v.data["bottom"]) == ("1/4", "1/4", "3/16")
    rep = th.check_thm_2_5(g, ["s"], ["t"], 2, f, h)
    assert F(v.data["top"]) - F(v.data["bottom"]) == rep.slack
