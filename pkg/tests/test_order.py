import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from percolab.fuzz import random_lattice_measure, random_measure
from percolab.graphs import fixture, graph
from percolab.measures import from_probabilities, product_measure, random_cluster_measure, same_distribution
from percolab.order import (BudgetError, ad_sums, check_ad_hypothesis, check_conditional_monotone_shift,
                            check_dominance, check_dominance_upsets, check_lattice_condition, check_lpa,
                            check_positive_association, is_upset, random_upset, up_closure, upsets)
from conftest import graphs


def test_upset_counts_are_dedekind_numbers():
    assert [len(upsets(k)) for k in range(6)] == [2, 3, 6, 20, 168, 7581]
    assert all(is_upset(u, 3) for u in upsets(3))


def test_up_closure_and_random_upsets():
    assert up_closure([0b01], 2) == 0b1010
    rng = random.Random(3)
    for _ in range(50):
        assert is_upset(random_upset(rng, 4), 4)


def test_lattice_examples():
    for name in ("path", "triangle", "k4"):
        assert check_lattice_condition(product_measure(fixture(name))).holds
        assert check_lattice_condition(random_cluster_measure(fixture(name), 3)).holds
    bad = from_probabilities([0, 1, 1, 1])
    v = check_lattice_condition(bad)
    assert not v.holds and v.witness == (1, 2)


def test_local_reduction_agrees_with_full_check():
    rng = random.Random(11)
    for _ in range(200):
        mu = random_measure(rng, 3, zero_rate=0)
        assert check_lattice_condition(mu).holds == check_lattice_condition(mu, full=True).holds


def test_ad_examples():
    ones = [1] * 8
    assert check_ad_hypothesis(ones, ones, ones, ones).holds
    w = product_measure(fixture("triangle")).weights
    assert check_ad_hypothesis(w, w, w, w).holds
    assert not check_ad_hypothesis(ones, ones, [0] * 8, ones).holds
    lhs, rhs = ad_sums(w, w, w, w, A=[1, 2], B=[4])
    assert lhs <= rhs


def test_association_examples():
    assert check_positive_association(product_measure(fixture("triangle"))).holds
    point = from_probabilities([0, 0, 1, 0])
    assert check_positive_association(point).holds
    anti = from_probabilities([0, 1, 1, 0])
    v = check_positive_association(anti)
    assert not v.holds
    assert v.witness["covariance"] == Fraction(-1, 4)
    u, w = v.witness["upsets"]
    assert {u, w} == {up_closure([1], 2), up_closure([2], 2)}


def test_association_budget_and_sampling():
    mu = product_measure(graph("stabcd", ["st", "sa", "sb", "sc", "sd"]))
    with pytest.raises(BudgetError):
        check_positive_association(mu)
    v = check_positive_association(mu, "sampled", seed=4)
    assert v.holds and not v.proof
    assert check_positive_association(mu, max_coords=5).holds


def test_dominance_examples():
    mu = random_cluster_measure(fixture("path"), 2)
    v = check_dominance(mu, mu)
    assert v.holds
    coupling = v.witness
    for x in range(4):
        assert sum(p for (a, _), p in coupling.items() if a == x) == mu.p(x)
    hi = product_measure(graph("st", ["st"], p="3/5"))
    lo = product_measure(graph("st", ["st"], p="2/5"))
    assert check_dominance(hi, lo).holds and not check_dominance(lo, hi).holds
    zero, one = from_probabilities([1, 0]), from_probabilities([0, 1])
    v = check_dominance(zero, one)
    assert not v.holds and v.witness == 0b10


def test_conditional_shift_examples():
    g = fixture("path")
    phi = product_measure(g)
    assert check_conditional_monotone_shift(phi, ["s"], ["t"], 0, 0).holds
    assert check_conditional_monotone_shift(phi, ["s"], ["t"], 0, 0b01).holds
    const = [lambda c: 1]
    assert check_conditional_monotone_shift(phi, ["s"], ["t"], 0, 0b01, family=const).holds


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_fkg_implication(seed, n):
    rng = random.Random(seed)
    mu = random_lattice_measure(rng, n) if seed % 2 else random_measure(rng, n)
    if check_lattice_condition(mu).holds:
        assert check_positive_association(mu).holds


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_dominance_routes_agree(seed, n):
    rng = random.Random(seed)
    a, b = random_measure(rng, n), random_measure(rng, n)
    assert check_dominance(a, b).holds == check_dominance_upsets(a, b).holds


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_mutual_dominance_forces_equality(seed, n):
    rng = random.Random(seed)
    a = random_measure(rng, n, top=2)
    b = random_measure(rng, n, top=2) if seed % 3 else a
    if check_dominance(a, b).holds and check_dominance(b, a).holds:
        assert same_distribution(a, b)


@given(st.integers(0, 10**6), st.integers(2, 4), st.data())
def test_block_association_lemma(seed, n, data):
    rng = random.Random(seed)
    psi = random_lattice_measure(rng, n) if seed % 2 else random_measure(rng, n, zero_rate=0)
    a = data.draw(st.integers(1, n - 1))
    out = check_lpa(psi, a)
    if out["i"] and out["ii"] and out["iii"]:
        assert out["conclusion"]


@given(graphs(max_edges=5), st.sampled_from([1, 2, 3]))
def test_rcm_satisfies_lattice_condition(g, q):
    assert check_lattice_condition(random_cluster_measure(g, q)).holds
