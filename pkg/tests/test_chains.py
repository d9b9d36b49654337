import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from percolab.chains import (ConfigChain, DrivingNoise, build_pair_chain, check_config_chain_monotone,
                             check_trace_association, config_chain_diagnostics, config_chain_frequencies,
                             histories, run_config_chain, step_pair_chain)
from percolab.configs import cluster_table, support_mask
from percolab.graphs import fixture, graph
from percolab.order import BudgetError
from conftest import graphs

FIXTURE_PAIRS = [("path", "s", "t"), ("triangle", "s", "t"), ("cycle4", "s", "t"), ("star", "a", "b"),
                 ("k4", "s", "t")]


def oracle_kernel(g, s, t, q):
    """Two-phase kernel built from the brute-force enumeration, independent of the package."""
    sep = oracle.no_path(g, [s], [t])
    ws = [(b, w) for b, w in oracle.weights(g, q) if sep(b)]
    pairs = [((oracle.cluster(g, b, [s]), oracle.cluster(g, b, [t])), w) for b, w in ws]

    def law(match):
        sub = [(k, w) for k, w in pairs if match(k)]
        z = sum(w for _, w in sub)
        out = {}
        for k, w in sub:
            out[k] = out.get(k, 0) + w / z
        return out

    states = sorted({k for k, _ in pairs}, key=sorted)
    kernel = {}
    for x in states:
        row = {}
        for mid, p in law(lambda k: k[0] == x[0]).items():
            for y, r in law(lambda k: k[1] == mid[1]).items():
                row[y] = row.get(y, 0) + p * r
        kernel[x] = row
    return kernel


def as_bits(k):
    return sum(1 << i for i in k)


@pytest.mark.parametrize("name,s,t", FIXTURE_PAIRS)
@pytest.mark.parametrize("q", [1, Fraction(3, 2), 2, 3])
def test_pair_chain_exact(name, s, t, q):
    g = fixture(name)
    diag = build_pair_chain(g, [s], [t], q)
    assert diag.residual == 0 and diag.rows_sum_to_one
    assert diag.irreducible and diag.aperiodic
    assert diag.mixing_steps is not None and diag.tv[diag.mixing_steps] < 1e-6
    assert all(a >= b - 1e-15 for a, b in zip(diag.tv, diag.tv[1:]))
    ref = oracle_kernel(g, s, t, q)
    got = {(x, y): p for x, row in diag.kernel.items() for y, p in row.items()}
    want = {((as_bits(x[0]), as_bits(x[1])), (as_bits(y[0]), as_bits(y[1]))): p
            for x, row in ref.items() for y, p in row.items()}
    assert got == want


def test_pair_chain_rows_by_hand():
    g = fixture("path")
    d1 = build_pair_chain(g, ["s"], ["t"], 1)
    assert step_pair_chain(d1, (0, 0)) == {(0, 0): Fraction(1, 4), (1, 0): Fraction(1, 4),
                                           (0, 2): Fraction(1, 2)}
    d2 = build_pair_chain(g, ["s"], ["t"], 2)
    assert step_pair_chain(d2, (0, 0)) == {(0, 0): Fraction(4, 9), (1, 0): Fraction(2, 9),
                                           (0, 2): Fraction(1, 3)}
    assert d2.stationary == {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 4), (0, 2): Fraction(1, 4)}
    assert (d1.mixing_steps, d2.mixing_steps) == (10, 7)


def test_forced_moves_and_trivial_chains():
    single = build_pair_chain(fixture("edge"), ["s"], ["t"], 2)
    assert single.states == [(0, 0)] and single.kernel == {(0, 0): {(0, 0): 1}}
    edgeless = build_pair_chain(graph("st", []), ["s"], ["t"], 2)
    assert edgeless.states == [(0, 0)] and edgeless.mixing_steps == 0
    # from the state where C_S is the whole s-v edge, C_T can only be empty
    g = fixture("path")
    diag = build_pair_chain(g, ["s"], ["t"], 1)
    for y in diag.half_kernels[0][(1, 0)]:
        assert y[1] == 0


def test_two_phase_factorisation():
    g = fixture("cycle4")
    diag = build_pair_chain(g, ["s"], ["t"], 2)
    up_t, up_s = diag.half_kernels
    for x in diag.states:
        row = {}
        for m, p in up_t[x].items():
            for y, r in up_s[m].items():
                row[y] = row.get(y, 0) + p * r
        assert row == diag.kernel[x]
    for half in (up_t, up_s):
        moved = {}
        for x, px in diag.stationary.items():
            for y, p in half[x].items():
                moved[y] = moved.get(y, 0) + px * p
        assert moved == diag.stationary


def test_sampling_is_seeded():
    diag = build_pair_chain(fixture("path"), ["s"], ["t"], 1)
    a = [step_pair_chain(diag, (0, 0), random.Random(5)) for _ in range(3)]
    assert len(set(a)) == 1 and a[0] in diag.kernel[(0, 0)]


@given(graphs(min_vertices=3, max_edges=5), st.sampled_from([1, 2]), st.data())
def test_traces_keep_clusters_disjoint(g, q, data):
    s, t = data.draw(st.lists(st.sampled_from(g.vertices), min_size=2, max_size=2, unique=True))
    diag = build_pair_chain(g, [s], [t], q)
    assert diag.residual == 0
    for h in histories(diag, 2):
        for cs, ct in h:
            assert not support_mask(g, cs) & support_mask(g, ct)


def test_trace_association():
    g = fixture("path")
    for q in (1, 2):
        for n in (0, 1, 2):
            assert check_trace_association(g, ["s"], ["t"], q, n).holds
    assert check_trace_association(fixture("edge"), ["s"], ["t"], 2, 3).holds
    with pytest.raises(BudgetError):
        check_trace_association(fixture("cycle4"), ["s"], ["t"], 1, 1)


# -- the configuration chain -----------------------------------------------------------------------

def test_config_chain_exact_kernel_is_stationary():
    for name, s, t in FIXTURE_PAIRS:
        for q in (1, 2):
            d = config_chain_diagnostics(fixture(name), [s], [t], q)
            assert d.residual == 0 and d.rows_sum_to_one and d.irreducible


def test_threshold_semantics():
    g = fixture("path")
    ch = ConfigChain(g, ["s"], ["t"], 1)
    E = g.n_edges
    zeros = [[0.0] * E]
    # X = 0 opens every edge it can while staying in the conditional support
    tau = ch.half_step("S", ch.cs[0], zeros[0], lower=True)
    assert tau == 0b10
    # Y = 0 closes every edge whose conditional probability is below one
    assert ch.half_step("T", ch.ct[0b10], zeros[0], lower=False) == 0


def test_run_is_reproducible():
    g = fixture("triangle")
    noise = DrivingNoise.from_seed(9, 20, g.n_edges)
    a = run_config_chain(g, ["s"], ["t"], 2, noise, 20)
    b = run_config_chain(g, ["s"], ["t"], 2, DrivingNoise.from_seed(9, 20, g.n_edges), 20)
    assert a == b and len(a) == 21
    sep = cluster_table(g, ["s"])
    for om in a:
        assert not support_mask(g, sep[om]) >> g.index["t"] & 1


def test_config_chain_frequencies_small():
    counts = config_chain_frequencies(fixture("path"), ["s"], ["t"], 1, 3000, seed=2)
    assert set(counts) == {0, 1, 2} and sum(counts.values()) == 3000


def test_monotonicity_of_the_configuration_chain():
    g = fixture("path")
    assert check_config_chain_monotone(g, ["s"], ["t"], 2, 0).holds
    assert check_config_chain_monotone(fixture("edge"), ["s"], ["t"], 2, 2, grid_step=None).holds
    clusters = check_config_chain_monotone(g, ["s"], ["t"], 2, 2, grid_step=None, target="clusters")
    assert clusters.holds and clusters.data["exhaustive"]
    literal = check_config_chain_monotone(g, ["s"], ["t"], 2, 1, grid_step=None, target="omega")
    assert not literal.holds
    before, after = literal.witness["before"], literal.witness["after"]
    # raising one variate moves omega off {vt}: with C_T = {vt} forced, omega = {vt};
    # otherwise omega lies in {empty, {sv}}, and neither contains {vt}
    assert before == 0b10 and after in (0, 0b01)
    with pytest.raises(BudgetError):
        check_config_chain_monotone(fixture("k4"), ["s"], ["t"], 2, 1)


def test_mesh_grid_at_two_steps():
    """On the 1/8 mesh the literal state claim already fails; the cluster claim survives."""
    g = fixture("path")
    literal = check_config_chain_monotone(g, ["s"], ["t"], 2, 2, grid_step=Fraction(1, 8), target="omega")
    assert not literal.holds and literal.witness["before"] == 0b10
    clusters = check_config_chain_monotone(g, ["s"], ["t"], 2, 2, grid_step=Fraction(1, 8), target="clusters")
    assert clusters.holds and not clusters.proof
