"""Joint law of a random-cluster configuration and a two-colour spin field.

Spins are vertex bitmasks: bit i is the spin of ``g.vertices[i]``.  Each open-edge
component is coloured 1 with probability alpha/q and 0 with probability beta/q, where
q = alpha + beta.  The same joint law is also built the other way round, spins first,
and the two constructions are compared cell by cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .configs import (HypothesisError, RealFunction, as_function, certify, component_masks,
                      event_R, verify_monotone)
from .graphs import Edge, Graph
from .measures import (Measure, components_table, condition, expectation, from_probabilities,
                       product_measure, random_cluster_measure, same_distribution)
from .order import Verdict, check_lattice_condition, check_positive_association, leq

VERTEX_CAP = 12


def fuzzy_params(q, alpha, beta) -> tuple[Fraction, Fraction, Fraction]:
    q, alpha, beta = Fraction(q), Fraction(alpha), Fraction(beta)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if alpha + beta != q:
        raise ValueError(f"alpha + beta = {alpha + beta} but q = {q}")
    return q, alpha, beta


@dataclass(frozen=True)
class Coupling:
    graph: Graph
    q: Fraction
    alpha: Fraction
    beta: Fraction
    cells: dict          # (omega, sigma) -> Fraction, zero cells omitted

    def omega_marginal(self) -> Measure:
        probs = [Fraction(0)] * self.graph.n_configs
        for (om, _), p in self.cells.items():
            probs[om] += p
        return from_probabilities(probs, graph=self.graph)

    def sigma_marginal(self) -> Measure:
        probs = [Fraction(0)] * (1 << len(self.graph.vertices))
        for (_, sg), p in self.cells.items():
            probs[sg] += p
        return from_probabilities(probs, labels=self.graph.vertices)

    def given_sigma(self, sigma: int) -> dict:
        """P(omega | sigma) as {omega: Fraction}."""
        row = {om: p for (om, sg), p in self.cells.items() if sg == sigma}
        tot = sum(row.values())
        if not tot:
            raise ValueError("spin configuration has probability zero")
        return {om: p / tot for om, p in row.items()}

    def differences(self, other: "Coupling") -> list:
        keys = set(self.cells) | set(other.cells)
        return sorted(k for k in keys if self.cells.get(k, 0) != other.cells.get(k, 0))


def _check_size(g: Graph):
    if len(g.vertices) > VERTEX_CAP:
        raise ValueError(f"{len(g.vertices)} vertices exceeds the spin budget {VERTEX_CAP}")


def build_coupling_forward(g: Graph, q, alpha, beta) -> Coupling:
    """Draw omega from phi_q, then colour each component independently."""
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    _check_size(g)
    phi = random_cluster_measure(g, q)
    a, b = alpha / q, beta / q
    cells = {}
    for om, w in enumerate(phi.weights):
        if not w:
            continue
        base = Fraction(w, phi.total)
        comps = component_masks(g, om)
        k = len(comps)
        for colours in range(1 << k):
            sigma = 0
            ones = 0
            for j, c in enumerate(comps):
                if colours >> j & 1:
                    sigma |= c
                    ones += 1
            cells[(om, sigma)] = base * a ** ones * b ** (k - ones)
    return Coupling(g, q, alpha, beta, cells)


def induced_subgraph(g: Graph, vmask: int) -> tuple[Graph | None, tuple]:
    """(G[U], original indices of its edges); None when U is empty."""
    verts = tuple(v for i, v in enumerate(g.vertices) if vmask >> i & 1)
    if not verts:
        return None, ()
    idx = g.index
    kept = tuple(i for i, e in enumerate(g.edges)
                 if vmask >> idx[e.tail] & 1 and vmask >> idx[e.head] & 1)
    h = Graph(verts, tuple(Edge(g.edges[i].tail, g.edges[i].head, g.edges[i].oriented, g.edges[i].p)
                           for i in kept), edge_cap=g.edge_cap)
    return h, kept


@lru_cache(maxsize=4096)
def partition_function(h: Graph | None, c: Fraction) -> Fraction:
    """Sum over omega of prod p^omega (1-p)^(1-omega) * c^k(omega); 1 on the empty graph."""
    if h is None:
        return Fraction(1)
    base = product_measure(h)
    ks = components_table(h)
    return sum(Fraction(w, base.total) * c ** k for w, k in zip(base.weights, ks))


def _discordant_closed_weight(g: Graph, sigma: int) -> tuple[Fraction, int]:
    idx = g.index
    weight, mask = Fraction(1), 0
    for i, e in enumerate(g.edges):
        if (sigma >> idx[e.tail] & 1) != (sigma >> idx[e.head] & 1):
            weight *= 1 - e.p
            mask |= 1 << i
    return weight, mask


def spin_law(g: Graph, q, alpha, beta) -> list:
    """mu_{alpha,beta} from partition functions of the two induced colour classes."""
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    _check_size(g)
    full = (1 << len(g.vertices)) - 1
    raw = []
    for sigma in range(full + 1):
        w, _ = _discordant_closed_weight(g, sigma)
        h1, _ = induced_subgraph(g, sigma)
        h0, _ = induced_subgraph(g, full & ~sigma)
        raw.append(w * partition_function(h1, alpha) * partition_function(h0, beta))
    tot = sum(raw)
    return [r / tot for r in raw]


def _class_law(h: Graph | None, kept: tuple, c: Fraction) -> list:
    """[(omega restricted to kept edges, lifted to G, probability)] under phi_{h,c}."""
    if h is None or not kept:
        return [(0, Fraction(1))]
    phi = random_cluster_measure(h, c)
    out = []
    for om, w in enumerate(phi.weights):
        if w:
            lifted = 0
            for j, i in enumerate(kept):
                if om >> j & 1:
                    lifted |= 1 << i
            out.append((lifted, Fraction(w, phi.total)))
    return out


def omega_given_sigma(g: Graph, alpha, beta, sigma: int) -> dict:
    """Discordant edges closed; each colour class gets its own random-cluster configuration."""
    full = (1 << len(g.vertices)) - 1
    h1, k1 = induced_subgraph(g, sigma)
    h0, k0 = induced_subgraph(g, full & ~sigma)
    out = {}
    for o1, p1 in _class_law(h1, k1, Fraction(alpha)):
        for o0, p0 in _class_law(h0, k0, Fraction(beta)):
            out[o1 | o0] = out.get(o1 | o0, 0) + p1 * p0
    return out


def build_coupling_reverse(g: Graph, q, alpha, beta) -> Coupling:
    """Draw sigma from mu_{alpha,beta}, then omega from the per-class random-cluster laws."""
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    mu = spin_law(g, q, alpha, beta)
    cells = {}
    for sigma, ps in enumerate(mu):
        if ps:
            for om, po in omega_given_sigma(g, alpha, beta, sigma).items():
                cells[(om, sigma)] = ps * po
    return Coupling(g, q, alpha, beta, cells)


def marginal_spin(coupling: Coupling) -> Measure:
    return coupling.sigma_marginal()


def _spin_bits(g: Graph, s, t) -> tuple[int, int]:
    g.check_vertices([s, t])
    if s == t:
        raise ValueError("s and t must differ")
    return 1 << g.index[s], 1 << g.index[t]


def conditional_spin_measure(g: Graph, q, alpha, beta, s, t) -> Measure:
    """mu_{alpha,beta}( . | sigma(s) = 1, sigma(t) = 0)."""
    bs, bt = _spin_bits(g, s, t)
    mu = from_probabilities(spin_law(g, q, alpha, beta), labels=g.vertices)
    ev = 0
    for sigma in range(mu.size):
        if sigma & bs and not sigma & bt:
            ev |= 1 << sigma
    return condition(mu, ev)


def check_key_identity(g: Graph, q, alpha, beta, s, t) -> Verdict:
    """Mixing the spin-first omega laws over the conditioned spins gives phi_q( . | s -/-> t)."""
    if not g.is_undirected:
        raise ValueError("the spin coupling is defined for undirected graphs")
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    mu_hat = conditional_spin_measure(g, q, alpha, beta, s, t)
    mixed = [Fraction(0)] * g.n_configs
    for sigma in range(mu_hat.size):
        ps = mu_hat.p(sigma)
        if ps:
            for om, po in omega_given_sigma(g, alpha, beta, sigma).items():
                mixed[om] += ps * po
    target = condition(random_cluster_measure(g, q), event_R(g, {s}, {t}))
    mixed_m = from_probabilities(mixed, graph=g)
    if same_distribution(mixed_m, target):
        return Verdict(True, detail=f"equal on {g.n_configs} configurations")
    bad = next(om for om in range(g.n_configs) if mixed_m.p(om) != target.p(om))
    return Verdict(False, {"omega": bad, "mixed": str(mixed_m.p(bad)), "target": str(target.p(bad))},
                   "mixture differs from the conditioned random-cluster measure")


def _require_pair_monotone(g: Graph, f, s, t) -> RealFunction:
    f = as_function(f)
    cert = verify_monotone(g, certify(f, "pair-monotone", {s}, {t}))
    cert.require()
    return f


def conditional_expectations(coupling: Coupling, f, sigmas) -> dict:
    f = as_function(f)
    return {sg: sum(p * f.values[om] for om, p in coupling.given_sigma(sg).items()) for sg in sigmas}


def check_fact_c(g: Graph, q, alpha, beta, f, s, t, restrict: bool = True) -> Verdict:
    """E[f | sigma] is increasing in sigma for f increasing in C_s and decreasing in C_t.

    With ``restrict`` the spins range over {sigma(s) = 1, sigma(t) = 0}, which is where the
    conditioned spin law lives; without it every spin of positive probability is used.
    """
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    if alpha < 1 or beta < 1:
        raise HypothesisError("needs alpha, beta >= 1")
    f = _require_pair_monotone(g, f, s, t)
    bs, bt = _spin_bits(g, s, t)
    coup = build_coupling_reverse(g, q, alpha, beta)
    mu = coup.sigma_marginal()
    sigmas = [sg for sg in range(mu.size) if mu.weights[sg]
              and (not restrict or (sg & bs and not sg & bt))]
    ex = conditional_expectations(coup, f, sigmas)
    pairs = 0
    for a in sigmas:
        for b in sigmas:
            if a != b and leq(a, b):
                pairs += 1
                if ex[a] > ex[b]:
                    return Verdict(False, {"lower": a, "upper": b, "E_lower": str(ex[a]),
                                           "E_upper": str(ex[b])}, "conditional expectation decreased")
    return Verdict(True, detail=f"{pairs} comparable spin pairs", data={"n_spins": len(sigmas)})


def check_spin_association(g: Graph, q, alpha, beta, s=None, t=None) -> Verdict:
    """Lattice condition for mu_{alpha,beta}; association of the conditioned law if s, t given."""
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    mu = from_probabilities(spin_law(g, q, alpha, beta), labels=g.vertices)
    v = check_lattice_condition(mu)
    if not v.holds or s is None:
        return v
    mu_hat = conditional_spin_measure(g, q, alpha, beta, s, t)
    return check_positive_association(mu_hat, "exhaustive", max_coords=5)


def check_spin_route(g: Graph, q, alpha, beta, s, t, f, h) -> Verdict:
    """The three-step comparison through the spins, for singleton sources.

    E[fh | s -/-> t] >= sum mu_hat E[f|sigma] E[h|sigma] >= E[f | s -/-> t] E[h | s -/-> t],
    with both outer terms also computed directly from the conditioned measure.
    """
    q, alpha, beta = fuzzy_params(q, alpha, beta)
    if alpha < 1 or beta < 1:
        raise HypothesisError("needs alpha, beta >= 1")
    f = _require_pair_monotone(g, f, s, t)
    h = _require_pair_monotone(g, h, s, t)
    fh = RealFunction(f.n_edges, tuple(x * y for x, y in zip(f.values, h.values)))
    mu_hat = conditional_spin_measure(g, q, alpha, beta, s, t)
    sigmas = [sg for sg in range(mu_hat.size) if mu_hat.weights[sg]]
    rows = {sg: omega_given_sigma(g, alpha, beta, sg) for sg in sigmas}

    def ex(fn, sg):
        return sum(p * fn.values[om] for om, p in rows[sg].items())
    w = {sg: mu_hat.p(sg) for sg in sigmas}
    top = sum(w[sg] * ex(fh, sg) for sg in sigmas)
    middle = sum(w[sg] * ex(f, sg) * ex(h, sg) for sg in sigmas)
    ef = sum(w[sg] * ex(f, sg) for sg in sigmas)
    eh = sum(w[sg] * ex(h, sg) for sg in sigmas)
    bottom = ef * eh
    phi = condition(random_cluster_measure(g, q), event_R(g, {s}, {t}))
    direct_top = expectation(phi, fh)
    direct_bottom = expectation(phi, f) * expectation(phi, h)
    data = {"top": str(top), "middle": str(middle), "bottom": str(bottom),
            "direct_top": str(direct_top), "direct_bottom": str(direct_bottom)}
    ok = top == direct_top and bottom == direct_bottom and top >= middle >= bottom
    return Verdict(ok, None if ok else data, "spin route" + ("" if ok else " broken"), data=data)
