"""Markov chains on cluster pairs and on configurations, built as exact kernels.

The pair chain moves (C_S, C_T) -> (C_S, C_T') -> (C_S', C_T'), each half resampling one
cluster from its conditional law given the other under phi = phi_{G,q}( . | S -/-> T).
The configuration chain does the same on full configurations and can be driven by
explicit uniform noise, which is what makes its monotonicity testable.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .configs import cluster_table, event_R
from .graphs import Graph
from .measures import Measure, condition, from_probabilities, random_cluster_measure
from .order import (EXHAUSTIVE_COORDS_MAX, BudgetError, Verdict, check_positive_association,
                    effective_coordinates, leq)

STATE_BUDGET = 4096


def conditioned_rcm(g: Graph, S, T, q) -> Measure:
    if not g.is_undirected:
        raise ValueError("the cluster chains are defined for undirected graphs")
    return condition(random_cluster_measure(g, q), event_R(g, S, T))


def _conditional_laws(phi: Measure, key_from, key_to):
    """{a: {b: P(key_to = b | key_from = a)}} over the support of phi."""
    acc = {}
    for omega, w in enumerate(phi.weights):
        if w:
            a, b = key_from[omega], key_to[omega]
            row = acc.setdefault(a, {})
            row[b] = row.get(b, 0) + w
    out = {}
    for a, row in acc.items():
        tot = sum(row.values())
        out[a] = {b: Fraction(v, tot) for b, v in row.items()}
    return out


def _mat_vec(dist: dict, kernel: dict) -> dict:
    out = {}
    for x, px in dist.items():
        if not px:
            continue
        for y, k in kernel[x].items():
            out[y] = out.get(y, 0) + px * k
    return out


def _strongly_connected(states, kernel) -> bool:
    if not states:
        return True
    def reach(start, adj):
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen
    fwd = {x: [y for y, k in kernel[x].items() if k] for x in states}
    rev = {x: [] for x in states}
    for x in states:
        for y in fwd[x]:
            rev[y].append(x)
    s0 = states[0]
    return len(reach(s0, fwd)) == len(states) == len(reach(s0, rev))


@dataclass
class ChainDiagnostics:
    states: list
    kernel: dict                 # state -> {state: Fraction}
    stationary: dict             # state -> Fraction
    residual: Fraction
    rows_sum_to_one: bool
    irreducible: bool
    aperiodic: bool
    tv: list = field(default_factory=list)
    mixing_steps: Optional[int] = None
    half_kernels: tuple = ()

    def to_dict(self) -> dict:
        return {
            "n_states": len(self.states),
            "stationarity_residual": str(self.residual),
            "rows_sum_to_one": self.rows_sum_to_one,
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "tv_curve": self.tv,
            "mixing_steps": self.mixing_steps,
        }


def _diagnose(states, kernel, pi, start, tv_eps=1e-6, max_steps=10_000, halves=()) -> ChainDiagnostics:
    rows_ok = all(sum(kernel[x].values()) == 1 for x in states)
    moved = _mat_vec(pi, kernel)
    residual = max((abs(moved.get(x, 0) - pi[x]) for x in states), default=Fraction(0))
    fk = {x: {y: float(k) for y, k in row.items()} for x, row in kernel.items()}
    fpi = {x: float(p) for x, p in pi.items()}
    dist = {start: 1.0}
    tv = [0.5 * sum(abs(dist.get(x, 0.0) - fpi[x]) for x in states)]
    steps = None if tv[0] >= tv_eps else 0
    while steps is None and len(tv) <= max_steps:
        dist = _mat_vec(dist, fk)
        tv.append(0.5 * sum(abs(dist.get(x, 0.0) - fpi[x]) for x in states))
        if tv[-1] < tv_eps:
            steps = len(tv) - 1
    return ChainDiagnostics(
        states=states, kernel=kernel, stationary=pi, residual=Fraction(residual),
        rows_sum_to_one=rows_ok, irreducible=_strongly_connected(states, kernel),
        aperiodic=all(kernel[x].get(x, 0) > 0 for x in states),
        tv=tv, mixing_steps=steps, half_kernels=halves)


# -- the pair-of-clusters chain ------------------------------------------------------------

def pair_chain_pieces(g: Graph, S, T, q):
    phi = conditioned_rcm(g, S, T, q)
    cs, ct = cluster_table(g, S), cluster_table(g, T)
    pi = {}
    for omega, w in enumerate(phi.weights):
        if w:
            key = (cs[omega], ct[omega])
            pi[key] = pi.get(key, 0) + w
    pi = {k: Fraction(v, phi.total) for k, v in pi.items()}
    t_given_s = _conditional_laws(phi, cs, ct)
    s_given_t = _conditional_laws(phi, ct, cs)
    return phi, pi, t_given_s, s_given_t


def build_pair_chain(g: Graph, S, T, q, tv_eps: float = 1e-6, budget: int = STATE_BUDGET) -> ChainDiagnostics:
    """Exact two-phase kernel on attainable (C_S, C_T) pairs, with stationarity diagnostics."""
    _, pi, t_given_s, s_given_t = pair_chain_pieces(g, S, T, q)
    states = sorted(pi)
    if len(states) > budget:
        raise BudgetError(f"{len(states)} states exceeds the state budget {budget}")
    update_t = {x: {(x[0], b): p for b, p in t_given_s[x[0]].items()} for x in states}
    update_s = {x: {(a, x[1]): p for a, p in s_given_t[x[1]].items()} for x in states}
    kernel = {x: _mat_vec({y: p for y, p in update_t[x].items()}, update_s) for x in states}
    return _diagnose(states, kernel, pi, (0, 0), tv_eps, halves=(update_t, update_s))


def step_pair_chain(diag: ChainDiagnostics, state, rng: Optional[random.Random] = None):
    """One two-phase move: the exact next-state law, or a sample if ``rng`` is given."""
    row = diag.kernel[state]
    if rng is None:
        return dict(row)
    u = rng.random()
    acc = 0.0
    for y in sorted(row):
        acc += float(row[y])
        if u < acc:
            return y
    return max(row)


def histories(diag: ChainDiagnostics, n: int, start=(0, 0)):
    """Exact law of (state_1, ..., state_n) from a fixed start: {history tuple: prob}."""
    dist = {(): Fraction(1)}
    for _ in range(n):
        nxt = {}
        for h, p in dist.items():
            x = h[-1] if h else start
            for y, k in diag.kernel[x].items():
                nxt[h + (y,)] = p * k
        dist = nxt
    return dist


def check_trace_association(g: Graph, S, T, q, n: int, strategy: str = "auto",
                            max_edges: int = 3, max_steps: int = 3, seed: int = 0) -> Verdict:
    """Positive association of {1[e not in C_T^i], 1[e in C_S^i] : e, 1 <= i <= n}.

    Also checks on the support that pointwise larger indicator histories give a larger
    final C_S and a smaller final C_T.
    """
    if g.n_edges > max_edges or n > max_steps:
        raise BudgetError("history unrolling is capped at |E| <= 3 and n <= 3")
    diag = build_pair_chain(g, S, T, q)
    if n == 0:
        return Verdict(True, detail="fixed start state")
    law = histories(diag, n)
    E = g.n_edges
    coords = []
    for i in range(n):
        for e in range(E):
            coords.append(("X", i, e))
            coords.append(("Y", i, e))

    def bits(h):
        v = 0
        for j, (kind, i, e) in enumerate(coords):
            cS, cT = h[i]
            b = (not cT >> e & 1) if kind == "X" else (cS >> e & 1)
            v |= int(bool(b)) << j
        return v

    probs = [Fraction(0)] * (1 << len(coords))
    hist_bits = {}
    for h, p in law.items():
        b = bits(h)
        hist_bits[h] = b
        probs[b] += p
    mu = from_probabilities(probs)
    if strategy == "auto":
        k = len(effective_coordinates(mu))
        strategy = "exhaustive" if k <= EXHAUSTIVE_COORDS_MAX else "sampled"
    v = check_positive_association(mu, strategy, max_coords=5, seed=seed)
    hs = list(hist_bits.items())
    for h1, b1 in hs:
        for h2, b2 in hs:
            if leq(b1, b2):
                (s1, t1), (s2, t2) = h1[-1], h2[-1]
                if not (leq(s1, s2) and leq(t2, t1)):
                    return Verdict(False, (h1, h2), "final clusters not monotone in indicators")
    v.data["n_coords"] = len(coords)
    return v


# -- the configuration chain ---------------------------------------------------------------

@dataclass
class DrivingNoise:
    """Uniform variates X[i][e], Y[i][e] for steps i = 0..n-1; reproducible from ``seed``."""
    X: list
    Y: list
    seed: Optional[int] = None

    @classmethod
    def from_seed(cls, seed: int, n: int, n_edges: int) -> "DrivingNoise":
        rng = random.Random(seed)
        X, Y = [], []
        for _ in range(n):
            X.append([rng.random() for _ in range(n_edges)])
            Y.append([rng.random() for _ in range(n_edges)])
        return cls(X, Y, seed)


class ConfigChain:
    """Sequential-edge coupled updates on {omega : S -/-> T}.

    Each half-step fixes one cluster, then sets edges in canonical order: tau_e = 1 iff
    X_e < alpha in the first half, omega_e = 1 iff Y_e > 1 - alpha in the second, alpha
    being the exact conditional probability that edge e is open given the cluster and the
    edges already set.
    """

    def __init__(self, g: Graph, S, T, q):
        self.g = g
        self.phi = conditioned_rcm(g, S, T, q)
        self.cs, self.ct = cluster_table(g, S), cluster_table(g, T)
        self._fibres = {}
        self._alpha = {}

    def _fibre(self, which: str, key: int):
        k = (which, key)
        if k not in self._fibres:
            table = self.cs if which == "S" else self.ct
            self._fibres[k] = [(om, w) for om, w in enumerate(self.phi.weights)
                               if w and table[om] == key]
        return self._fibres[k]

    def alpha(self, which: str, key: int, e: int, prefix: int) -> Fraction:
        """P(edge e open | cluster value, edges before e as in ``prefix``)."""
        k = (which, key, e, prefix)
        if k not in self._alpha:
            low = (1 << e) - 1
            tot = op = 0
            for om, w in self._fibre(which, key):
                if (om & low) == prefix:
                    tot += w
                    if om >> e & 1:
                        op += w
            if not tot:
                raise AssertionError("sequential update left the conditional support")
            self._alpha[k] = Fraction(op, tot)
        return self._alpha[k]

    def thresholds(self) -> dict:
        """Every cut point a noise variate is compared against, per phase and edge.

        Phase "S" compares X_e with alpha, phase "T" compares Y_e with 1 - alpha.
        """
        E = self.g.n_edges
        cuts = {"S": [set() for _ in range(E)], "T": [set() for _ in range(E)]}
        for which, table in (("S", self.cs), ("T", self.ct)):
            for key in set(table[om] for om, w in enumerate(self.phi.weights) if w):
                fibre = self._fibre(which, key)
                for e in range(E):
                    low = (1 << e) - 1
                    for prefix in set(om & low for om, _ in fibre):
                        a = self.alpha(which, key, e, prefix)
                        cuts[which][e].add(a if which == "S" else 1 - a)
        return cuts

    def half_step(self, which: str, key: int, u: list, lower: bool) -> int:
        out = 0
        for e in range(self.g.n_edges):
            a = self.alpha(which, key, e, out)
            if (u[e] < a) if lower else (u[e] > 1 - a):
                out |= 1 << e
        return out

    def step(self, omega: int, x: list, y: list) -> int:
        tau = self.half_step("S", self.cs[omega], x, lower=True)
        return self.half_step("T", self.ct[tau], y, lower=False)

    def run(self, noise: DrivingNoise, n: int, omega0: int = 0) -> list:
        trace = [omega0]
        for i in range(n):
            trace.append(self.step(trace[-1], noise.X[i], noise.Y[i]))
        return trace

    def exact_kernel(self) -> dict:
        """Exact two-phase kernel on the support of phi."""
        states = [om for om, w in enumerate(self.phi.weights) if w]
        by_s, by_t = {}, {}
        for om in states:
            by_s.setdefault(self.cs[om], []).append(om)
            by_t.setdefault(self.ct[om], []).append(om)

        def law(group):
            tot = sum(self.phi.weights[z] for z in group)
            return {z: Fraction(self.phi.weights[z], tot) for z in group}
        ls = {k: law(v) for k, v in by_s.items()}
        lt = {k: law(v) for k, v in by_t.items()}
        kernel = {}
        for om in states:
            row = {}
            for tau, p in ls[self.cs[om]].items():
                for nxt, r in lt[self.ct[tau]].items():
                    row[nxt] = row.get(nxt, 0) + p * r
            kernel[om] = row
        return kernel


def run_config_chain(g: Graph, S, T, q, noise: DrivingNoise, n: int, omega0: int = 0) -> list:
    return ConfigChain(g, S, T, q).run(noise, n, omega0)


def config_chain_diagnostics(g: Graph, S, T, q, tv_eps: float = 1e-6) -> ChainDiagnostics:
    ch = ConfigChain(g, S, T, q)
    kernel = ch.exact_kernel()
    states = sorted(kernel)
    pi = {om: ch.phi.p(om) for om in states}
    return _diagnose(states, kernel, pi, 0, tv_eps)


def config_chain_frequencies(g: Graph, S, T, q, steps: int, seed: int, omega0: int = 0) -> dict:
    """Visit frequencies of omega^1..omega^steps, with noise drawn on the fly from ``seed``."""
    ch = ConfigChain(g, S, T, q)
    rng = random.Random(seed)
    E = g.n_edges
    counts = {}
    om = omega0
    for _ in range(steps):
        x = [rng.random() for _ in range(E)]
        y = [rng.random() for _ in range(E)]
        om = ch.step(om, x, y)
        counts[om] = counts.get(om, 0) + 1
    return counts


def _midpoints(cuts) -> list:
    pts = sorted(set(cuts) | {Fraction(0), Fraction(1)})
    return [float((a + b) / 2) for a, b in zip(pts, pts[1:])]


def check_config_chain_monotone(g: Graph, S, T, q, n: int, grid_step: Optional[Fraction] = Fraction(1, 8),
                                budget: int = 20_000, seed: int = 0, target: str = "omega") -> Verdict:
    """Monotonicity of the chain's state at time n in every noise variate.

    ``target="omega"`` asks that omega^n be coordinatewise non-decreasing;
    ``target="clusters"`` asks only that C_S(omega^n) grow and C_T(omega^n) shrink.
    Noise values live on the midpoints of a grid of mesh ``grid_step`` and each variate is
    raised to the next grid value.  With ``grid_step=None`` the grid is instead cut at every
    threshold the chain can compare against, so one point per cell covers the continuum.
    All base points are tried when the grid has at most ``budget`` of them, otherwise
    ``budget`` seeded ones (evidence, not proof).
    """
    if target not in ("omega", "clusters"):
        raise ValueError(f"unknown target {target!r}")
    if g.n_edges > 3 or n > 2:
        raise BudgetError("noise-grid monotonicity check is capped at |E| <= 3 and n <= 2")
    if n == 0:
        return Verdict(True, detail="no noise variates")
    ch = ConfigChain(g, S, T, q)
    E = g.n_edges
    dim = 2 * n * E
    if grid_step is None:
        cuts = ch.thresholds()
        axes = []
        for i in range(n):
            axes += [_midpoints(cuts["S"][e]) for e in range(E)]
            axes += [_midpoints(cuts["T"][e]) for e in range(E)]
    else:
        m = int(1 / Fraction(grid_step))
        axes = [[float((k + Fraction(1, 2)) / m) for k in range(m)]] * dim

    def run(idx):
        om = 0
        for i in range(n):
            base = 2 * i * E
            x = [axes[base + e][idx[base + e]] for e in range(E)]
            y = [axes[base + E + e][idx[base + E + e]] for e in range(E)]
            om = ch.step(om, x, y)
        return om

    sizes = [len(a) for a in axes]
    total = 1
    for k in sizes:
        total *= k
    if total <= budget:
        points = itertools.product(*(range(k) for k in sizes))
        proof = True
    else:
        rng = random.Random(seed)
        points = (tuple(rng.randrange(k) for k in sizes) for _ in range(budget))
        proof = False
    checked = 0
    for idx in points:
        base = run(idx)
        for c in range(dim):
            if idx[c] + 1 < sizes[c]:
                up = list(idx)
                up[c] += 1
                moved = run(up)
                checked += 1
                if target == "omega":
                    bad = base & ~moved
                else:
                    bad = (ch.cs[base] & ~ch.cs[moved]) | (ch.ct[moved] & ~ch.ct[base])
                if bad:
                    return Verdict(False, {"noise": [axes[j][k] for j, k in enumerate(idx)],
                                           "coordinate": c, "before": base, "after": moved},
                                   f"{target} not monotone at time n", data={"target": target})
    return Verdict(True, detail=f"{checked} single-variate increments", proof=proof,
                   data={"grid_points": total, "exhaustive": proof, "target": target})
