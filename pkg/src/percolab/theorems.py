"""Exact checkers for the conditional correlation inequalities.

Every checker computes both sides exactly, normalises the orientation so that
``slack = rhs - lhs >= 0`` means the statement holds, and refuses to run when a
monotonicity hypothesis cannot be certified.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .configs import (Event, HypothesisError, RealFunction, as_function, certify,
                      event_R, event_Q_disjoint_clusters, event_reach, reduce_event_off_EX,
                      sure_event, verify_monotone)
from .graphs import Graph, graph, identify_vertices, edges_meeting
from .measures import (Measure, ZeroProbabilityError, boundary_neighbours, boundary_set_key,
                       check_log_modular, boundary_set_distribution, condition, covariance,
                       expectation, product_measure, random_cluster_measure)
from .order import check_ad_hypothesis

REPORT_SCHEMA = 1

THEOREMS = ("T1.1", "T1.2", "T1.3", "T1.4", "T1.5", "T2.5", "T3.1", "T3.3", "E-conv",
            "T3.5", "E-vdBK1", "E-new1", "CEX-directed")


def fstr(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(x) if isinstance(x, float) else str(x)


@dataclass
class Report:
    theorem: str
    graph: Graph
    params: dict
    lhs: object
    rhs: object
    expect: str = "hold"
    witness: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= 0

    @property
    def equality(self) -> bool:
        return self.slack == 0

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "violation"

    @property
    def as_expected(self) -> bool:
        return self.holds if self.expect == "hold" else not self.holds

    @property
    def instance_hash(self) -> str:
        blob = json.dumps({"theorem": self.theorem, "graph": self.graph.to_dict(),
                           "params": self.params}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "theorem": self.theorem,
            "instance_hash": self.instance_hash,
            "graph": self.graph.to_dict(),
            "params": self.params,
            "lhs": fstr(self.lhs),
            "rhs": fstr(self.rhs),
            "slack": fstr(self.slack),
            "verdict": self.verdict,
            "equality": self.equality,
            "expect": self.expect,
            "as_expected": self.as_expected,
        }
        if self.witness is not None or not self.holds:
            out["witness"] = self.witness
        if self.extra:
            out["extra"] = self.extra
        return out


# -- helpers ------------------------------------------------------------------------------

@lru_cache(maxsize=512)
def _product(g: Graph, backend: str = "rational") -> Measure:
    return product_measure(g, backend)


@lru_cache(maxsize=512)
def _rcm(g: Graph, q: Fraction, backend: str = "rational") -> Measure:
    return random_cluster_measure(g, q, backend)


def _vset(x) -> frozenset:
    if x is None:
        return frozenset()
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


def _names(vs) -> list:
    return sorted(map(str, vs))


def _desc(x) -> dict:
    x = x if isinstance(x, (Event, RealFunction)) else as_function(x)
    if isinstance(x, Event):
        return {"tag": x.tag, "mask": format(x.mask, "x")}
    digest = hashlib.sha256(",".join(fstr(v) for v in x.values).encode()).hexdigest()[:16]
    return {"tag": x.tag, "values": digest}


def _require(g: Graph, subject, claim: str, S=(), T=()):
    return verify_monotone(g, certify(subject, claim, S, T)).require()


def _direction(g: Graph, subject, S) -> int:
    """+1 if cluster-increasing in S, -1 if cluster-decreasing, else HypothesisError."""
    if verify_monotone(g, certify(subject, "cluster-increasing", S)).verified:
        return 1
    if verify_monotone(g, certify(subject, "cluster-decreasing", S)).verified:
        return -1
    raise HypothesisError(f"{getattr(subject, 'tag', subject)} is not a monotone function of C_S")


def _check_sources(g: Graph, s, *sets):
    s = _vset(s)
    g.check_vertices(s)
    for X in sets:
        g.check_vertices(X)
        if s & _vset(X):
            raise HypothesisError("X and Y must avoid the source vertex")
    return s


def _cond(mu: Measure, ev: Event) -> Measure:
    return condition(mu, ev)


def _cov_report(theorem, g, params, mu, f, g_fn, sign=1, expect="hold", extra=None) -> Report:
    """Report with slack = sign * Cov_mu(f, g)."""
    ef, eg = expectation(mu, f), expectation(mu, g_fn)
    f_, g_ = as_function(f), as_function(g_fn)
    efg = expectation(mu, RealFunction(f_.n_edges, tuple(a * b for a, b in zip(f_.values, g_.values))))
    if sign > 0:
        lhs, rhs = ef * eg, efg
    else:
        lhs, rhs = efg, ef * eg
    return Report(theorem, g, params, lhs, rhs, expect=expect, extra=extra or {})


# -- section 1 and its directed version -------------------------------------------------------

def _thm_1_1(theorem, g, s, A, B, X, Y, backend="rational") -> Report:
    s = _check_sources(g, s, X, Y)
    X, Y = _vset(X), _vset(Y)
    _require(g, A, "cluster-increasing", s)
    _require(g, B, "cluster-increasing", s)
    mu = _product(g, backend)
    RX, RY = event_R(g, s, X), event_R(g, s, Y)
    RI, RU = event_R(g, s, X & Y), event_R(g, s, X | Y)
    lhs = mu.prob(A & RX) * mu.prob(B & RY)
    rhs = mu.prob(A & B & RI) * mu.prob(RU)
    params = {"s": _names(s), "X": _names(X), "Y": _names(Y), "A": _desc(A), "B": _desc(B)}
    return Report(theorem, g, params, lhs, rhs)


def check_thm_1_1(g: Graph, s, A: Event, B: Event, X, Y, backend="rational") -> Report:
    """P(A R_X) P(B R_Y) <= P(A B R_{X&Y}) P(R_{X|Y}) for cluster-increasing A, B."""
    if not g.is_undirected:
        raise HypothesisError("T1.1 is stated for undirected graphs; use check_thm_3_1")
    return _thm_1_1("T1.1", g, s, A, B, X, Y, backend)


def check_thm_3_1(g: Graph, s, A: Event, B: Event, X, Y, backend="rational") -> Report:
    """The same inequality with orientation-respecting paths (any mix of edge kinds)."""
    return _thm_1_1("T3.1", g, s, A, B, X, Y, backend)


def check_conv(g: Graph, s, X, Y, backend="rational") -> Report:
    """P(R_X) P(R_Y) <= P(R_{X|Y}) P(R_{X&Y})."""
    om = sure_event(g)
    rep = _thm_1_1("E-conv", g, s, om, om, X, Y, backend)
    return rep


def _thm_1_2(theorem, g, s, A, B, X, backend="rational") -> Report:
    s = _check_sources(g, s, X)
    _require(g, A, "cluster-increasing", s)
    _require(g, B, "cluster-increasing", s)
    mu = _cond(_product(g, backend), event_R(g, s, X))
    params = {"s": _names(s), "X": _names(_vset(X)), "A": _desc(A), "B": _desc(B)}
    return _cov_report(theorem, g, params, mu, A, B)


def check_thm_1_2(g: Graph, s, A: Event, B: Event, X, backend="rational") -> Report:
    """P(AB | R_X) >= P(A | R_X) P(B | R_X)."""
    return _thm_1_2("T1.2", g, s, A, B, X, backend)


def check_vdBK1(g: Graph, s, t, a, b) -> Report:
    """P(s~a, s~b | s !~ t) >= P(s~a | s !~ t) P(s~b | s !~ t)."""
    rep = _thm_1_2("E-vdBK1", g, s, event_reach(g, s, a), event_reach(g, s, b), [t])
    rep.params.update({"t": str(t), "a": str(a), "b": str(b)})
    return rep


def check_new1(g: Graph, s, t, a, b) -> Report:
    """P(s~a, t~b | s !~ t) <= P(s~a | s !~ t) P(t~b | s !~ t)."""
    if s == t:
        raise HypothesisError("s and t must differ")
    mu = _cond(_product(g), event_R(g, [s], [t]))
    params = {"s": str(s), "t": str(t), "a": str(a), "b": str(b)}
    return _cov_report("E-new1", g, params, mu, event_reach(g, s, a), event_reach(g, t, b), sign=-1)


def _thm_1_3(theorem, g, s, X, f, g_fn, backend="rational") -> Report:
    s = _check_sources(g, s, X)
    df, dg = _direction(g, f, s), _direction(g, g_fn, s)
    mu = _cond(_product(g, backend), event_R(g, s, X))
    branch = "same" if df == dg else "mixed"
    params = {"s": _names(s), "X": _names(_vset(X)), "f": _desc(f), "g": _desc(g_fn), "branch": branch}
    return _cov_report(theorem, g, params, mu, f, g_fn, sign=df * dg)


def check_thm_1_3(g: Graph, s, X, f, g_fn, backend="rational") -> Report:
    """Cov(f, g | R_X) >= 0 for f, g both monotone the same way in C_s; <= 0 if opposite."""
    if not g.is_undirected:
        raise HypothesisError("T1.3 is stated for undirected graphs; use check_thm_3_3")
    return _thm_1_3("T1.3", g, s, X, f, g_fn, backend)


def check_thm_3_3(g: Graph, s, X, f, g_fn, backend="rational") -> Report:
    """Directed version of the functional form (orientation-respecting clusters)."""
    return _thm_1_3("T3.3", g, s, X, f, g_fn, backend)


def _pair_setup(g, S, T):
    S, T = _vset(S), _vset(T)
    g.check_vertices(S | T)
    if not S or not T:
        raise HypothesisError("S and T must be non-empty")
    if S & T:
        raise HypothesisError("S and T must be disjoint")
    return S, T


def check_thm_1_4(g: Graph, s, t, f, g_fn, backend="rational") -> Report:
    """E[fg | s !~ t] <= E[f | s !~ t] E[g | s !~ t]; f increasing in C_s, g increasing in C_t."""
    S, T = _pair_setup(g, s, t)
    if not g.is_undirected:
        raise HypothesisError("T1.4 is stated for undirected graphs")
    _require(g, f, "cluster-increasing", S)
    _require(g, g_fn, "cluster-increasing", T)
    mu = _cond(_product(g, backend), event_R(g, S, T))
    params = {"s": _names(S), "t": _names(T), "f": _desc(f), "g": _desc(g_fn)}
    return _cov_report("T1.4", g, params, mu, f, g_fn, sign=-1)


def check_thm_1_5(g: Graph, s, t, f, g_fn, backend="rational") -> Report:
    """Cov(f, g | s !~ t) >= 0 for f, g increasing in C_s and decreasing in C_t."""
    S, T = _pair_setup(g, s, t)
    if not g.is_undirected:
        raise HypothesisError("T1.5 is stated for undirected graphs; see check_thm_3_5")
    _require(g, f, "pair-monotone", S, T)
    _require(g, g_fn, "pair-monotone", S, T)
    mu = _cond(_product(g, backend), event_R(g, S, T))
    params = {"s": _names(S), "t": _names(T), "f": _desc(f), "g": _desc(g_fn)}
    return _cov_report("T1.5", g, params, mu, f, g_fn)


def check_thm_2_5(g: Graph, S, T, q, f, g_fn, backend="rational") -> Report:
    """Cov(f, g) >= 0 under phi_{G,q}( . | S !~ T), q >= 1, f, g pair-monotone."""
    q = Fraction(q)
    if q < 1:
        raise HypothesisError("q < 1 is out of scope")
    S, T = _pair_setup(g, S, T)
    if not g.is_undirected:
        raise HypothesisError("the random-cluster statement is for undirected graphs")
    _require(g, f, "pair-monotone", S, T)
    _require(g, g_fn, "pair-monotone", S, T)
    mu = _cond(_rcm(g, q, backend), event_R(g, S, T))
    params = {"S": _names(S), "T": _names(T), "q": fstr(q), "f": _desc(f), "g": _desc(g_fn)}
    return _cov_report("T2.5", g, params, mu, f, g_fn)


def check_thm_3_5(g: Graph, s, t, f, g_fn, backend="rational") -> Report:
    """Cov(f, g | Q) >= 0 on an all-directed graph, Q = {V(C_s), V(C_t) disjoint}."""
    if not g.is_directed:
        raise HypothesisError("T3.5 needs every edge oriented (the mixed case is only conjectured)")
    if s == t:
        raise HypothesisError("s and t must differ")
    _require(g, f, "pair-monotone", [s], [t])
    _require(g, g_fn, "pair-monotone", [s], [t])
    mu = _cond(_product(g, backend), event_Q_disjoint_clusters(g, s, t))
    params = {"s": str(s), "t": str(t), "f": _desc(f), "g": _desc(g_fn)}
    return _cov_report("T3.5", g, params, mu, f, g_fn)


def counterexample_graph(p=Fraction(1, 2)) -> Graph:
    """The digraph on {s,t,v,a} with edges (s,v), (t,v), (v,a)."""
    return graph("stva", ["sv", "tv", "va"], p=p, oriented=True)


def check_counterexample_directed(g: Graph = None, variant: str = "s!t", s="s", t="t", a="a") -> Report:
    """The would-be directed analogue of T1.4 with f = 1{s->a}, g = 1{t->a}.

    ``variant`` is ``"s!t"`` (condition on s -/-> t) or ``"s!t!s"`` (neither direction).
    The report expects a violation.
    """
    g = counterexample_graph() if g is None else g
    cond = event_R(g, [s], [t])
    if variant == "s!t!s":
        cond = cond & event_R(g, [t], [s])
    elif variant != "s!t":
        raise ValueError(f"unknown variant {variant!r}")
    mu = _cond(_product(g), cond)
    A, B = event_reach(g, s, a), event_reach(g, t, a)
    params = {"variant": variant, "s": s, "t": t, "a": a}
    rep = _cov_report("CEX-directed", g, params, mu, A, B, sign=-1, expect="violate")
    rep.extra["covariance"] = fstr(covariance(mu, A, B))
    rep.extra["conditioning_is_sure"] = cond.is_sure()
    if not rep.holds:
        rep.witness = {"A": A.tag, "B": B.tag, "covariance": fstr(covariance(mu, A, B))}
    return rep


# -- proof traces ----------------------------------------------------------------------------

def thm_1_1_equivalence(g: Graph, s, A: Event, B: Event, X, Y) -> dict:
    """Rebuild both sides of the T1.1 inequality from quantities conditioned on R_{X&Y}.

    Returns the direct and reconstructed sides plus the two intermediate inequalities of the
    conditional chain.
    """
    s = _check_sources(g, s, X, Y)
    X, Y = _vset(X), _vset(Y)
    mu = _product(g)
    RI = event_R(g, s, X & Y)
    pr = _cond(mu, RI)
    rxy, ryx = event_R(g, s, X - Y), event_R(g, s, Y - X)
    p_ri = mu.prob(RI)
    left_c = pr.prob(A & rxy) * pr.prob(B & ryx)
    mid_c = pr.prob(A) * pr.prob(rxy) * pr.prob(B) * pr.prob(ryx)
    right_c = pr.prob(A & B) * pr.prob(rxy & ryx)
    direct = _thm_1_1("T1.1", g, s, A, B, X, Y)
    return {
        "direct_lhs": direct.lhs, "direct_rhs": direct.rhs,
        "rebuilt_lhs": left_c * p_ri ** 2, "rebuilt_rhs": right_c * p_ri ** 2,
        "matches": left_c * p_ri ** 2 == direct.lhs and right_c * p_ri ** 2 == direct.rhs,
        "first_step": left_c <= mid_c, "second_step": mid_c <= right_c,
    }


def thm_1_1_proof_trace(g: Graph, s, A: Event, B: Event, X, Y) -> dict:
    """Executable pieces of the inductive step: reduced events, the boundary-set law, the
    decomposition over it, and the four-functions hypothesis it feeds."""
    s = _check_sources(g, s, X, Y)
    X, Y = _vset(X), _vset(Y)
    (s0,) = tuple(s)
    At = reduce_event_off_EX(g, A, s0, X)
    Bt = reduce_event_off_EX(g, B, s0, Y)
    mu = _product(g)
    out = {"reduced_A_ok": mu.prob(At & event_R(g, s, X)) == mu.prob(A & event_R(g, s, X)),
           "reduced_B_ok": mu.prob(Bt & event_R(g, s, Y)) == mu.prob(B & event_R(g, s, Y))}
    Z = X & Y
    if not Z:
        out["base_case"] = True
        return out
    N = sorted(boundary_neighbours(g, Z), key=g.index.__getitem__)
    dist = boundary_set_distribution(g, Z)
    out["log_modular"] = check_log_modular(dist) is None
    key = boundary_set_key(g, Z)

    def as_index(sub):
        return sum(1 << j for j, v in enumerate(N) if v in sub)

    def fn(ev: Event):
        vals = [0] * (1 << len(N))
        for omega in ev.members():
            w = mu.weights[omega]
            if w:
                vals[as_index(key(omega))] += w
        return [Fraction(v, mu.total) for v in vals]

    RX, RY = event_R(g, s, X), event_R(g, s, Y)
    RI, RU = event_R(g, s, Z), event_R(g, s, X | Y)
    alpha, beta = fn(At & RX), fn(Bt & RY)
    gamma, delta = fn(RU), fn(At & Bt & RI)
    out["decomposition_ok"] = (sum(alpha) == mu.prob(A & RX) and sum(beta) == mu.prob(B & RY))
    out["ad_hypothesis"] = check_ad_hypothesis(alpha, beta, gamma, delta).holds
    return out


def singleton_reduction(g: Graph, s, targets_a: Iterable, targets_b: Iterable, X) -> dict:
    """Compare the T1.2 quantities on g with those on g after merging X into one vertex.

    The events are A = {s reaches every vertex of targets_a}, likewise B; targets must avoid X.
    """
    X = _vset(X)
    ta, tb = list(targets_a), list(targets_b)
    if X & set(ta + tb) or s in X:
        raise HypothesisError("targets and source must avoid X")
    h, _ = identify_vertices(g, X, name="__X__")

    def reach_all(gr, ts):
        ev = sure_event(gr)
        for w in ts:
            ev = ev & event_reach(gr, s, w)
        return ev

    r1 = _thm_1_2("T1.2", g, s, reach_all(g, ta), reach_all(g, tb), X)
    r2 = _thm_1_2("T1.2", h, s, reach_all(h, ta), reach_all(h, tb), ["__X__"])
    return {"original": r1, "merged": r2, "equal": (r1.lhs, r1.rhs) == (r2.lhs, r2.rhs)}
