"""Order-theoretic checks on measures over {0,1}^n.

Configurations are compared coordinatewise (``x <= y`` iff ``x & ~y == 0``).  Up-sets of
{0,1}^k are bitmasks over its 2^k points.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import networkx as nx

from .graphs import iter_bits
from .configs import cluster_table
from .measures import (Measure, ZeroProbabilityError, condition, covariance, from_probabilities,
                       marginal)

EXHAUSTIVE_COORDS = 4
EXHAUSTIVE_COORDS_MAX = 5


class BudgetError(ValueError):
    """Requested an exhaustive check beyond the configured budget."""


@dataclass
class Verdict:
    holds: bool
    witness: object = None
    detail: str = ""
    proof: bool = True          # False when the verdict is sampled evidence only
    data: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def leq(x: int, y: int) -> bool:
    return not x & ~y


# -- lattice condition and four functions ---------------------------------------------------

def check_lattice_condition(mu: Measure, full: Optional[bool] = None, tol: float = 0.0) -> Verdict:
    """mu(x)mu(y) <= mu(x&y)mu(x|y) for all x, y.

    For strictly positive weights only pairs differing in exactly two coordinates are tested
    (the usual local reduction); with zeros in the support every pair is tested.  ``full``
    forces the choice.
    """
    w, n = mu.weights, mu.n_bits
    if full is None:
        full = not all(x > 0 for x in w)
    if full:
        for x in range(mu.size):
            wx = w[x]
            if not wx:
                continue
            for y in range(x + 1, mu.size):
                if wx * w[y] > w[x & y] * w[x | y] + tol:
                    return Verdict(False, (x, y), "lattice condition fails")
        return Verdict(True, detail="all pairs")
    for xi in range(mu.size):
        for i in range(n):
            if xi >> i & 1:
                continue
            for j in range(i + 1, n):
                if xi >> j & 1:
                    continue
                a, b = xi | 1 << i, xi | 1 << j
                if w[a] * w[b] > w[xi] * w[a | b] + tol:
                    return Verdict(False, (a, b), "lattice condition fails")
    return Verdict(True, detail="two-coordinate reduction")


def check_ad_hypothesis(alpha: Sequence, beta: Sequence, gamma: Sequence, delta: Sequence) -> Verdict:
    """alpha(a)beta(b) <= gamma(a|b)delta(a&b) for every pair of points a, b."""
    n = len(alpha)
    if not len(beta) == len(gamma) == len(delta) == n:
        raise ValueError("functions on different spaces")
    for a in range(n):
        if not alpha[a]:
            continue
        for b in range(n):
            if alpha[a] * beta[b] > gamma[a | b] * delta[a & b]:
                return Verdict(False, (a, b), "four-functions hypothesis fails")
    return Verdict(True)


def ad_sums(alpha, beta, gamma, delta, A: Iterable[int] = None, B: Iterable[int] = None):
    """The four-functions conclusion for families A, B: returns (lhs, rhs)."""
    A = list(range(len(alpha))) if A is None else list(A)
    B = list(range(len(alpha))) if B is None else list(B)
    join = {a | b for a in A for b in B}
    meet = {a & b for a in A for b in B}
    lhs = sum(alpha[a] for a in A) * sum(beta[b] for b in B)
    rhs = sum(gamma[c] for c in join) * sum(delta[c] for c in meet)
    return lhs, rhs


# -- up-sets ----------------------------------------------------------------------------------

@lru_cache(maxsize=None)
def upsets(k: int) -> tuple:
    """All up-sets of {0,1}^k as bitmasks over its 2^k points."""
    if k == 0:
        return (0, 1)
    prev = upsets(k - 1)
    half = 1 << (k - 1)
    out = []
    for lo in prev:
        for hi in prev:
            if not lo & ~hi:
                out.append(lo | hi << half)
    return tuple(out)


def up_closure(points: Iterable[int], n: int) -> int:
    pts = list(points)
    m = 0
    for y in range(1 << n):
        for x in pts:
            if not x & ~y:
                m |= 1 << y
                break
    return m


def is_upset(mask: int, n: int) -> bool:
    for x in iter_bits(mask):
        for i in range(n):
            if not mask >> (x | 1 << i) & 1:
                return False
    return True


def random_upset(rng: random.Random, n: int, draws: int = None) -> int:
    """Up-closure of a random antichain built by discarding comparable draws."""
    draws = draws if draws is not None else rng.randint(1, max(1, n))
    chain = []
    for _ in range(draws):
        x = rng.randrange(1 << n)
        if all(not (leq(x, y) or leq(y, x)) for y in chain):
            chain.append(x)
    return up_closure(chain, n)


def effective_coordinates(mu: Measure) -> list:
    """Coordinates that are not almost surely constant."""
    ones = zeros = 0
    for x, w in enumerate(mu.weights):
        if w:
            ones |= x
            zeros |= ~x
    return [i for i in range(mu.n_bits) if ones >> i & 1 and zeros >> i & 1]


def _mass(w, mask):
    return sum(w[i] for i in iter_bits(mask))


def check_positive_association(mu: Measure, strategy: str = "exhaustive", *,
                               max_coords: int = EXHAUSTIVE_COORDS, samples: int = 40,
                               seed: int = 0, family: Sequence = (), tol: float = 0.0) -> Verdict:
    """E[fg] >= E[f]E[g] for increasing f, g.

    ``exhaustive`` projects out a.s.-constant coordinates and checks every pair of up-set
    indicators (a proof, since increasing functions are positive combinations of those);
    ``sampled`` checks random up-sets only; ``family`` checks the supplied value vectors.
    """
    if strategy == "family":
        return _check_family(mu, family, tol)
    coords = effective_coordinates(mu)
    k = len(coords)
    nu = marginal(mu, coords)
    w, tot = nu.weights, nu.total
    if strategy == "exhaustive":
        if k > max_coords:
            raise BudgetError(f"{k} effective coordinates exceeds the exhaustive budget {max_coords}")
        ups = upsets(k)
        proof = True
    elif strategy == "sampled":
        rng = random.Random(seed)
        ups = tuple(sorted({random_upset(rng, k) for _ in range(samples)}))
        proof = False
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    mass = {u: _mass(w, u) for u in ups}
    for i, u in enumerate(ups):
        mu_u = mass[u]
        if not mu_u:
            continue
        for v in ups[i:]:
            inter = mass.get(u & v)
            if inter is None:
                inter = _mass(w, u & v)
            if tot * inter - mu_u * mass[v] < -tol * tot * tot:
                cov = nu._ratio(inter) - nu._ratio(mu_u) * nu._ratio(mass[v])
                return Verdict(False, {"coords": coords, "upsets": (u, v), "covariance": cov},
                               "negative covariance of two up-sets", proof=True)
    return Verdict(True, detail=f"{len(ups)} up-sets on {k} coordinates", proof=proof,
                   data={"coords": coords, "n_upsets": len(ups)})


def _check_family(mu: Measure, family, tol) -> Verdict:
    fam = list(family)
    for i, f in enumerate(fam):
        for g in fam[i:]:
            c = covariance(mu, f, g)
            if c < -tol:
                return Verdict(False, {"pair": (i, fam.index(g)), "covariance": c}, proof=True)
    return Verdict(True, detail=f"{len(fam)} supplied functions", proof=False)


# -- stochastic dominance ------------------------------------------------------------------

def check_dominance(nu: Measure, nu_prime: Measure) -> Verdict:
    """Decide nu >= nu' (nu dominates) by a monotone-coupling max-flow in integers.

    Witness: the coupling {(x, y): prob} with x ~ nu', y ~ nu, x <= y, or a violating up-set.
    """
    if nu.n_bits != nu_prime.n_bits:
        raise ValueError("measures on different spaces")
    if nu.backend != "rational" or nu_prime.backend != "rational":
        raise ValueError("dominance is decided in exact arithmetic only")
    n = nu.n_bits
    src = [(x, w * nu.total) for x, w in enumerate(nu_prime.weights) if w]
    dst = [(y, w * nu_prime.total) for y, w in enumerate(nu.weights) if w]
    target = nu.total * nu_prime.total
    G = nx.DiGraph()
    for x, c in src:
        G.add_edge("s", ("x", x), capacity=c)
    for y, c in dst:
        G.add_edge(("y", y), "t", capacity=c)
    for x, _ in src:
        for y, _ in dst:
            if leq(x, y):
                G.add_edge(("x", x), ("y", y))
    if not src:
        return Verdict(True, {})
    value, flow = nx.maximum_flow(G, "s", "t")
    if value == target:
        coupling = {}
        for x, _ in src:
            for node, f in flow[("x", x)].items():
                if f:
                    coupling[(x, node[1])] = Fraction(f, target)
        return Verdict(True, coupling, "monotone coupling found")
    _, (reach, _) = nx.minimum_cut(G, "s", "t")
    A = [node[1] for node in reach if isinstance(node, tuple) and node[0] == "x"]
    U = up_closure(A, n)
    return Verdict(False, U, "up-set with more nu' mass than nu mass",
                   data={"nu(U)": nu.prob(U), "nu'(U)": nu_prime.prob(U)})


def check_dominance_upsets(nu: Measure, nu_prime: Measure, max_coords: int = EXHAUSTIVE_COORDS) -> Verdict:
    """nu(U) >= nu'(U) for every up-set U (brute force; small n only)."""
    n = nu.n_bits
    if n > max_coords:
        raise BudgetError("too many coordinates for up-set enumeration")
    for u in upsets(n):
        if nu.mass(u) * nu_prime.total < nu_prime.mass(u) * nu.total:
            return Verdict(False, u)
    return Verdict(True)


def law_as_measure(dist: dict, n_bits: int) -> Measure:
    """Turn {bitmask: probability} into a Measure on {0,1}^n_bits."""
    probs = [Fraction(0)] * (1 << n_bits)
    for k, v in dist.items():
        probs[k] += v
    return from_probabilities(probs)


def check_conditional_monotone_shift(phi: Measure, S, T, F: int, F_prime: int, family=None) -> Verdict:
    """phi(h | C_S = F) >= phi(h | C_S = F') for h increasing in C_T, where F <= F'.

    Without ``family`` this is decided for *all* such h via dominance of the two laws of C_T.
    ``family`` is a list of callables on C_T bitmasks.
    """
    g = phi.graph
    if not leq(F, F_prime):
        raise ValueError("need F contained in F'")
    cs, ct = cluster_table(g, S), cluster_table(g, T)

    def law(Fv):
        acc, tot = {}, 0
        for omega, w in enumerate(phi.weights):
            if w and cs[omega] == Fv:
                acc[ct[omega]] = acc.get(ct[omega], 0) + w
                tot += w
        if not tot:
            raise ZeroProbabilityError("cluster value not attainable")
        return {k: Fraction(v, tot) for k, v in acc.items()}

    lo, hi = law(F), law(F_prime)
    if family is None:
        return check_dominance(law_as_measure(lo, g.n_edges), law_as_measure(hi, g.n_edges))
    for i, h in enumerate(family):
        a = sum(p * h(c) for c, p in lo.items())
        b = sum(p * h(c) for c, p in hi.items())
        if a < b:
            return Verdict(False, i, "family member breaks the shift inequality")
    return Verdict(True, proof=False)


def check_lpa(psi: Measure, a: int, max_coords: int = EXHAUSTIVE_COORDS) -> dict:
    """Hypotheses (i)-(iii) and the conclusion of the 'W block then Z block' association lemma.

    Bits ``0..a-1`` are the W block, the rest the Z block.
    """
    n = psi.n_bits
    wbits = list(range(a))
    zbits = list(range(a, n))
    out = {}
    out["i"] = check_positive_association(marginal(psi, wbits), max_coords=max_coords).holds
    conds = {}
    for wv in range(1 << a):
        ev = 0
        for x in range(psi.size):
            if (x & ((1 << a) - 1)) == wv:
                ev |= 1 << x
        if psi.mass(ev):
            conds[wv] = marginal(condition(psi, ev), zbits)
    out["ii"] = all(check_positive_association(m, max_coords=max_coords).holds for m in conds.values())
    out["iii"] = all(check_dominance(conds[w2], conds[w1]).holds
                     for w1 in conds for w2 in conds if w1 != w2 and leq(w1, w2))
    out["conclusion"] = check_positive_association(psi, max_coords=max_coords).holds
    return out
