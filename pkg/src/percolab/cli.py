"""Command-line front end.

Exit codes: 0 when the outcome is the expected one, 1 for bad input or an unmet
hypothesis, 2 for an unexpected violation.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import chains, contact, fuzz, fuzzy, reports
from . import theorems as th
from .configs import HypothesisError, parse_expression
from .graphs import DEFAULT_EDGE_CAP, Graph, GraphError, fixture
from .measures import ZeroProbabilityError
from .order import BudgetError, Verdict

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2
INPUT_ERRORS = (GraphError, HypothesisError, ZeroProbabilityError, BudgetError, ValueError,
                KeyError, OSError, json.JSONDecodeError)


def jsonable(x):
    if isinstance(x, Fraction):
        return th.fstr(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return sorted(jsonable(v) for v in x)
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def verdict_dict(v: Verdict) -> dict:
    return {"holds": v.holds, "proof": v.proof, "detail": v.detail,
            "witness": jsonable(v.witness), "data": jsonable(v.data)}


def _read_json_arg(value: str):
    """A path to a JSON file, or inline JSON text."""
    p = Path(value)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(value)


def load_graph(value: str, edge_cap: int) -> Graph:
    if value.startswith("fixture:"):
        g = fixture(value.split(":", 1)[1])
        return Graph(g.vertices, g.edges, edge_cap=edge_cap)
    return Graph.from_dict(_read_json_arg(value), edge_cap=edge_cap)


def _vertices(x) -> list:
    if x is None:
        return []
    if isinstance(x, str):
        return [v.strip() for v in x.split(",") if v.strip()]
    return [str(v) for v in x]


def _emit(args, obj) -> None:
    text = reports.dumps(obj)
    sys.stdout.write(text)
    if args.json:
        Path(args.json).write_text(text)


# -- check ------------------------------------------------------------------------------

def run_check(g: Graph, theorem: str, params: dict, backend: str = "rational") -> th.Report:
    P = dict(params)

    def ev(key):
        if key not in P:
            raise HypothesisError(f"parameter {key!r} is required for {theorem}")
        return parse_expression(g, P[key])

    s = P.get("s", "s")
    if theorem in ("T1.1", "T3.1"):
        fn = th.check_thm_1_1 if theorem == "T1.1" else th.check_thm_3_1
        return fn(g, s, ev("A"), ev("B"), _vertices(P.get("X")), _vertices(P.get("Y")), backend=backend)
    if theorem == "E-conv":
        return th.check_conv(g, s, _vertices(P.get("X")), _vertices(P.get("Y")), backend=backend)
    if theorem == "T1.2":
        return th.check_thm_1_2(g, s, ev("A"), ev("B"), _vertices(P.get("X")), backend=backend)
    if theorem in ("E-vdBK1", "E-new1"):
        fn = th.check_vdBK1 if theorem == "E-vdBK1" else th.check_new1
        return fn(g, s, P.get("t", "t"), P["a"], P["b"])
    if theorem in ("T1.3", "T3.3"):
        fn = th.check_thm_1_3 if theorem == "T1.3" else th.check_thm_3_3
        return fn(g, s, _vertices(P.get("X")), ev("f"), ev("g"), backend=backend)
    if theorem in ("T1.4", "T1.5"):
        fn = th.check_thm_1_4 if theorem == "T1.4" else th.check_thm_1_5
        S, T = _vertices(P.get("S", s)), _vertices(P.get("T", P.get("t", "t")))
        return fn(g, S, T, ev("f"), ev("g"), backend=backend)
    if theorem == "T2.5":
        S, T = _vertices(P.get("S", s)), _vertices(P.get("T", P.get("t", "t")))
        return th.check_thm_2_5(g, S, T, Fraction(str(P.get("q", "1"))), ev("f"), ev("g"), backend=backend)
    if theorem == "T3.5":
        return th.check_thm_3_5(g, s, P.get("t", "t"), ev("f"), ev("g"), backend=backend)
    if theorem == "CEX-directed":
        return th.check_counterexample_directed(g, P.get("variant", "s!t"), s, P.get("t", "t"), P.get("a", "a"))
    raise ValueError(f"unknown theorem {theorem!r}; choose from {', '.join(th.THEOREMS)}")


def cmd_check(args) -> int:
    if args.graph is None:
        if args.theorem != "CEX-directed":
            raise ValueError("--graph is required")
        g = th.counterexample_graph()
    else:
        g = load_graph(args.graph, args.edge_cap)
    params = _read_json_arg(args.params) if args.params else {}
    rep = run_check(g, args.theorem, params)
    out = rep.to_dict()
    out["seed"] = args.seed
    if args.backend == "float":
        screen = run_check(g, args.theorem, params, backend="float")
        out["float_slack"] = repr(float(screen.slack))
    _emit(args, out)
    return EXIT_OK if rep.as_expected else EXIT_VIOLATION


# -- fuzz -------------------------------------------------------------------------------

def cmd_fuzz(args) -> int:
    names = args.theorem or list(fuzz.CAMPAIGNS)
    if args.include_false:
        names = names + [n for n in fuzz.FALSE_CAMPAIGNS if n not in names]
    summaries, violations, everything = [], [], []
    for name in names:
        reps = fuzz.run_campaign(name, args.count, args.seed, args.start, args.backend)
        summaries.append(fuzz.summarize(name, reps))
        violations += [r for r in reps if r["verdict"] == "violation"]
        if args.all_reports:
            everything += reps
    out = {"schema": th.REPORT_SCHEMA, "seed": args.seed, "count": args.count, "start": args.start,
           "backend": args.backend, "summaries": summaries, "violations": violations}
    if args.all_reports:
        out["reports"] = everything
    _emit(args, out)
    return EXIT_OK if all(s["pass"] for s in summaries) else EXIT_VIOLATION


# -- mcmc -------------------------------------------------------------------------------

def _bands(freq: dict, target: dict, steps: int) -> list:
    rows = []
    for state in sorted(target):
        p = float(target[state])
        sd = (p * (1 - p) / steps) ** 0.5
        f = freq.get(state, 0) / steps
        rows.append({"state": jsonable(state), "exact": th.fstr(target[state]), "empirical": repr(f),
                     "within_3sd": abs(f - p) <= 3 * sd})
    return rows


def cmd_mcmc(args) -> int:
    g = load_graph(args.graph, args.edge_cap)
    S, T = _vertices(args.S), _vertices(args.T)
    q = Fraction(args.q)
    out = {"mode": args.mode, "q": th.fstr(q), "S": S, "T": T, "seed": args.seed}
    ok = True
    if args.mode == "pair":
        diag = chains.build_pair_chain(g, S, T, q)
        out["diagnostics"] = diag.to_dict()
        ok &= diag.residual == 0 and diag.rows_sum_to_one and diag.irreducible and diag.aperiodic
        if args.steps and not args.exact:
            rng = random.Random(args.seed)
            state, counts = (0, 0), {}
            for _ in range(args.steps):
                state = chains.step_pair_chain(diag, state, rng)
                counts[state] = counts.get(state, 0) + 1
            out["bands"] = _bands(counts, diag.stationary, args.steps)
        if args.association:
            v = chains.check_trace_association(g, S, T, q, args.association, seed=args.seed)
            out["trace_association"] = verdict_dict(v)
            ok &= v.holds
    else:
        diag = chains.config_chain_diagnostics(g, S, T, q)
        out["diagnostics"] = diag.to_dict()
        ok &= diag.residual == 0 and diag.rows_sum_to_one
        if args.steps and not args.exact:
            counts = chains.config_chain_frequencies(g, S, T, q, args.steps, args.seed)
            out["bands"] = _bands(counts, diag.stationary, args.steps)
        if args.monotone:
            for target in ("clusters", "omega"):
                v = chains.check_config_chain_monotone(g, S, T, q, args.monotone, grid_step=None,
                                                       seed=args.seed, target=target)
                out[f"monotone_{target}"] = verdict_dict(v)
            ok &= out["monotone_clusters"]["holds"]
    _emit(args, out)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- fuzzy ------------------------------------------------------------------------------

def cmd_fuzzy(args) -> int:
    g = load_graph(args.graph, args.edge_cap)
    q, a, b = fuzzy.fuzzy_params(args.q, args.alpha, args.beta)
    checks = {"coupling", "key", "lattice", "fact-c"} if args.check == "all" else {args.check}
    out = {"q": th.fstr(q), "alpha": th.fstr(a), "beta": th.fstr(b), "s": args.s, "t": args.t}
    ok = True
    if "coupling" in checks:
        diff = fuzzy.build_coupling_forward(g, q, a, b).differences(fuzzy.build_coupling_reverse(g, q, a, b))
        out["coupling"] = {"equal": not diff, "differing_cells": jsonable(diff[:10])}
        ok &= not diff
    if "key" in checks:
        v = fuzzy.check_key_identity(g, q, a, b, args.s, args.t)
        out["key_identity"] = verdict_dict(v)
        ok &= v.holds
    if "lattice" in checks:
        v = fuzzy.check_spin_association(g, q, a, b, args.s, args.t)
        out["spin_association"] = verdict_dict(v)
        ok &= v.holds or a < 1 or b < 1
    if "fact-c" in checks:
        if a >= 1 and b >= 1:
            f = parse_expression(g, args.f or f"support_contains({args.s};{args.s})")
            v = fuzzy.check_fact_c(g, q, a, b, f, args.s, args.t)
            out["fact_c"] = verdict_dict(v)
            ok &= v.holds
        else:
            out["fact_c"] = {"skipped": "needs alpha, beta >= 1"}
    _emit(args, out)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- contact ----------------------------------------------------------------------------

def cmd_contact(args) -> int:
    spec = contact.ContactSpec.from_dict(_read_json_arg(args.spec))
    t = Fraction(args.t)
    out = {"spec": spec.to_dict(), "t": th.fstr(t), "check": args.check}
    ok = True
    if args.check == "assoc":
        v = contact.check_thm_contact(spec, t, _vertices(args.W), condition_on=args.condition_on,
                                      seed=args.seed)
        out["association"] = verdict_dict(v)
        out["condition_on"] = args.condition_on
        ok = v.holds or args.condition_on == 1
    elif args.check == "survival":
        d = contact.transient_distribution(spec, t)
        out["marginals"] = {x: repr(d.site_marginal(x)) for x in spec.sites}
        out["error_bound"] = repr(d.error_bound)
    elif args.check == "zero-sets":
        rep = contact.check_eq_14_15(spec, t, K=_vertices(args.K), L=_vertices(args.L))
        out["report"] = rep.to_dict()
        ok = rep.holds
    elif args.check == "discretization":
        res = contact.check_discretization(spec, t, tuple(int(n) for n in args.n.split(",")))
        out["discretization"] = jsonable(res)
        ok = res["pass"]
    elif args.check == "discrete-assoc":
        stg = contact.discretize(spec, t, int(args.n.split(",")[0]))
        v = contact.check_discrete_association(stg, _vertices(args.W))
        out["discrete_association"] = verdict_dict(v)
        ok = v.holds
    _emit(args, out)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- report -----------------------------------------------------------------------------

def cmd_report(args) -> int:
    summary = reports.merge(reports.load_reports(args.paths))
    if args.csv:
        Path(args.csv).write_text(reports.to_csv(summary))
    _emit(args, summary)
    return EXIT_OK if all(row["pass"] for row in summary["table"]) else EXIT_VIOLATION


# -- parser -----------------------------------------------------------------------------

GLOBAL_DEFAULTS = {"backend": "rational", "seed": 0, "edge_cap": DEFAULT_EDGE_CAP, "json": None}


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--backend", choices=("rational", "float"), default=argparse.SUPPRESS,
                   help="float adds a floating-point pre-screen; verdicts stay exact")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--edge-cap", type=int, default=argparse.SUPPRESS, dest="edge_cap")
    p.add_argument("--json", default=argparse.SUPPRESS, help="also write the output here")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="percolab", parents=[common],
                                     description="Exact checkers for percolation correlation inequalities.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="evaluate one inequality instance")
    p.add_argument("--theorem", required=True, choices=th.THEOREMS)
    p.add_argument("--graph", help="graph JSON file, inline JSON, or fixture:NAME")
    p.add_argument("--params", help="parameter JSON file or inline JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fuzz", parents=[common], help="seeded random campaigns")
    p.add_argument("--theorem", action="append",
                   choices=list(fuzz.CAMPAIGNS) + list(fuzz.FALSE_CAMPAIGNS))
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--include-false", action="store_true", help="add the false-variant campaigns")
    p.add_argument("--all-reports", action="store_true", help="include every instance report")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("mcmc", parents=[common], help="cluster-pair and configuration chains")
    p.add_argument("--mode", choices=("pair", "config"), default="pair")
    p.add_argument("--graph", required=True)
    p.add_argument("--S", default="s")
    p.add_argument("--T", default="t")
    p.add_argument("--q", default="1")
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="exact diagnostics only, no sampling")
    p.add_argument("--association", type=int, default=0, metavar="N")
    p.add_argument("--monotone", type=int, default=0, metavar="N")
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("fuzzy", parents=[common], help="spin/edge coupling checks")
    p.add_argument("--graph", required=True)
    p.add_argument("--q", default="2")
    p.add_argument("--alpha", default="1")
    p.add_argument("--beta", default="1")
    p.add_argument("--s", default="s")
    p.add_argument("--t", default="t")
    p.add_argument("--f", help="pair-monotone function expression for fact-c")
    p.add_argument("--check", choices=("all", "coupling", "key", "lattice", "fact-c"), default="all")
    p.set_defaults(func=cmd_fuzzy)

    p = sub.add_parser("contact", parents=[common], help="finite contact process checks")
    p.add_argument("--spec", required=True)
    p.add_argument("--t", default="1")
    p.add_argument("--check", choices=("assoc", "survival", "zero-sets", "discretization",
                                       "discrete-assoc"), default="assoc")
    p.add_argument("--W", default="")
    p.add_argument("--K", default="")
    p.add_argument("--L", default="")
    p.add_argument("--n", default="2,4,8", help="discretization step counts")
    p.add_argument("--condition-on", type=int, choices=(0, 1), default=0)
    p.set_defaults(func=cmd_contact)

    p = sub.add_parser("report", parents=[common], help="merge report files")
    p.add_argument("paths", nargs="*")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
