"""Command-line interface.

Commands: generate (write a random graph as an edge list), run (execute one
job and report loads), sweep (Monte Carlo load measurement across r values,
CSV plus optional figure), bounds (print closed-form values), verify (run the
full acceptance suite).

Exit codes: 0 success, 2 parameter/usage error, 3 runtime or decode failure
(verify returns 1 when a check fails).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import analysis, engine
from .allocation import allocation_to_json
from .errors import ConsistencyError, DecodeError, EdgeListError, ParameterError
from .graphs import (GraphModelParams, load_edgelist, save_edgelist,
                     with_uniform_weights)
from .programs import program_by_name
from .shuffle import DEFAULT_VALUE_BITS


def _parse_r_range(text: str) -> list[int]:
    """'2' -> [2]; '1..4' -> [1, 2, 3, 4] (inclusive)."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ParameterError(f"empty r range {text!r}")
        return list(range(lo_i, hi_i + 1))
    return [int(text)]


def _model_params(args) -> GraphModelParams:
    model = args.model
    if model == "er":
        return GraphModelParams(model="er", n=args.n, p=args.p)
    if model == "rb":
        return GraphModelParams(model="rb", n1=args.n1, n2=args.n2, q=args.q)
    if model == "sbm":
        return GraphModelParams(model="sbm", n1=args.n1, n2=args.n2,
                                p=args.p, q=args.q)
    rho = None if args.rho in (None, "auto") else float(args.rho)
    return GraphModelParams(model="pl", n=args.n, gamma=args.gamma, rho=rho)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=["er", "rb", "sbm", "pl"])
    p.add_argument("--n", type=int, default=0, help="vertex count (er, pl)")
    p.add_argument("--n1", type=int, default=0, help="first cluster size (rb, sbm)")
    p.add_argument("--n2", type=int, default=0, help="second cluster size (rb, sbm)")
    p.add_argument("--p", type=float, default=0.0, help="edge/intra probability")
    p.add_argument("--q", type=float, default=0.0, help="cross probability")
    p.add_argument("--gamma", type=float, default=0.0, help="power-law exponent")
    p.add_argument("--rho", default="auto",
                   help="power-law edge scale, or 'auto' for 1/sum(degrees)")


def cmd_generate(args) -> int:
    params = _model_params(args)
    graph = params.generate(args.seed)
    if args.weights == "uniform":
        graph = with_uniform_weights(graph, args.seed)
    save_edgelist(graph, args.out)
    extras = ""
    if params.model == "pl":
        extras = (f", clamped_pairs={graph.metadata['clamped_pairs']}"
                  f", rho={graph.metadata['rho']:.6g}")
    print(f"wrote {args.out}: model={params.model} n={graph.n} "
          f"edges={graph.edge_count} seed={args.seed}{extras}")
    return 0


def cmd_run(args) -> int:
    graph = load_edgelist(args.graph)
    program = program_by_name(args.program, damping=args.damping,
                              source=args.source)
    if args.plan == "er":
        params = GraphModelParams(model="er", n=graph.n, p=0.5)
    else:
        if not args.n1:
            raise ParameterError("--n1 is required for rb/sbm plans "
                                 "(clusters are {1..n1} and {n1+1..n})")
        n2 = graph.n - args.n1
        params = GraphModelParams(model=args.plan, n1=args.n1, n2=n2,
                                  p=0.5, q=0.25)
    alloc, plan = engine.build_allocation(params, args.k, args.r)
    if alloc.n != graph.n:
        raise ParameterError(f"allocation n={alloc.n} != graph n={graph.n}")
    config = engine.JobConfig(mode=args.mode, iterations=args.iters,
                              value_bits=args.value_bits,
                              stop_on_fixed_point=args.until_fixed)
    outputs, reports = engine.run_iterations(graph, alloc, program, config,
                                             plan=plan)
    last = reports[-1]
    print(f"L = {engine.format_load(last.load, graph.n)}"
          f"  ({float(last.load):.6g})")
    print(f"feedback L = {engine.format_load(last.feedback_load, graph.n)}"
          f"  ({float(last.feedback_load):.6g})")
    if args.json:
        doc = {
            "iterations": len(reports),
            "reports": [r.to_json_dict() for r in reports],
            "outputs": outputs,
            "allocation": json.loads(allocation_to_json(alloc)),
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
        print(f"report written to {args.json}")
    if args.dump_messages:
        _dump_all_messages(graph, alloc, plan, program, config, args.dump_messages)
        print(f"coded messages dumped to {args.dump_messages}")
    return 0


def _dump_all_messages(graph, alloc, plan, program, config, path) -> None:
    import itertools

    from .shuffle import dump_messages, encode_group

    if config.mode != "coded":
        raise ParameterError("--dump-messages requires --mode coded")
    states = program.initial_state(graph)
    outputs = {}
    for k in range(1, alloc.K + 1):
        mine = {}
        for j in alloc.maps_of(k):
            if j <= graph.n:
                for i in graph.neighbors(j):
                    mine[(int(i), j)] = program.map_value(j, states[j - 1],
                                                          int(i), graph)
        outputs[k] = mine
    msgs = []
    for stage in plan.coded:
        for S in itertools.combinations(stage.workers, stage.r + 1):
            for s in S:
                msgs.extend(encode_group(alloc, graph, S, s, outputs[s],
                                         T=config.value_bits, stage=stage))
    dump_messages(msgs, config.value_bits, alloc.r, path)


def cmd_sweep(args) -> int:
    params = _model_params(args)
    r_values = _parse_r_range(args.r)
    seeds = range(args.seed, args.seed + args.seeds)
    points = engine.measure_sweep(params, args.k, r_values, seeds,
                                  threads=args.threads)
    engine.write_sweep_csv(points, args.out)
    print(f"wrote {args.out}: {len(points)} rows "
          f"({len(r_values)} r values x 2 modes, {args.seeds} seeds)")
    if args.plot:
        from .figures import render_sweep_figure
        render_sweep_figure(points, args.plot)
        print(f"wrote {args.plot}")
    return 0


def cmd_bounds(args) -> int:
    for r in _parse_r_range(args.r):
        if args.model == "er":
            b = analysis.er_bounds(args.p, args.k, r)
        elif args.model == "rb":
            b = analysis.rb_bounds(args.q, args.k, r)
        elif args.model == "sbm":
            b = analysis.sbm_bounds(args.n1, args.n2, args.p, args.q, args.k, r)
        else:
            b = analysis.pl_bound(args.gamma, args.k, r)
        lower = "n/a" if b.lower is None else f"{b.lower:.8g}"
        note = f"  [{b.note}]" if b.note else ""
        print(f"model={b.model} K={b.K} r={b.r}: uncoded={b.uncoded:.8g} "
              f"coded_upper={b.coded_upper:.8g} lower={lower}{note}")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(only=args.only)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="codedmr",
        description="Coded MapReduce shuffling for distributed graph analytics")
    sub = top.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random graph as an edge list")
    _add_model_flags(g)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--weights", choices=["uniform"], default=None,
                   help="attach uniform (0,1] edge weights")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run one job over K logical workers")
    r.add_argument("--graph", required=True, help="edge-list file")
    r.add_argument("--program", required=True, choices=["pagerank", "sssp"])
    r.add_argument("--k", type=int, required=True, help="worker count K")
    r.add_argument("--r", type=int, required=True, help="computation load r")
    r.add_argument("--mode", choices=["coded", "uncoded"], default="coded")
    r.add_argument("--plan", choices=["er", "rb", "sbm"], default="er")
    r.add_argument("--n1", type=int, default=0,
                   help="first cluster size for rb/sbm plans")
    r.add_argument("--iters", type=int, default=1)
    r.add_argument("--until-fixed", action="store_true",
                   help="stop early once outputs stop changing")
    r.add_argument("--damping", type=float, default=0.15,
                   help="pagerank jump mass: rank = (1-damping)*sum + damping/n")
    r.add_argument("--source", type=int, default=1, help="sssp source vertex")
    r.add_argument("--value-bits", type=int, default=DEFAULT_VALUE_BITS)
    r.add_argument("--json", default=None, help="write full LoadReports here")
    r.add_argument("--dump-messages", default=None,
                   help="write coded messages of the first iteration here")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="Monte Carlo loads across r values (CSV)")
    _add_model_flags(s)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--r", required=True, help="single value or inclusive range a..b")
    s.add_argument("--seeds", type=int, required=True, help="number of seeds")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--out", required=True, help="CSV output path")
    s.add_argument("--plot", default=None, help="also render a figure here")
    s.add_argument("--threads", type=int,
                   default=int(os.environ.get("CODEDMR_THREADS", "1")),
                   help="worker processes for seed evaluation")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bounds", help="print closed-form load bounds")
    _add_model_flags(b)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--r", required=True, help="single value or inclusive range a..b")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--only", type=int, default=None,
                   help="run a single criterion by number")
    v.set_defaults(func=cmd_verify)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DecodeError, ConsistencyError, EdgeListError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
