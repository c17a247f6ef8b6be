"""Command-line entry point: ``dagbounds <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .discovery import pc_knowledge
from .estimation import CausalQuery, Dataset, MlpConfig
from .grid import GridConfig, read_rows, run_grid
from .knowledge import random_knowledge
from .optimizer import SearchConfig, compute_bounds
from .plots import KINDS, emit_plot
from .synthetic import KINDS as MECHANISMS, ALIASES, attach_mechanisms, generate_data, sample_er_dag


def _cmd_gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    adj = sample_er_dag(args.nodes, args.edge_prob, args.seed)
    scm = attach_mechanisms(adj, args.mechanism, args.seed + 1)
    generate_data(scm, args.n, args.seed + 2).to_csv(out / "data.csv")
    io.save_graph(adj, out / "graph.json")
    io.save_scm(scm, out / "scm.json")
    print(out / "data.csv")
    return 0


def _cmd_knowledge(args) -> int:
    if args.mode == "random":
        if not args.graph:
            raise SystemExit("knowledge random needs --graph")
        k = random_knowledge(io.load_graph(args.graph), args.p_sure, args.p_forbidden, args.seed)
        io.save_knowledge(k, args.out)
    else:
        if not args.data:
            raise SystemExit("knowledge pc needs --data")
        data = Dataset.from_csv(args.data)
        k, prov = pc_knowledge(data, args.n_perms, args.alpha, args.seed, return_provenance=True)
        io.save_knowledge(k, args.out)
        io.write_json(prov.to_json(), Path(args.out).with_suffix(".provenance.json"))
    print(json.dumps(k.to_json()))
    return 0


def _cmd_bounds(args) -> int:
    data = Dataset.from_csv(args.data)
    k = io.load_knowledge(args.knowledge)
    q = CausalQuery(args.treatment, args.outcome, args.high, args.low, args.adjustment, args.estimator)
    cfg = SearchConfig(rounds=args.rounds, al_convention=args.convention,
                       mlp=MlpConfig(max_epochs=args.epochs))
    res = compute_bounds(data, k, q, args.method, cfg, seed=args.seed, bootstrap=args.bootstrap)
    text = json.dumps(res.to_json(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_grid(args) -> int:
    obj = io.read_json(args.config)
    if args.seed is not None:
        obj["master_seed"] = args.seed
    _, summary = run_grid(GridConfig.from_json(obj), args.out, workers=args.workers)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_plot(args) -> int:
    svg, table = emit_plot(read_rows(args.rows), args.kind, args.out)
    print(svg)
    print(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dagbounds", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="sample a random SCM and observational data")
    g.add_argument("--nodes", type=int, default=5)
    g.add_argument("--edge-prob", type=float, default=0.5)
    g.add_argument("--mechanism", default="linear", choices=sorted(set(MECHANISMS) | set(ALIASES)))
    g.add_argument("--n", type=int, default=5000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=_cmd_gen_data)

    k = sub.add_parser("knowledge", help="build sure/forbidden edge knowledge")
    k.add_argument("mode", choices=["random", "pc"])
    k.add_argument("--graph", help="true graph JSON (random mode)")
    k.add_argument("--data", help="data CSV (pc mode)")
    k.add_argument("--p-sure", type=float, default=0.5)
    k.add_argument("--p-forbidden", type=float, default=0.5)
    k.add_argument("--n-perms", type=int, default=10)
    k.add_argument("--alpha", type=float, default=0.05)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default="knowledge.json")
    k.set_defaults(func=_cmd_knowledge)

    b = sub.add_parser("bounds", help="bound a causal effect over the compatible DAGs")
    b.add_argument("--data", required=True)
    b.add_argument("--knowledge", required=True)
    b.add_argument("--method", choices=["lagrangian", "dpdag", "brute"], default="lagrangian")
    b.add_argument("--adjustment", choices=["parent", "optimal"], default="parent")
    b.add_argument("--estimator", choices=["linear", "nonlinear"], default="linear")
    b.add_argument("--treatment", type=int, required=True)
    b.add_argument("--outcome", type=int, required=True)
    b.add_argument("--high", type=float, default=1.0)
    b.add_argument("--low", type=float, default=0.0)
    b.add_argument("--rounds", type=int, default=None)
    b.add_argument("--epochs", type=int, default=MlpConfig.max_epochs)
    b.add_argument("--convention", choices=["paper", "standard"], default="paper")
    b.add_argument("--bootstrap", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=_cmd_bounds)

    r = sub.add_parser("grid", help="run an experiment grid into a CSV (resumable)")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default="grid.csv")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--seed", type=int, default=None, help="overrides master_seed")
    r.set_defaults(func=_cmd_grid)

    pl = sub.add_parser("plot", help="render grid rows as SVG")
    pl.add_argument("kind", choices=KINDS)
    pl.add_argument("--rows", required=True)
    pl.add_argument("--out", default="plot.svg")
    pl.add_argument("--seed", type=int, default=0, help="accepted for uniformity; plots are deterministic")
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
