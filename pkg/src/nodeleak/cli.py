"""Command-line entry points.

Subcommands: generate (graphs), embed, attack (single target), experiment
(full protocol), stability, variation, eval (recompute metrics from stored
reports).  All exit 0 on success and nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .attack import AttackConfig, run_attack, save_report
from .embeddings import EmbedSpec, embed, load_embedding, save_embedding
from .experiment import (ExperimentConfig, evaluate_reports, load_config,
                         run_experiment, run_stability_study,
                         run_variation_study)
from .graph import (generate_barabasi, load_edge_list, save_edge_list,
                    snowball_sample)

logger = logging.getLogger(__name__)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodeleak",
        description="Recover a deleted node's neighbors from a stale "
                    "network embedding, and run the associated experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate or sample a graph")
    p.add_argument("--kind", choices=["barabasi", "snowball"], required=True)
    p.add_argument("--n", type=int, help="node count (or sample size)")
    p.add_argument("--m", type=int, default=5, help="attachment parameter")
    p.add_argument("--input", help="source edge list (snowball)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output edge-list path")

    p = sub.add_parser("embed", help="train one embedding of a graph")
    p.add_argument("--graph", required=True, help="edge-list path")
    p.add_argument("--algorithm", choices=["hope", "line", "node2vec"],
                   required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output embedding path")

    p = sub.add_parser("attack", help="attack a single removed node")
    p.add_argument("--graph", required=True,
                   help="edge list of the reduced graph (target already removed)")
    p.add_argument("--embedding", required=True,
                   help="pre-deletion embedding without the target's row")
    p.add_argument("--config", help="experiment config supplying embedding "
                                    "and attack parameters")
    p.add_argument("--algorithm", choices=["hope", "line", "node2vec"])
    p.add_argument("--dim", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--shadows", type=int)
    p.add_argument("--classifier", choices=["gnb", "knn", "dtree", "rforest",
                                            "adaboost"])
    p.add_argument("--target", type=int,
                   help="removed node id (metadata only)")
    p.add_argument("--truth-graph",
                   help="pre-deletion edge list, stamps the true neighbors "
                        "into the report for evaluation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output report path")

    for name, help_text in (("experiment", "run the full attack protocol"),
                            ("stability", "averaged-distance-matrix study"),
                            ("variation", "most-similar-embedding study")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--force", action="store_true",
                       help="allow writing into a non-empty directory")
        if name != "experiment":
            p.add_argument("--counts", required=True,
                           help="comma-separated embedding counts, e.g. 1,5,10")

    p = sub.add_parser("eval", help="re-aggregate metrics from stored reports")
    p.add_argument("--reports", required=True, help="directory of attack reports")
    p.add_argument("--out", required=True, help="output directory for eval files")

    return parser


def _load_experiment_config(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig.from_dict({**config.to_dict(), "seed": args.seed})
    return config


def _cmd_generate(args) -> int:
    if args.kind == "barabasi":
        if args.n is None:
            raise ValueError("generate --kind barabasi needs --n")
        g = generate_barabasi(args.n, args.m, args.seed)
    else:
        if not args.input or args.n is None:
            raise ValueError("generate --kind snowball needs --input and --n")
        g = snowball_sample(load_edge_list(args.input), args.n, args.seed)
    save_edge_list(g, args.out)
    print(f"wrote {g.n_nodes} nodes / {g.n_edges} edges to {args.out}")
    return 0


def _cmd_embed(args) -> int:
    g = load_edge_list(args.graph)
    spec = EmbedSpec(args.algorithm, dim=args.dim)
    save_embedding(embed(g, spec, args.seed), args.out)
    print(f"wrote {g.n_nodes} x {args.dim} embedding to {args.out}")
    return 0


def _cmd_attack(args) -> int:
    g_prime = load_edge_list(args.graph)
    e_minus = load_embedding(args.embedding)
    if args.config:
        config = load_config(args.config)
        spec, attack_cfg = config.embedding, config.attack
    else:
        if not args.algorithm:
            raise ValueError("attack needs --config or --algorithm")
        spec = EmbedSpec(args.algorithm, dim=args.dim or e_minus.dim)
        attack_cfg = AttackConfig()
    overrides = {k: getattr(args, k) for k in ("bins", "shadows", "classifier")
                 if getattr(args, k) is not None}
    if overrides:
        attack_cfg = AttackConfig(**{**attack_cfg.__dict__, **overrides})
    truth = None
    if args.truth_graph:
        if args.target is None:
            raise ValueError("--truth-graph needs --target")
        truth = load_edge_list(args.truth_graph).neighbors(args.target)
    report = run_attack(g_prime, e_minus, spec, attack_cfg, args.seed,
                        workers=args.threads, target=args.target, truth=truth)
    save_report(report, args.out)
    top = ", ".join(str(n) for n, _, _ in report.ranking[:10])
    print(f"wrote report to {args.out}; top candidates: {top}")
    return 0


def _counts(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _cmd_experiment(args) -> int:
    manifest = run_experiment(_load_experiment_config(args), args.out,
                              threads=args.threads, force=args.force)
    print(f"experiment finished in {manifest.timings['total']}s; "
          f"outputs under {args.out}")
    return 0


def _cmd_stability(args) -> int:
    manifest = run_stability_study(_load_experiment_config(args),
                                   _counts(args.counts), args.out,
                                   threads=args.threads, force=args.force)
    print(f"stability study finished in {manifest.timings['total']}s; "
          f"outputs under {args.out}")
    return 0


def _cmd_variation(args) -> int:
    manifest = run_variation_study(_load_experiment_config(args),
                                   _counts(args.counts), args.out,
                                   threads=args.threads, force=args.force)
    print(f"variation study finished in {manifest.timings['total']}s; "
          f"outputs under {args.out}")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate_reports(args.reports, args.out)
    print(f"aggregated {sum(g.n_attacks for g in report.groups)} attack cells "
          f"into {args.out}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "embed": _cmd_embed,
    "attack": _cmd_attack,
    "experiment": _cmd_experiment,
    "stability": _cmd_stability,
    "variation": _cmd_variation,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, FileExistsError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
