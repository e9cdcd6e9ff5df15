import argparse
import sys
from dataclasses import replace
from datetime import datetime
from typing import List, Optional

from graphs.adjacency import build_adjacency
from reporting.bench_report import bench_report_data, render_bench_report
from reporting.param_report import report_params, save_param_report
from stages.stage1_generate import gen_synthetic, read_records
from stages.stage2_train import train
from stages.stage3_evaluate import evaluate
from stages.stage4_bench import bench_scaling
from utils.config import BENCH_REPEATS, PRESETS, RunConfig, load_run_config
from utils.errors import LdgcnError
from utils.file_logger import log_run_config, save_structured_data, setup_logger


def _run_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_run_config(args.config)
    return PRESETS[getattr(args, "preset", None) or "desk"]


def cmd_parse(args, logger, run_timestamp):
    """Parses every record and prints its size, re-entrancies and adjacency entries."""
    records = read_records(args.file)
    for i, (graph, _) in enumerate(records):
        adj = build_adjacency(graph)
        reentrant = ",".join(graph.reentrant_variables()) or "-"
        print(f"{i}\tnodes={graph.n}\tedges={len(graph.edges)}\treentrancies={graph.reentrancies()}"
              f"\tvariables={reentrant}\tadjacency_nnz={adj.nnz}")
    logger.info(f"Parsed {len(records)} records from {args.file}.")


def cmd_gen(args, logger, run_timestamp):
    logger.info("--- Starting Stage 1: Synthetic Dataset ---")
    gen_synthetic(args.seed, args.count, args.max_nodes, args.out)
    logger.info("--- Stage 1 Completed ---")


def cmd_train(args, logger, run_timestamp):
    cfg = _run_config(args)
    if args.data:
        cfg = replace(cfg, dataset=args.data)
    if args.ckpt:
        cfg = replace(cfg, checkpoint=args.ckpt)
    log_run_config(logger, cfg)
    logger.info("--- Starting Stage 2: Training ---")
    result = train(cfg, run_timestamp)
    logger.info(f"Metrics written to {result.metrics}, checkpoint to {result.checkpoint}")
    logger.info("--- Stage 2 Completed ---")


def cmd_eval(args, logger, run_timestamp):
    logger.info("--- Starting Stage 3: Evaluation ---")
    result = evaluate(args.ckpt, args.data, beam=args.beam, workers=args.workers)
    print(f"token_acc\t{result.token_accuracy!r}\nbleu\t{result.bleu!r}")
    path = save_structured_data(result.to_dict(), "eval", run_timestamp)
    logger.info(f"Evaluation summary saved to {path}")
    logger.info("--- Stage 3 Completed ---")


def cmd_bench(args, logger, run_timestamp):
    logger.info("--- Starting Stage 4: Scaling Benchmark ---")
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    report = bench_scaling(sizes, K=args.K, d=args.d, repeats=args.repeats, seed=args.seed)
    print(render_bench_report(report), end="")
    path = save_structured_data(bench_report_data(report), "bench", run_timestamp)
    logger.info(f"Bench report saved to {path}")
    logger.info("--- Stage 4 Completed ---")


def cmd_params(args, logger, run_timestamp):
    text = report_params(_run_config(args).stack_config())
    print(text, end="")
    save_param_report(text, run_timestamp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="LDGCN graph-to-sequence toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a PENMAN dataset and summarize each graph")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("gen", help="generate a synthetic linearization dataset")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-nodes", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--data", help="overrides the config's dataset")
    p.add_argument("--ckpt", help="overrides the config's checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="multiply-add and wall-time scaling of one DFM layer")
    p.add_argument("--sizes", required=True, help="ascending edge counts, e.g. 100,200,400")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--repeats", type=int, default=BENCH_REPEATS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("params", help="per-layer parameter report for a config")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_params)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function to run the LDGCN toolkit."""
    args = build_parser().parse_args(argv)
    run_timestamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    logger = setup_logger(run_timestamp, args.command)
    try:
        args.func(args, logger, run_timestamp)
    except LdgcnError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
