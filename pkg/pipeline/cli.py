"""
cli.py — Command-line entry point for the kernel pipeline

Subcommands mirror the stages: synth, ingest, tck, embed, classify, report.
Every subcommand takes --config (JSON), --seed (overrides the config's
master seed) and --out (the run directory).

Usage:
    python run_pipeline.py synth    --out runs/a
    python run_pipeline.py ingest   --out runs/a
    python run_pipeline.py tck      --out runs/a --config configs/default.json --seed 3
    python run_pipeline.py embed    --out runs/a --method pca --method kpca
    python run_pipeline.py classify --out runs/a
    python run_pipeline.py report   --out runs/a --selection cluster.json --method kpca

The worker count for partition fits and grid evaluation comes from the
TCK_N_JOBS environment variable (default 1); results do not depend on it.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from mts.errors import TckToolkitError
from pipeline.config import DR_METHODS, PipelineConfig
from pipeline.stages import run_classify, run_embed, run_ingest, run_report, run_synth, run_tck

logger = logging.getLogger(__name__)

LOG_FILE = "run.log"
_handlers: list[logging.Handler] = []


def configure_logging(out: Path, level: str = "INFO"):
    """Console without timestamps, <out>/run.log with them."""
    root = logging.getLogger()
    for handler in _handlers:
        root.removeHandler(handler)
        handler.close()
    _handlers.clear()

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(level.upper())
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))

    out.mkdir(parents=True, exist_ok=True)
    logfile = logging.FileHandler(out / LOG_FILE, encoding="utf-8")
    logfile.setLevel(logging.DEBUG)
    logfile.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))

    root.setLevel(logging.DEBUG)
    for handler in (console, logfile):
        root.addHandler(handler)
        _handlers.append(handler)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Pipeline config (JSON); defaults apply when omitted")
    common.add_argument("--seed", type=int, help="Master seed (overrides the config)")
    common.add_argument("--out", required=True, help="Run directory")
    common.add_argument("--log-level", default="INFO", help="Console log level")

    parser = argparse.ArgumentParser(description="Time-series cluster kernel pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic cohort")
    synth.add_argument("--spec", help="Synthetic spec (JSON); the config's 'synth' section otherwise")

    ingest = sub.add_parser("ingest", parents=[common], help="Window, split and balance a cohort CSV")
    ingest.add_argument("--input", help="Cohort CSV; data.input or <out>/data/stays.csv otherwise")

    sub.add_parser("tck", parents=[common], help="Build the kernel on the training split")

    embed = sub.add_parser("embed", parents=[common], help="Reduce dimension and run t-SNE")
    embed.add_argument("--method", action="append", help=f"One of {DR_METHODS}; repeatable")

    sub.add_parser("classify", parents=[common], help="Cross-validate and test every classifier")

    report = sub.add_parser("report", parents=[common], help="Render the results table")
    report.add_argument("--selection", help="Selected ids (text) or polygon (JSON) for a cluster summary")
    report.add_argument("--method", help="Embedding the selection refers to")
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def dispatch(args, cfg: PipelineConfig):
    out = args.out
    if args.command == "synth":
        run_synth(cfg, out, args.spec)
    elif args.command == "ingest":
        run_ingest(cfg, out, args.input)
    elif args.command == "tck":
        run_tck(cfg, out)
    elif args.command == "embed":
        run_embed(cfg, out, args.method)
    elif args.command == "classify":
        run_classify(cfg, out)
    elif args.command == "report":
        report = run_report(cfg, out, args.selection, args.method)
        print(report.to_text())


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report" and not Path(args.out).is_dir():
        print(f"error: run directory {args.out} does not exist", file=sys.stderr)
        return 1
    try:
        configure_logging(Path(args.out), args.log_level)
        cfg = load_config(args)
        logger.info(f"{args.command}: seed={cfg.seed} out={args.out}")
        dispatch(args, cfg)
    except (TckToolkitError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0
