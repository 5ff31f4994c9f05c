"""Command-line entry point.

Exit codes: 0 ok, 1 internal error, 2 bad input. All artifacts land under
the configured output directory with fixed names:

  signatures.json            image signature cache
  landmark_similarity.csv    per-record best landmark + per-landmark scores
  memory_cells.json          trained CSAIM memory-cell store
  csaim_classification.csv   per-record similarity category
  ghsom_tree.json            tree export consumed by the explorer UI
  ghsom_tree.txt             indented text rendering
  discovery_report.csv       id,unit,group,image_sim,csaim_category,tfidf,evaluation
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import CrypticSpotsError
from . import pipeline

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_INPUT = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crypticspots",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path,
                       help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override (mandatory here or in the config)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory override")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="config override, e.g. --set ghsom.tau1=0.5")
        return p

    add_stage("signatures", "build image signatures + landmark similarity table")
    add_stage("csaim", "train memory cells and classify similarity vectors")
    add_stage("ghsom", "grow the map hierarchy and export it")
    add_stage("discover", "write the three-group discovery report")
    add_stage("pipeline", "run all four stages in order")

    serve = sub.add_parser("serve", help="run the interactive session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _run_stage(args: argparse.Namespace) -> int:
    cfg = pipeline.load_config(args.config, seed_override=args.seed,
                               out_override=args.out, overrides=args.overrides)
    if args.command == "signatures":
        return EXIT_BAD_INPUT if pipeline.run_signatures(cfg) else EXIT_OK
    if args.command == "csaim":
        pipeline.run_csaim(cfg)
        return EXIT_OK
    if args.command == "ghsom":
        pipeline.run_ghsom(cfg)
        return EXIT_OK
    if args.command == "discover":
        pipeline.run_discover(cfg)
        return EXIT_OK
    if args.command == "pipeline":
        return EXIT_BAD_INPUT if pipeline.run_pipeline(cfg) else EXIT_OK
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    try:
        return _run_stage(args)
    except (CrypticSpotsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
