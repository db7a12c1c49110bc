# Command line entry point.
#
#   blockrag index-kg --config run.toml [--output index.npz]
#   blockrag block    --config run.toml [--output blocks.jsonl]
#   blockrag run      --config run.toml [--set blocking.max_bs=4 ...]
#   blockrag sweep    --config run.toml --grid max_bs=2,4,6,8 [--grid blocking=qgram,xqgram]
#   blockrag eval     --config run.toml --decisions runs/<label>/decisions.jsonl
#
# Exit codes: 0 ok, 2 configuration, load or usage error.

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from blockrag.blocking.blocks import plan_blocks, write_blocks_file
from blockrag.core import messages
from blockrag.core.config import RunConfig, get_settings, load_run_config
from blockrag.core.errors import BlockRagError, UsageError
from blockrag.core.logs import setup_logging
from blockrag.evaluation.metrics import confusion, prf1
from blockrag.evaluation.report import read_decisions
from blockrag.pipeline import ResourcePool, index_kg, run, select_labeled, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockrag", description="Block-amortized retrieval-augmented entity matching"
    )
    parser.add_argument("--log-level", default=None, help="overrides BLOCKRAG_LOG_LEVEL")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML or JSON run config")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted override, e.g. blocking.max_bs=4 (repeatable)",
    )

    commands = parser.add_subparsers(dest="command", required=True)

    index_cmd = commands.add_parser("index-kg", parents=[common], help="embed the KG catalog")
    index_cmd.add_argument("--output", type=Path, default=None)

    block_cmd = commands.add_parser("block", parents=[common], help="write the block listing")
    block_cmd.add_argument("--output", type=Path, default=None)

    commands.add_parser("run", parents=[common], help="run one configuration end to end")

    sweep_cmd = commands.add_parser("sweep", parents=[common], help="run a parameter grid")
    sweep_cmd.add_argument(
        "--grid",
        action="append",
        default=[],
        metavar="KEY=V1,V2",
        help="grid axis over max_bs, blocking, granularity, traversal, top_k (repeatable)",
    )

    eval_cmd = commands.add_parser("eval", parents=[common], help="score a decisions file")
    eval_cmd.add_argument("--decisions", type=Path, required=True)
    return parser


def parse_grid_args(raw: Sequence[str]) -> dict[str, list[str | int]]:
    grid: dict[str, list[str | int]] = {}
    for axis in raw:
        key, sep, values = axis.partition("=")
        if not sep:
            raise UsageError(messages.GRID_BAD_AXIS.format(axis=axis))
        grid[key.strip()] = [value.strip() for value in values.split(",") if value.strip()]
    return grid


async def run_command(args: argparse.Namespace, config: RunConfig) -> None:
    pool = ResourcePool(get_settings())
    try:
        match args.command:
            case "index-kg":
                output = args.output or config.kg_index or config.output_dir / "index.npz"
                await index_kg(config, pool, output)
            case "block":
                dataset = pool.dataset(config)
                allowed = (
                    {pair.key for pair in select_labeled(dataset, config)}
                    if config.blocking.restrict_to_labeled
                    else None
                )
                blocks = plan_blocks(dataset, config.blocking, allowed)
                output = args.output or config.output_dir / "blocks.jsonl"
                written = write_blocks_file(output, blocks)
                logger.info("wrote %d blocks to %s", written, output)
            case "run":
                outcome, paths = await run(config, pool)
                print(json.dumps(outcome.metrics.model_dump(mode="json"), indent=2))
                print(f"report: {paths.json_path}")
            case "sweep":
                grid = parse_grid_args(args.grid) if args.grid else dict(config.sweep)
                for point in await sweep(config, grid, pool):
                    if point.metrics is not None:
                        print(
                            f"{point.params} f1={point.metrics.f1:.4f} rac={point.metrics.rac_count}"
                        )
                    else:
                        print(f"{point.params} failed: {point.error}")
            case "eval":
                dataset = pool.dataset(config)
                counts = confusion(read_decisions(args.decisions), select_labeled(dataset, config))
                scores = prf1(counts)
                print(json.dumps({**counts._asdict(), **scores._asdict()}, indent=2))
    finally:
        await pool.aclose()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or get_settings().log_level)

    try:
        config = load_run_config(args.config, args.overrides)
        asyncio.run(run_command(args, config))
    except BlockRagError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
