"""
Shared plumbing for subcommands: common options, config loading and the
command record the router registers.
"""

import argparse
import logging
from dataclasses import dataclass
from typing import Callable, Optional

from casimir_bem.schemas.result_schema import RunResult
from casimir_bem.schemas.run_config import RunConfig, apply_overrides, parse_config
from casimir_bem.services.runner import run

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Command:
    name: str
    summary: str
    description: str
    handler: Callable[[argparse.Namespace], int]
    task: Optional[str] = None


def add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--formulation", choices=["EFIE", "AEFIE", "both"], help="override formulation")
    parser.add_argument("--precision", choices=["single", "double", "both"], help="override precision")
    parser.add_argument("--nodes", type=int, help="override the size of the kappa rule")
    parser.add_argument("--out", help="override the artifact directory")
    parser.add_argument(
        "--threads",
        type=int,
        help="cap on concurrent kappa-node workers (env CASIMIR_BEM_THREADS)",
    )
    parser.add_argument("--log-level", default=None, help="debug, info, warning or error")


def load_config(args: argparse.Namespace, task: Optional[str]) -> RunConfig:
    config = parse_config(args.config, task=task)
    return apply_overrides(
        config,
        formulation=args.formulation,
        precision=args.precision,
        nodes=args.nodes,
        out=args.out,
        threads=args.threads,
    )


def execute(args: argparse.Namespace, task: Optional[str]) -> RunResult:
    config = load_config(args, task)
    return run(config)
