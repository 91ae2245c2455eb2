import argparse

from casimir_bem.cli.base import Command, execute


def handle(args: argparse.Namespace) -> int:
    result = execute(args, None)
    print(f"task {result.task} finished: {', '.join(result.artifacts)}")
    return 0


command = Command(
    name="run",
    summary="Run the task declared in the config file",
    description="Like the task subcommands, but the task comes from the config.",
    handler=handle,
)
