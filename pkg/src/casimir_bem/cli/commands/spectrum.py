import argparse

from casimir_bem.cli.base import Command, execute


def handle(args: argparse.Namespace) -> int:
    result = execute(args, "spectrum")
    samples = sum(len(r.spectrum) for r in result.results)
    print(f"{samples} spectrum samples written to spectrum.csv")
    return 0


command = Command(
    name="spectrum",
    summary="Energy integrand at every kappa node",
    description="Sample the energy integrand and condition estimate per node for plotting.",
    handler=handle,
    task="spectrum",
)
