import argparse

from casimir_bem.cli.base import Command, execute


def handle(args: argparse.Namespace) -> int:
    result = execute(args, "energy")
    for r in result.results:
        print(f"{r.formulation.value:5s} {r.precision.value:6s} energy = {r.energy:.10e} hbar*c/L")
    return 0


command = Command(
    name="energy",
    summary="Casimir energy of the configured scene",
    description=(
        "Integrate ln det Z/Z_inf over the kappa rule for every requested "
        "formulation and precision; writes result.json and spectrum.csv."
    ),
    handler=handle,
    task="energy",
)
