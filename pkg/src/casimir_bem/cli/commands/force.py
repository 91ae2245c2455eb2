import argparse

from casimir_bem.cli.base import Command, execute


def handle(args: argparse.Namespace) -> int:
    result = execute(args, "force")
    for r in result.results:
        print(
            f"{r.formulation.value:5s} {r.precision.value:6s} "
            f"force on object {r.object_i} = {r.force:.10e} hbar*c/L^2"
        )
    return 0


command = Command(
    name="force",
    summary="Casimir force on one object along one direction",
    description=(
        "Integrate tr(Z^-1 dZ) over the kappa rule. The default direction points "
        "from the other objects towards the displaced one, so attraction is negative."
    ),
    handler=handle,
    task="force",
)
