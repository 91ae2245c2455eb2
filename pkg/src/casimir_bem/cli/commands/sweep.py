import argparse

from casimir_bem.cli.base import Command, execute


def handle(args: argparse.Namespace) -> int:
    result = execute(args, "sweep")
    for row in result.sweep:
        print(
            f"gap {row.separation:10.6g}  {row.formulation.value:5s} {row.precision.value:6s}"
            f"  energy {row.energy:.6e}  force {row.force:.6e}"
        )
    return 0


command = Command(
    name="sweep",
    summary="Energy and force versus gap for a pair scene",
    description=(
        "Rebuild the pair at every gap of the [sweep] section and evaluate every "
        "formulation/precision series there; writes sweep.csv."
    ),
    handler=handle,
    task="sweep",
)
