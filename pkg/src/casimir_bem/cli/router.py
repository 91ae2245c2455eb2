import argparse

from casimir_bem.cli.base import add_common_options
from casimir_bem.cli.commands.breakdown import command as breakdown_command
from casimir_bem.cli.commands.energy import command as energy_command
from casimir_bem.cli.commands.force import command as force_command
from casimir_bem.cli.commands.run import command as run_command
from casimir_bem.cli.commands.spectrum import command as spectrum_command
from casimir_bem.cli.commands.sweep import command as sweep_command

COMMANDS = [
    energy_command,
    force_command,
    spectrum_command,
    breakdown_command,
    sweep_command,
    run_command,
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casimir-bem",
        description=(
            "Casimir energies and forces between perfect conductors from "
            "boundary-element determinants. Lengths in L, energy in hbar*c/L, "
            "force in hbar*c/L^2."
        ),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command.name, help=command.summary, description=command.description)
        add_common_options(sub)
        sub.set_defaults(handler=command.handler)
    return parser
