import logging
import sys
from typing import Optional, Sequence

from casimir_bem.cli.router import build_parser
from casimir_bem.core.errors import CasimirBemError
from casimir_bem.core.logging import configure_logging

logger = logging.getLogger("casimir_bem")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except CasimirBemError as err:
        logger.error("%s: %s", type(err).__name__, err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
