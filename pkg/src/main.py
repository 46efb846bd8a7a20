"""Main entry point for the ion-chain laboratory."""

import logging
import sys

from src.cli import parse_and_dispatch
from src.config import settings


def main() -> None:
    """Run the command line."""
    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        code = parse_and_dispatch(sys.argv[1:])
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
