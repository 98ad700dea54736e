"""Entry point for running the frechet_variations CLI as a module."""

from __future__ import annotations

import importlib
import sys


def main() -> None:
    """Load the CLI and exit with its status."""
    module = importlib.import_module("frechet_variations.cli")
    cli_main = module.main
    sys.exit(cli_main())


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    main()
