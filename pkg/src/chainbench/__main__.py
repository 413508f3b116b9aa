"""Module entry point so ``python -m chainbench`` runs the CLI."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
