"""Entry point for running tsc-forest as a module."""

from tsc_forest.cli import main

if __name__ == "__main__":
    main()
