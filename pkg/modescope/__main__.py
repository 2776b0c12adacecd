"""Entry point for modescope package when run as a module."""

from modescope.cli import main

main()
