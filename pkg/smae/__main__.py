"""Run the command line interface."""

from smae.cli import main

main()
