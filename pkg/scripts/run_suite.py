"""Run the full scenario suite; extra arguments are passed to ``hitlimits suite``."""

import sys

from hitlimits.cli import main

if __name__ == "__main__":
    sys.exit(main(["-v", "suite", *sys.argv[1:]]))
