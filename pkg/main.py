"""
Run llnroute from a source checkout: `python main.py sweep scenarios/nodes.conf`.
"""

import sys

from llnroute.cli import main

if __name__ == "__main__":
    sys.exit(main())
