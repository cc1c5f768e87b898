"""Entry point for running the meerr package as a module.

This allows the package to be run with:
    python -m meerr theory --config scenario.json
"""

import sys

from meerr.main import main

if __name__ == "__main__":
    sys.exit(main())
