import sys

from cli.app import main

import algorithms.regimes

if __name__ == "__main__":
    sys.exit(main())
