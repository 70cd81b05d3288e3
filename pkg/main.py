"""deepq-fuzzer - command-line entry point."""

import sys

from src.deepq_fuzz.bench.cli import main

if __name__ == "__main__":
    sys.exit(main())
