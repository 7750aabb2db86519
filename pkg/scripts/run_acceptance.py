"""Run the acceptance criteria and print one PASS/FAIL line for each.

    python scripts/run_acceptance.py          # all criteria
    python scripts/run_acceptance.py 5 10     # a selection
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from test_acceptance import CRITERIA, evaluate  # noqa: E402


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("numbers", nargs="*", type=int, help="criteria to run (default: all)")
    args = parser.parse_args()
    chosen = [c for c in CRITERIA if not args.numbers or c[0] in args.numbers]
    ok = True
    for criterion in chosen:
        passed, line = evaluate(*criterion)
        print(line, flush=True)
        ok &= passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
