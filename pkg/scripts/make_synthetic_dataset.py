#!/usr/bin/env python3
"""Generate the bundled synthetic dataset.

Usage:
  python scripts/make_synthetic_dataset.py data/synthetic [--seed 20]

Then, from the dataset directory:
  firesight --config config.toml corpus-build
  firesight --config config.toml --out-dir runs/demo run --fire-id DELTA,ECHO
"""

from __future__ import annotations

import argparse
from pathlib import Path

from firesight.synthetic import generate_dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("root", type=Path, help="output directory for the dataset")
    parser.add_argument("--seed", type=int, default=20)
    args = parser.parse_args()
    summary = generate_dataset(args.root, seed=args.seed)
    print(f"dataset written to {summary['root']}: fires={','.join(summary['fires'])} "
          f"({summary['dates']} weather days)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
