#!/usr/bin/env python3
"""Tabulate both rate curves as two-column text files (plotting input)."""

import argparse
import sys
from pathlib import Path

from idfeedback import rates


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--step", type=float, default=0.001)
    parser.add_argument("--out-dir", default="rate_curves")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for which in ("s", "id"):
        path = out / f"rate_{which}.dat"
        path.write_text(rates.rate_curve(which, args.step).to_text())
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
