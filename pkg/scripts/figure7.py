#!/usr/bin/env python3
"""Write the worked-trajectory regression artifacts.

M = 2**14, n = 27, alpha = 0.3, substitutions at steps 16, 21 and 22, seed 42.
The acceptance suite compares against these files byte for byte; rerun this
only when a change to the trajectory output is intended.
"""

import argparse
import sys
from pathlib import Path

from idfeedback.harness import ExperimentConfig, run_experiment, session_trajectory_csv

CONFIG = ExperimentConfig(channel="subst", m_bits=14, n=27, alpha=0.3, adversary="fixed:16,21,22", seed=42)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(CONFIG)
    (out / "figure7_config.txt").write_text(CONFIG.to_text())
    (out / "figure7_report.json").write_text(report.to_json(timing=False))
    (out / "figure7_trajectory.csv").write_text(session_trajectory_csv(CONFIG))
    print(f"success_rate={report.success_rate} violations={report.violation_count} -> {out}")
    return 0 if report.success_rate == 1.0 and report.violation_count == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
