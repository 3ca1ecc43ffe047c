#!/usr/bin/env python3
"""Decoding success of chosen parameters against budget-floor(tau n) adversaries.

Runs the end-to-end sweep over n in {100, 200}, tau in {0.05, 0.1, 0.15} and
the greedy and random adversaries, on both channels.
"""

import argparse
import sys

from idfeedback.harness import ExperimentConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--epsilon", type=float, default=0.15)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--channel", choices=("subst", "id", "both"), default="subst")
    args = parser.parse_args()
    channels = ("subst", "id") if args.channel == "both" else (args.channel,)
    worst = 1.0
    print("channel n tau adversary log2M alpha success_rate")
    for channel in channels:
        for n in (100, 200):
            for tau in (0.05, 0.1, 0.15):
                for adv in ("greedy", "random"):
                    cfg = ExperimentConfig(channel=channel, n=n, tau=tau, epsilon=args.epsilon, adversary=adv,
                                           seed=args.seed, trials=args.trials)
                    p = cfg.params()
                    rep = run_experiment(cfg)
                    worst = min(worst, rep.success_rate)
                    print(f"{channel} {n} {tau} {adv} {p.m_count.bit_length() - 1} {float(p.alpha):.4f} "
                          f"{rep.success_rate:.2f}")
    return 0 if worst == 1.0 else 1


if __name__ == "__main__":
    sys.exit(main())
