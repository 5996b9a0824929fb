#!/usr/bin/env python3
"""Produce the CSV inputs for the three-panel figure.

Trains the recurrent and dense agents plus the random baseline under
correlated mobility, runs the paired oracle sweeps over antenna and client
counts, and drops everything under one output directory. Scale down with
--episodes/--seeds for a smoke run.

    python scripts/make_figure_data.py --out runs/figure --episodes 500
    cd frontend && node dist/cli.js --kind panel \
        --curves ../runs/figure/train_*_fa_seed*.csv \
        --antenna-sweep ../runs/figure/sweep_antennas_oracle.csv \
        --client-sweep ../runs/figure/sweep_clients_oracle.csv \
        --out ../runs/figure/figure.svg
"""

import argparse
from dataclasses import replace

from otafl.harness.config import default_config
from otafl.harness.experiments import run_sweep, run_training


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/figure")
    parser.add_argument("--episodes", type=int, default=500)
    parser.add_argument("--horizon", type=int, default=50)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--budget", type=int, default=2000)
    args = parser.parse_args()

    base = default_config()
    base = replace(
        base,
        mobility=replace(base.mobility, kind="walk"),
        agent=replace(base.agent, hidden=48, updates_per_episode=12),
        run=replace(
            base.run,
            out_dir=args.out,
            episodes=args.episodes,
            horizon=args.horizon,
            seeds=tuple(range(args.seeds)),
            oracle_budget=args.budget,
        ),
    )
    for agent in ("rdpg", "ddpg", "random"):
        cfg = replace(base, run=replace(base.run, agent=agent))
        for path in run_training(cfg):
            print(path)
    oracle = replace(base, run=replace(base.run, agent="oracle"))
    print(run_sweep(oracle, "antennas"))
    print(run_sweep(oracle, "clients"))


if __name__ == "__main__":
    main()
