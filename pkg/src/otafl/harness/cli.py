"""Command-line entry point.

Subcommands: train, sweep, verify-bound, grad-check, oracle, replay-config.
Configuration comes from ``--config`` (a flat key=value file, or the literal
name ``default``) with individual flags overriding single keys.  Exit status
is 0 on success and nonzero with a one-line diagnostic on configuration
errors; nothing is written in that case.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..neuralnet import actor_network, critic_network, grad_check
from .config import ConfigurationError, ExperimentConfig, load_config, resolved_items
from .experiments import bound_report, run_sweep, run_training, verify_bound

__all__ = ["main"]

GRAD_CHECK_LIMIT = 1e-4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default="default", help="config file or 'default'")
    parser.add_argument("--seed", type=int, default=None, help="override run.seeds with one seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--scenario", choices=["fa", "fpa"], default=None)
    parser.add_argument("--agent", choices=["rdpg", "ddpg", "oracle", "random"], default=None)
    parser.add_argument("--episodes", type=int, default=None)
    parser.add_argument("--horizon", type=int, default=None)
    parser.add_argument("--antennas", default=None, help="comma-separated antenna counts")
    parser.add_argument("--clients", default=None, help="comma-separated client counts")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otafl",
        description="Over-the-air federated learning experiments with a movable antenna array",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("train", "train one agent across the configured seeds"),
        ("sweep", "summary table across antenna or client counts"),
        ("verify-bound", "check the measured optimality gap against its bound"),
        ("grad-check", "finite-difference audit of the network gradients"),
        ("oracle", "random-search oracle at one sampled state"),
        ("replay-config", "print the fully resolved configuration"),
    ]:
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--axis", choices=["antennas", "clients"], default="antennas")
        if name == "oracle":
            p.add_argument("--budget", type=int, default=None)
    return parser


def _apply_flags(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    run = cfg.run
    if args.seed is not None:
        run = replace(run, seeds=(args.seed,))
    if args.out is not None:
        run = replace(run, out_dir=args.out)
    if args.scenario is not None:
        run = replace(run, scenario=args.scenario)
    if args.agent is not None:
        run = replace(run, agent=args.agent)
    if args.episodes is not None:
        run = replace(run, episodes=args.episodes)
    if args.horizon is not None:
        run = replace(run, horizon=args.horizon)
    if args.antennas is not None:
        run = replace(run, antennas=tuple(int(v) for v in args.antennas.split(",")))
    if args.clients is not None:
        run = replace(run, clients=tuple(int(v) for v in args.clients.split(",")))
    if getattr(args, "budget", None) is not None:
        run = replace(run, oracle_budget=args.budget)
    return replace(cfg, run=run)


def _cmd_train(cfg: ExperimentConfig) -> int:
    for path in run_training(cfg):
        print(path)
    return 0


def _cmd_sweep(cfg: ExperimentConfig, axis: str) -> int:
    print(run_sweep(cfg, axis))
    return 0


def _cmd_verify_bound(cfg: ExperimentConfig) -> int:
    report = verify_bound(cfg)
    print(report["csv"])
    print(bound_report(report))
    return 0 if report["holds_fraction"] == 1.0 else 1


def _cmd_grad_check(cfg: ExperimentConfig) -> int:
    rng = np.random.default_rng(cfg.run.seeds[0])
    state_dim, action_dim, hidden = 6, 9, 12
    worst = 0.0
    for seq_len in range(1, 9):
        actor = actor_network(state_dim, action_dim, recurrent=True, hidden=hidden, rng=rng)
        critic = critic_network(state_dim + action_dim, recurrent=True, hidden=hidden, rng=rng)
        seq = rng.standard_normal((seq_len, 2, state_dim))
        worst = max(worst, grad_check(actor, seq, rng))
        cseq = rng.standard_normal((seq_len, 2, state_dim + action_dim))
        worst = max(worst, grad_check(critic, cseq, rng))
    print(f"max_relative_error={worst:.3e} (limit {GRAD_CHECK_LIMIT:.0e})")
    return 0 if worst < GRAD_CHECK_LIMIT else 1


def _cmd_oracle(cfg: ExperimentConfig) -> int:
    from ..agents import random_search_oracle

    rng = np.random.default_rng(np.random.SeedSequence(cfg.run.seeds[0]))
    state = cfg.mobility.initial(cfg.run.n_users, rng)
    fixed = None
    if cfg.run.scenario == "fpa":
        from ..channel import fpa_layout

        fixed = fpa_layout(cfg.array.n_antennas, cfg.array.aperture, cfg.array.min_spacing)
    result = random_search_oracle(
        state,
        cfg.channel,
        cfg.reward,
        cfg.run.oracle_budget,
        rng,
        n_antennas=cfg.array.n_antennas,
        aperture=cfg.array.aperture,
        min_spacing=cfg.array.min_spacing,
        n_draws=cfg.run.oracle_draws,
        fixed_geometry=fixed,
    )
    print(f"best_reward={result.best_reward!r}")
    print(f"candidates_evaluated={len(result.candidates)}")
    return 0


def _cmd_replay_config(cfg: ExperimentConfig) -> int:
    for key, value in resolved_items(cfg):
        print(f"{key}={value}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        if args.command == "train":
            return _cmd_train(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.axis)
        if args.command == "verify-bound":
            return _cmd_verify_bound(cfg)
        if args.command == "grad-check":
            return _cmd_grad_check(cfg)
        if args.command == "oracle":
            return _cmd_oracle(cfg)
        if args.command == "replay-config":
            return _cmd_replay_config(cfg)
        parser.error(f"unknown command {args.command}")
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
