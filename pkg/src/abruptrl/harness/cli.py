"""Command-line entry point.

    abruptrl run CONFIG [--seed --runs --out-dir --jobs]
    abruptrl table1|table2 [--eta ...] [--rates L0 L1] [--fixed-threshold]
    abruptrl oracle-check CONFIG [--runs --seed]
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..inventory import DemandModel, exact_inventory_kernel
from ..mdp import RngStream, value_iteration
from ..qlearn import greedy_policy, init_qtable, q_learning
from .config import ExperimentConfig, dump_config, load_config
from .montecarlo import run_monte_carlo
from .outputs import emit_outputs, emit_table
from .tables import TABLES, reproduce_table


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int, dest="n_runs")
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int)


def _overrides(args) -> dict:
    return dict(seed=args.seed, n_runs=args.n_runs, out_dir=args.out_dir, jobs=args.jobs)


def cmd_run(args) -> int:
    cfg = load_config(args.config).replace(**_overrides(args))
    table = run_monte_carlo(cfg)
    emit_outputs(table, cfg)
    dump_config(cfg, Path(cfg.out_dir) / "config.yaml")
    for name, m in table.agents.items():
        print(f"{name:7s} total={m.rwd_total:9.1f} post={m.rwd_post:9.1f} delay={m.avg_delay:7.1f} "
              f"TD={m.true_detect_pct} miss={m.miss_pct} FA={m.false_alarm_pct}")
    return 0


def cmd_table(args) -> int:
    base = ExperimentConfig(scenario=args.which, n_runs=5000).replace(**_overrides(args))
    rows = TABLES[args.which]
    if args.rates is not None or args.eta is not None:
        rates = [tuple(args.rates)] if args.rates else list(dict.fromkeys(r[:2] for r in rows))
        etas = args.eta or sorted({r[2] for r in rows if tuple(r[:2]) in rates}, reverse=True)
        rows = [(l0, l1, eta) for l0, l1 in rates for eta in etas]
    result = reproduce_table(args.which, base, rows=rows,
                             fa_target=None if args.fixed_threshold else args.fa_target)
    path = emit_table(result, Path(base.out_dir) / f"{args.which}.csv")
    for r in result:
        print(f"{r.rate_pre:4}->{r.rate_post:<4} eta={r.eta:<5} {r.policy:10s} "
              f"A={r.threshold:5.2f} delay={r.delay:7.1f} FA={r.false_alarm:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_oracle_check(args) -> int:
    cfg = load_config(args.config).replace(seed=args.seed)
    params = cfg.inventory_params()
    sch = cfg.agent_config().schedule
    n_runs = args.n_runs or 100
    for label, rate in (("pre", cfg.rate_pre), ("post", cfg.rate_post)):
        mdp = exact_inventory_kernel(params, DemandModel(rate))
        plan = value_iteration(mdp, cfg.beta)
        init = cfg.agent_config().init if label == "pre" else cfg.agent_config().reinit
        hits = 0
        for i in range(n_runs):
            rng = RngStream.for_run(cfg.seed, i)
            q0 = init_qtable(init, mdp.n_states, mdp.n_actions, rng)
            q = q_learning(mdp, sch, q0, cfg.horizon, rng)
            hits += plan.is_optimal(greedy_policy(q))
        print(f"{label}: rate={rate} value-iteration policy={plan.policy.tolist()} "
              f"Q-learning match {hits}/{n_runs}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abruptrl")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo over the configured agents")
    p.add_argument("config")
    _common(p)
    p.set_defaults(func=cmd_run)

    for which in TABLES:
        p = sub.add_parser(which, help="detection delay: full-stock map vs learned policy")
        p.add_argument("--eta", type=float, nargs="+")
        p.add_argument("--rates", type=float, nargs=2, metavar=("PRE", "POST"))
        p.add_argument("--fa-target", type=float, default=0.01)
        p.add_argument("--fixed-threshold", action="store_true",
                       help="use threshold_a as given instead of calibrating")
        _common(p)
        p.set_defaults(func=cmd_table, which=which)

    p = sub.add_parser("oracle-check", help="value iteration vs Q-learning")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int, dest="n_runs")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
