"""Monte Carlo execution and metric aggregation.

Runs are processed in fixed-size chunks of consecutive run indices. Each
chunk is reduced to compact per-run records plus a partial sum of the
post-change reward curve, and chunks are combined in index order, so the
output is identical for any worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..agents import RUNNERS
from ..mdp import RngStream
from .config import ExperimentConfig

log = logging.getLogger(__name__)

DETECTING_AGENTS = ("staql", "ttaql")
CHUNK_SIZE = 250


@dataclass(frozen=True)
class RunRecord:
    agent: str
    run_index: int
    detection_time: int | None
    classification: str | None
    delay: float
    total_reward: float
    post_change_reward: float
    mu0: float
    sd0: float
    threshold_abs: float


@dataclass
class AgentMetrics:
    """Aggregates for one agent.

    Reward and delay means exclude false-alarm runs. ``avg_delay`` is
    ``inf`` for an agent that never detects and 0 for the oracle; the
    classification percentages are ``None`` where detection does not apply.
    """

    agent: str
    n_runs: int
    n_included: int
    rwd_post: float
    rwd_total: float
    rwd_total_se: float
    avg_delay: float
    true_detect_pct: float | None
    miss_pct: float | None
    false_alarm_pct: float | None
    mean_threshold_abs: float
    series: np.ndarray = field(repr=False)


@dataclass
class MetricsTable:
    scenario: str
    agents: dict[str, AgentMetrics]
    runs: list[RunRecord] = field(repr=False)

    def row(self, metric: str) -> dict:
        return {name: getattr(m, metric) for name, m in self.agents.items()}


def _run_chunk(args):
    cfg, agent, start, stop = args
    proc = cfg.process()
    agent_cfg = cfg.agent_config()
    runner = RUNNERS[agent]
    records = []
    series = np.zeros(cfg.horizon - cfg.change_point)
    for i in range(start, stop):
        res = runner(agent_cfg, proc, RngStream.for_run(cfg.seed, i))
        records.append(RunRecord(agent, i, res.detection_time, res.classification,
                                 res.delay, res.total_reward, res.post_change_reward,
                                 float(res.mu0), float(res.sd0), float(res.threshold_abs)))
        if res.classification != "false_alarm":
            post = res.rewards[cfg.change_point:]
            if cfg.series == "discounted":
                post = post * cfg.beta ** np.arange(post.size)
            series += np.cumsum(post)
    return records, series


def _chunks(cfg: ExperimentConfig, agent: str):
    return [(cfg, agent, lo, min(lo + CHUNK_SIZE, cfg.n_runs))
            for lo in range(0, cfg.n_runs, CHUNK_SIZE)]


def run_agent(cfg: ExperimentConfig, agent: str, pool: ProcessPoolExecutor | None = None):
    tasks = _chunks(cfg, agent)
    parts = pool.map(_run_chunk, tasks) if pool is not None else map(_run_chunk, tasks)
    records = []
    series = np.zeros(cfg.horizon - cfg.change_point)
    for chunk_records, chunk_series in parts:
        records.extend(chunk_records)
        series += chunk_series
    return aggregate(agent, records, series), records


def aggregate(agent: str, records: list[RunRecord], series_sum: np.ndarray) -> AgentMetrics:
    n = len(records)
    included = [r for r in records if r.classification != "false_alarm"]
    counts = {k: sum(r.classification == k for r in records)
              for k in ("true_detect", "miss", "false_alarm")}
    delays = [r.delay for r in included if r.classification == "true_detect"]
    totals = np.array([r.total_reward for r in included])
    posts = np.array([r.post_change_reward for r in included])
    detecting = agent in DETECTING_AGENTS
    if agent == "oracle":
        avg_delay = 0.0
    elif delays:
        avg_delay = float(np.mean(delays))
    else:
        avg_delay = math.inf

    def pct(kind):
        return 100.0 * counts[kind] / n if detecting else None

    thresholds = [r.threshold_abs for r in records if math.isfinite(r.threshold_abs)]
    return AgentMetrics(
        agent=agent,
        n_runs=n,
        n_included=len(included),
        rwd_post=float(posts.mean()) if included else math.nan,
        rwd_total=float(totals.mean()) if included else math.nan,
        rwd_total_se=float(totals.std(ddof=1) / math.sqrt(totals.size)) if totals.size > 1 else math.nan,
        avg_delay=avg_delay,
        true_detect_pct=pct("true_detect") if detecting else (0.0 if agent == "ignore" else None),
        miss_pct=pct("miss"),
        false_alarm_pct=pct("false_alarm"),
        mean_threshold_abs=float(np.mean(thresholds)) if thresholds else math.nan,
        series=series_sum / max(len(included), 1),
    )


def run_monte_carlo(cfg: ExperimentConfig) -> MetricsTable:
    """Run every selected agent ``cfg.n_runs`` times with run-indexed RNG streams."""
    agents = {}
    runs = []
    pool = ProcessPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
    try:
        for agent in cfg.agents:
            log.info("%s: %d runs of %s", cfg.scenario, cfg.n_runs, agent)
            metrics, records = run_agent(cfg, agent, pool)
            agents[agent] = metrics
            runs.extend(records)
    finally:
        if pool is not None:
            pool.shutdown()
    return MetricsTable(cfg.scenario, agents, runs)
