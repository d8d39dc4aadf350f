"""Experiment configuration: a flat YAML mapping with one key per constant.

Schema (every key optional; defaults are the N=5 inventory scenario)::

    scenario        str    label written into outputs
    capacity        int    warehouse size N
    fixed_cost      float  k, charged when an order is placed
    unit_cost       float  c, per item purchased
    holding_cost    float  h, per item left at the end of the day
    unit_price      float  p, per item sold
    rent            float  daily rent
    purchase_cost   str    "clamped" (c*min(a, N-s)) or "ordered" (c*a)
    rate_pre        float  Poisson demand rate before the change
    rate_post       float  Poisson demand rate after the change
    change_point    int    first step governed by the post-change model
    horizon         int    steps per run
    beta            float  discount factor
    alpha0, alpha_cut, eps0, eps_cut, decrement   Q-learning schedule
    tau, delta      int    baseline window [tau, delta)
    eta             float  CUSUM drift guard, in baseline sd units
    threshold_a     float  STAQL threshold (sd units)
    threshold_b     float  TTAQL suspect threshold (sd units)
    threshold_a_tilde float TTAQL declare threshold (sd units)
    direction       str    low_to_high | high_to_low | two_sided | auto
    init, reinit    str    random | pyramid | monotone | zeros | auto
    init_scale      float  pre-change Q-table amplitude; empty means one day's
                           revenue at the pre-change rate (unit_price * rate_pre)
    reinit_scale    float  post-detection Q-table amplitude
    agents          list   subset of ttaql, staql, ignore, oracle
    n_runs          int    Monte Carlo runs per agent
    seed            int    master seed
    jobs            int    worker processes
    out_dir         str    output directory
    series          str    "raw" or "discounted" cumulative post-change curve
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..agents import AGENT_NAMES, AgentConfig
from ..inventory import DemandModel, InventoryParams, exact_inventory_kernel
from ..mdp import NonstationaryProcess
from ..qlearn import ConfigError, InitStrategy, LearningSchedule


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "n5"
    capacity: int = 5
    fixed_cost: float = 0.5
    unit_cost: float = 3.0
    holding_cost: float = 2.0
    unit_price: float = 8.0
    rent: float = 4.8
    purchase_cost: str = "clamped"
    rate_pre: float = 4.0
    rate_post: float = 1.8
    change_point: int = 1000
    horizon: int = 5000
    beta: float = 0.9999
    alpha0: float = 0.2
    alpha_cut: float = 0.05
    eps0: float = 0.2
    eps_cut: float = 0.05
    decrement: float = 0.001
    tau: int = 500
    delta: int = 600
    eta: float = 0.92
    threshold_a: float = 6.0
    threshold_b: float = 3.35
    threshold_a_tilde: float = 6.67
    direction: str = "auto"
    init: str = "auto"
    init_scale: float | None = None
    reinit: str = "auto"
    reinit_scale: float = 1.0
    agents: tuple[str, ...] = AGENT_NAMES
    n_runs: int = 10_000
    seed: int = 2024
    jobs: int = 1
    out_dir: str = "results"
    series: str = "raw"

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if not 0 <= self.change_point < self.horizon:
            raise ConfigError("change point must lie inside the horizon")
        unknown = set(self.agents) - set(AGENT_NAMES)
        if unknown:
            raise ConfigError(f"unknown agents {sorted(unknown)}")
        if self.series not in ("raw", "discounted"):
            raise ConfigError("series must be 'raw' or 'discounted'")
        self.agent_config()  # validates the agent-level fields

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with ``changes`` applied; ``None`` values leave a field untouched."""
        names = {f.name for f in dataclasses.fields(self)}
        unknown = set(changes) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_mapping(self) -> dict:
        out = dataclasses.asdict(self)
        out["agents"] = list(self.agents)
        return out

    def inventory_params(self) -> InventoryParams:
        return InventoryParams(self.capacity, self.fixed_cost, self.unit_cost,
                               self.holding_cost, self.unit_price, self.rent,
                               self.purchase_cost)

    def process(self) -> NonstationaryProcess:
        params = self.inventory_params()
        return NonstationaryProcess(exact_inventory_kernel(params, DemandModel(self.rate_pre)),
                                    exact_inventory_kernel(params, DemandModel(self.rate_post)),
                                    self.change_point)

    def resolved_direction(self) -> str:
        if self.direction != "auto":
            return self.direction
        # fewer customers means less revenue, so a demand drop shows up as a reward drop
        if self.rate_post < self.rate_pre:
            return "high_to_low"
        if self.rate_post > self.rate_pre:
            return "low_to_high"
        return "two_sided"

    def resolved_init_scale(self) -> float:
        if self.init_scale is None:
            return self.unit_price * self.rate_pre
        return self.init_scale

    def _init_kind(self, kind: str, rate: float, other: float) -> str:
        if kind != "auto":
            return kind
        return "monotone" if rate >= other else "random"

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            horizon=self.horizon,
            tau=self.tau,
            delta=self.delta,
            schedule=LearningSchedule(self.alpha0, self.alpha_cut, self.eps0, self.eps_cut,
                                      self.decrement, self.beta),
            init=InitStrategy(self._init_kind(self.init, self.rate_pre, self.rate_post),
                              self.resolved_init_scale()),
            reinit=InitStrategy(self._init_kind(self.reinit, self.rate_post, self.rate_pre),
                                self.reinit_scale),
            direction=self.resolved_direction(),
            eta=self.eta,
            threshold_a=self.threshold_a,
            threshold_b=self.threshold_b,
            threshold_a_tilde=self.threshold_a_tilde,
        )


SCENARIOS = {
    "n5": ExperimentConfig(),
    "n7": ExperimentConfig(scenario="n7", capacity=7, rate_pre=6.0, rate_post=2.5, eta=1.2,
                           threshold_a=8.0, threshold_b=4.0, threshold_a_tilde=6.9),
}


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML config; a ``base`` key names a built-in scenario to start from."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    base = data.pop("base", None)
    if base is None:
        return ExperimentConfig.from_mapping(data)
    if base not in SCENARIOS:
        raise ConfigError(f"unknown base scenario {base!r}")
    return SCENARIOS[base].replace(**data)


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_mapping(), fh, sort_keys=False)
