"""End-to-end adaptive agents: STAQL, TTAQL, and the oracle/ignore baselines.

All agents share one compiled step loop (``_simulate``). Each step reserves
three uniforms: the exploration coin, the random action, and the
transition draw. Because the block is fixed per step, agents fed the same
``RngStream`` see common random numbers, and TTAQL with ``B == A~``
replays STAQL exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .detect import DIRECTIONS
from .mdp import NonstationaryProcess, RngStream, discounted_return
from .qlearn import ConfigError, InitStrategy, LearningSchedule, init_qtable

STAQL, TTAQL, ORACLE, IGNORE, FIXED = range(5)
AGENT_NAMES = ("ttaql", "staql", "ignore", "oracle")

PHASE_LEARN, PHASE_SUSPECT, PHASE_RELEARN = 0, 1, 2


@dataclass(frozen=True)
class AgentConfig:
    """Everything an agent needs besides the environment.

    Thresholds ``threshold_a`` (STAQL), ``threshold_b`` and
    ``threshold_a_tilde`` (TTAQL) are multiples of the baseline standard
    deviation. ``qcd_policy`` defaults to the order-up-to-capacity map.
    """

    horizon: int = 5000
    tau: int = 500
    delta: int = 600
    schedule: LearningSchedule = field(default_factory=LearningSchedule)
    init: InitStrategy = field(default_factory=InitStrategy)
    reinit: InitStrategy = field(default_factory=lambda: InitStrategy("random", 1.0))
    direction: str = "high_to_low"
    eta: float = 0.92
    threshold_a: float = 6.0
    threshold_b: float = 3.35
    threshold_a_tilde: float = 6.67
    qcd_policy: tuple[int, ...] | None = None
    s0: int = 0

    def __post_init__(self):
        if not 0 <= self.tau < self.delta < self.horizon:
            raise ConfigError("need 0 <= tau < delta < horizon")
        if self.delta - self.tau < 2:
            raise ConfigError("baseline window needs at least two steps")
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}")
        if self.threshold_b > self.threshold_a_tilde:
            raise ConfigError("TTAQL needs threshold_b <= threshold_a_tilde")

    def qcd_map(self, n_states: int) -> np.ndarray:
        if self.qcd_policy is None:
            return np.arange(n_states)[::-1].copy()
        policy = np.asarray(self.qcd_policy, dtype=np.int64)
        if policy.shape != (n_states,):
            raise ConfigError(f"qcd_policy must have one action per state ({n_states})")
        return policy


@dataclass
class RunResult:
    agent: str
    rewards: np.ndarray
    phases: np.ndarray
    change_point: int
    detection_time: int | None
    classification: str | None
    total_reward: float
    post_change_reward: float
    mu0: float = math.nan
    sd0: float = math.nan
    threshold_abs: float = math.nan
    suspect_threshold_abs: float = math.nan

    @property
    def delay(self) -> float:
        if self.agent == "oracle":
            return 0.0
        if self.classification == "true_detect":
            return float(self.detection_time - self.change_point)
        return math.inf


def classify(detection_time: int | None, change_point: int) -> str:
    if detection_time is None:
        return "miss"
    if detection_time < change_point:
        return "false_alarm"
    return "true_detect"


@numba.njit(cache=True)
def _simulate(mode, cum_pre, rew_pre, cum_post, rew_post, change_point, q, q_post, qcd, U,
              alpha0, alpha_cut, eps0, eps_cut, dlt, beta, tau, delta, direction, eta,
              thr_a, thr_b, s0, stop_on_alarm, rewards, phases, w_trace):
    horizon = U.shape[0]
    n_actions = q.shape[1]
    alpha = alpha0
    eps = eps0
    s = s0
    mu0 = np.nan
    sd0 = np.nan
    a_abs = np.inf
    b_abs = np.inf
    armed = False
    found = False
    suspect = False
    gamma_hat = -1
    w_up = 0.0
    w_down = 0.0
    phase = PHASE_LEARN
    detecting = mode == STAQL or mode == TTAQL or mode == FIXED
    n_done = horizon
    for t in range(horizon):
        if mode == ORACLE and t == change_point:
            q[:, :] = q_post
            alpha = alpha0
            eps = eps0
            phase = PHASE_RELEARN
        if mode == FIXED or (mode == TTAQL and suspect):
            a = qcd[s]
            learn = False
            phases[t] = PHASE_SUSPECT if mode == TTAQL else phase
        else:
            if U[t, 0] < eps:
                a = min(int(U[t, 1] * n_actions), n_actions - 1)
            else:
                a = np.argmax(q[s])
            learn = True
            phases[t] = phase
        if t < change_point:
            row = cum_pre[s, a]
            s2 = np.searchsorted(row, U[t, 2], side="right")
            r = rew_pre[s, a, s2]
        else:
            row = cum_post[s, a]
            s2 = np.searchsorted(row, U[t, 2], side="right")
            r = rew_post[s, a, s2]
        if learn:
            q[s, a] += alpha * (r + beta * np.max(q[s2]) - q[s, a])
            if eps > eps_cut:
                eps = max(eps - dlt, eps_cut)
            if alpha > alpha_cut:
                alpha = max(alpha - dlt, alpha_cut)
        rewards[t] = r
        s = s2
        if not detecting or found:
            continue
        if t == delta - 1:
            window = rewards[tau:delta]
            mu0 = window.mean()
            sd0 = window.std() * np.sqrt(window.size / (window.size - 1.0))
            a_abs = thr_a * sd0
            b_abs = thr_b * sd0
            armed = True
        elif armed:
            if direction != 1:
                w_up = max(0.0, w_up + r - mu0 - eta * sd0)
            if direction != 0:
                w_down = min(0.0, w_down + r - mu0 + eta * sd0)
            if direction == 0:
                mag = w_up
            elif direction == 1:
                mag = -w_down
            else:
                mag = max(w_up, -w_down)
            w_trace[t] = mag
            alarm = False
            if mode == TTAQL:
                suspect = mag > b_abs
                alarm = suspect and mag > a_abs
            else:
                alarm = mag > a_abs
            if alarm:
                found = True
                suspect = False
                gamma_hat = t
                phase = PHASE_RELEARN
                if mode != FIXED:
                    q[:, :] = q_post
                    alpha = alpha0
                    eps = eps0
                if stop_on_alarm:
                    n_done = t + 1
                    break
    return gamma_hat, mu0, sd0, a_abs, b_abs, n_done


_DIRECTION_CODE = {"low_to_high": 0, "high_to_low": 1, "two_sided": 2}


def _initial_tables(cfg: AgentConfig, n_states: int, n_actions: int, rng: RngStream):
    # separate child streams keep the step block aligned whatever the init kinds are
    pre_rng = RngStream(rng.seed, rng.spawn_key + (0,))
    post_rng = RngStream(rng.seed, rng.spawn_key + (1,))
    step_rng = RngStream(rng.seed, rng.spawn_key + (2,))
    q = init_qtable(cfg.init, n_states, n_actions, pre_rng)
    q_post = init_qtable(cfg.reinit, n_states, n_actions, post_rng)
    return q, q_post, step_rng


def simulate(mode: int, cfg: AgentConfig, proc: NonstationaryProcess, rng: RngStream,
             *, stop_on_alarm: bool = False) -> dict:
    """Run the compiled loop and return the raw trajectory pieces.

    ``FIXED`` mode acts with ``cfg.qcd_map`` from the first step, never
    learns, and runs the single-threshold detector; the tables use it for
    the best-QCD policy. ``w_trace[t]`` holds the detector magnitude
    ``|W_t|`` (zero before arming), which lets callers re-evaluate the
    first crossing for any threshold without re-simulating.
    """
    n_s, n_a = proc.pre.n_states, proc.pre.n_actions
    q, q_post, step_rng = _initial_tables(cfg, n_s, n_a, rng)
    U = step_rng.uniforms((cfg.horizon, 3))
    rewards = np.zeros(cfg.horizon)
    phases = np.zeros(cfg.horizon, dtype=np.int8)
    w_trace = np.zeros(cfg.horizon)
    sch = cfg.schedule
    thr_a = cfg.threshold_a_tilde if mode == TTAQL else cfg.threshold_a
    gamma_hat, mu0, sd0, a_abs, b_abs, n_done = _simulate(
        mode, proc.pre.cum_kernel, proc.pre.reward, proc.post.cum_kernel, proc.post.reward,
        proc.change_point, q, q_post, cfg.qcd_map(n_s), U,
        sch.alpha0, sch.alpha_cut, sch.eps0, sch.eps_cut, sch.delta, sch.beta,
        cfg.tau, cfg.delta, _DIRECTION_CODE[cfg.direction], cfg.eta,
        thr_a, cfg.threshold_b, cfg.s0, stop_on_alarm, rewards, phases, w_trace)
    return dict(gamma_hat=None if gamma_hat < 0 else int(gamma_hat), mu0=mu0, sd0=sd0,
                a_abs=a_abs, b_abs=b_abs, rewards=rewards[:n_done], phases=phases[:n_done],
                w_trace=w_trace[:n_done], q=q)


def _result(agent: str, mode: int, cfg: AgentConfig, proc: NonstationaryProcess,
            rng: RngStream) -> RunResult:
    raw = simulate(mode, cfg, proc, rng)
    gamma = min(proc.change_point, cfg.horizon)
    total, post = discounted_return(raw["rewards"], cfg.schedule.beta, gamma)
    detecting = mode in (STAQL, TTAQL)
    return RunResult(
        agent=agent,
        rewards=raw["rewards"],
        phases=raw["phases"],
        change_point=proc.change_point,
        detection_time=raw["gamma_hat"],
        classification=classify(raw["gamma_hat"], proc.change_point) if detecting else None,
        total_reward=total,
        post_change_reward=post,
        mu0=raw["mu0"],
        sd0=raw["sd0"],
        threshold_abs=raw["a_abs"],
        suspect_threshold_abs=raw["b_abs"] if mode == TTAQL else math.nan,
    )


def run_staql(cfg: AgentConfig, proc: NonstationaryProcess, rng: RngStream) -> RunResult:
    """Q-learn, detect with a single CUSUM threshold, re-initialize and relearn."""
    return _result("staql", STAQL, cfg, proc, rng)


def run_ttaql(cfg: AgentConfig, proc: NonstationaryProcess, rng: RngStream) -> RunResult:
    """Like STAQL, but between thresholds B and A~ act with the QCD map and freeze the table."""
    return _result("ttaql", TTAQL, cfg, proc, rng)


def run_oracle(cfg: AgentConfig, proc: NonstationaryProcess, rng: RngStream) -> RunResult:
    return _result("oracle", ORACLE, cfg, proc, rng)


def run_ignore(cfg: AgentConfig, proc: NonstationaryProcess, rng: RngStream) -> RunResult:
    return _result("ignore", IGNORE, cfg, proc, rng)


RUNNERS = {"staql": run_staql, "ttaql": run_ttaql, "oracle": run_oracle, "ignore": run_ignore}


def with_reduced_thresholds(cfg: AgentConfig) -> AgentConfig:
    """TTAQL configuration whose suspect band is empty (B = A~ = A)."""
    return replace(cfg, threshold_b=cfg.threshold_a, threshold_a_tilde=cfg.threshold_a)
