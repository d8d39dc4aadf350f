"""Finite MDPs with a single abrupt model change.

Holds the dense tabular model, the change-point wrapper, an exact
value-iteration planner used as an oracle, and the reset-discount
return accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba
import numpy as np

KERNEL_ATOL = 1e-9


class ModelError(ValueError):
    """Raised when a transition kernel or reward table is malformed."""


class RngStream:
    """Seeded uniform stream backed by numpy's PCG64.

    A stream for run ``i`` of an experiment is derived from the master seed
    through ``SeedSequence`` spawn keys, so runs are independent and
    reproducible regardless of execution order.
    """

    def __init__(self, seed: int, spawn_key: Sequence[int] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @classmethod
    def for_run(cls, master_seed: int, run_index: int) -> "RngStream":
        return cls(master_seed, spawn_key=(run_index,))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size) -> np.ndarray:
        return self._gen.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TabularMDP:
    """Dense transition kernel ``kernel[s, a, s']`` and reward ``reward[s, a, s']``."""

    kernel: np.ndarray
    reward: np.ndarray
    cum_kernel: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kernel = _frozen(self.kernel)
        reward = _frozen(self.reward)
        if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
            raise ModelError(f"kernel must have shape (S, A, S), got {kernel.shape}")
        if reward.shape != kernel.shape:
            raise ModelError(f"reward shape {reward.shape} != kernel shape {kernel.shape}")
        if kernel.shape[0] == 0 or kernel.shape[1] == 0:
            raise ModelError("state and action spaces must be nonempty")
        if np.any(kernel < 0.0) or np.any(kernel > 1.0):
            raise ModelError("kernel entries must lie in [0, 1]")
        worst = np.max(np.abs(kernel.sum(axis=2) - 1.0))
        if worst > KERNEL_ATOL:
            raise ModelError(f"kernel rows must sum to 1 (max deviation {worst:.3g})")
        if not np.all(np.isfinite(reward)):
            raise ModelError("rewards must be finite")
        cum = np.cumsum(kernel, axis=2)
        # the last bucket absorbs rounding so inverse-CDF never falls off the end
        cum[:, :, -1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "cum_kernel", cum)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]

    def check_state_action(self, s: int, a: int) -> None:
        if not 0 <= s < self.n_states:
            raise ValueError(f"state {s} out of range [0, {self.n_states})")
        if not 0 <= a < self.n_actions:
            raise ValueError(f"action {a} out of range [0, {self.n_actions})")


@dataclass(frozen=True)
class NonstationaryProcess:
    """Pre-change model governs steps ``t < change_point``, post-change model the rest."""

    pre: TabularMDP
    post: TabularMDP
    change_point: int

    def __post_init__(self):
        if self.pre.kernel.shape != self.post.kernel.shape:
            raise ModelError("pre and post models must share state and action spaces")
        if self.change_point < 0:
            raise ValueError("change point must be nonnegative")

    def model_at(self, t: int) -> TabularMDP:
        return self.pre if t < self.change_point else self.post


class StepRecord(NamedTuple):
    t: int
    state: int
    action: int
    next_state: int
    reward: float


def sample_next_state(mdp: TabularMDP, s: int, a: int, rng: RngStream) -> int:
    """Inverse-CDF draw over the kernel row, states in ascending order."""
    mdp.check_state_action(s, a)
    return _inverse_cdf(mdp.cum_kernel[s, a], rng.uniform())


def _inverse_cdf(cum_row: np.ndarray, u: float) -> int:
    return int(np.searchsorted(cum_row, u, side="right"))


def env_step(proc: NonstationaryProcess, t: int, s: int, a: int, rng: RngStream) -> tuple[int, float]:
    if t < 0:
        raise ValueError("time index must be nonnegative")
    mdp = proc.model_at(t)
    s_next = sample_next_state(mdp, s, a, rng)
    return s_next, float(mdp.reward[s, a, s_next])


def rollout(proc: NonstationaryProcess, policy: Sequence[int], horizon: int,
            rng: RngStream, s0: int = 0) -> list[StepRecord]:
    """Follow a fixed Markov map for ``horizon`` steps and log every transition."""
    records = []
    s = s0
    for t in range(horizon):
        a = int(policy[s])
        s_next, r = env_step(proc, t, s, a, rng)
        records.append(StepRecord(t, s, a, s_next, r))
        s = s_next
    return records


class PlanningResult(NamedTuple):
    V: np.ndarray
    Q: np.ndarray
    policy: np.ndarray
    iterations: int

    def optimal_actions(self, atol: float = 1e-6) -> np.ndarray:
        """Boolean mask of actions within ``atol`` of the best in each state.

        Actions that lead to identical dynamics and rewards (ordering past
        capacity, say) tie exactly, so a policy is optimal when every
        state's action lies in this set rather than equal to ``policy``.
        """
        return self.Q >= self.Q.max(axis=1, keepdims=True) - atol

    def is_optimal(self, policy: Sequence[int], atol: float = 1e-6) -> bool:
        policy = np.asarray(policy)
        return bool(self.optimal_actions(atol)[np.arange(policy.size), policy].all())


@numba.njit(cache=True)
def _bellman_sweeps(kernel, expected_reward, beta, tol, max_iter):
    n_s, n_a, _ = kernel.shape
    V = np.zeros(n_s)
    Q = np.zeros((n_s, n_a))
    for it in range(1, max_iter + 1):
        for s in range(n_s):
            for a in range(n_a):
                acc = expected_reward[s, a]
                for s2 in range(n_s):
                    acc += beta * kernel[s, a, s2] * V[s2]
                Q[s, a] = acc
        diff = 0.0
        for s in range(n_s):
            best = Q[s, 0]
            for a in range(1, n_a):
                if Q[s, a] > best:
                    best = Q[s, a]
            d = abs(best - V[s])
            if d > diff:
                diff = d
            V[s] = best
        if diff < tol:
            return V, Q, it
    return V, Q, -1


def value_iteration(mdp: TabularMDP, beta: float, tol: float = 1e-6,
                    max_iter: int = 10_000_000) -> PlanningResult:
    """Iterate the Bellman optimality operator until the sup-norm change is below ``tol``.

    The returned Q is the last Bellman image, so its fixed-point residual
    is at most ``beta * tol``. Ties in the greedy policy go to the lowest
    action index.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    expected_reward = np.einsum("ijk,ijk->ij", mdp.kernel, mdp.reward)
    V, Q, iterations = _bellman_sweeps(np.ascontiguousarray(mdp.kernel), expected_reward,
                                       beta, tol, max_iter)
    if iterations < 0:
        raise RuntimeError(f"value iteration did not reach tol={tol} in {max_iter} sweeps")
    return PlanningResult(V, Q, np.argmax(Q, axis=1), iterations)


def bellman_residual(mdp: TabularMDP, Q: np.ndarray, beta: float) -> np.ndarray:
    """|Q(s,a) - sum_s' T(s,a,s') [R(s,a,s') + beta max_a' Q(s',a')]| per (s, a)."""
    target = np.einsum("ijk,ijk->ij", mdp.kernel, mdp.reward + beta * Q.max(axis=1)[None, None, :])
    return np.abs(Q - target)


def discounted_return(rewards: Sequence[float], beta: float, gamma: int) -> tuple[float, float]:
    """Discounted return with the discount clock restarted at the change point.

    Returns ``(total, post_change)`` where ``post_change`` is the part
    collected from ``gamma`` onward. ``gamma == len(rewards)`` means the
    change never happened within the horizon.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        return 0.0, 0.0
    if not 0 <= gamma <= r.size:
        raise ValueError(f"change point {gamma} outside [0, {r.size}]")
    pre = r[:gamma]
    post = r[gamma:]
    pre_sum = float(np.dot(beta ** np.arange(pre.size), pre))
    post_sum = float(np.dot(beta ** np.arange(post.size), post))
    return pre_sum + post_sum, post_sum
