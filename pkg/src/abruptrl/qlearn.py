"""Tabular Q-learning with linearly decaying exploration and learning rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import RngStream, TabularMDP

INIT_KINDS = ("random", "pyramid", "monotone", "zeros")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearningSchedule:
    alpha0: float = 0.2
    alpha_cut: float = 0.05
    eps0: float = 0.2
    eps_cut: float = 0.05
    delta: float = 0.001
    beta: float = 0.9999

    def __post_init__(self):
        if not 0.0 < self.alpha_cut <= self.alpha0 <= 1.0:
            raise ConfigError("need 0 < alpha_cut <= alpha0 <= 1")
        if not 0.0 <= self.eps_cut <= self.eps0 <= 1.0:
            raise ConfigError("need 0 <= eps_cut <= eps0 <= 1")
        if self.delta < 0.0:
            raise ConfigError("decrement must be nonnegative")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("discount must lie in (0, 1)")


@dataclass(frozen=True)
class InitStrategy:
    """How a fresh Q-table is filled.

    ``scale`` is the amplitude: the range of the uniform entries for
    ``random`` and the value placed on the preferred action for
    ``pyramid``/``monotone``.
    """

    kind: str = "monotone"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"unknown init kind {self.kind!r}; expected one of {INIT_KINDS}")


def pyramid_map(n_states: int, n_actions: int) -> np.ndarray:
    """Tent-shaped order map: rises to the top action at the middle state, then falls."""
    peak = (n_states - 1) / 2.0
    top = n_actions - 1
    s = np.arange(n_states)
    return np.rint(top * (1.0 - np.abs(s - peak) / (peak + 1.0))).astype(int)


def monotone_map(n_states: int, n_actions: int) -> np.ndarray:
    """Order-up-to-capacity map ``s -> N - s`` clipped to the action range."""
    n = n_states - 1
    return np.clip(n - np.arange(n_states), 0, n_actions - 1)


def init_qtable(strategy: InitStrategy, n_states: int, n_actions: int,
                rng: RngStream | None = None) -> np.ndarray:
    if n_states < 1 or n_actions < 1:
        raise ValueError("table dimensions must be positive")
    if strategy.kind == "random":
        if rng is None:
            raise ConfigError("random initialization needs an RngStream")
        return strategy.scale * rng.uniforms((n_states, n_actions))
    q = np.zeros((n_states, n_actions))
    if strategy.kind == "zeros":
        return q
    greedy = monotone_map(n_states, n_actions) if strategy.kind == "monotone" \
        else pyramid_map(n_states, n_actions)
    q[np.arange(n_states), greedy] = strategy.scale
    return q


def greedy_action(q_row: np.ndarray) -> int:
    return int(np.argmax(q_row))


def greedy_policy(q: np.ndarray) -> np.ndarray:
    """Per-state argmax; ``np.argmax`` already breaks ties toward the lowest index."""
    return np.argmax(q, axis=1)


def select_action(q: np.ndarray, s: int, eps: float, rng: RngStream) -> int:
    """Epsilon-greedy: one draw picks the branch, a second (exploring only) picks the action."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("exploration rate must lie in [0, 1]")
    if rng.uniform() < eps:
        n_actions = q.shape[1]
        return min(int(rng.uniform() * n_actions), n_actions - 1)
    return greedy_action(q[s])


def td_update(q: np.ndarray, s: int, a: int, r: float, s_next: int,
              alpha: float, beta: float) -> float:
    """In-place one-step Q-learning update of entry ``(s, a)``; returns the TD error."""
    td = r + beta * q[s_next].max() - q[s, a]
    q[s, a] += alpha * td
    return td


def decay(value: float, delta: float, cutoff: float) -> float:
    """One linear decrement, applied only while above the cutoff and never past it."""
    if value > cutoff:
        return max(value - delta, cutoff)
    return value


def q_learning(mdp: TabularMDP, schedule: LearningSchedule, q0: np.ndarray,
               n_steps: int, rng: RngStream, s0: int = 0) -> np.ndarray:
    """Run Q-learning on a stationary model and return the trained table."""
    q = np.array(q0, dtype=float, copy=True)
    alpha, eps = schedule.alpha0, schedule.eps0
    s = s0
    for _ in range(n_steps):
        a = select_action(q, s, eps, rng)
        s_next = int(np.searchsorted(mdp.cum_kernel[s, a], rng.uniform(), side="right"))
        td_update(q, s, a, mdp.reward[s, a, s_next], s_next, alpha, schedule.beta)
        s = s_next
        eps = decay(eps, schedule.delta, schedule.eps_cut)
        alpha = decay(alpha, schedule.delta, schedule.alpha_cut)
    return q
