"""Quickest change detection: reward CUSUM, likelihood-ratio CUSUM, information numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mdp import RngStream, TabularMDP

DIRECTIONS = ("low_to_high", "high_to_low", "two_sided")


class DetectorStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class Baseline:
    mu0: float
    sd0: float
    window: tuple[int, int]

    def __post_init__(self):
        if self.sd0 < 0:
            raise ValueError("sd0 must be nonnegative")
        if self.window[1] <= self.window[0]:
            raise ValueError("baseline window must have delta > tau")


def baseline_stats(rewards: Sequence[float], window: tuple[int, int] | None = None) -> Baseline:
    """Mean and sample standard deviation (n - 1 denominator) of a reward window.

    ``rewards`` is the window itself; ``window`` only records where it came
    from and defaults to ``(0, len(rewards))``.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("baseline window needs at least two rewards")
    if window is None:
        window = (0, int(r.size))
    return Baseline(float(r.mean()), float(r.std(ddof=1)), (int(window[0]), int(window[1])))


@dataclass
class CusumDetector:
    """Nonparametric CUSUM on rewards centred at a pre-change baseline.

    ``low_to_high`` keeps ``w >= 0`` and grows when rewards rise more than
    ``eta * sd0`` above ``mu0``; ``high_to_low`` keeps ``w <= 0`` and grows
    in magnitude when rewards fall. ``two_sided`` runs both and reports the
    one with the larger magnitude. Thresholds are given in multiples of
    ``sd0`` and resolved once the baseline is known.
    """

    direction: str = "high_to_low"
    eta: float = 0.92
    threshold: float = 6.0
    armed_from: int = 600
    baseline: Baseline | None = None
    w_up: float = field(default=0.0, init=False)
    w_down: float = field(default=0.0, init=False)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")

    def arm(self, baseline: Baseline) -> None:
        self.baseline = baseline
        self.reset()

    def reset(self) -> None:
        self.w_up = 0.0
        self.w_down = 0.0

    @property
    def armed(self) -> bool:
        return self.baseline is not None

    @property
    def w(self) -> float:
        if self.direction == "low_to_high":
            return self.w_up
        if self.direction == "high_to_low":
            return self.w_down
        return self.w_up if self.w_up >= -self.w_down else self.w_down

    def resolve(self, multiple: float) -> float:
        """Absolute threshold for ``multiple`` standard deviations of the baseline."""
        if self.baseline is None:
            raise DetectorStateError("detector has no baseline yet")
        return multiple * self.baseline.sd0

    @property
    def threshold_abs(self) -> float:
        return self.resolve(self.threshold)


def cusum_update(det: CusumDetector, r: float) -> float:
    if not det.armed:
        raise DetectorStateError("cusum_update before the baseline was computed")
    mu0, sd0 = det.baseline.mu0, det.baseline.sd0
    if det.direction in ("low_to_high", "two_sided"):
        det.w_up = max(0.0, det.w_up + r - mu0 - det.eta * sd0)
    if det.direction in ("high_to_low", "two_sided"):
        det.w_down = min(0.0, det.w_down + r - mu0 + det.eta * sd0)
    return det.w


def check_alarm(det: CusumDetector, threshold_abs: float | None = None) -> bool:
    if threshold_abs is None:
        threshold_abs = det.threshold_abs
    return abs(det.w) > threshold_abs


def log_likelihood_ratio(pre: TabularMDP, post: TabularMDP, s: int, a: int, s_next: int) -> float:
    """log T_post / T_pre at an observed transition; +inf when the pre-model forbids it."""
    p1 = post.kernel[s, a, s_next]
    p0 = pre.kernel[s, a, s_next]
    if p0 <= 0.0:
        return math.inf
    if p1 <= 0.0:
        return -math.inf
    return math.log(p1 / p0)


@dataclass
class GlrCusum:
    """Likelihood-ratio CUSUM on state transitions when both kernels are known.

    The recursion ``w = max(0, w + llr)`` equals the running maximum over
    start indices of the partial log-likelihood-ratio sums (floored at 0).
    """

    pre: TabularMDP
    post: TabularMDP
    threshold: float
    w: float = 0.0
    impossible: bool = False

    def alarmed(self) -> bool:
        return self.impossible or self.w > self.threshold


def glr_update(g: GlrCusum, s_prev: int, a_prev: int, s_curr: int) -> float:
    llr = log_likelihood_ratio(g.pre, g.post, s_prev, a_prev, s_curr)
    if llr == math.inf:
        g.impossible = True
        g.w = math.inf
        return g.w
    g.w = max(0.0, g.w + llr)
    return g.w


def glr_explicit(llrs: Sequence[float]) -> np.ndarray:
    """Brute-force ``max(0, max_k sum_{i=k..n} llr_i)`` for every prefix ``n``."""
    out = np.zeros(len(llrs))
    for n in range(len(llrs)):
        best = 0.0
        for k in range(n + 1):
            best = max(best, float(np.sum(llrs[k:n + 1])))
        out[n] = best
    return out


def estimate_information_number(policy: Sequence[int], pre: TabularMDP, post: TabularMDP,
                                n: int, rng: RngStream, s0: int = 0,
                                return_stderr: bool = False):
    """Average log-likelihood ratio along a trajectory simulated under the post-change model.

    With ``return_stderr`` the result is ``(estimate, standard_error)``, the
    error computed from 100 batch means so Markov correlation is absorbed.
    Returns ``inf`` as soon as a transition impossible under ``pre`` occurs.
    """
    policy = np.asarray(policy, dtype=int)
    u = rng.uniforms(n)
    llrs = np.empty(n)
    s = s0
    for k in range(n):
        a = policy[s]
        s_next = int(np.searchsorted(post.cum_kernel[s, a], u[k], side="right"))
        llrs[k] = log_likelihood_ratio(pre, post, s, a, s_next)
        if llrs[k] == math.inf:
            return (math.inf, math.nan) if return_stderr else math.inf
        s = s_next
    est = float(llrs.mean())
    if not return_stderr:
        return est
    n_batches = 100 if n >= 1000 else max(2, n // 10)
    batches = np.array_split(llrs, n_batches)
    means = np.array([b.mean() for b in batches])
    return est, float(means.std(ddof=1) / math.sqrt(n_batches))
