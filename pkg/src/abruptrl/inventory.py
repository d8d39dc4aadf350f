"""Single-item inventory control with Poisson demand and lost sales."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .mdp import RngStream, TabularMDP

PURCHASE_COST_MODES = ("clamped", "ordered")


@dataclass(frozen=True)
class InventoryParams:
    """Warehouse capacity and daily cost/revenue constants.

    ``purchase_cost`` selects how the variable ordering cost is charged:
    ``"clamped"`` pays ``c * min(a, N - s)`` (only for items that fit),
    ``"ordered"`` pays ``c * a`` for everything ordered.
    """

    capacity: int = 5
    fixed_cost: float = 0.5
    unit_cost: float = 3.0
    holding_cost: float = 2.0
    unit_price: float = 8.0
    rent: float = 4.8
    purchase_cost: str = "clamped"

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be a positive integer")
        costs = (self.fixed_cost, self.unit_cost, self.holding_cost, self.unit_price, self.rent)
        if any(x < 0 for x in costs):
            raise ValueError("costs and prices must be nonnegative")
        if self.unit_price <= self.holding_cost:
            raise ValueError("unit price must exceed holding cost")
        if self.purchase_cost not in PURCHASE_COST_MODES:
            raise ValueError(f"purchase_cost must be one of {PURCHASE_COST_MODES}")

    @property
    def n_levels(self) -> int:
        return self.capacity + 1

    def reward_bound(self) -> float:
        n = self.capacity
        return (self.fixed_cost + self.unit_cost * n + self.holding_cost * n
                + self.unit_price * n + self.rent)


@dataclass(frozen=True)
class DemandModel:
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError("demand rate must be nonnegative")


def _check_level(params: InventoryParams, s: int, a: int) -> None:
    if not 0 <= s <= params.capacity:
        raise ValueError(f"inventory level {s} outside [0, {params.capacity}]")
    if not 0 <= a <= params.capacity:
        raise ValueError(f"order quantity {a} outside [0, {params.capacity}]")


def inventory_next_state(params: InventoryParams, s: int, a: int, d: int) -> int:
    _check_level(params, s, a)
    if d < 0:
        raise ValueError("demand must be nonnegative")
    return max(min(s + a, params.capacity) - d, 0)


def inventory_reward(params: InventoryParams, s: int, a: int, s_next: int) -> float:
    """Daily profit: sales revenue minus ordering, holding and rent."""
    _check_level(params, s, a)
    n = params.capacity
    stock = min(s + a, n)
    purchased = min(a, n - s) if params.purchase_cost == "clamped" else a
    return (-params.fixed_cost * (a > 0)
            - params.unit_cost * purchased
            - params.holding_cost * s_next
            + params.unit_price * (stock - s_next)
            - params.rent)


def sample_poisson(model: DemandModel, rng: RngStream) -> int:
    """Exact Poisson draw by sequential inverse-CDF search (one uniform)."""
    lam = model.rate
    if lam == 0.0:
        rng.uniform()
        return 0
    u = rng.uniform()
    k = 0
    p = math.exp(-lam)
    cdf = p
    # the pmf underflows only far past any mass that matters at these rates
    while u >= cdf and p > 0.0:
        k += 1
        p *= lam / k
        cdf += p
    return k


def exact_inventory_kernel(params: InventoryParams, model: DemandModel) -> TabularMDP:
    """Kernel over levels 0..N and orders 0..N; demand beyond stock collapses to level 0."""
    n = params.capacity
    size = n + 1
    kernel = np.zeros((size, size, size))
    reward = np.zeros((size, size, size))
    for s in range(size):
        for a in range(size):
            stock = min(s + a, n)
            if model.rate == 0.0:
                kernel[s, a, stock] = 1.0
            else:
                d = np.arange(stock)
                kernel[s, a, stock - d] = stats.poisson.pmf(d, model.rate)
                kernel[s, a, 0] += stats.poisson.sf(stock - 1, model.rate)
            for s_next in range(size):
                reward[s, a, s_next] = inventory_reward(params, s, a, s_next)
    return TabularMDP(kernel, reward)


def full_stock_policy(s: int, capacity: int) -> int:
    """Order exactly enough to refill the warehouse."""
    if not 0 <= s <= capacity:
        raise ValueError(f"inventory level {s} outside [0, {capacity}]")
    return capacity - s


def full_stock_map(capacity: int) -> np.ndarray:
    return np.array([full_stock_policy(s, capacity) for s in range(capacity + 1)])
