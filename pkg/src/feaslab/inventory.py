"""Periodic-review (s, S) inventory simulation.

Model choices (they shift the probability surfaces, so they are fixed and
documented):

* initial on-hand inventory = S
* zero lead time: an order placed at review arrives before that period's
  demand
* lost sales: demand beyond on-hand vanishes at a per-unit penalty and sets
  the stockout flag
* event order per period: review -> order/arrive -> demand -> holding cost
  on end-of-period on-hand
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class InventoryParams:
    demand_mean: float = 25.0
    periods: int = 12
    unit_cost: float = 3.0
    fixed_order_cost: float = 32.0
    holding_cost: float = 1.0
    penalty_cost: float = 5.0
    cost_threshold: float = 1400.0

    def __post_init__(self) -> None:
        if self.periods < 1:
            raise ValueError(f"periods must be >= 1, got {self.periods}")
        for name in ("unit_cost", "fixed_order_cost", "holding_cost", "penalty_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.demand_mean <= 0:
            raise ValueError("demand_mean must be positive")

    def vector(self) -> list[float]:
        """Flat parameter layout consumed by the kernels."""
        return [
            float(self.periods),
            self.unit_cost,
            self.fixed_order_cost,
            self.holding_cost,
            self.penalty_cost,
            self.cost_threshold,
        ]


def simulate_inventory_year(
    s: int, S: int, demand: Sequence[int], params: InventoryParams
) -> tuple[float, int]:
    """One replication with an injected demand stream (len == periods)."""
    if S < s:
        raise ValueError(f"order-up-to level must be >= reorder point, got s={s}, S={S}")
    if len(demand) != params.periods:
        raise ValueError(f"expected {params.periods} demand values, got {len(demand)}")
    onhand = float(S)
    cost = 0.0
    stockout = 0
    for d in demand:
        if d < 0:
            raise ValueError(f"demand must be non-negative, got {d}")
        if onhand < s:
            cost += params.fixed_order_cost + params.unit_cost * (S - onhand)
            onhand = float(S)
        if d > onhand:
            lost = d - onhand
            cost += params.penalty_cost * lost
            onhand = 0.0
            stockout = 1
        else:
            onhand -= d
        cost += params.holding_cost * onhand
    return cost, stockout


def poisson_cdf_table(mean: float) -> list[float]:
    """CDF table for inversion sampling; truncated where the tail vanishes.

    Built once in pure Python so both backends invert the identical table.
    """
    pmf = math.exp(-mean)
    cdf = [pmf]
    j = 0
    while (pmf > 1e-18 or j < mean) and j < 4096:
        j += 1
        pmf *= mean / j
        nxt = cdf[-1] + pmf
        if nxt <= cdf[-1]:  # below one ulp: the table has saturated
            break
        cdf.append(nxt)
    return cdf


def invert_cdf(cdf: Sequence[float], u: float) -> int:
    """Smallest j with u < cdf[j] (table-truncated in the far tail)."""
    lo = 0
    hi = len(cdf) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if u < cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def policy_grid(
    s_values: Sequence[int] = tuple(20 + 2 * m for m in range(11)),
    S_values: Sequence[int] = tuple(40 + 10 * n for n in range(7)),
) -> list[tuple[int, int]]:
    """The 77-policy benchmark grid, ordered s-major."""
    return [(s, S) for s in s_values for S in S_values]
