"""Statistically valid first pass: sequential random-walk feasibility checks.

Per system and pending (constraint, threshold) pair the integer walk
S(r) = sum(Y - I) is monitored until it exits (-H, H).  All decision tests
are integer comparisons (feasible iff sum_y + H <= sum_i), so there is no
floating-point tie ambiguity, and the envelope statistics are kept as exact
integer fractions so later passes replay decisions deterministically.

This module is the readable reference implementation; the compiled kernels
mirror it operation for operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .types import (
    DECIDED_WALK,
    Decision,
    Last,
    PassPlan,
    PassResult,
    ProblemSpec,
    SystemState,
)


def _frac_gt(a_num: int, a_den: int, b_num: int, b_den: int) -> bool:
    """a/b > c/d with non-negative denominators; den == 0 means signed infinity."""
    return a_num * b_den > b_num * a_den


def _frac_lt(a_num: int, a_den: int, b_num: int, b_den: int) -> bool:
    return a_num * b_den < b_num * a_den


def update_envelopes(state: SystemState, ell: int, H: int) -> None:
    """Fold the current stage into the running envelope extrema for one
    constraint; LAST records which side moved (UB wins a double update)."""
    r = state.r
    cand = state.sum_y[ell] - H
    if _frac_gt(cand, r, state.lb_num[ell], state.lb_den[ell]):
        state.lb_num[ell] = cand
        state.lb_den[ell] = r
        state.last[ell] = int(Last.LB)
    cand = state.sum_y[ell] + H
    if _frac_lt(cand, r, state.ub_num[ell], state.ub_den[ell]):
        state.ub_num[ell] = cand
        state.ub_den[ell] = r
        state.last[ell] = int(Last.UB)


@dataclass
class FirstPassSystem:
    """One system advancing through the first pass, one replication at a time."""

    state: SystemState
    halfwidths: list[int]
    h_float: list[list[float]]
    sum_i: list[list[int]]
    pending: list[list[bool]]
    decisions: list[list[int]]
    stages: list[list[int]]
    remaining: int

    @classmethod
    def begin(
        cls, state: SystemState, h_float: list[list[float]], halfwidths: Sequence[int]
    ) -> "FirstPassSystem":
        return cls(
            state=state,
            halfwidths=list(halfwidths),
            h_float=h_float,
            sum_i=[[0] * len(row) for row in h_float],
            pending=[[True] * len(row) for row in h_float],
            decisions=[[int(Decision.PENDING)] * len(row) for row in h_float],
            stages=[[0] * len(row) for row in h_float],
            remaining=sum(len(row) for row in h_float),
        )

    @property
    def done(self) -> bool:
        return self.remaining == 0

    def step(self, y_bits: Sequence[int], u: float) -> list[tuple[int, int, int]]:
        """Advance one stage: one observation vector plus the stage's shared
        uniform.  Returns newly decided (constraint, m, decision) triples."""
        if self.remaining == 0:
            raise RuntimeError("stepping a fully decided system")
        state = self.state
        state.r += 1
        r = state.r
        for ell in range(len(state.sum_y)):
            state.sum_y[ell] += int(y_bits[ell])
        newly: list[tuple[int, int, int]] = []
        for ell in range(len(self.h_float)):
            if not any(self.pending[ell]):
                continue
            H = self.halfwidths[ell]
            update_envelopes(state, ell, H)
            sum_y = state.sum_y[ell]
            for m, h in enumerate(self.h_float[ell]):
                if not self.pending[ell][m]:
                    continue
                self.sum_i[ell][m] += 1 if u <= h else 0
                si = self.sum_i[ell][m]
                if sum_y + H <= si:
                    decision = int(Decision.FEASIBLE)
                elif sum_y - H >= si:
                    decision = int(Decision.INFEASIBLE)
                else:
                    continue
                self.pending[ell][m] = False
                self.decisions[ell][m] = decision
                self.stages[ell][m] = r
                self.remaining -= 1
                newly.append((ell, m, decision))
        return newly


def init_system(
    spec: ProblemSpec,
    plan: PassPlan,
    system_index: int,
    rep_seed: int,
    halfwidths: Sequence[int] | None = None,
) -> FirstPassSystem:
    """Fresh per-system state: envelopes at the infinity sentinels, every
    entry pending, stream keys assigned per sampling mode."""
    if plan.pass_index != 1:
        raise ValueError("init_system is for the first pass")
    if plan.s != spec.s:
        raise ValueError("plan and spec disagree on the constraint count")
    H = list(halfwidths) if halfwidths is not None else spec.halfwidths(plan.counts)
    y_key, u_key = spec.stream_keys(rep_seed, system_index)
    state = SystemState.fresh(spec.s, y_key, u_key)
    return FirstPassSystem.begin(state, plan.floats(), H)


__all__ = [
    "FirstPassSystem",
    "init_system",
    "update_envelopes",
    "DECIDED_WALK",
    "PassResult",
]
