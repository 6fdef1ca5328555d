"""Later passes: feasibility checks for sequentially added thresholds.

Three heuristics reuse the first pass's recyclable statistics:

* B  — replays the dummy indicators for the already-collected replications
       and compares their running mean against the stored envelopes;
* N  — compares the new thresholds themselves against the envelopes, no
       dummies needed;
* BN — applies the N test then the B test at every stage, deciding on
       whichever fires first, so it never takes more observations than
       either component heuristic on the same sample path.

Initial checks run before any new sampling; an entry they decide costs zero
new observations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .brf import update_envelopes
from .types import (
    DECIDED_CONT_B,
    DECIDED_CONT_N,
    DECIDED_INIT_B,
    DECIDED_INIT_B_LAST,
    DECIDED_INIT_N,
    DECIDED_INIT_N_LAST,
    Decision,
    Last,
    SystemState,
)


class Heuristic(enum.Enum):
    B = "b"
    N = "n"
    BN = "bn"


class CrossedEnvelopeFault(RuntimeError):
    """Crossed envelopes with LAST unset cannot occur after a completed pass."""


def _initial_branch(
    num: int, den: int, ub_num: int, ub_den: int, lb_num: int, lb_den: int, last: int
) -> int | None:
    """Four-branch initial check against the reference value num/den.

    Returns a Decision, or None for the continue-sampling branch.
    """
    ub_le = ub_num * den <= num * ub_den
    lb_ge = lb_num * den >= num * lb_den
    if ub_le and not lb_ge:
        return int(Decision.FEASIBLE)
    if lb_ge and not ub_le:
        return int(Decision.INFEASIBLE)
    if ub_le and lb_ge:
        if last == int(Last.UB):
            return int(Decision.INFEASIBLE)
        if last == int(Last.LB):
            return int(Decision.FEASIBLE)
        raise CrossedEnvelopeFault(
            "crossed envelopes with LAST unset; the prior pass never ran"
        )
    return None


def initial_check_B(state: SystemState, ell: int, dummy_sum: int) -> int | None:
    """Initial check of heuristic B: envelopes vs the replayed dummy mean
    dummy_sum / r."""
    return _initial_branch(
        dummy_sum,
        state.r,
        state.ub_num[ell],
        state.ub_den[ell],
        state.lb_num[ell],
        state.lb_den[ell],
        state.last[ell],
    )


def initial_check_N(state: SystemState, ell: int, h: Fraction) -> int | None:
    """Initial check of heuristic N: envelopes vs the new threshold itself."""
    return _initial_branch(
        h.numerator,
        h.denominator,
        state.ub_num[ell],
        state.ub_den[ell],
        state.lb_num[ell],
        state.lb_den[ell],
        state.last[ell],
    )


def replay_dummy_sums(
    u_values: Sequence[float], h_float: Sequence[Sequence[float]]
) -> list[list[int]]:
    """Regenerate sum(I) for each new threshold over the prior replications.

    u_values are the stage uniforms 1..r replayed from the stored stream, so
    the counts are bit-identical to a first pass that had included the
    threshold.
    """
    sums = [[0] * len(row) for row in h_float]
    for u in u_values:
        for ell, row in enumerate(h_float):
            for m, h in enumerate(row):
                if u <= h:
                    sums[ell][m] += 1
    return sums


@dataclass
class LaterPassSystem:
    """One system advancing through a pass w >= 2."""

    state: SystemState
    heuristic: Heuristic
    halfwidths: list[int]
    thresholds: list[list[Fraction]]
    h_float: list[list[float]]
    sum_i: list[list[int]]
    pending: list[list[bool]]
    decisions: list[list[int]]
    stages: list[list[int]]
    decided_by: list[list[int]]
    remaining: int

    @property
    def done(self) -> bool:
        return self.remaining == 0

    def _decide(self, ell: int, m: int, decision: int, code: int) -> None:
        self.pending[ell][m] = False
        self.decisions[ell][m] = decision
        self.stages[ell][m] = self.state.r
        self.decided_by[ell][m] = code
        self.remaining -= 1

    def run_initial_checks(self) -> None:
        state = self.state
        for ell, row in enumerate(self.thresholds):
            for m, h in enumerate(row):
                if not self.pending[ell][m]:
                    continue
                if self.heuristic in (Heuristic.N, Heuristic.BN):
                    out = initial_check_N(state, ell, h)
                    if out is not None:
                        code = (
                            DECIDED_INIT_N_LAST
                            if _is_last_branch(state, ell, h.numerator, h.denominator)
                            else DECIDED_INIT_N
                        )
                        self._decide(ell, m, out, code)
                        continue
                if self.heuristic in (Heuristic.B, Heuristic.BN):
                    si = self.sum_i[ell][m]
                    out = initial_check_B(state, ell, si)
                    if out is not None:
                        code = (
                            DECIDED_INIT_B_LAST
                            if _is_last_branch(state, ell, si, state.r)
                            else DECIDED_INIT_B
                        )
                        self._decide(ell, m, out, code)

    def step(self, y_bits: Sequence[int], u: float | None) -> list[tuple[int, int, int]]:
        """One continuation stage; u is unused (and may be None) under N."""
        if self.remaining == 0:
            raise RuntimeError("stepping a fully decided system")
        state = self.state
        state.r += 1
        r = state.r
        for ell in range(len(state.sum_y)):
            state.sum_y[ell] += int(y_bits[ell])
        newly: list[tuple[int, int, int]] = []
        for ell, row in enumerate(self.thresholds):
            if not any(self.pending[ell]):
                continue
            update_envelopes(state, ell, self.halfwidths[ell])
            ub_num, ub_den = state.ub_num[ell], state.ub_den[ell]
            lb_num, lb_den = state.lb_num[ell], state.lb_den[ell]
            for m, h in enumerate(row):
                if not self.pending[ell][m]:
                    continue
                decision = None
                code = DECIDED_CONT_N
                if self.heuristic in (Heuristic.N, Heuristic.BN):
                    if ub_num * h.denominator <= h.numerator * ub_den:
                        decision = int(Decision.FEASIBLE)
                    elif lb_num * h.denominator >= h.numerator * lb_den:
                        decision = int(Decision.INFEASIBLE)
                if decision is None and self.heuristic in (Heuristic.B, Heuristic.BN):
                    assert u is not None
                    self.sum_i[ell][m] += 1 if u <= self.h_float[ell][m] else 0
                    si = self.sum_i[ell][m]
                    code = DECIDED_CONT_B
                    if ub_num * r <= si * ub_den:
                        decision = int(Decision.FEASIBLE)
                    elif lb_num * r >= si * lb_den:
                        decision = int(Decision.INFEASIBLE)
                if decision is not None:
                    self._decide(ell, m, decision, code)
                    newly.append((ell, m, decision))
        return newly


def _is_last_branch(state: SystemState, ell: int, num: int, den: int) -> bool:
    """True when the initial check resolved through the crossed-envelope
    LAST branch (v_ub <= num/den <= v_lb)."""
    ub_le = state.ub_num[ell] * den <= num * state.ub_den[ell]
    lb_ge = state.lb_num[ell] * den >= num * state.lb_den[ell]
    return ub_le and lb_ge


def init_later_pass(
    state: SystemState,
    thresholds: list[list[Fraction]],
    halfwidths: Sequence[int],
    heuristic: Heuristic,
    u_values: Sequence[float],
) -> LaterPassSystem:
    """Set up a pass w >= 2 for one system; u_values are the replayed stage
    uniforms 1..r (empty under N, which never touches the dummy stream)."""
    if state.r < 1:
        raise ValueError("later passes need a completed prior pass")
    h_float = [[float(h) for h in row] for row in thresholds]
    if heuristic is Heuristic.N:
        sums = [[0] * len(row) for row in thresholds]
    else:
        if len(u_values) != state.r:
            raise ValueError(f"need {state.r} replayed uniforms, got {len(u_values)}")
        sums = replay_dummy_sums(u_values, h_float)
    return LaterPassSystem(
        state=state,
        heuristic=heuristic,
        halfwidths=list(halfwidths),
        thresholds=thresholds,
        h_float=h_float,
        sum_i=sums,
        pending=[[True] * len(row) for row in thresholds],
        decisions=[[int(Decision.PENDING)] * len(row) for row in thresholds],
        stages=[[0] * len(row) for row in thresholds],
        decided_by=[[-1] * len(row) for row in thresholds],
        remaining=sum(len(row) for row in thresholds),
    )
