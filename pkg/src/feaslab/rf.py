"""Batch-means baseline with a triangular continuation region.

Bernoulli replications are grouped into batches of size b; the batch means
act as approximately normal basic observations.  A frozen variance estimate
from the first n0 batches sizes a triangular continuation region that
shrinks linearly in the batch count, so a decision is guaranteed once the
triangle closes.  Thresholds and the flat tolerance come from the odds-ratio
band conversion in either mode:

* conservative — original thresholds h with eps = min(UB - h, h - LB);
* adjusted     — band midpoints h_tilde with eps_tilde = (UB - LB)/2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .odds import tolerance_convert
from .types import Decision


class ToleranceMode(enum.Enum):
    CONSERVATIVE = "conservative"
    ADJUSTED = "adjusted"


@dataclass(frozen=True)
class RFParams:
    n0: int = 20
    b: int = 1
    tolerance_mode: ToleranceMode = ToleranceMode.CONSERVATIVE

    def __post_init__(self) -> None:
        if self.n0 < 2:
            raise ValueError(f"initial batch count must be >= 2, got {self.n0}")
        if self.b < 1:
            raise ValueError(f"batch size must be >= 1, got {self.b}")


def batch_means(raw: Sequence[int], b: int) -> list[float]:
    """Means of consecutive length-b groups; a trailing partial group is an
    error because batches are only ever formed whole."""
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    if len(raw) % b != 0:
        raise ValueError(f"raw length {len(raw)} is not a multiple of batch size {b}")
    return [sum(raw[j * b : (j + 1) * b]) / b for j in range(len(raw) // b)]


def g_continuation(eta: float, n0: int, c: int = 1) -> float:
    """Error level attained by region parameter eta (finite-c family)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    total = 0.0
    for j in range(1, c + 1):
        term = (1.0 + 2.0 * eta * (2 * c - j) * j / c) ** (-(n0 - 1) / 2.0)
        if j == c:
            term *= 0.5
        total += (-1.0) ** (j + 1) * term
    return total


def solve_eta(beta_ell: float, n0: int, c: int = 1) -> float:
    """Region parameter with g(eta) = beta_ell; closed form for c = 1."""
    if not (0.0 < beta_ell < 0.5):
        raise ValueError(f"beta must lie in (0, 0.5) for a positive eta, got {beta_ell}")
    if n0 < 2:
        raise ValueError(f"initial batch count must be >= 2, got {n0}")
    if c != 1:
        raise NotImplementedError("only c = 1 is supported")
    return ((2.0 * beta_ell) ** (-2.0 / (n0 - 1)) - 1.0) / 2.0


def continuation_radius(r: int, v: float, w: float, z: float, n0: int, c: int = 1) -> float:
    """Triangular radius max{0, (n0-1) w z / v - v r / (2c)}."""
    if v <= 0 or w <= 0 or z < 0:
        raise ValueError("tolerance and eta must be positive, variance non-negative")
    return max(0.0, (n0 - 1) * w * z / v - v * r / (2.0 * c))


@dataclass(frozen=True)
class RFDerived:
    """Per-constraint targets and tolerances after the band conversion."""

    targets: list[list[float]]  # thresholds the procedure actually compares against
    eps: list[float]
    eta: list[float]


def derive_rf_inputs(
    thresholds: Sequence[Sequence[float]],
    theta: Sequence[float],
    budgets: Sequence[float],
    params: RFParams,
) -> RFDerived:
    targets: list[list[float]] = []
    eps: list[float] = []
    eta: list[float] = []
    for row, t, beta_ell in zip(thresholds, theta, budgets):
        if not row:
            targets.append([])
            eps.append(0.0)
            eta.append(0.0)
            continue
        conv = tolerance_convert(list(row), t)
        if params.tolerance_mode is ToleranceMode.ADJUSTED:
            targets.append(conv.h_tilde)
            eps.append(conv.epsilon_tilde)
        else:
            targets.append([float(h) for h in row])
            eps.append(conv.epsilon)
        eta.append(solve_eta(beta_ell, params.n0))
    return RFDerived(targets=targets, eps=eps, eta=eta)


@dataclass
class RFSystem:
    """Reference single-system run; the kernels mirror this loop."""

    s: int
    targets: list[list[float]]
    eps: list[float]
    eta: list[float]
    n0: int
    b: int
    batch_counts: list[list[int]]  # per constraint, successes per completed batch
    total_counts: list[int]
    svar: list[float]
    r: int
    pending: list[list[bool]]
    decisions: list[list[int]]
    stages: list[list[int]]
    remaining: int

    @classmethod
    def begin(cls, targets, eps, eta, n0: int, b: int) -> "RFSystem":
        s = len(targets)
        return cls(
            s=s,
            targets=targets,
            eps=eps,
            eta=eta,
            n0=n0,
            b=b,
            batch_counts=[[] for _ in range(s)],
            total_counts=[0] * s,
            svar=[0.0] * s,
            r=0,
            pending=[[True] * len(row) for row in targets],
            decisions=[[int(Decision.PENDING)] * len(row) for row in targets],
            stages=[[0] * len(row) for row in targets],
            remaining=sum(len(row) for row in targets),
        )

    @property
    def done(self) -> bool:
        return self.remaining == 0

    def add_batch(self, counts: Sequence[int]) -> None:
        """Fold one completed batch (per-constraint success counts) in."""
        self.r += 1
        for ell in range(self.s):
            self.total_counts[ell] += counts[ell]
            if self.r <= self.n0:
                self.batch_counts[ell].append(counts[ell])
        if self.r == self.n0:
            for ell in range(self.s):
                mean = self.total_counts[ell] / (self.n0 * self.b)
                acc = 0.0
                for c in self.batch_counts[ell]:
                    diff = c / self.b - mean
                    acc += diff * diff
                self.svar[ell] = acc / (self.n0 - 1)

    def check(self) -> None:
        """Feasibility checks at the current batch count (valid once r >= n0)."""
        for ell in range(self.s):
            if not any(self.pending[ell]):
                continue
            bbar = self.total_counts[ell] / (self.r * self.b)
            rad = continuation_radius(self.r, self.eps[ell], self.eta[ell], self.svar[ell], self.n0)
            half = rad / self.r
            for m, target in enumerate(self.targets[ell]):
                if not self.pending[ell][m]:
                    continue
                if bbar + half <= target:
                    decision = int(Decision.FEASIBLE)
                elif bbar - half >= target:
                    decision = int(Decision.INFEASIBLE)
                else:
                    continue
                self.pending[ell][m] = False
                self.decisions[ell][m] = decision
                self.stages[ell][m] = self.r
                self.remaining -= 1

    @property
    def obs_raw(self) -> int:
        return self.r * self.b
