"""Problem, plan, and result containers shared by the engines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .odds import ErrorSplitScheme, continuation_halfwidth, error_split, per_constraint_error
from .streams import StreamKey, u_tag, y_tag


class SamplingMode(enum.Enum):
    INDEPENDENT = "independent"
    CRN = "crn"


class Decision(enum.IntEnum):
    INFEASIBLE = 0
    FEASIBLE = 1
    PENDING = -1


class Last(enum.IntEnum):
    NONE = 0
    LB = 1
    UB = 2


# decided_by codes, recorded for diagnostics
DECIDED_WALK = 0
DECIDED_INIT_N = 1
DECIDED_INIT_N_LAST = 2
DECIDED_INIT_B = 3
DECIDED_INIT_B_LAST = 4
DECIDED_CONT_N = 5
DECIDED_CONT_B = 6
DECIDED_RECYCLED = 7
DECIDED_NOT = -1


def parse_threshold(value: float | str | Fraction) -> Fraction:
    """Thresholds are exact decimal fractions; floats go through their repr
    so 0.07 means 7/100, not the nearest binary double."""
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, str):
        frac = Fraction(value)
    else:
        frac = Fraction(str(float(value)))
    if not (0 < frac < 1):
        raise ValueError(f"threshold must lie strictly in (0, 1), got {value}")
    return frac


def threshold_str(frac: Fraction) -> str:
    """Exact decimal string for a threshold whose denominator divides a
    power of ten (the usual case); float repr otherwise."""
    den = frac.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return repr(float(frac))
    places = max(twos, fives)
    if places == 0:
        return str(frac.numerator)
    digits = frac.numerator * 10**places // frac.denominator
    text = str(digits).rjust(places, "0")
    whole, part = text[:-places] or "0", text[-places:].rstrip("0")
    return f"{whole}.{part}" if part else whole


@dataclass(frozen=True)
class ProblemSpec:
    """Static description of a feasibility-determination problem."""

    k: int
    s: int
    alpha: float
    theta: tuple[float, ...]
    sampling_mode: SamplingMode = SamplingMode.INDEPENDENT
    split_scheme: ErrorSplitScheme = ErrorSplitScheme.PER_CONSTRAINT
    expect_more_passes: bool = False
    obs_cap: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"system count must be >= 1, got {self.k}")
        if self.s < 1:
            raise ValueError(f"constraint count must be >= 1, got {self.s}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        if len(self.theta) != self.s:
            raise ValueError("one odds-ratio parameter per constraint is required")
        for t in self.theta:
            if not t > 1.0:
                raise ValueError(f"odds-ratio IZ parameter must exceed 1, got {t}")
        if self.obs_cap is not None and self.obs_cap < 1:
            raise ValueError(f"obs_cap must be positive when set, got {self.obs_cap}")

    @property
    def crn(self) -> bool:
        return self.sampling_mode is SamplingMode.CRN

    def error_budget(self) -> float:
        return error_split(self.alpha, self.k, self.crn)

    def constraint_budgets(self, total_threshold_counts: Sequence[int]) -> list[float]:
        counts = list(total_threshold_counts)
        if len(counts) != self.s:
            raise ValueError("one planned threshold count per constraint is required")
        if self.expect_more_passes:
            counts = [max(c, 2) for c in counts]
        return per_constraint_error(self.error_budget(), counts, self.split_scheme)

    def halfwidths(self, total_threshold_counts: Sequence[int]) -> list[int]:
        budgets = self.constraint_budgets(total_threshold_counts)
        return [continuation_halfwidth(b, t) for b, t in zip(budgets, self.theta)]

    def stream_keys(self, rep_seed: int, system_index: int) -> tuple[StreamKey, StreamKey]:
        return (
            StreamKey(rep_seed, y_tag(system_index, self.crn)),
            StreamKey(rep_seed, u_tag(system_index, self.crn)),
        )


@dataclass(frozen=True)
class PassPlan:
    """Per-constraint ordered threshold sets for one pass."""

    thresholds: tuple[tuple[Fraction, ...], ...]
    pass_index: int = 1

    def __post_init__(self) -> None:
        if self.pass_index < 1:
            raise ValueError(f"pass index must be >= 1, got {self.pass_index}")
        for row in self.thresholds:
            for a, b in zip(row, row[1:]):
                if b <= a:
                    raise ValueError("thresholds must be strictly increasing per constraint")

    @classmethod
    def parse(
        cls, per_constraint: Sequence[Iterable[float | str | Fraction]], pass_index: int = 1
    ) -> "PassPlan":
        rows = tuple(tuple(parse_threshold(v) for v in row) for row in per_constraint)
        return cls(thresholds=rows, pass_index=pass_index)

    @property
    def s(self) -> int:
        return len(self.thresholds)

    @property
    def counts(self) -> list[int]:
        return [len(row) for row in self.thresholds]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def active_constraints(self) -> list[int]:
        return [ell for ell, row in enumerate(self.thresholds) if row]

    def floats(self) -> list[list[float]]:
        return [[float(h) for h in row] for row in self.thresholds]


@dataclass
class SystemState:
    """Recyclable per-system statistics carried across passes.

    Envelope values are exact integer fractions: num/den with den = the
    stage at which the running extremum was achieved (den == 0 encodes the
    starting sentinels -inf and +inf).
    """

    r: int
    sum_y: list[int]
    lb_num: list[int]
    lb_den: list[int]
    ub_num: list[int]
    ub_den: list[int]
    last: list[int]
    y_key: StreamKey
    u_key: StreamKey

    @classmethod
    def fresh(cls, s: int, y_key: StreamKey, u_key: StreamKey) -> "SystemState":
        return cls(
            r=0,
            sum_y=[0] * s,
            lb_num=[-1] * s,
            lb_den=[0] * s,
            ub_num=[1] * s,
            ub_den=[0] * s,
            last=[int(Last.NONE)] * s,
            y_key=y_key,
            u_key=u_key,
        )


@dataclass
class PassResult:
    """Decisions of one pass: entries indexed [system][constraint][m]."""

    pass_index: int
    heuristic: str | None
    plan: PassPlan
    decisions: list[list[list[int]]]
    stages: list[list[list[int]]]
    decided_by: list[list[list[int]]]
    obs_new: list[int]
    r_after: list[int]
    capped: bool = False

    def pending_count(self) -> int:
        return sum(
            1
            for sys_rows in self.decisions
            for row in sys_rows
            for z in row
            if z == Decision.PENDING
        )

    def feasible_counts(self) -> list[list[int]]:
        """Systems declared feasible per (constraint, threshold)."""
        out = [[0] * len(row) for row in self.plan.thresholds]
        for sys_rows in self.decisions:
            for ell, row in enumerate(sys_rows):
                for m, z in enumerate(row):
                    if z == Decision.FEASIBLE:
                        out[ell][m] += 1
        return out


@dataclass
class SessionState:
    """A multi-pass run in progress: spec, per-system statistics, history."""

    spec: ProblemSpec
    halfwidths: list[int]
    budgets: list[float]
    states: list[SystemState]
    history: list[PassResult] = field(default_factory=list)
    # (constraint, threshold) -> per-system (decision, stage), for recycling
    tested: dict[tuple[int, Fraction], list[tuple[int, int]]] = field(default_factory=dict)

    @property
    def next_pass_index(self) -> int:
        return len(self.history) + 1

    def record(self, result: PassResult) -> None:
        self.history.append(result)
        for ell, row in enumerate(result.plan.thresholds):
            for m, h in enumerate(row):
                self.tested[(ell, h)] = [
                    (result.decisions[i][ell][m], result.stages[i][ell][m])
                    for i in range(len(result.decisions))
                ]

    def union_decisions(self) -> dict[tuple[int, Fraction], list[tuple[int, int]]]:
        return dict(self.tested)
