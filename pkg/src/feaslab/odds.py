"""Closed-form analytics for odds-ratio feasibility determination.

Everything here is a pure function of its arguments: error-budget splits,
the integer half-width of the random-walk continuation region, the
desirable/acceptable/unacceptable classification of a probability against a
threshold, boundary thresholds, absorption probabilities and expected
stopping times of the decision walk, and the tolerance conversions used by
the batch-means baseline.

Conventions
-----------
* A system with success probability p is *feasible* at threshold h when
  p <= h.  With odds-ratio indifference parameter theta > 1:
    - desirable      iff (1-p) h / (p (1-h)) >= theta   (must be called feasible)
    - unacceptable   iff p (1-h) / ((1-p) h) >= theta   (must be called infeasible)
    - acceptable     otherwise                          (either call is correct)
  Equality classifies as desirable/unacceptable (the boundary is inside the
  strict sets).
* The decision walk is S(r) = sum_{n<=r} (Y_n - I_n) on the integers,
  stopped at -H (feasible) or +H (infeasible).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class ErrorSplitScheme(enum.Enum):
    """How the per-system error budget is split across constraints."""

    PER_CONSTRAINT = "per-constraint"
    PER_EFFECTIVE_THRESHOLD = "per-effective-threshold"


class Classification(enum.Enum):
    DESIRABLE = "desirable"
    ACCEPTABLE = "acceptable"
    UNACCEPTABLE = "unacceptable"


@dataclass(frozen=True)
class BoundaryPair:
    """The two hardest thresholds for a probability p at odds ratio theta.

    f_lower places p exactly on the unacceptable boundary, f_upper exactly
    on the desirable boundary; f_lower < p < f_upper whenever theta > 1.
    """

    f_lower: float
    f_upper: float


def _check_prob(name: str, x: float) -> None:
    if not (0.0 < x < 1.0):
        raise ValueError(f"{name} must lie strictly in (0, 1), got {x}")


def _check_theta(theta: float) -> None:
    if not theta > 1.0:
        raise ValueError(f"odds-ratio IZ parameter must exceed 1, got {theta}")


def error_split(alpha: float, k: int, crn: bool) -> float:
    """Per-system error budget from the overall level alpha over k systems.

    Independent sampling admits the product bound 1-(1-alpha)^(1/k); under
    common random numbers only the additive alpha/k split is valid.
    """
    _check_prob("alpha", alpha)
    if k < 1:
        raise ValueError(f"system count must be >= 1, got {k}")
    if crn:
        return alpha / k
    return 1.0 - (1.0 - alpha) ** (1.0 / k)


def per_constraint_error(
    beta: float,
    total_threshold_counts: Sequence[int],
    scheme: ErrorSplitScheme,
) -> list[float]:
    """Split a per-system budget across constraints.

    ``total_threshold_counts`` holds, per constraint, the number of
    thresholds planned across *all* passes.  A count of zero is treated as
    one effective threshold budget-wise (the constraint may still be skipped
    at run time).  Only "one vs. more than one" matters: at most two
    thresholds per constraint are statistically effective.
    """
    _check_prob("beta", beta)
    counts = list(total_threshold_counts)
    if not counts:
        raise ValueError("at least one constraint is required")
    if any(c < 0 for c in counts):
        raise ValueError("threshold counts must be non-negative")
    s = len(counts)
    if scheme is ErrorSplitScheme.PER_CONSTRAINT:
        return [beta / s if c <= 1 else beta / (2 * s) for c in counts]
    denom = sum(min(max(c, 1), 2) for c in counts)
    return [beta / denom] * s


def continuation_halfwidth(beta_ell: float, theta: float) -> int:
    """Smallest integer H >= 1 with beta_ell >= 1 / (1 + theta**H).

    For the practical range the comparison runs in exact rational arithmetic
    on the binary values of beta_ell and theta, so log-domain rounding can
    never flip the minimality test.  Half-widths beyond a few thousand
    (theta barely above 1) fall back to 80-digit decimal logarithms, far
    beyond the information content of the double inputs.
    """
    _check_prob("beta_ell", beta_ell)
    _check_theta(theta)
    target = (1 - Fraction(beta_ell)) / Fraction(beta_ell)  # theta**H >= target
    theta_f = Fraction(theta)
    if theta_f >= target:
        return 1
    guess = max(1, math.ceil(math.log(float(target)) / math.log(theta)))
    if guess > 2048:
        import decimal

        with decimal.localcontext() as ctx:
            ctx.prec = 80
            ln_target = (
                (1 - decimal.Decimal(beta_ell)) / decimal.Decimal(beta_ell)
            ).ln()
            ln_theta = decimal.Decimal(theta).ln()
            est = ln_target / ln_theta
            h = int(est)
            if decimal.Decimal(h) < est:
                h += 1
            return max(1, h)
    # estimate from logs, then fix up exactly
    power = theta_f**guess
    while power < target:
        guess += 1
        power *= theta_f
    while guess > 1 and power / theta_f >= target:
        guess -= 1
        power /= theta_f
    return guess


def classify(p: float, h: float, theta: float) -> Classification:
    """Classify probability p against threshold h at odds ratio theta."""
    _check_prob("p", p)
    _check_prob("h", h)
    _check_theta(theta)
    desirable_odds = ((1.0 - p) * h) / (p * (1.0 - h))
    if desirable_odds >= theta:
        return Classification.DESIRABLE
    if 1.0 / desirable_odds >= theta:
        return Classification.UNACCEPTABLE
    return Classification.ACCEPTABLE


def boundary_thresholds(p: float, theta: float) -> BoundaryPair:
    """Thresholds placing p exactly on the unacceptable / desirable boundary."""
    _check_prob("p", p)
    _check_theta(theta)
    f_lower = p / (p + (1.0 - p) * theta)
    f_upper = p * theta / (p * (theta - 1.0) + 1.0)
    return BoundaryPair(f_lower=f_lower, f_upper=f_upper)


def _odds_ratio(p: float, h: float) -> float:
    """rho = (1-p) h / (p (1-h)): the walk's down/up transition odds."""
    return ((1.0 - p) * h) / (p * (1.0 - h))


def absorption_probability(p: float, h: float, H: int) -> float:
    """Probability the decision walk hits -H before +H.

    Equals rho^H / (1 + rho^H) with rho = (1-p) h / (p (1-h)); evaluated
    through rho^{-H} when rho > 1 so large half-widths cannot overflow.
    """
    _check_prob("p", p)
    _check_prob("h", h)
    if H < 1:
        raise ValueError(f"half-width must be >= 1, got {H}")
    rho = _odds_ratio(p, h)
    if rho == 1.0:
        return 0.5
    if rho > 1.0:
        return 1.0 / (1.0 + rho**-H)
    return rho**H / (1.0 + rho**H)


def expected_stopping_time(p: float, h: float, H: int) -> float:
    """Expected number of replications until the walk exits (-H, H).

    H^2 / (2 p (1-h)) in the driftless case p == h; otherwise
    H/(p-h) * (1 - rho^H) / (1 + rho^H), evaluated overflow-safely.
    """
    _check_prob("p", p)
    _check_prob("h", h)
    if H < 1:
        raise ValueError(f"half-width must be >= 1, got {H}")
    if p == h:
        return H * H / (2.0 * p * (1.0 - h))
    rho = _odds_ratio(p, h)
    if rho > 1.0:
        q = rho**-H
        bracket = (q - 1.0) / (q + 1.0)
    else:
        bracket = (1.0 - rho**H) / (1.0 + rho**H)
    return H / (p - h) * bracket


@dataclass(frozen=True)
class ThresholdTolerance:
    """Per-threshold tolerance data for the batch-means baseline."""

    lb: float
    ub: float
    epsilon: float
    epsilon_tilde: float
    h_tilde: float


@dataclass(frozen=True)
class ToleranceConversion:
    epsilon: float
    epsilon_tilde: float
    h_tilde: list[float]
    per_threshold: list[ThresholdTolerance]


def acceptable_band(h: float, theta: float) -> tuple[float, float]:
    """(LB, UB): the open band of probabilities acceptable at threshold h."""
    _check_prob("h", h)
    _check_theta(theta)
    lb = h / (h + theta * (1.0 - h))
    ub = theta * h / (h * (theta - 1.0) + 1.0)
    return lb, ub


def tolerance_convert(thresholds: Sequence[float], theta: float) -> ToleranceConversion:
    """Convert odds-ratio bands into flat tolerances for a normal-theory check.

    For each threshold h the acceptable band (LB, UB) yields the
    conservative tolerance eps = min(UB-h, h-LB) kept at the original
    threshold, and the adjusted pair (h_tilde, eps_tilde) centred on the
    band: h_tilde = (LB+UB)/2, eps_tilde = (UB-LB)/2.  Constraint-level
    tolerances take the minimum over thresholds; eps_tilde >= eps always.
    """
    ts = list(thresholds)
    if not ts:
        raise ValueError("at least one threshold is required")
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
        raise ValueError("thresholds must be strictly increasing")
    per: list[ThresholdTolerance] = []
    for h in ts:
        lb, ub = acceptable_band(h, theta)
        eps = min(ub - h, h - lb)
        eps_t = (ub - lb) / 2.0
        per.append(
            ThresholdTolerance(
                lb=lb, ub=ub, epsilon=eps, epsilon_tilde=eps_t, h_tilde=(lb + ub) / 2.0
            )
        )
    return ToleranceConversion(
        epsilon=min(t.epsilon for t in per),
        epsilon_tilde=min(t.epsilon_tilde for t in per),
        h_tilde=[t.h_tilde for t in per],
        per_threshold=per,
    )
