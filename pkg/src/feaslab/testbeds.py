"""Observation sources: synthetic Bernoulli systems and the inventory grid.

A source is pure given (system, replication index, stream key): replication
n of system i always yields the same bit vector, which is what makes pass
replay and common random numbers work.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .inventory import InventoryParams, policy_grid, poisson_cdf_table
from .streams import StreamKey, truth_tag

KIND_SYNTH_SHARED = 0
KIND_SYNTH_INDEP = 1
KIND_INVENTORY = 2

_EMPTY = np.zeros(0, dtype=np.float64)


class Coupling(enum.Enum):
    INDEPENDENT = "independent"
    SHARED_UNIFORM = "shared-uniform"


@dataclass(frozen=True)
class ObservationSource:
    """Compiled description of a testbed, in the layout the kernels consume."""

    kind: int
    k: int
    s: int
    system_params: np.ndarray  # (k, *) float64; p-row or (s, S) pair
    inv_params: np.ndarray
    poisson_cdf: np.ndarray
    label: str

    def kernel_args(self, system_index: int):
        return (
            self.kind,
            self.system_params[system_index],
            self.inv_params,
            self.poisson_cdf,
            self.s,
        )


def synthetic_source(
    p: Sequence[Sequence[float]], coupling: Coupling = Coupling.INDEPENDENT
) -> ObservationSource:
    """Bernoulli systems with marginals p[i][ell].

    Shared-uniform coupling draws one uniform per (system, stage) and
    thresholds it at every p[i][ell], inducing comonotone cross-constraint
    correlation; independent coupling uses one sub-draw per constraint.
    """
    mat = np.asarray(p, dtype=np.float64)
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError("p must be a non-empty k x s matrix")
    if np.any(mat <= 0.0) or np.any(mat >= 1.0):
        raise ValueError("all probabilities must lie strictly in (0, 1)")
    kind = KIND_SYNTH_SHARED if coupling is Coupling.SHARED_UNIFORM else KIND_SYNTH_INDEP
    return ObservationSource(
        kind=kind,
        k=mat.shape[0],
        s=mat.shape[1],
        system_params=np.ascontiguousarray(mat),
        inv_params=_EMPTY,
        poisson_cdf=_EMPTY,
        label=f"synthetic[{mat.shape[0]}x{mat.shape[1]},{coupling.value}]",
    )


def inventory_source(
    policies: Sequence[tuple[int, int]] | None = None,
    params: InventoryParams | None = None,
) -> ObservationSource:
    """The (s, S) benchmark: bit 1 = yearly cost exceeds the threshold,
    bit 2 = a stockout occurred within the year."""
    if policies is None:
        policies = policy_grid()
    params = params or InventoryParams()
    pol = np.asarray(policies, dtype=np.float64)
    if pol.ndim != 2 or pol.shape[1] != 2:
        raise ValueError("policies must be (s, S) pairs")
    if np.any(pol[:, 0] > pol[:, 1]):
        raise ValueError("every policy needs s <= S")
    return ObservationSource(
        kind=KIND_INVENTORY,
        k=pol.shape[0],
        s=2,
        system_params=np.ascontiguousarray(pol),
        inv_params=np.asarray(params.vector(), dtype=np.float64),
        poisson_cdf=np.asarray(poisson_cdf_table(params.demand_mean), dtype=np.float64),
        label=f"inventory[{pol.shape[0]}]",
    )


def draw_bits(source: ObservationSource, system_index: int, n: int, y_key: StreamKey) -> list[int]:
    """Bit vector of replication n for one system (testing/inspection path)."""
    from .backend import kernels

    kind, sysp, inv, cdf, s = source.kernel_args(system_index)
    return list(kernels.draw_y(kind, sysp, inv, cdf, s, y_key.seed, y_key.stream_id, n))


@dataclass(frozen=True)
class TruthEstimate:
    p_hat: np.ndarray  # (k, s)
    se: np.ndarray
    n: int

    def classify_matrix(self, plan_thresholds, theta) -> None:
        raise NotImplementedError  # scoring lives in the harness


def estimate_truth(source: ObservationSource, n: int, seed: int) -> TruthEstimate:
    """Monte-Carlo ground-truth probabilities with binomial standard errors.

    Uses a dedicated stream tag per system so truth replications never
    collide with procedure replications.
    """
    from .backend import kernels

    if n < 1:
        raise ValueError(f"replication count must be >= 1, got {n}")
    p_hat = np.empty((source.k, source.s), dtype=np.float64)
    for i in range(source.k):
        kind, sysp, inv, cdf, s = source.kernel_args(i)
        counts = kernels.truth_counts(kind, sysp, inv, cdf, s, n, seed, truth_tag(i))
        p_hat[i] = np.asarray(counts, dtype=np.float64) / n
    se = np.sqrt(p_hat * (1.0 - p_hat) / n)
    return TruthEstimate(p_hat=p_hat, se=se, n=n)


def write_truth_csv(est: TruthEstimate, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["system", "constraint", "p_hat", "se", "n"])
        for i in range(est.p_hat.shape[0]):
            for ell in range(est.p_hat.shape[1]):
                w.writerow(
                    [i, ell + 1, repr(float(est.p_hat[i, ell])), repr(float(est.se[i, ell])), est.n]
                )


def read_truth_csv(path: str | Path) -> TruthEstimate:
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            rows.append(row)
    if not rows:
        raise ValueError(f"no truth rows in {path}")
    k = max(int(r["system"]) for r in rows) + 1
    s = max(int(r["constraint"]) for r in rows)
    n = int(rows[0]["n"])
    p_hat = np.zeros((k, s))
    se = np.zeros((k, s))
    for r in rows:
        p_hat[int(r["system"]), int(r["constraint"]) - 1] = float(r["p_hat"])
        se[int(r["system"]), int(r["constraint"]) - 1] = float(r["se"])
    return TruthEstimate(p_hat=p_hat, se=se, n=n)


def cached_truth(source: ObservationSource, n: int, seed: int, cache: str | Path | None) -> TruthEstimate:
    """Estimate or reuse a cached estimate when the sidecar matches (k, s, n)."""
    if cache is not None:
        path = Path(cache)
        if path.exists():
            est = read_truth_csv(path)
            if est.n == n and est.p_hat.shape == (source.k, source.s):
                return est
    est = estimate_truth(source, n, seed)
    if cache is not None:
        write_truth_csv(est, cache)
    return est


def binomial_band(p: float, n: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(p * (1.0 - p) / n)
