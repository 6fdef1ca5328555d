"""Macro-replication experiment harness.

Runs a configured procedure over many independent macro-replications,
scores the probability of correct decision against a truth matrix, and
aggregates observation counts with standard errors into a CSV report.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import create_session, run_first_pass, run_later_pass
from .inventory import InventoryParams
from .multipass import Heuristic
from .odds import Classification, ErrorSplitScheme, classify
from .rf import RFParams, ToleranceMode, derive_rf_inputs
from .streams import derive_rep_seed
from .testbeds import Coupling, ObservationSource, cached_truth, inventory_source, synthetic_source
from .types import Decision, PassPlan, ProblemSpec, SamplingMode, threshold_str


# Conditions under which a declared later pass actually runs, evaluated on
# the count of systems feasible at every pass-1 threshold.
WHEN_ALWAYS = "always"
WHEN_MULTIPLE_FEASIBLE = "multiple_feasible"
WHEN_NO_FEASIBLE = "no_feasible"


@dataclass(frozen=True)
class PlanSpec:
    thresholds: tuple[tuple[Fraction, ...], ...]
    when: str = WHEN_ALWAYS


@dataclass(frozen=True)
class Procedure:
    kind: str  # "brf" | "mpb" | "rf"
    heuristic: Heuristic | None = None
    rf_params: RFParams | None = None

    def label(self) -> str:
        if self.kind == "mpb":
            return f"mpb_{self.heuristic.value}"
        return self.kind


@dataclass
class ExperimentConfig:
    config_id: str
    spec: ProblemSpec
    source: ObservationSource
    procedure: Procedure
    plans: list[PlanSpec]
    macro_reps: int
    master_seed: int
    truth: np.ndarray  # (k, s) probabilities
    threads: int = 1

    def planned_counts(self) -> list[int]:
        counts = [0] * self.spec.s
        for plan in self.plans:
            for ell, row in enumerate(plan.thresholds):
                counts[ell] += len(row)
        return counts


@dataclass
class RepOutcome:
    cd: int
    obs_per_pass: list[int]
    pending: int
    capped: bool
    feasible: dict[tuple[int, str], int]
    tested: list[tuple[int, str]]

    @property
    def obs_total(self) -> int:
        return sum(self.obs_per_pass)


@dataclass
class ExperimentReport:
    config_id: str
    procedure: str
    macro_reps: int
    pcd_hat: float
    pcd_se: float | None
    obs_pass_mean: list[float]
    obs_pass_se: list[float | None]
    obs_total_mean: float
    obs_total_se: float | None
    undecided_mean: float
    capped_reps: int
    feasible_mean: dict[tuple[int, str], tuple[float, int]] = field(default_factory=dict)


def _mean_se(values: Sequence[float]) -> tuple[float, float | None]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def score_cd(
    union: dict[tuple[int, Fraction], list[tuple[int, int]]],
    truth: np.ndarray,
    theta: Sequence[float],
) -> int:
    """1 iff every desirable entry was declared feasible and every
    unacceptable entry infeasible; pending on either scores 0."""
    for (ell, h), per_system in union.items():
        hf = float(h)
        for i, (decision, _stage) in enumerate(per_system):
            cls = classify(float(truth[i, ell]), hf, theta[ell])
            if cls is Classification.DESIRABLE and decision != int(Decision.FEASIBLE):
                return 0
            if cls is Classification.UNACCEPTABLE and decision != int(Decision.INFEASIBLE):
                return 0
    return 1


def _fully_feasible_count(result) -> int:
    count = 0
    for sys_rows in result.decisions:
        ok = True
        for row in sys_rows:
            for z in row:
                if z != int(Decision.FEASIBLE):
                    ok = False
        if ok:
            count += 1
    return count


def _should_run(when: str, pass1_feasible: int) -> bool:
    if when == WHEN_ALWAYS:
        return True
    if when == WHEN_MULTIPLE_FEASIBLE:
        return pass1_feasible >= 2
    if when == WHEN_NO_FEASIBLE:
        return pass1_feasible == 0
    raise ValueError(f"unknown pass condition {when!r}")


def _run_rep_walk(config: ExperimentConfig, rep_index: int) -> RepOutcome:
    rep_seed = derive_rep_seed(config.master_seed, rep_index)
    session = create_session(config.spec, config.source, config.planned_counts(), rep_seed)
    plan1 = PassPlan(thresholds=config.plans[0].thresholds, pass_index=1)
    result = run_first_pass(session, plan1, config.source)
    obs_per_pass = [sum(result.obs_new)]
    capped = result.capped
    feasible_gate = _fully_feasible_count(result)
    if config.procedure.kind == "mpb":
        for plan_spec in config.plans[1:]:
            if not _should_run(plan_spec.when, feasible_gate):
                continue
            plan = PassPlan(
                thresholds=plan_spec.thresholds, pass_index=session.next_pass_index
            )
            result = run_later_pass(session, plan, config.procedure.heuristic, config.source)
            obs_per_pass.append(sum(result.obs_new))
            capped = capped or result.capped
    union = session.union_decisions()
    cd = score_cd(union, config.truth, config.spec.theta)
    pending = sum(
        1 for per_system in union.values() for dec, _ in per_system if dec == int(Decision.PENDING)
    )
    feasible = {}
    tested = []
    for (ell, h), per_system in union.items():
        key = (ell, threshold_str(h))
        tested.append(key)
        feasible[key] = sum(1 for dec, _ in per_system if dec == int(Decision.FEASIBLE))
    return RepOutcome(
        cd=cd,
        obs_per_pass=obs_per_pass,
        pending=pending,
        capped=capped,
        feasible=feasible,
        tested=tested,
    )


def _run_rep_rf(config: ExperimentConfig, rep_index: int) -> RepOutcome:
    from .backend import kernels

    rep_seed = derive_rep_seed(config.master_seed, rep_index)
    spec = config.spec
    params = config.procedure.rf_params
    plan = config.plans[0]
    rows = [list(row) for row in plan.thresholds]
    budgets = spec.constraint_budgets([len(r) for r in rows])
    derived = derive_rf_inputs(
        [[float(h) for h in row] for row in rows], spec.theta, budgets, params
    )
    d = np.asarray([len(row) for row in rows], dtype=np.int64)
    targets = np.asarray([t for row in derived.targets for t in row], dtype=np.float64)
    eps = np.asarray(derived.eps, dtype=np.float64)
    eta = np.asarray(derived.eta, dtype=np.float64)
    cap_batches = 0
    if spec.obs_cap:
        cap_batches = max(1, spec.obs_cap // params.b)
    obs = 0
    pending = 0
    capped = False
    feasible: dict[tuple[int, str], int] = {}
    union_ok = 1
    for i in range(spec.k):
        kind, sysp, inv, cdf, s = config.source.kernel_args(i)
        y_key, _ = spec.stream_keys(rep_seed, i)
        out = kernels.rf_system(
            kind, sysp, inv, cdf, s, d, targets, eps, eta,
            params.n0, params.b, y_key.seed, y_key.stream_id, cap_batches,
        )
        obs += int(out["obs_raw"])
        pos = 0
        for ell, row in enumerate(rows):
            for m, h in enumerate(row):
                dec = int(out["decisions"][pos])
                pos += 1
                key = (ell, threshold_str(h))
                feasible.setdefault(key, 0)
                if dec == int(Decision.FEASIBLE):
                    feasible[key] += 1
                if dec == int(Decision.PENDING):
                    pending += 1
                    capped = True
                cls = classify(float(config.truth[i, ell]), float(h), spec.theta[ell])
                if cls is Classification.DESIRABLE and dec != int(Decision.FEASIBLE):
                    union_ok = 0
                elif cls is Classification.UNACCEPTABLE and dec != int(Decision.INFEASIBLE):
                    union_ok = 0
    tested = [(ell, threshold_str(h)) for ell, row in enumerate(rows) for h in row]
    return RepOutcome(
        cd=union_ok,
        obs_per_pass=[obs],
        pending=pending,
        capped=capped,
        feasible=feasible,
        tested=tested,
    )


def run_rep(config: ExperimentConfig, rep_index: int) -> RepOutcome:
    if config.procedure.kind == "rf":
        return _run_rep_rf(config, rep_index)
    return _run_rep_walk(config, rep_index)


def run_macro(config: ExperimentConfig) -> ExperimentReport:
    """All macro-replications, reduced in replication order so the report is
    deterministic regardless of thread count."""
    reps = config.macro_reps
    if reps < 1:
        raise ValueError("macro_reps must be >= 1")
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(lambda r: run_rep(config, r), range(reps)))
    else:
        outcomes = [run_rep(config, r) for r in range(reps)]

    cd_bits = [o.cd for o in outcomes]
    pcd = sum(cd_bits) / reps
    pcd_se = math.sqrt(pcd * (1.0 - pcd) / reps) if reps > 1 else None

    max_passes = max(len(o.obs_per_pass) for o in outcomes)
    obs_pass_mean: list[float] = []
    obs_pass_se: list[float | None] = []
    for w in range(max_passes):
        vals = [o.obs_per_pass[w] if w < len(o.obs_per_pass) else 0 for o in outcomes]
        mean, se = _mean_se(vals)
        obs_pass_mean.append(mean)
        obs_pass_se.append(se)
    total_mean, total_se = _mean_se([o.obs_total for o in outcomes])

    feasible_acc: dict[tuple[int, str], list[int]] = {}
    for o in outcomes:
        for key in o.tested:
            feasible_acc.setdefault(key, []).append(o.feasible[key])
    feasible_mean = {
        key: (sum(vals) / len(vals), len(vals)) for key, vals in feasible_acc.items()
    }

    return ExperimentReport(
        config_id=config.config_id,
        procedure=config.procedure.label(),
        macro_reps=reps,
        pcd_hat=pcd,
        pcd_se=pcd_se,
        obs_pass_mean=obs_pass_mean,
        obs_pass_se=obs_pass_se,
        obs_total_mean=total_mean,
        obs_total_se=total_se,
        undecided_mean=sum(o.pending for o in outcomes) / reps,
        capped_reps=sum(1 for o in outcomes if o.capped),
        feasible_mean=feasible_mean,
    )


def emit_csv(report: ExperimentReport, path: str | Path) -> None:
    """Long-format CSV with a fixed column order; re-emission is
    byte-identical for the same report."""
    lines = ["config_id,procedure,pass,metric,value,se"]

    def row(pass_label, metric, value, se) -> None:
        se_txt = "" if se is None else repr(float(se))
        lines.append(
            f"{report.config_id},{report.procedure},{pass_label},{metric},"
            f"{repr(float(value))},{se_txt}"
        )

    row("all", "pcd", report.pcd_hat, report.pcd_se)
    for w, (mean, se) in enumerate(zip(report.obs_pass_mean, report.obs_pass_se), start=1):
        row(str(w), "obs", mean, se)
    row("all", "obs_total", report.obs_total_mean, report.obs_total_se)
    row("all", "undecided", report.undecided_mean, None)
    row("all", "capped_fraction", report.capped_reps / report.macro_reps, None)
    row("all", "macro_reps", report.macro_reps, None)
    for (ell, h), (mean, tested) in sorted(
        report.feasible_mean.items(), key=lambda kv: (kv[0][0], Fraction(kv[0][1]))
    ):
        row("all", f"feasible_count[c={ell + 1};h={h}]", mean, None)
        row("all", f"tested_reps[c={ell + 1};h={h}]", tested, None)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# configuration loading

def _build_source(body: dict) -> ObservationSource:
    kind = body.get("kind")
    if kind == "synthetic":
        coupling = Coupling(body.get("coupling", "independent"))
        return synthetic_source(body["p"], coupling)
    if kind == "inventory":
        params = InventoryParams(**body.get("params", {}))
        policies = body.get("policies")
        policies = [tuple(p) for p in policies] if policies else None
        return inventory_source(policies, params)
    raise ValueError(f"unknown source kind {kind!r}")


def _build_procedure(body: dict) -> Procedure:
    kind = body.get("kind")
    if kind == "brf":
        return Procedure(kind="brf")
    if kind == "mpb":
        return Procedure(kind="mpb", heuristic=Heuristic(body.get("heuristic", "bn")))
    if kind == "rf":
        params = RFParams(
            n0=int(body.get("n0", 20)),
            b=int(body.get("b", 1)),
            tolerance_mode=ToleranceMode(body.get("tolerance_mode", "conservative")),
        )
        return Procedure(kind="rf", rf_params=params)
    raise ValueError(f"unknown procedure kind {kind!r}")


def load_config(body: dict, seed_override: int | None = None,
                reps_override: int | None = None, threads_override: int | None = None) -> ExperimentConfig:
    source = _build_source(body["source"])
    spec_body = body["spec"]
    spec = ProblemSpec(
        k=source.k,
        s=source.s,
        alpha=float(spec_body["alpha"]),
        theta=tuple(float(t) for t in spec_body["theta"]),
        sampling_mode=SamplingMode(spec_body.get("sampling", "independent")),
        split_scheme=ErrorSplitScheme(spec_body.get("split_scheme", "per-constraint")),
        expect_more_passes=bool(spec_body.get("expect_more_passes", False)),
        obs_cap=spec_body.get("obs_cap"),
    )
    plans = []
    for p in body["plans"]:
        parsed = PassPlan.parse(p["thresholds"])
        if parsed.s != source.s:
            raise ValueError("each plan needs one threshold list per constraint")
        plans.append(PlanSpec(thresholds=parsed.thresholds, when=p.get("when", WHEN_ALWAYS)))
    if not plans:
        raise ValueError("at least one pass plan is required")
    procedure = _build_procedure(body["procedure"])
    truth_body = body.get("truth", {"kind": "source"})
    if truth_body["kind"] == "source":
        if source.kind not in (0, 1):
            raise ValueError("truth kind 'source' needs a synthetic source")
        truth = np.asarray(source.system_params, dtype=np.float64)
    elif truth_body["kind"] == "given":
        truth = np.asarray(truth_body["p"], dtype=np.float64)
    elif truth_body["kind"] == "estimate":
        truth = cached_truth(
            source,
            int(truth_body["n"]),
            int(truth_body.get("seed", 0xFEA51AB)),
            truth_body.get("cache"),
        ).p_hat
    else:
        raise ValueError(f"unknown truth kind {truth_body['kind']!r}")
    if truth.shape != (source.k, source.s):
        raise ValueError("truth matrix shape must be (k, s)")
    return ExperimentConfig(
        config_id=str(body.get("id", "experiment")),
        spec=spec,
        source=source,
        procedure=procedure,
        plans=plans,
        macro_reps=int(reps_override or body.get("macro_reps", 1)),
        master_seed=int(seed_override if seed_override is not None else body.get("master_seed", 0)),
        truth=truth,
        threads=int(threads_override or body.get("threads", 1)),
    )


def load_config_file(path: str | Path, **overrides) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        return load_config(json.load(f), **overrides)
