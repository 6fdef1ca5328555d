"""Drivers connecting problem specs and sources to the kernel backend.

A first pass creates per-system recyclable state; later passes consume and
update it.  Thresholds already tested in an earlier pass are recycled: the
stored decision is returned without sampling and a warning is emitted.
"""

from __future__ import annotations

import warnings
from fractions import Fraction
from typing import Sequence

import numpy as np

from .backend import kernels
from .multipass import Heuristic
from .streams import StreamKey
from .testbeds import ObservationSource
from .types import (
    DECIDED_RECYCLED,
    PassPlan,
    PassResult,
    ProblemSpec,
    SessionState,
    SystemState,
)

_HEUR_CODE = {Heuristic.B: 0, Heuristic.N: 1, Heuristic.BN: 2}


def _unflatten(flat: Sequence, counts: Sequence[int]) -> list[list]:
    rows: list[list] = []
    pos = 0
    for c in counts:
        rows.append([_native(v) for v in flat[pos : pos + c]])
        pos += c
    return rows


def _native(v):
    return v.item() if hasattr(v, "item") else v


def _state_from_kernel(out: dict, y_key: StreamKey, u_key: StreamKey) -> SystemState:
    return SystemState(
        r=int(out["r"]),
        sum_y=[int(x) for x in out["sum_y"]],
        lb_num=[int(x) for x in out["lb_num"]],
        lb_den=[int(x) for x in out["lb_den"]],
        ub_num=[int(x) for x in out["ub_num"]],
        ub_den=[int(x) for x in out["ub_den"]],
        last=[int(x) for x in out["last"]],
        y_key=y_key,
        u_key=u_key,
    )


def _plan_arrays(plan_rows: list[list[Fraction]]):
    d = np.asarray([len(row) for row in plan_rows], dtype=np.int64)
    flat = [h for row in plan_rows for h in row]
    h_f = np.asarray([float(h) for h in flat], dtype=np.float64)
    h_num = np.asarray([h.numerator for h in flat], dtype=np.int64)
    h_den = np.asarray([h.denominator for h in flat], dtype=np.int64)
    return d, h_f, h_num, h_den


def create_session(
    spec: ProblemSpec,
    source: ObservationSource,
    planned_counts: Sequence[int],
    rep_seed: int,
) -> SessionState:
    """Fresh session: budgets and half-widths fixed from the planned
    per-constraint threshold totals (across all anticipated passes)."""
    if source.k != spec.k or source.s != spec.s:
        raise ValueError("source and spec disagree on system or constraint count")
    budgets = spec.constraint_budgets(planned_counts)
    halfwidths = spec.halfwidths(planned_counts)
    states = [
        SystemState.fresh(spec.s, *spec.stream_keys(rep_seed, i)) for i in range(spec.k)
    ]
    return SessionState(spec=spec, halfwidths=halfwidths, budgets=budgets, states=states)


def run_first_pass(session: SessionState, plan: PassPlan, source: ObservationSource) -> PassResult:
    if session.next_pass_index != 1 or plan.pass_index != 1:
        raise ValueError("first pass must be pass 1 of a fresh session")
    spec = session.spec
    d, h_f, _, _ = _plan_arrays([list(row) for row in plan.thresholds])
    H = np.asarray(session.halfwidths, dtype=np.int64)
    cap = spec.obs_cap or 0
    decisions, stages, decided_by, obs_new, r_after = [], [], [], [], []
    capped = False
    for i in range(spec.k):
        kind, sysp, inv, cdf, s = source.kernel_args(i)
        st = session.states[i]
        out = kernels.pass1_system(
            kind, sysp, inv, cdf, s, d, h_f, H,
            st.y_key.seed, st.y_key.stream_id, st.u_key.seed, st.u_key.stream_id, cap,
        )
        session.states[i] = _state_from_kernel(out, st.y_key, st.u_key)
        counts = plan.counts
        decisions.append(_unflatten(out["decisions"], counts))
        stages.append(_unflatten(out["stages"], counts))
        decided_by.append(_unflatten(out["decided_by"], counts))
        obs_new.append(int(out["r"]))
        r_after.append(int(out["r"]))
        if cap and int(out["r"]) >= cap and any(v == -1 for v in out["decisions"]):
            capped = True
    result = PassResult(
        pass_index=1,
        heuristic=None,
        plan=plan,
        decisions=decisions,
        stages=stages,
        decided_by=decided_by,
        obs_new=obs_new,
        r_after=r_after,
        capped=capped,
    )
    session.record(result)
    return result


def run_later_pass(
    session: SessionState,
    plan: PassPlan,
    heuristic: Heuristic,
    source: ObservationSource,
) -> PassResult:
    if session.next_pass_index < 2:
        raise ValueError("run the first pass before adding thresholds")
    if plan.pass_index != session.next_pass_index:
        raise ValueError(
            f"expected pass {session.next_pass_index}, got plan for pass {plan.pass_index}"
        )
    spec = session.spec
    # split new thresholds from recycled duplicates of earlier passes
    new_rows: list[list[Fraction]] = []
    recycled: set[tuple[int, int]] = set()
    for ell, row in enumerate(plan.thresholds):
        new_row = []
        for m, h in enumerate(row):
            if (ell, h) in session.tested:
                recycled.add((ell, m))
                warnings.warn(
                    f"threshold {h} on constraint {ell + 1} was already tested; "
                    "returning the stored decision",
                    stacklevel=2,
                )
            else:
                new_row.append(h)
        new_rows.append(new_row)

    d, h_f, h_num, h_den = _plan_arrays(new_rows)
    H = np.asarray(session.halfwidths, dtype=np.int64)
    cap = spec.obs_cap or 0
    code = _HEUR_CODE[heuristic]
    new_counts = [len(row) for row in new_rows]

    decisions, stages, decided_by, obs_new, r_after = [], [], [], [], []
    capped = False
    for i in range(spec.k):
        st = session.states[i]
        r_before = st.r
        if sum(new_counts) > 0:
            kind, sysp, inv, cdf, s = source.kernel_args(i)
            out = kernels.multipass_system(
                kind, sysp, inv, cdf, s, d, h_f, h_num, h_den, H, code,
                st.y_key.seed, st.y_key.stream_id, st.u_key.seed, st.u_key.stream_id,
                st.r,
                np.asarray(st.sum_y, dtype=np.int64),
                np.asarray(st.lb_num, dtype=np.int64),
                np.asarray(st.lb_den, dtype=np.int64),
                np.asarray(st.ub_num, dtype=np.int64),
                np.asarray(st.ub_den, dtype=np.int64),
                np.asarray(st.last, dtype=np.int8),
                cap,
            )
            session.states[i] = _state_from_kernel(out, st.y_key, st.u_key)
            dec_rows = _unflatten(out["decisions"], new_counts)
            stage_rows = _unflatten(out["stages"], new_counts)
            by_rows = _unflatten(out["decided_by"], new_counts)
            if cap and int(out["r"]) >= cap and any(v == -1 for v in out["decisions"]):
                capped = True
        else:
            dec_rows = [[] for _ in range(spec.s)]
            stage_rows = [[] for _ in range(spec.s)]
            by_rows = [[] for _ in range(spec.s)]
        # weave recycled entries back into plan order
        full_dec, full_stage, full_by = [], [], []
        for ell, row in enumerate(plan.thresholds):
            dr, sr, br = [], [], []
            it = iter(zip(dec_rows[ell], stage_rows[ell], by_rows[ell]))
            for m, h in enumerate(row):
                if (ell, m) in recycled:
                    old_dec, old_stage = session.tested[(ell, h)][i]
                    dr.append(old_dec)
                    sr.append(old_stage)
                    br.append(DECIDED_RECYCLED)
                else:
                    a, b, c = next(it)
                    dr.append(a)
                    sr.append(b)
                    br.append(c)
            full_dec.append(dr)
            full_stage.append(sr)
            full_by.append(br)
        decisions.append(full_dec)
        stages.append(full_stage)
        decided_by.append(full_by)
        obs_new.append(session.states[i].r - r_before)
        r_after.append(session.states[i].r)

    result = PassResult(
        pass_index=plan.pass_index,
        heuristic=heuristic.value,
        plan=plan,
        decisions=decisions,
        stages=stages,
        decided_by=decided_by,
        obs_new=obs_new,
        r_after=r_after,
        capped=capped,
    )
    session.record(result)
    return result
