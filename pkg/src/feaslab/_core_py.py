"""Pure-Python kernel backend.

Implements the same array-level entry points as the compiled extension by
driving the reference engines, so results are bit-identical across
backends (integer decision tests; float operations in the same order).
Selected automatically when the extension is unavailable or when
FEASLAB_PURE_PYTHON is set.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .brf import FirstPassSystem
from .inventory import invert_cdf
from .multipass import Heuristic, LaterPassSystem, init_later_pass
from .rf import RFSystem
from .streams import _GOLDEN, _INV_2_53, _MASK, mix64, stream_key
from .types import DECIDED_WALK, Decision, SystemState
from .streams import StreamKey

BACKEND = "python"

KIND_SYNTH_SHARED = 0
KIND_SYNTH_INDEP = 1
KIND_INVENTORY = 2

_HEURISTICS = {0: Heuristic.B, 1: Heuristic.N, 2: Heuristic.BN}


def backend_name() -> str:
    return BACKEND


def uniform(seed: int, tag: int, n: int) -> float:
    key = stream_key(seed, tag)
    return (mix64((key + n * _GOLDEN) & _MASK) >> 11) * _INV_2_53


def _uniform_from_key(key: int, n: int) -> float:
    return (mix64((key + n * _GOLDEN) & _MASK) >> 11) * _INV_2_53


def inventory_year(s_small, S_big, inv, cdf, y_seed: int, y_tag: int, n: int):
    """One inventory replication; demand inverts the shared Poisson table."""
    periods = int(inv[0])
    key = stream_key(y_seed, y_tag)
    base = (n - 1) * periods
    onhand = float(S_big)
    cost = 0.0
    stockout = 0
    for t in range(1, periods + 1):
        if onhand < s_small:
            cost += inv[2] + inv[1] * (S_big - onhand)
            onhand = float(S_big)
        d = float(invert_cdf(cdf, _uniform_from_key(key, base + t)))
        if d > onhand:
            cost += inv[4] * (d - onhand)
            onhand = 0.0
            stockout = 1
        else:
            onhand -= d
        cost += inv[3] * onhand
    return cost, stockout


def draw_y(kind: int, sysp, inv, cdf, s: int, y_seed: int, y_tag: int, n: int):
    out = np.zeros(s, dtype=np.int8)
    if kind == KIND_SYNTH_SHARED:
        v = uniform(y_seed, y_tag, n)
        for ell in range(s):
            out[ell] = 1 if v <= sysp[ell] else 0
    elif kind == KIND_SYNTH_INDEP:
        key = stream_key(y_seed, y_tag)
        base = (n - 1) * s
        for ell in range(s):
            out[ell] = 1 if _uniform_from_key(key, base + ell + 1) <= sysp[ell] else 0
    else:
        cost, stockout = inventory_year(sysp[0], sysp[1], inv, cdf, y_seed, y_tag, n)
        out[0] = 1 if cost > inv[5] else 0
        out[1] = stockout
    return out


def _unflatten(flat, d) -> list[list]:
    rows = []
    pos = 0
    for count in d:
        rows.append(list(flat[pos : pos + int(count)]))
        pos += int(count)
    return rows


def _flatten_int(rows) -> np.ndarray:
    return np.asarray([v for row in rows for v in row], dtype=np.int64)


def _flatten_i8(rows) -> np.ndarray:
    return np.asarray([v for row in rows for v in row], dtype=np.int8)


def _state_arrays(state: SystemState) -> dict:
    return {
        "r": state.r,
        "sum_y": np.asarray(state.sum_y, dtype=np.int64),
        "lb_num": np.asarray(state.lb_num, dtype=np.int64),
        "lb_den": np.asarray(state.lb_den, dtype=np.int64),
        "ub_num": np.asarray(state.ub_num, dtype=np.int64),
        "ub_den": np.asarray(state.ub_den, dtype=np.int64),
        "last": np.asarray(state.last, dtype=np.int8),
    }


def pass1_system(
    kind, sysp, inv, cdf, s, d, h_f, H, y_seed, y_tag, u_seed, u_tag, obs_cap
) -> dict:
    """First pass ending when every (constraint, threshold) is decided or the
    cap is hit; returns decisions plus the recyclable statistics."""
    state = SystemState.fresh(s, StreamKey(y_seed, y_tag), StreamKey(u_seed, u_tag))
    run = FirstPassSystem.begin(state, _unflatten(h_f, d), [int(x) for x in H])
    u_key = stream_key(u_seed, u_tag)
    while not run.done and (obs_cap == 0 or state.r < obs_cap):
        n = state.r + 1
        y = draw_y(kind, sysp, inv, cdf, s, y_seed, y_tag, n)
        run.step(y, _uniform_from_key(u_key, n))
    decided_by = [
        [DECIDED_WALK if z != int(Decision.PENDING) else -1 for z in row]
        for row in run.decisions
    ]
    out = {
        "decisions": _flatten_i8(run.decisions),
        "stages": _flatten_int(run.stages),
        "decided_by": _flatten_i8(decided_by),
        "sum_i": _flatten_int(run.sum_i),
    }
    out.update(_state_arrays(state))
    return out


def multipass_system(
    kind,
    sysp,
    inv,
    cdf,
    s,
    d,
    h_f,
    h_num,
    h_den,
    H,
    heuristic,
    y_seed,
    y_tag,
    u_seed,
    u_tag,
    r0,
    sum_y0,
    lb_num0,
    lb_den0,
    ub_num0,
    ub_den0,
    last0,
    obs_cap,
) -> dict:
    """One later pass for one system: replay, initial checks, continuation."""
    state = SystemState(
        r=int(r0),
        sum_y=[int(x) for x in sum_y0],
        lb_num=[int(x) for x in lb_num0],
        lb_den=[int(x) for x in lb_den0],
        ub_num=[int(x) for x in ub_num0],
        ub_den=[int(x) for x in ub_den0],
        last=[int(x) for x in last0],
        y_key=StreamKey(y_seed, y_tag),
        u_key=StreamKey(u_seed, u_tag),
    )
    heur = _HEURISTICS[int(heuristic)]
    thresholds = _unflatten(
        [Fraction(int(n_), int(d_)) for n_, d_ in zip(h_num, h_den)], d
    )
    u_key = stream_key(u_seed, u_tag)
    if heur is Heuristic.N:
        u_values: list[float] = []
    else:
        u_values = [_uniform_from_key(u_key, n) for n in range(1, state.r + 1)]
    run = init_later_pass(state, thresholds, [int(x) for x in H], heur, u_values)
    run.run_initial_checks()
    while not run.done and (obs_cap == 0 or state.r < obs_cap):
        n = state.r + 1
        y = draw_y(kind, sysp, inv, cdf, s, y_seed, y_tag, n)
        u = None if heur is Heuristic.N else _uniform_from_key(u_key, n)
        run.step(y, u)
    out = {
        "decisions": _flatten_i8(run.decisions),
        "stages": _flatten_int(run.stages),
        "decided_by": _flatten_i8(run.decided_by),
        "sum_i": _flatten_int(run.sum_i),
    }
    out.update(_state_arrays(state))
    return out


def rf_system(
    kind, sysp, inv, cdf, s, d, targets_f, eps, eta, n0, b, y_seed, y_tag, cap_batches
) -> dict:
    """Single-system batch-means run; observations counted in raw units."""
    run = RFSystem.begin(_unflatten(targets_f, d), list(eps), list(eta), int(n0), int(b))
    n = 0  # raw replication index
    while True:
        counts = [0] * s
        for _ in range(int(b)):
            n += 1
            y = draw_y(kind, sysp, inv, cdf, s, y_seed, y_tag, n)
            for ell in range(s):
                counts[ell] += int(y[ell])
        run.add_batch(counts)
        if run.r >= int(n0):
            run.check()
            if run.done or (cap_batches != 0 and run.r >= cap_batches):
                break
    return {
        "decisions": _flatten_i8(run.decisions),
        "stages": _flatten_int(run.stages),
        "r_batches": run.r,
        "obs_raw": run.obs_raw,
        "bbar": np.asarray(
            [run.total_counts[ell] / (run.r * run.b) for ell in range(s)], dtype=np.float64
        ),
        "svar": np.asarray(run.svar, dtype=np.float64),
    }


def truth_counts(kind, sysp, inv, cdf, s, n, seed, tag):
    counts = np.zeros(s, dtype=np.int64)
    for rep in range(1, int(n) + 1):
        y = draw_y(kind, sysp, inv, cdf, s, seed, tag, rep)
        for ell in range(s):
            counts[ell] += int(y[ell])
    return counts


def simulate_walks(p: float, h: float, H: int, n_walks: int, seed: int):
    """Absorption Monte Carlo: returns (walks absorbed at -H, total steps)."""
    lower = 0
    steps = 0
    for w in range(n_walks):
        yk = stream_key(seed, 2 * w)
        uk = stream_key(seed, 2 * w + 1)
        pos = 0
        n = 0
        while -H < pos < H:
            n += 1
            yv = 1 if _uniform_from_key(yk, n) <= p else 0
            iv = 1 if _uniform_from_key(uk, n) <= h else 0
            pos += yv - iv
        steps += n
        if pos <= -H:
            lower += 1
    return lower, steps
