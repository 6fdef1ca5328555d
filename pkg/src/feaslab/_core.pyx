# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: counter-based streams, the first-pass random walk,
later-pass heuristics, the batch-means baseline, the inventory simulator,
and truth estimation.

Mirrors _core_py operation for operation; the parity tests assert
bit-identical outputs.  Exact comparisons use 128-bit integer cross
multiplication; floats follow the same operation order as the pure backend
(compiled with FP contraction off so results agree bitwise).
"""

import numpy as np

from .multipass import CrossedEnvelopeFault

cdef extern from *:
    ctypedef long long int128 "__int128"

ctypedef unsigned long long u64
ctypedef long long i64
ctypedef signed char i8

cdef u64 GOLDEN = 0x9E3779B97F4A7C15UL
cdef double INV53 = 1.0 / 9007199254740992.0

BACKEND = "compiled"

KIND_SYNTH_SHARED = 0
KIND_SYNTH_INDEP = 1
KIND_INVENTORY = 2

cdef i8 DEC_PEND = -1
cdef i8 DEC_INF = 0
cdef i8 DEC_FEAS = 1

cdef i8 LAST_NONE = 0
cdef i8 LAST_LB = 1
cdef i8 LAST_UB = 2

cdef i8 BY_WALK = 0
cdef i8 BY_INIT_N = 1
cdef i8 BY_INIT_N_LAST = 2
cdef i8 BY_INIT_B = 3
cdef i8 BY_INIT_B_LAST = 4
cdef i8 BY_CONT_N = 5
cdef i8 BY_CONT_B = 6


def backend_name():
    return BACKEND


cdef inline u64 _mix64(u64 z) noexcept nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9UL
    z ^= z >> 27
    z *= 0x94D049BB133111EBUL
    z ^= z >> 31
    return z


cdef inline u64 _skey(u64 seed, u64 tag) noexcept nogil:
    return _mix64(_mix64(seed) ^ _mix64(tag + GOLDEN))


cdef inline double _u01(u64 key, u64 n) noexcept nogil:
    return <double>(_mix64(key + n * GOLDEN) >> 11) * INV53


def uniform(u64 seed, u64 tag, i64 n):
    return _u01(_skey(seed, tag), <u64>n)


cdef inline int _invert_cdf(const double* cdf, int length, double u) noexcept nogil:
    cdef int lo = 0
    cdef int hi = length - 1
    cdef int mid
    while lo < hi:
        mid = (lo + hi) // 2
        if u < cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline void _inventory_bits(const double* sysp, const double* inv,
                                 const double* cdf, int cdf_len,
                                 u64 y_key, i64 n, i8* out) noexcept nogil:
    cdef double s_small = sysp[0]
    cdef double S_big = sysp[1]
    cdef int periods = <int>inv[0]
    cdef i64 base = (n - 1) * periods
    cdef double onhand = S_big
    cdef double cost = 0.0
    cdef double dd
    cdef int t
    cdef i8 stockout = 0
    for t in range(1, periods + 1):
        if onhand < s_small:
            cost += inv[2] + inv[1] * (S_big - onhand)
            onhand = S_big
        dd = <double>_invert_cdf(cdf, cdf_len, _u01(y_key, <u64>(base + t)))
        if dd > onhand:
            cost += inv[4] * (dd - onhand)
            onhand = 0.0
            stockout = 1
        else:
            onhand -= dd
        cost += inv[3] * onhand
    out[0] = 1 if cost > inv[5] else 0
    out[1] = stockout


cdef inline void _draw_bits(int kind, const double* sysp, const double* inv,
                            const double* cdf, int cdf_len, int s,
                            u64 y_key, i64 n, i8* out) noexcept nogil:
    cdef double v
    cdef int ell
    cdef i64 base
    if kind == 0:
        v = _u01(y_key, <u64>n)
        for ell in range(s):
            out[ell] = 1 if v <= sysp[ell] else 0
    elif kind == 1:
        base = (n - 1) * s
        for ell in range(s):
            out[ell] = 1 if _u01(y_key, <u64>(base + ell + 1)) <= sysp[ell] else 0
    else:
        _inventory_bits(sysp, inv, cdf, cdf_len, y_key, n, out)


cdef inline const double* _ptr(double[::1] a) noexcept nogil:
    if a.shape[0] > 0:
        return &a[0]
    return NULL


def inventory_year(double s_small, double S_big, double[::1] inv, double[::1] cdf,
                   u64 y_seed, u64 y_tag, i64 n):
    # replicates _inventory_bits but returns the cost (test/inspection path)
    cdef u64 key = _skey(y_seed, y_tag)
    cdef int periods = <int>inv[0]
    cdef i64 base = (n - 1) * periods
    cdef double onhand = S_big
    cdef double cost = 0.0
    cdef double dd
    cdef int t
    cdef int stockout = 0
    for t in range(1, periods + 1):
        if onhand < s_small:
            cost += inv[2] + inv[1] * (S_big - onhand)
            onhand = S_big
        dd = <double>_invert_cdf(_ptr(cdf), cdf.shape[0], _u01(key, <u64>(base + t)))
        if dd > onhand:
            cost += inv[4] * (dd - onhand)
            onhand = 0.0
            stockout = 1
        else:
            onhand -= dd
        cost += inv[3] * onhand
    return cost, stockout


def draw_y(int kind, double[::1] sysp, double[::1] inv, double[::1] cdf, int s,
           u64 y_seed, u64 y_tag, i64 n):
    out = np.zeros(s, dtype=np.int8)
    cdef i8[::1] view = out
    _draw_bits(kind, &sysp[0], _ptr(inv), _ptr(cdf), cdf.shape[0], s,
               _skey(y_seed, y_tag), n, &view[0])
    return out


def pass1_system(int kind, double[::1] sysp, double[::1] inv, double[::1] cdf,
                 int s, i64[::1] d, double[::1] h_f, i64[::1] H,
                 u64 y_seed, u64 y_tag, u64 u_seed, u64 u_tag, i64 obs_cap):
    cdef int nt = 0
    cdef int ell, m
    for ell in range(s):
        nt += <int>d[ell]

    offsets_arr = np.zeros(s + 1, dtype=np.int64)
    cdef i64[::1] offsets = offsets_arr
    for ell in range(s):
        offsets[ell + 1] = offsets[ell] + d[ell]

    decisions_arr = np.full(nt, DEC_PEND, dtype=np.int8)
    stages_arr = np.zeros(nt, dtype=np.int64)
    sum_i_arr = np.zeros(nt, dtype=np.int64)
    sum_y_arr = np.zeros(s, dtype=np.int64)
    lb_num_arr = np.full(s, -1, dtype=np.int64)
    lb_den_arr = np.zeros(s, dtype=np.int64)
    ub_num_arr = np.ones(s, dtype=np.int64)
    ub_den_arr = np.zeros(s, dtype=np.int64)
    last_arr = np.zeros(s, dtype=np.int8)
    pendc_arr = np.asarray(d, dtype=np.int64).copy()
    ybits_arr = np.zeros(s, dtype=np.int8)

    cdef i8[::1] decisions = decisions_arr
    cdef i64[::1] stages = stages_arr
    cdef i64[::1] sum_i = sum_i_arr
    cdef i64[::1] sum_y = sum_y_arr
    cdef i64[::1] lb_num = lb_num_arr
    cdef i64[::1] lb_den = lb_den_arr
    cdef i64[::1] ub_num = ub_num_arr
    cdef i64[::1] ub_den = ub_den_arr
    cdef i8[::1] last = last_arr
    cdef i64[::1] pendc = pendc_arr
    cdef i8[::1] ybits = ybits_arr

    cdef u64 y_key = _skey(y_seed, y_tag)
    cdef u64 u_key = _skey(u_seed, u_tag)
    cdef const double* sysp_p = &sysp[0]
    cdef const double* inv_p = _ptr(inv)
    cdef const double* cdf_p = _ptr(cdf)
    cdef int cdf_len = cdf.shape[0]

    cdef i64 remaining = 0
    for ell in range(s):
        remaining += d[ell]

    cdef i64 r = 0
    cdef i64 HH, cand, sy, si
    cdef double u
    with nogil:
        while remaining > 0 and (obs_cap == 0 or r < obs_cap):
            r += 1
            _draw_bits(kind, sysp_p, inv_p, cdf_p, cdf_len, s, y_key, r, &ybits[0])
            for ell in range(s):
                sum_y[ell] += ybits[ell]
            u = _u01(u_key, <u64>r)
            for ell in range(s):
                if pendc[ell] == 0:
                    continue
                HH = H[ell]
                sy = sum_y[ell]
                cand = sy - HH
                if <int128>cand * lb_den[ell] > <int128>lb_num[ell] * r:
                    lb_num[ell] = cand
                    lb_den[ell] = r
                    last[ell] = LAST_LB
                cand = sy + HH
                if <int128>cand * ub_den[ell] < <int128>ub_num[ell] * r:
                    ub_num[ell] = cand
                    ub_den[ell] = r
                    last[ell] = LAST_UB
                for m in range(<int>offsets[ell], <int>offsets[ell + 1]):
                    if decisions[m] != DEC_PEND:
                        continue
                    if u <= h_f[m]:
                        sum_i[m] += 1
                    si = sum_i[m]
                    if sy + HH <= si:
                        decisions[m] = DEC_FEAS
                    elif sy - HH >= si:
                        decisions[m] = DEC_INF
                    else:
                        continue
                    stages[m] = r
                    pendc[ell] -= 1
                    remaining -= 1

    decided_by_arr = np.full(nt, -1, dtype=np.int8)
    cdef i8[::1] decided_by = decided_by_arr
    for m in range(nt):
        if decisions[m] != DEC_PEND:
            decided_by[m] = BY_WALK

    return {
        "decisions": decisions_arr,
        "stages": stages_arr,
        "decided_by": decided_by_arr,
        "sum_i": sum_i_arr,
        "r": int(r),
        "sum_y": sum_y_arr,
        "lb_num": lb_num_arr,
        "lb_den": lb_den_arr,
        "ub_num": ub_num_arr,
        "ub_den": ub_den_arr,
        "last": last_arr,
    }


def multipass_system(int kind, double[::1] sysp, double[::1] inv, double[::1] cdf,
                     int s, i64[::1] d, double[::1] h_f, i64[::1] h_num, i64[::1] h_den,
                     i64[::1] H, int heuristic,
                     u64 y_seed, u64 y_tag, u64 u_seed, u64 u_tag,
                     i64 r0, i64[::1] sum_y0,
                     i64[::1] lb_num0, i64[::1] lb_den0,
                     i64[::1] ub_num0, i64[::1] ub_den0, i8[::1] last0,
                     i64 obs_cap):
    # heuristic: 0 = dummy-mean, 1 = threshold, 2 = combined
    cdef int nt = 0
    cdef int ell, m
    for ell in range(s):
        nt += <int>d[ell]

    offsets_arr = np.zeros(s + 1, dtype=np.int64)
    cdef i64[::1] offsets = offsets_arr
    for ell in range(s):
        offsets[ell + 1] = offsets[ell] + d[ell]

    decisions_arr = np.full(nt, DEC_PEND, dtype=np.int8)
    stages_arr = np.zeros(nt, dtype=np.int64)
    decided_by_arr = np.full(nt, -1, dtype=np.int8)
    sum_i_arr = np.zeros(nt, dtype=np.int64)
    sum_y_arr = np.asarray(sum_y0, dtype=np.int64).copy()
    lb_num_arr = np.asarray(lb_num0, dtype=np.int64).copy()
    lb_den_arr = np.asarray(lb_den0, dtype=np.int64).copy()
    ub_num_arr = np.asarray(ub_num0, dtype=np.int64).copy()
    ub_den_arr = np.asarray(ub_den0, dtype=np.int64).copy()
    last_arr = np.asarray(last0, dtype=np.int8).copy()
    pendc_arr = np.asarray(d, dtype=np.int64).copy()
    ybits_arr = np.zeros(s, dtype=np.int8)

    cdef i8[::1] decisions = decisions_arr
    cdef i64[::1] stages = stages_arr
    cdef i8[::1] decided_by = decided_by_arr
    cdef i64[::1] sum_i = sum_i_arr
    cdef i64[::1] sum_y = sum_y_arr
    cdef i64[::1] lb_num = lb_num_arr
    cdef i64[::1] lb_den = lb_den_arr
    cdef i64[::1] ub_num = ub_num_arr
    cdef i64[::1] ub_den = ub_den_arr
    cdef i8[::1] last = last_arr
    cdef i64[::1] pendc = pendc_arr
    cdef i8[::1] ybits = ybits_arr

    cdef u64 y_key = _skey(y_seed, y_tag)
    cdef u64 u_key = _skey(u_seed, u_tag)
    cdef const double* sysp_p = &sysp[0]
    cdef const double* inv_p = _ptr(inv)
    cdef const double* cdf_p = _ptr(cdf)
    cdef int cdf_len = cdf.shape[0]

    cdef i64 remaining = nt
    cdef i64 r = r0
    cdef i64 n
    cdef double u

    # dummy replay over the already-collected replications (not under N)
    if heuristic != 1 and nt > 0:
        with nogil:
            for n in range(1, r0 + 1):
                u = _u01(u_key, <u64>n)
                for m in range(nt):
                    if u <= h_f[m]:
                        sum_i[m] += 1

    # initial checks at r0, in threshold order per constraint
    cdef bint ub_le, lb_ge
    cdef i64 num, den
    cdef int fault = 0
    for ell in range(s):
        for m in range(<int>offsets[ell], <int>offsets[ell + 1]):
            if heuristic == 1 or heuristic == 2:
                num = h_num[m]
                den = h_den[m]
                ub_le = <int128>ub_num[ell] * den <= <int128>num * ub_den[ell]
                lb_ge = <int128>lb_num[ell] * den >= <int128>num * lb_den[ell]
                if ub_le and not lb_ge:
                    decisions[m] = DEC_FEAS
                elif lb_ge and not ub_le:
                    decisions[m] = DEC_INF
                elif ub_le and lb_ge:
                    if last[ell] == LAST_UB:
                        decisions[m] = DEC_INF
                    elif last[ell] == LAST_LB:
                        decisions[m] = DEC_FEAS
                    else:
                        fault = 1
                if decisions[m] != DEC_PEND:
                    stages[m] = r0
                    decided_by[m] = BY_INIT_N_LAST if (ub_le and lb_ge) else BY_INIT_N
                    pendc[ell] -= 1
                    remaining -= 1
                    continue
            if heuristic == 0 or heuristic == 2:
                num = sum_i[m]
                den = r0
                ub_le = <int128>ub_num[ell] * den <= <int128>num * ub_den[ell]
                lb_ge = <int128>lb_num[ell] * den >= <int128>num * lb_den[ell]
                if ub_le and not lb_ge:
                    decisions[m] = DEC_FEAS
                elif lb_ge and not ub_le:
                    decisions[m] = DEC_INF
                elif ub_le and lb_ge:
                    if last[ell] == LAST_UB:
                        decisions[m] = DEC_INF
                    elif last[ell] == LAST_LB:
                        decisions[m] = DEC_FEAS
                    else:
                        fault = 1
                if decisions[m] != DEC_PEND:
                    stages[m] = r0
                    decided_by[m] = BY_INIT_B_LAST if (ub_le and lb_ge) else BY_INIT_B
                    pendc[ell] -= 1
                    remaining -= 1
    if fault:
        raise CrossedEnvelopeFault(
            "crossed envelopes with LAST unset; the prior pass never ran"
        )

    cdef i64 HH, cand, sy, si
    cdef i8 dec, code
    with nogil:
        while remaining > 0 and (obs_cap == 0 or r < obs_cap):
            r += 1
            _draw_bits(kind, sysp_p, inv_p, cdf_p, cdf_len, s, y_key, r, &ybits[0])
            for ell in range(s):
                sum_y[ell] += ybits[ell]
            if heuristic != 1:
                u = _u01(u_key, <u64>r)
            for ell in range(s):
                if pendc[ell] == 0:
                    continue
                HH = H[ell]
                sy = sum_y[ell]
                cand = sy - HH
                if <int128>cand * lb_den[ell] > <int128>lb_num[ell] * r:
                    lb_num[ell] = cand
                    lb_den[ell] = r
                    last[ell] = LAST_LB
                cand = sy + HH
                if <int128>cand * ub_den[ell] < <int128>ub_num[ell] * r:
                    ub_num[ell] = cand
                    ub_den[ell] = r
                    last[ell] = LAST_UB
                for m in range(<int>offsets[ell], <int>offsets[ell + 1]):
                    if decisions[m] != DEC_PEND:
                        continue
                    dec = DEC_PEND
                    code = BY_CONT_N
                    if heuristic == 1 or heuristic == 2:
                        if <int128>ub_num[ell] * h_den[m] <= <int128>h_num[m] * ub_den[ell]:
                            dec = DEC_FEAS
                        elif <int128>lb_num[ell] * h_den[m] >= <int128>h_num[m] * lb_den[ell]:
                            dec = DEC_INF
                    if dec == DEC_PEND and (heuristic == 0 or heuristic == 2):
                        if u <= h_f[m]:
                            sum_i[m] += 1
                        si = sum_i[m]
                        code = BY_CONT_B
                        if <int128>ub_num[ell] * r <= <int128>si * ub_den[ell]:
                            dec = DEC_FEAS
                        elif <int128>lb_num[ell] * r >= <int128>si * lb_den[ell]:
                            dec = DEC_INF
                    if dec != DEC_PEND:
                        decisions[m] = dec
                        stages[m] = r
                        decided_by[m] = code
                        pendc[ell] -= 1
                        remaining -= 1

    return {
        "decisions": decisions_arr,
        "stages": stages_arr,
        "decided_by": decided_by_arr,
        "sum_i": sum_i_arr,
        "r": int(r),
        "sum_y": sum_y_arr,
        "lb_num": lb_num_arr,
        "lb_den": lb_den_arr,
        "ub_num": ub_num_arr,
        "ub_den": ub_den_arr,
        "last": last_arr,
    }


def rf_system(int kind, double[::1] sysp, double[::1] inv, double[::1] cdf,
              int s, i64[::1] d, double[::1] targets_f,
              double[::1] eps, double[::1] eta, i64 n0, i64 b,
              u64 y_seed, u64 y_tag, i64 cap_batches):
    cdef int nt = 0
    cdef int ell, m, j
    for ell in range(s):
        nt += <int>d[ell]

    offsets_arr = np.zeros(s + 1, dtype=np.int64)
    cdef i64[::1] offsets = offsets_arr
    for ell in range(s):
        offsets[ell + 1] = offsets[ell] + d[ell]

    decisions_arr = np.full(nt, DEC_PEND, dtype=np.int8)
    stages_arr = np.zeros(nt, dtype=np.int64)
    total_arr = np.zeros(s, dtype=np.int64)
    first_arr = np.zeros(s * n0, dtype=np.int64)
    svar_arr = np.zeros(s, dtype=np.float64)
    pendc_arr = np.asarray(d, dtype=np.int64).copy()
    counts_arr = np.zeros(s, dtype=np.int64)
    ybits_arr = np.zeros(s, dtype=np.int8)

    cdef i8[::1] decisions = decisions_arr
    cdef i64[::1] stages = stages_arr
    cdef i64[::1] total = total_arr
    cdef i64[::1] first = first_arr
    cdef double[::1] svar = svar_arr
    cdef i64[::1] pendc = pendc_arr
    cdef i64[::1] counts = counts_arr
    cdef i8[::1] ybits = ybits_arr

    cdef u64 y_key = _skey(y_seed, y_tag)
    cdef const double* sysp_p = &sysp[0]
    cdef const double* inv_p = _ptr(inv)
    cdef const double* cdf_p = _ptr(cdf)
    cdef int cdf_len = cdf.shape[0]

    cdef i64 remaining = nt
    cdef i64 r = 0
    cdef i64 n = 0
    cdef i64 bb
    cdef double mean, acc, diff, bbar, rad, half
    with nogil:
        while True:
            for ell in range(s):
                counts[ell] = 0
            for bb in range(b):
                n += 1
                _draw_bits(kind, sysp_p, inv_p, cdf_p, cdf_len, s, y_key, n, &ybits[0])
                for ell in range(s):
                    counts[ell] += ybits[ell]
            r += 1
            for ell in range(s):
                total[ell] += counts[ell]
                if r <= n0:
                    first[ell * n0 + (r - 1)] = counts[ell]
            if r == n0:
                for ell in range(s):
                    mean = <double>total[ell] / <double>(n0 * b)
                    acc = 0.0
                    for j in range(<int>n0):
                        diff = <double>first[ell * n0 + j] / <double>b - mean
                        acc += diff * diff
                    svar[ell] = acc / <double>(n0 - 1)
            if r >= n0:
                for ell in range(s):
                    if pendc[ell] == 0:
                        continue
                    bbar = <double>total[ell] / <double>(r * b)
                    rad = (<double>(n0 - 1)) * eta[ell] * svar[ell] / eps[ell] \
                        - eps[ell] * <double>r / 2.0
                    if rad < 0.0:
                        rad = 0.0
                    half = rad / <double>r
                    for m in range(<int>offsets[ell], <int>offsets[ell + 1]):
                        if decisions[m] != DEC_PEND:
                            continue
                        if bbar + half <= targets_f[m]:
                            decisions[m] = DEC_FEAS
                        elif bbar - half >= targets_f[m]:
                            decisions[m] = DEC_INF
                        else:
                            continue
                        stages[m] = r
                        pendc[ell] -= 1
                        remaining -= 1
                if remaining == 0 or (cap_batches != 0 and r >= cap_batches):
                    break

    bbar_arr = np.zeros(s, dtype=np.float64)
    cdef double[::1] bbar_v = bbar_arr
    for ell in range(s):
        bbar_v[ell] = <double>total[ell] / <double>(r * b)

    return {
        "decisions": decisions_arr,
        "stages": stages_arr,
        "r_batches": int(r),
        "obs_raw": int(r * b),
        "bbar": bbar_arr,
        "svar": svar_arr,
    }


def truth_counts(int kind, double[::1] sysp, double[::1] inv, double[::1] cdf,
                 int s, i64 n, u64 seed, u64 tag):
    counts_arr = np.zeros(s, dtype=np.int64)
    ybits_arr = np.zeros(s, dtype=np.int8)
    cdef i64[::1] counts = counts_arr
    cdef i8[::1] ybits = ybits_arr
    cdef u64 y_key = _skey(seed, tag)
    cdef const double* sysp_p = &sysp[0]
    cdef const double* inv_p = _ptr(inv)
    cdef const double* cdf_p = _ptr(cdf)
    cdef int cdf_len = cdf.shape[0]
    cdef i64 rep
    cdef int ell
    with nogil:
        for rep in range(1, n + 1):
            _draw_bits(kind, sysp_p, inv_p, cdf_p, cdf_len, s, y_key, rep, &ybits[0])
            for ell in range(s):
                counts[ell] += ybits[ell]
    return counts_arr


def simulate_walks(double p, double h, i64 H, i64 n_walks, u64 seed):
    cdef i64 lower = 0
    cdef i64 steps = 0
    cdef i64 w, n, pos
    cdef u64 yk, uk
    cdef int yv, iv
    with nogil:
        for w in range(n_walks):
            yk = _skey(seed, <u64>(2 * w))
            uk = _skey(seed, <u64>(2 * w + 1))
            pos = 0
            n = 0
            while -H < pos < H:
                n += 1
                yv = 1 if _u01(yk, <u64>n) <= p else 0
                iv = 1 if _u01(uk, <u64>n) <= h else 0
                pos += yv - iv
            steps += n
            if pos <= -H:
                lower += 1
    return int(lower), int(steps)
