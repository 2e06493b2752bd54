# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel for the five-component profile system.

This mirrors the pure-Python adaptive core in integrator.py operation for
operation: identical coefficients, identical expression grouping and
evaluation order, libm pow, and the extension is compiled with
-ffp-contract=off.  Trajectories produced by the two backends are
therefore expected to agree bit for bit (asserted by the backend tests).
Any change to the loop in integrator.py must be replicated here.
"""

from libc.math cimport INFINITY as INF
from libc.math cimport fabs, isfinite, pow
from libc.stdlib cimport free, malloc, realloc

import numpy as np

# Dormand-Prince 5(4) coefficients (keep in sync with integrator.py).
cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0

cdef double BI1_1 = 1.0
cdef double BI1_2 = -183.0 / 64.0
cdef double BI1_3 = 37.0 / 12.0
cdef double BI1_4 = -145.0 / 128.0
cdef double BI3_2 = 1500.0 / 371.0
cdef double BI3_3 = -1000.0 / 159.0
cdef double BI3_4 = 1000.0 / 371.0
cdef double BI4_2 = -125.0 / 32.0
cdef double BI4_3 = 125.0 / 12.0
cdef double BI4_4 = -375.0 / 64.0
cdef double BI5_2 = 9477.0 / 3392.0
cdef double BI5_3 = -729.0 / 106.0
cdef double BI5_4 = 25515.0 / 6784.0
cdef double BI6_2 = -11.0 / 7.0
cdef double BI6_3 = 11.0 / 3.0
cdef double BI6_4 = -55.0 / 28.0
cdef double BI7_2 = 3.0 / 2.0
cdef double BI7_3 = -4.0
cdef double BI7_4 = 5.0 / 2.0

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0
cdef double ACCEPT_EXP = -0.14
cdef double PI_EXP = 0.08
cdef double REJECT_EXP = -0.2
cdef double ERR_TINY = 1e-16
cdef double EVENT_RELTOL = 1e-10

# termination codes (match integrator._KIND_BY_CODE)
cdef int T_RMAX = 0
cdef int T_BLOWUP = 1
cdef int T_SINGULAR = 2
cdef int T_UNDERFLOW = 3
cdef int T_BUDGET = 4
cdef int T_NONFINITE = 5

cdef int S_OK = 0
cdef int S_SINGULAR = 1
cdef int S_NONFINITE = 2


cdef struct Phys:
    double c_v
    double r_gas
    double kappa
    double mu
    double lam
    double nu
    double dm1
    double guard_eps


cdef int _rhs5(double r, double* y, double* k, Phys* c) noexcept nogil:
    cdef double p = y[0]
    cdef double u = y[1]
    cdef double v = y[2]
    cdef double theta = y[3]
    cdef double s = y[4]
    cdef double w, div_term, dp, dv, ds
    if not (isfinite(r) and isfinite(p) and isfinite(u) and isfinite(v)
            and isfinite(theta) and isfinite(s)):
        return S_NONFINITE
    w = r * 0.5 + u
    if fabs(w) <= c.guard_eps * r:
        return S_SINGULAR
    div_term = v + c.dm1 * u / r
    dp = -(p * div_term) / w
    dv = ((0.5 * p * u + p * w * v + c.r_gas * (dp * theta + p * s)) / c.nu
          - c.dm1 * v / r + c.dm1 * u / (r * r))
    ds = ((c.c_v * p * theta + c.c_v * p * w * s
           + c.r_gas * p * theta * div_term
           - 2.0 * c.mu * (v * v + c.dm1 * (u * u) / (r * r))
           - c.lam * div_term * div_term) / c.kappa - c.dm1 * s / r)
    if not (isfinite(dp) and isfinite(dv) and isfinite(ds)):
        return S_NONFINITE
    k[0] = dp
    k[1] = v
    k[2] = dv
    k[3] = s
    k[4] = ds
    return S_OK


cdef double _maxabs5(double* y) noexcept nogil:
    cdef double m = 0.0
    cdef double a
    cdef int i
    for i in range(5):
        a = fabs(y[i])
        if a > m:
            m = a
    return m


cdef void _dense5(double* yl, double* ks, double h, double t, double* out) noexcept nogil:
    # ks is the 7x5 stage block, row-major
    cdef double p1 = t * (BI1_1 + t * (BI1_2 + t * (BI1_3 + t * BI1_4)))
    cdef double p3 = t * (t * (BI3_2 + t * (BI3_3 + t * BI3_4)))
    cdef double p4 = t * (t * (BI4_2 + t * (BI4_3 + t * BI4_4)))
    cdef double p5 = t * (t * (BI5_2 + t * (BI5_3 + t * BI5_4)))
    cdef double p6 = t * (t * (BI6_2 + t * (BI6_3 + t * BI6_4)))
    cdef double p7 = t * (t * (BI7_2 + t * (BI7_3 + t * BI7_4)))
    cdef int i
    for i in range(5):
        out[i] = yl[i] + h * (ks[0 * 5 + i] * p1 + ks[2 * 5 + i] * p3
                              + ks[3 * 5 + i] * p4 + ks[4 * 5 + i] * p5
                              + ks[5 * 5 + i] * p6 + ks[6 * 5 + i] * p7)


cdef int _bisect_sing(double* yl, double* ks, double h, double r_left,
                      double r_right, double w_l, double guard_eps,
                      double* r_ev, double* y_ev) noexcept nogil:
    cdef double th_lo = 0.0
    cdef double th_hi = (r_right - r_left) / h
    cdef double r_lo = r_left
    cdef double r_hi = r_right
    cdef int have_hi = 0
    cdef int it = 0
    cdef double th_mid, r_mid, ww
    cdef double y_mid[5]
    while (r_hi - r_lo) > EVENT_RELTOL * r_hi and it < 200:
        th_mid = 0.5 * (th_lo + th_hi)
        r_mid = r_left + th_mid * h
        if r_mid <= r_lo or r_mid >= r_hi:
            break
        _dense5(yl, ks, h, th_mid, y_mid)
        ww = r_mid * 0.5 + y_mid[1]
        if ((ww > 0.0) != (w_l > 0.0)) or (fabs(ww) - guard_eps * r_mid <= 0.0):
            th_hi = th_mid
            r_hi = r_mid
            y_ev[0] = y_mid[0]; y_ev[1] = y_mid[1]; y_ev[2] = y_mid[2]
            y_ev[3] = y_mid[3]; y_ev[4] = y_mid[4]
            have_hi = 1
        else:
            th_lo = th_mid
            r_lo = r_mid
        it += 1
    if not have_hi:
        _dense5(yl, ks, h, th_hi, y_ev)
    r_ev[0] = r_hi
    return 0


cdef int _bisect_blow(double* yl, double* ks, double h, double r_left,
                      double r_right, double M,
                      double* r_ev, double* y_ev) noexcept nogil:
    cdef double th_lo = 0.0
    cdef double th_hi = (r_right - r_left) / h
    cdef double r_lo = r_left
    cdef double r_hi = r_right
    cdef int have_hi = 0
    cdef int it = 0
    cdef double th_mid, r_mid
    cdef double y_mid[5]
    while (r_hi - r_lo) > EVENT_RELTOL * r_hi and it < 200:
        th_mid = 0.5 * (th_lo + th_hi)
        r_mid = r_left + th_mid * h
        if r_mid <= r_lo or r_mid >= r_hi:
            break
        _dense5(yl, ks, h, th_mid, y_mid)
        if _maxabs5(y_mid) >= M:
            th_hi = th_mid
            r_hi = r_mid
            y_ev[0] = y_mid[0]; y_ev[1] = y_mid[1]; y_ev[2] = y_mid[2]
            y_ev[3] = y_mid[3]; y_ev[4] = y_mid[4]
            have_hi = 1
        else:
            th_lo = th_mid
            r_lo = r_mid
        it += 1
    if not have_hi:
        _dense5(yl, ks, h, th_hi, y_ev)
    r_ev[0] = r_hi
    return 0


cdef struct Buffers:
    double* rl
    double* rr
    double* hh
    double* yl
    double* yr
    double* kk
    long cap
    long m


cdef int _grow(Buffers* B) noexcept nogil:
    cdef long new_cap = B.cap * 2
    cdef double* p
    p = <double*> realloc(B.rl, new_cap * sizeof(double))
    if p == NULL:
        return 1
    B.rl = p
    p = <double*> realloc(B.rr, new_cap * sizeof(double))
    if p == NULL:
        return 1
    B.rr = p
    p = <double*> realloc(B.hh, new_cap * sizeof(double))
    if p == NULL:
        return 1
    B.hh = p
    p = <double*> realloc(B.yl, new_cap * 5 * sizeof(double))
    if p == NULL:
        return 1
    B.yl = p
    p = <double*> realloc(B.yr, new_cap * 5 * sizeof(double))
    if p == NULL:
        return 1
    B.yr = p
    p = <double*> realloc(B.kk, new_cap * 35 * sizeof(double))
    if p == NULL:
        return 1
    B.kk = p
    B.cap = new_cap
    return 0


def integrate_profile(double r0, y0, double c_v, double r_gas, double kappa,
                      double mu, double lam, int d, double rtol, double atol,
                      double h_init, double h_min, double h_max, double r_max,
                      double blowup_threshold, long max_steps, double guard_eps):
    """Adaptive integration of the profile system; h_init < 0 selects the
    automatic start step.  Returns raw step arrays plus termination data."""
    cdef Phys phys
    phys.c_v = c_v
    phys.r_gas = r_gas
    phys.kappa = kappa
    phys.mu = mu
    phys.lam = lam
    phys.nu = 2.0 * mu + lam
    phys.dm1 = <double> (d - 1)
    phys.guard_eps = guard_eps

    cdef double y[5]
    cdef int i
    for i in range(5):
        y[i] = y0[i]

    cdef Buffers B
    B.cap = 1024
    B.m = 0
    B.rl = <double*> malloc(B.cap * sizeof(double))
    B.rr = <double*> malloc(B.cap * sizeof(double))
    B.hh = <double*> malloc(B.cap * sizeof(double))
    B.yl = <double*> malloc(B.cap * 5 * sizeof(double))
    B.yr = <double*> malloc(B.cap * 5 * sizeof(double))
    B.kk = <double*> malloc(B.cap * 35 * sizeof(double))
    if (B.rl == NULL or B.rr == NULL or B.hh == NULL or B.yl == NULL
            or B.yr == NULL or B.kk == NULL):
        _free_buffers(&B)
        raise MemoryError("kernel buffer allocation failed")

    cdef int term_kind = T_RMAX
    cdef double term_r = r0
    cdef long attempts = 0
    cdef int failed = 0

    with nogil:
        term_kind = _main_loop(r0, y, &phys, rtol, atol, h_init, h_min, h_max,
                               r_max, blowup_threshold, max_steps, &B,
                               &term_r, &attempts, &failed)

    if failed:
        _free_buffers(&B)
        raise MemoryError("kernel buffer growth failed")

    cdef long m = B.m
    rl_arr = np.empty(m)
    rr_arr = np.empty(m)
    hh_arr = np.empty(m)
    yl_arr = np.empty((m, 5))
    yr_arr = np.empty((m, 5))
    kk_arr = np.empty((m, 7, 5))
    cdef double[::1] rl_v
    cdef double[::1] rr_v
    cdef double[::1] hh_v
    cdef double[:, ::1] yl_v
    cdef double[:, ::1] yr_v
    cdef double[:, :, ::1] kk_v
    cdef long j
    cdef int st
    if m:
        rl_v = rl_arr
        rr_v = rr_arr
        hh_v = hh_arr
        yl_v = yl_arr
        yr_v = yr_arr
        kk_v = kk_arr
        for j in range(m):
            rl_v[j] = B.rl[j]
            rr_v[j] = B.rr[j]
            hh_v[j] = B.hh[j]
            for i in range(5):
                yl_v[j, i] = B.yl[j * 5 + i]
                yr_v[j, i] = B.yr[j * 5 + i]
            for st in range(7):
                for i in range(5):
                    kk_v[j, st, i] = B.kk[j * 35 + st * 5 + i]
    _free_buffers(&B)

    return (rl_arr, rr_arr, hh_arr, yl_arr, yr_arr, kk_arr,
            term_kind, term_r, int(m), int(attempts))


cdef void _free_buffers(Buffers* B) noexcept:
    if B.rl != NULL:
        free(B.rl)
    if B.rr != NULL:
        free(B.rr)
    if B.hh != NULL:
        free(B.hh)
    if B.yl != NULL:
        free(B.yl)
    if B.yr != NULL:
        free(B.yr)
    if B.kk != NULL:
        free(B.kk)


cdef int _main_loop(double r0, double* y_in, Phys* phys, double rtol,
                    double atol, double h_init, double h_min, double h_max,
                    double r_max, double M, long max_steps, Buffers* B,
                    double* term_r, long* attempts_out, int* failed) noexcept nogil:
    cdef double y[5]
    cdef double y_new[5]
    cdef double y_st[5]
    cdef double k1[5]
    cdef double k2[5]
    cdef double k3[5]
    cdef double k4[5]
    cdef double k5[5]
    cdef double k6[5]
    cdef double k7[5]
    cdef double y_ev[5]
    cdef double r = r0
    cdef double h, e_prev, gap, h_try, err_norm, err, ay, ayn, scale, w
    cdef double e, fac, h_new, r_new, w_l, w_r, r_sing, r_blow, r_ev
    cdef double y_sing[5]
    cdef double y_blow[5]
    cdef long attempts = 0
    cdef int i, status, fail_status, last_rejected, clipped, flip
    cdef double w0

    term_r[0] = r
    for i in range(5):
        y[i] = y_in[i]
        if not isfinite(y[i]):
            attempts_out[0] = attempts
            return T_NONFINITE

    w0 = r * 0.5 + y[1]
    if fabs(w0) - phys.guard_eps * r <= 0.0:
        attempts_out[0] = attempts
        return T_SINGULAR
    if _maxabs5(y) >= M:
        attempts_out[0] = attempts
        return T_BLOWUP
    if r >= r_max:
        attempts_out[0] = attempts
        return T_RMAX

    status = _rhs5(r, y, k1, phys)
    if status != S_OK:
        attempts_out[0] = attempts
        return T_SINGULAR if status == S_SINGULAR else T_NONFINITE

    if h_init >= 0.0:
        h = h_init
    else:
        h = 0.01 * r
        if h < h_min:
            h = h_min
        if h > h_max:
            h = h_max
    e_prev = 1e-4
    last_rejected = 0

    while True:
        if attempts >= max_steps:
            term_r[0] = r
            attempts_out[0] = attempts
            return T_BUDGET
        attempts += 1

        gap = r_max - r
        clipped = 0
        h_try = h
        if h_try >= gap:
            h_try = gap
            clipped = 1
        if r + h_try == r:
            term_r[0] = r
            attempts_out[0] = attempts
            return T_UNDERFLOW

        # stages
        fail_status = S_OK
        while True:  # single-pass block; break at end
            for i in range(5):
                y_st[i] = y[i] + h_try * (A21 * k1[i])
            fail_status = _rhs5(r + C2 * h_try, y_st, k2, phys)
            if fail_status != S_OK:
                break
            for i in range(5):
                y_st[i] = y[i] + h_try * (A31 * k1[i] + A32 * k2[i])
            fail_status = _rhs5(r + C3 * h_try, y_st, k3, phys)
            if fail_status != S_OK:
                break
            for i in range(5):
                y_st[i] = y[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            fail_status = _rhs5(r + C4 * h_try, y_st, k4, phys)
            if fail_status != S_OK:
                break
            for i in range(5):
                y_st[i] = y[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                          + A54 * k4[i])
            fail_status = _rhs5(r + C5 * h_try, y_st, k5, phys)
            if fail_status != S_OK:
                break
            for i in range(5):
                y_st[i] = y[i] + h_try * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                          + A64 * k4[i] + A65 * k5[i])
            fail_status = _rhs5(r + h_try, y_st, k6, phys)
            if fail_status != S_OK:
                break
            for i in range(5):
                y_new[i] = y[i] + h_try * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                           + B5 * k5[i] + B6 * k6[i])
            fail_status = _rhs5(r + h_try, y_new, k7, phys)
            break

        if fail_status != S_OK:
            h_new = 0.5 * h_try
            if h_new < h_min:
                if h_try <= h_min:
                    term_r[0] = r
                    attempts_out[0] = attempts
                    return T_SINGULAR if fail_status == S_SINGULAR else T_NONFINITE
                h_new = h_min
            h = h_new
            last_rejected = 1
            continue

        err_norm = 0.0
        for i in range(5):
            err = h_try * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                           + E6 * k6[i] + E7 * k7[i])
            ay = fabs(y[i])
            ayn = fabs(y_new[i])
            scale = atol + rtol * (ay if ay > ayn else ayn)
            w = fabs(err) / scale
            if w > err_norm:
                err_norm = w

        if not err_norm <= 1.0:
            e = err_norm if isfinite(err_norm) else 1e10
            if e < ERR_TINY:
                e = ERR_TINY
            fac = SAFETY * pow(e, REJECT_EXP)
            if fac < FAC_MIN:
                fac = FAC_MIN
            h_new = h_try * fac
            if h_new < h_min:
                if h_try <= h_min:
                    term_r[0] = r
                    attempts_out[0] = attempts
                    return T_UNDERFLOW
                h_new = h_min
            h = h_new
            last_rejected = 1
            continue

        # accepted
        r_new = r_max if clipped else r + h_try
        if B.m >= B.cap:
            if _grow(B):
                failed[0] = 1
                attempts_out[0] = attempts
                return T_NONFINITE
        B.rl[B.m] = r
        B.rr[B.m] = r_new
        B.hh[B.m] = h_try
        for i in range(5):
            B.yl[B.m * 5 + i] = y[i]
            B.yr[B.m * 5 + i] = y_new[i]
            B.kk[B.m * 35 + 0 * 5 + i] = k1[i]
            B.kk[B.m * 35 + 1 * 5 + i] = k2[i]
            B.kk[B.m * 35 + 2 * 5 + i] = k3[i]
            B.kk[B.m * 35 + 3 * 5 + i] = k4[i]
            B.kk[B.m * 35 + 4 * 5 + i] = k5[i]
            B.kk[B.m * 35 + 5 * 5 + i] = k6[i]
            B.kk[B.m * 35 + 6 * 5 + i] = k7[i]
        B.m += 1

        # events on the accepted span
        r_sing = INF
        r_blow = INF
        w_l = r * 0.5 + y[1]
        w_r = r_new * 0.5 + y_new[1]
        flip = 1 if (w_l > 0.0) != (w_r > 0.0) else 0
        if flip or (fabs(w_r) - phys.guard_eps * r_new <= 0.0):
            _bisect_sing(y, B.kk + (B.m - 1) * 35, h_try, r, r_new, w_l,
                         phys.guard_eps, &r_ev, y_sing)
            r_sing = r_ev
        if _maxabs5(y_new) >= M:
            _bisect_blow(y, B.kk + (B.m - 1) * 35, h_try, r, r_new, M,
                         &r_ev, y_blow)
            r_blow = r_ev

        if r_sing < INF or r_blow < INF:
            if r_sing <= r_blow:
                B.rr[B.m - 1] = r_sing
                for i in range(5):
                    B.yr[(B.m - 1) * 5 + i] = y_sing[i]
                term_r[0] = r_sing
                attempts_out[0] = attempts
                return T_SINGULAR
            B.rr[B.m - 1] = r_blow
            for i in range(5):
                B.yr[(B.m - 1) * 5 + i] = y_blow[i]
            term_r[0] = r_blow
            attempts_out[0] = attempts
            return T_BLOWUP

        for i in range(5):
            y[i] = y_new[i]
        r = r_new
        if clipped or r >= r_max:
            term_r[0] = r
            attempts_out[0] = attempts
            return T_RMAX
        for i in range(5):
            k1[i] = k7[i]  # first-same-as-last

        e = err_norm
        if e < ERR_TINY:
            e = ERR_TINY
        fac = SAFETY * pow(e, ACCEPT_EXP) * pow(e_prev, PI_EXP)
        if fac < FAC_MIN:
            fac = FAC_MIN
        elif fac > FAC_MAX:
            fac = FAC_MAX
        if last_rejected and fac > 1.0:
            fac = 1.0
        h = h_try * fac
        if h > h_max:
            h = h_max
        if h < h_min:
            h = h_min
        e_prev = err_norm if err_norm > 1e-4 else 1e-4
        last_rejected = 0
