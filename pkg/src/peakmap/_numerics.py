"""Compiled scalar kernels shared by the SIR, peak and DBSSM modules.

Everything here works on plain floats so it can be called from numba
code (the inverse solver and the MCMC loop) as well as from Python.
"""

import math

import numpy as np
from numba import njit

RENORM_TOL = 1e-12

# method codes for the time -> tau maps used by the inverse solver
COMPUTE_INTEGRAL = 0
TAYLOR = 1
SINGLE_ODE = 2
FULL_ODE = 3

QUAD_ATOL = 1e-10
QUAD_MAXSUB = 10_000
_EPS = float(np.finfo(np.float64).eps)
SINGLE_ODE_DT = 1e-3
FULL_ODE_DT = 1e-2

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])


# ---------------------------------------------------------------------------
# SIR right-hand side and Runge-Kutta stepping
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def sir_rhs(s, i, beta, gamma):
    inf = beta * s * i
    rec = gamma * i
    return -inf, inf - rec, rec


@njit(cache=True, nogil=True)
def rk4_step(s, i, r, beta, gamma, dt):
    k1s, k1i, k1r = sir_rhs(s, i, beta, gamma)
    k2s, k2i, k2r = sir_rhs(s + 0.5 * dt * k1s, i + 0.5 * dt * k1i, beta, gamma)
    k3s, k3i, k3r = sir_rhs(s + 0.5 * dt * k2s, i + 0.5 * dt * k2i, beta, gamma)
    k4s, k4i, k4r = sir_rhs(s + dt * k3s, i + dt * k3i, beta, gamma)
    s1 = s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i1 = i + dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    r1 = r + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    total = s1 + i1 + r1
    if abs(total - 1.0) > RENORM_TOL:
        s1 /= total
        i1 /= total
        r1 /= total
    return s1, i1, r1


@njit(cache=True, nogil=True)
def rk4_path(s0, i0, r0, beta, gamma, dt, n):
    out = np.empty((n + 1, 3))
    out[0, 0] = s0
    out[0, 1] = i0
    out[0, 2] = r0
    s, i, r = s0, i0, r0
    for k in range(n):
        s, i, r = rk4_step(s, i, r, beta, gamma, dt)
        out[k + 1, 0] = s
        out[k + 1, 1] = i
        out[k + 1, 2] = r
    return out


@njit(cache=True, nogil=True)
def discrete_path(s0, i0, r0, beta, gamma, dt, n):
    """Forward-difference stepping in the incidence form.

    The prevalence update is written as ``inc + (1 - gamma*dt) * i`` so that
    gamma*dt == 1 gives prevalence == incidence bit for bit.
    """
    out = np.empty((n + 1, 3))
    out[0, 0] = s0
    out[0, 1] = i0
    out[0, 2] = r0
    s, i, r = s0, i0, r0
    for k in range(n):
        inc = beta * s * i * dt
        s, i, r = s - inc, inc + (1.0 - gamma * dt) * i, r + gamma * dt * i
        out[k + 1, 0] = s
        out[k + 1, 1] = i
        out[k + 1, 2] = r
    return out


@njit(cache=True, nogil=True)
def weekly_peak(s0, i0, r0, beta, gamma, dt, horizon):
    """Peak of the weekly incidence series ``beta*S(k-1)*I(k-1)``, k >= 1.

    Integrates on a fine RK4 grid of step ``dt`` (which must divide one week)
    and samples whole weeks. Returns (value, week); ties go to the earliest
    week.
    """
    per_week = int(round(1.0 / dt))
    h = 1.0 / per_week
    s, i, r = s0, i0, r0
    best = -1.0
    best_k = 0
    for k in range(1, horizon + 1):
        val = beta * s * i
        if val > best:
            best = val
            best_k = k
        for _ in range(per_week):
            s, i, r = rk4_step(s, i, r, beta, gamma, h)
    return best, best_k


# ---------------------------------------------------------------------------
# Analytic solution on the tau axis
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def prevalence_tau(tau, s0, i0, beta, gamma):
    # i0 + s0*(1 - e^{-beta tau}) - gamma tau, written with expm1 for accuracy near 0
    return i0 - s0 * math.expm1(-beta * tau) - gamma * tau


@njit(cache=True, nogil=True)
def peak_tau(s0, beta, gamma):
    rs = beta * s0 / gamma
    if rs <= 1.0:
        return 0.0
    return math.log(rs) / beta


@njit(cache=True, nogil=True)
def final_tau(s0, i0, beta, gamma):
    """Positive zero of the tau-axis prevalence (the final-size bound)."""
    lo = peak_tau(s0, beta, gamma)
    hi = (s0 + i0) / gamma
    return brent(0, lo, hi, (s0, i0, beta, gamma, 0.0), 1e-15, 200)


@njit(cache=True, nogil=True)
def incidence_slope(tau, s0, i0, beta, gamma):
    """Stationarity condition of the incidence curve on the tau axis."""
    return -(s0 + i0) + gamma * tau + 2.0 * s0 * math.exp(-beta * tau) - gamma / beta


@njit(cache=True, nogil=True)
def _fn(code, x, p):
    s0, i0, beta, gamma, c = p
    if code == 0:
        return prevalence_tau(x, s0, i0, beta, gamma)
    elif code == 1:
        return incidence_slope(x, s0, i0, beta, gamma)
    elif code == 3:
        # peak-prevalence condition in x = log(rho S0)
        return math.log1p(x) - x - c
    else:
        # one weekly removal step: tau + I(tau) - target
        return x + prevalence_tau(x, s0, i0, beta, gamma) - c


@njit(cache=True, nogil=True)
def brent(code, xa, xb, p, xtol, maxiter):
    """Brent's method on the bracket [xa, xb] for the function selected by code.

    Port of the classic zeros.c routine. Returns nan when the bracket has no
    sign change.
    """
    rtol = 4.0 * 2.220446049250313e-16
    xpre, xcur = xa, xb
    xblk = 0.0
    fblk = 0.0
    spre = 0.0
    scur = 0.0
    fpre = _fn(code, xpre, p)
    fcur = _fn(code, xcur, p)
    if fpre * fcur > 0.0:
        return np.nan
    if fpre == 0.0:
        return xpre
    if fcur == 0.0:
        return xcur
    for _ in range(maxiter):
        if fpre * fcur < 0.0:
            xblk = xpre
            fblk = fpre
            spre = scur = xcur - xpre
        if abs(fblk) < abs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = (xtol + rtol * abs(xcur)) / 2.0
        sbis = (xblk - xcur) / 2.0
        if fcur == 0.0 or abs(sbis) < delta:
            return xcur
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = _fn(code, xcur, p)
    return xcur


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature of 1 / I(tau)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _gk15(a, b, s0, i0, beta, gamma):
    """One Gauss-Kronrod 7/15 panel of 1/I on [a, b]. Returns (value, error, ok)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = prevalence_tau(c, s0, i0, beta, gamma)
    if not fc > 0.0:
        return np.nan, np.inf, False
    fc = 1.0 / fc
    resk = fc * _WGK[7]
    resg = fc * _WG[3]
    for j in range(7):
        dx = h * _XGK[j]
        f1 = prevalence_tau(c - dx, s0, i0, beta, gamma)
        f2 = prevalence_tau(c + dx, s0, i0, beta, gamma)
        if not (f1 > 0.0 and f2 > 0.0):
            return np.nan, np.inf, False
        f1 = 1.0 / f1
        f2 = 1.0 / f2
        resk += _WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    err = abs((resk - resg) * h)
    # floor at the rounding noise of the panel sum
    return resk * h, max(err, 50.0 * _EPS * abs(resk * h)), True


@njit(cache=True, nogil=True)
def time_integral(lo, hi, s0, i0, beta, gamma, atol, maxsub):
    """Globally adaptive GK15 integral of 1/I over [lo, hi].

    Returns (value, error_estimate, n_subintervals, status) with status
    0 = converged, 1 = subdivision limit or roundoff floor hit, 2 = nonpositive
    denominator.
    """
    if hi <= lo:
        return 0.0, 0.0, 0, 0
    a = np.empty(maxsub)
    b = np.empty(maxsub)
    val = np.empty(maxsub)
    err = np.empty(maxsub)
    v, e, ok = _gk15(lo, hi, s0, i0, beta, gamma)
    if not ok:
        return np.nan, np.inf, 1, 2
    a[0] = lo
    b[0] = hi
    val[0] = v
    err[0] = e
    n = 1
    total = v
    total_err = e
    stalled = 0
    while total_err > atol:
        if n >= maxsub:
            return total, total_err, n, 1
        worst = 0
        for k in range(1, n):
            if err[k] > err[worst]:
                worst = k
        aw = a[worst]
        bw = b[worst]
        mid = 0.5 * (aw + bw)
        if mid <= aw or mid >= bw:
            # interval exhausted at machine precision
            return total, total_err, n, 1
        v1, e1, ok1 = _gk15(aw, mid, s0, i0, beta, gamma)
        v2, e2, ok2 = _gk15(mid, bw, s0, i0, beta, gamma)
        if not (ok1 and ok2):
            return np.nan, np.inf, n, 2
        if e1 + e2 >= 0.99 * err[worst]:
            stalled += 1
            if stalled >= 20:
                # bisection no longer reduces the error: rounding dominates
                return total + v1 + v2 - val[worst], total_err + e1 + e2 - err[worst], n + 1, 1
        total += v1 + v2 - val[worst]
        total_err += e1 + e2 - err[worst]
        b[worst] = mid
        val[worst] = v1
        err[worst] = e1
        a[n] = mid
        b[n] = bw
        val[n] = v2
        err[n] = e2
        n += 1
        # re-sum occasionally to stop drift in the running totals
        if n % 64 == 0:
            total = 0.0
            total_err = 0.0
            for k in range(n):
                total += val[k]
                total_err += err[k]
    return total, total_err, n, 0


@njit(cache=True, nogil=True)
def time_of_tau(tau, s0, i0, beta, gamma):
    """Weeks elapsed when the tau axis reaches ``tau``; nan outside the epidemic."""
    if tau <= 0.0:
        return 0.0
    if not prevalence_tau(tau, s0, i0, beta, gamma) > 0.0:
        return np.nan
    v, e, n, status = time_integral(0.0, tau, s0, i0, beta, gamma, QUAD_ATOL, QUAD_MAXSUB)
    if status == 2:
        return np.nan
    return v


# ---------------------------------------------------------------------------
# time -> tau maps (one per inversion method)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def tau_by_integral(t, s0, i0, beta, gamma):
    """Invert the time integral by bracketed Newton iteration on time_of_tau."""
    if t <= 0.0:
        return 0.0
    lo = 0.0
    hi = final_tau(s0, i0, beta, gamma)
    if not hi > 0.0:
        return np.nan
    # start from the linearisation at tau = 0
    x = min(t * i0, 0.5 * hi)
    for _ in range(100):
        ft = time_of_tau(x, s0, i0, beta, gamma)
        if not math.isfinite(ft):
            hi = x
            x = 0.5 * (lo + hi)
            continue
        f = ft - t
        if abs(f) <= QUAD_ATOL:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        xn = x - f * prevalence_tau(x, s0, i0, beta, gamma)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * max(1.0, x):
            return xn
        x = xn
    return x


@njit(cache=True, nogil=True)
def tau_by_single_ode(t, s0, i0, r0, beta, gamma, dt):
    """RK4 on dR/dt = gamma*(1 - S0 exp(-rho (R - R0)) - R); returns (R_t - R0)/gamma."""
    if t <= 0.0:
        return 0.0
    n = max(1, int(math.ceil(t / dt - 1e-12)))
    h = t / n
    rho = beta / gamma
    total = s0 + i0 + r0
    x = r0
    for _ in range(n):
        k1 = gamma * (total - s0 * math.exp(-rho * (x - r0)) - x)
        y = x + 0.5 * h * k1
        k2 = gamma * (total - s0 * math.exp(-rho * (y - r0)) - y)
        y = x + 0.5 * h * k2
        k3 = gamma * (total - s0 * math.exp(-rho * (y - r0)) - y)
        y = x + h * k3
        k4 = gamma * (total - s0 * math.exp(-rho * (y - r0)) - y)
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return (x - r0) / gamma


@njit(cache=True, nogil=True)
def tau_by_full_ode(t, s0, i0, r0, beta, gamma, dt):
    """RK4 on the full SIR system up to ``t``; reads tau off the removed compartment."""
    if t <= 0.0:
        return 0.0
    n = max(1, int(math.ceil(t / dt - 1e-12)))
    h = t / n
    s, i, r = s0, i0, r0
    for _ in range(n):
        s, i, r = rk4_step(s, i, r, beta, gamma, h)
    return (r - r0) / gamma


@njit(cache=True, nogil=True)
def tau_by_taylor(t, s0, i0, r0, beta, gamma, as_printed):
    """Second-order (Kermack-McKendrick) closed form for tau at time ``t``.

    The default branch uses the standard small-removal expansion
        R(t) = R0 + [(S0 rho - 1) + k tanh(gamma k t / 2 - phi)] / (S0 rho^2),
        phi = artanh((S0 rho - 1) / k).
    ``as_printed`` evaluates a dimensionally inconsistent variant instead
    (leading beta^2 / S0, phi = artanh(S0 rho - 1) / k), kept for comparison.
    """
    rho = beta / gamma
    a = s0 * rho - 1.0
    kappa = math.sqrt(a * a + 2.0 * s0 * i0 * rho * rho)
    if as_printed:
        if abs(a) >= 1.0:
            return np.nan
        phi = math.atanh(a) / kappa
        return beta * beta / s0 * (a + kappa * math.tanh(gamma * kappa * t / 2.0 - phi)) + r0
    phi = math.atanh(a / kappa)
    removed = (a + kappa * math.tanh(gamma * kappa * t / 2.0 - phi)) / (s0 * rho * rho)
    return removed / gamma


@njit(cache=True, nogil=True)
def tau_at_time(method, t, s0, i0, r0, beta, gamma, as_printed):
    if method == COMPUTE_INTEGRAL:
        return tau_by_integral(t, s0, i0, beta, gamma)
    elif method == TAYLOR:
        return tau_by_taylor(t, s0, i0, r0, beta, gamma, as_printed)
    elif method == SINGLE_ODE:
        return tau_by_single_ode(t, s0, i0, r0, beta, gamma, SINGLE_ODE_DT)
    else:
        return tau_by_full_ode(t, s0, i0, r0, beta, gamma, FULL_ODE_DT)


# ---------------------------------------------------------------------------
# Peak incidence: forward map pieces and the inverse residual
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def incidence_peak_tau(s0, i0, beta, gamma):
    """Root of the incidence stationarity condition; 0 for a boundary peak."""
    if incidence_slope(0.0, s0, i0, beta, gamma) <= 0.0:
        return 0.0
    hi = peak_tau(s0, beta, gamma)
    return brent(1, 0.0, hi, (s0, i0, beta, gamma, 0.0), 1e-15, 200)


@njit(cache=True, nogil=True)
def step_back(tau_b, s0, i0, beta, gamma):
    """Solve tau_a + I(tau_a) = tau_b for tau_a in [0, tau_peak], clamped."""
    hi = peak_tau(s0, beta, gamma)
    if tau_b <= i0:
        return 0.0
    if tau_b >= hi + prevalence_tau(hi, s0, i0, beta, gamma):
        return hi
    return brent(2, 0.0, hi, (s0, i0, beta, gamma, tau_b), 1e-15, 200)


@njit(cache=True, nogil=True)
def inverse_residual(method, lb, lg, piv, pit, s0, i0, r0, as_printed):
    """Residuals (peak value mismatch, stationarity) at (log beta, log gamma).

    Returns (r_value, r_slope, tau_a, ok).
    """
    beta = math.exp(lb)
    gamma = math.exp(lg)
    tau_b = tau_at_time(method, pit, s0, i0, r0, beta, gamma, as_printed)
    if not (math.isfinite(tau_b) and tau_b >= 0.0):
        return np.nan, np.nan, np.nan, False
    tau_a = step_back(tau_b, s0, i0, beta, gamma)
    if not math.isfinite(tau_a):
        return np.nan, np.nan, np.nan, False
    s = s0 * math.exp(-beta * tau_a)
    i = prevalence_tau(tau_a, s0, i0, beta, gamma)
    r1 = beta * s * i - piv
    r2 = -(s0 + i0) + gamma * tau_a + 2.0 * s - gamma / beta
    return r1, r2, tau_a, True


LOG_LO = math.log(1e-4)
LOG_HI = math.log(1e3)


@njit(cache=True, nogil=True)
def newton_solve(method, lb, lg, piv, pit, s0, i0, r0, as_printed, tol, maxiter,
                 lb_max=np.inf):
    """Damped Newton on (log beta, log gamma) with a forward-difference Jacobian.

    Gives up (not converged) once log beta exceeds ``lb_max``.
    Returns (log_beta, log_gamma, residual_norm, iterations, converged).
    """
    h = 1e-7
    r1, r2, _, ok = inverse_residual(method, lb, lg, piv, pit, s0, i0, r0, as_printed)
    if not ok:
        return lb, lg, np.inf, 0, False
    norm = math.sqrt(r1 * r1 + r2 * r2)
    for it in range(1, maxiter + 1):
        if norm < tol:
            return lb, lg, norm, it - 1, True
        a1, a2, _, oka = inverse_residual(method, lb + h, lg, piv, pit, s0, i0, r0, as_printed)
        b1, b2, _, okb = inverse_residual(method, lb, lg + h, piv, pit, s0, i0, r0, as_printed)
        if not (oka and okb):
            return lb, lg, norm, it, False
        j11 = (a1 - r1) / h
        j21 = (a2 - r2) / h
        j12 = (b1 - r1) / h
        j22 = (b2 - r2) / h
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            return lb, lg, norm, it, False
        d1 = -(j22 * r1 - j12 * r2) / det
        d2 = -(-j21 * r1 + j11 * r2) / det
        big = max(abs(d1), abs(d2))
        if big > 1.0:
            d1 /= big
            d2 /= big
        lam = 1.0
        accepted = False
        for _ in range(40):
            nb = min(max(lb + lam * d1, LOG_LO), LOG_HI)
            ng = min(max(lg + lam * d2, LOG_LO), LOG_HI)
            n1, n2, _, okn = inverse_residual(method, nb, ng, piv, pit, s0, i0, r0, as_printed)
            if okn:
                nn = math.sqrt(n1 * n1 + n2 * n2)
                if nn < (1.0 - 1e-4 * lam) * norm:
                    lb, lg, r1, r2, norm = nb, ng, n1, n2, nn
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            return lb, lg, norm, it, norm < tol
        if lb > lb_max and norm >= tol:
            return lb, lg, norm, it, False
    return lb, lg, norm, maxiter, norm < tol


@njit(cache=True, nogil=True)
def seed_guess(rho_s0, piv, pit, s0, i0):
    """Starting (log beta, log gamma) for a seed reproduction number.

    Uses the beta-scaling of the SIR system: at beta = 1 the continuous
    incidence peak sits at time t1, and the weekly peak lands roughly one
    week after it, so beta ~ t1 / (PIT - 1).
    """
    rho = rho_s0 / s0
    gamma1 = 1.0 / rho
    tau_a = incidence_peak_tau(s0, i0, 1.0, gamma1)
    t1 = time_of_tau(tau_a, s0, i0, 1.0, gamma1)
    if not (math.isfinite(t1) and t1 > 0.0):
        t1 = 1.0
    beta = t1 / max(pit - 1.0, 0.5)
    beta = min(max(beta, 1e-3), 1e2)
    return math.log(beta), math.log(beta / rho)


BRANCH_GAP = math.log(5.0)


@njit(cache=True, nogil=True)
def solve_multistart(method, seeds_rho_s0, piv, pit, s0, i0, r0, as_printed, tol, maxiter,
                     stop_first=True, lb_ref=np.inf):
    """Newton from the seeds in order. Returns per-seed (lb, lg, norm, iters, converged).

    With ``stop_first`` the loop ends at the first converged seed and only
    the rows that were run are returned. Otherwise, once a root is known, a
    later seed is abandoned when its iterate climbs past BRANCH_GAP above the
    smallest log beta found: every other root sits on the near-threshold
    branch with beta an order of magnitude larger. ``lb_ref`` seeds that
    bound before any root is found (a nearby known solution, say).
    """
    m = seeds_rho_s0.shape[0]
    out = np.empty((m, 5))
    best = lb_ref
    for k in range(m):
        lb0, lg0 = seed_guess(seeds_rho_s0[k], piv, pit, s0, i0)
        lb, lg, nrm, its, conv = newton_solve(
            method, lb0, lg0, piv, pit, s0, i0, r0, as_printed, tol, maxiter, best + BRANCH_GAP
        )
        if conv and lb < best:
            best = lb
        out[k, 0] = lb
        out[k, 1] = lg
        out[k, 2] = nrm
        out[k, 3] = its
        out[k, 4] = 1.0 if conv else 0.0
        if stop_first and conv:
            return out[: k + 1]
    return out


# ---------------------------------------------------------------------------
# Peak incidence inverse as a one-dimensional problem in x = log(rho S0)
#
# On the u = beta * tau axis the curve depends on rho alone, so the
# stationary point u_a and (S, I) there are functions of x; PIV then fixes
# beta, and the PIT condition leaves a scalar equation in x. Larger x means
# smaller beta, so the smallest-beta solution is the largest root.
# ---------------------------------------------------------------------------

BRANCH_X_MAX = math.log(1e3)


@njit(cache=True, nogil=True)
def branch_x_min(s0, i0):
    """Lower end of x for an interior incidence peak (rho (S0 - I0) > 1)."""
    return math.log(s0 / (s0 - i0)) if s0 > i0 else np.inf


@njit(cache=True, nogil=True)
def branch_residual(method, x, piv, pit, s0, i0, r0, as_printed):
    """(F, log beta, log gamma) with F > 0 when the peak would come after PIT.

    Non-finite time maps are reported as F = +inf (the peak is never reached).
    """
    rho = math.exp(x) / s0
    u_a = incidence_peak_tau(s0, i0, 1.0, 1.0 / rho)
    i_a = prevalence_tau(u_a, s0, i0, 1.0, 1.0 / rho)
    si = s0 * math.exp(-u_a) * i_a
    if not (u_a > 0.0 and si > 0.0):
        return np.nan, np.nan, np.nan
    beta = piv / si
    gamma = beta / rho
    tau_b = u_a / beta + i_a
    if method == COMPUTE_INTEGRAL:
        t_b = time_of_tau(tau_b, s0, i0, beta, gamma)
        f = t_b - pit if math.isfinite(t_b) else np.inf
    else:
        tau_t = tau_at_time(method, pit, s0, i0, r0, beta, gamma, as_printed)
        f = tau_b - tau_t if math.isfinite(tau_t) else np.inf
    return f, math.log(beta), math.log(gamma)


@njit(cache=True, nogil=True)
def _branch_refine(method, xa, fa, xb, fb, piv, pit, s0, i0, r0, as_printed, xtol):
    """Illinois false position on a bracket with fa < 0 < fb."""
    for _ in range(200):
        if abs(xb - xa) <= xtol:
            break
        if math.isfinite(fa) and math.isfinite(fb):
            xc = xb - fb * (xb - xa) / (fb - fa)
            if not (min(xa, xb) < xc < max(xa, xb)):
                xc = 0.5 * (xa + xb)
        else:
            xc = 0.5 * (xa + xb)
        fc, _, _ = branch_residual(method, xc, piv, pit, s0, i0, r0, as_printed)
        if not math.isfinite(fc) and not fc > 0.0:
            return np.nan
        if fc == 0.0:
            return xc
        if fc < 0.0:
            xa, fa = xc, fc
            fb *= 0.5
        else:
            xb, fb = xc, fc
            fa *= 0.5
    return 0.5 * (xa + xb) if abs(xb - xa) <= xtol else xb


@njit(cache=True, nogil=True)
def _branch_sign(method, x, piv, pit, s0, i0, r0, as_printed):
    f, _, _ = branch_residual(method, x, piv, pit, s0, i0, r0, as_printed)
    return f


@njit(cache=True, nogil=True)
def solve_branch(method, piv, pit, s0, i0, r0, as_printed, x_start, n_scan):
    """Smallest-beta solution of the peak incidence inverse.

    Scans x downward from BRANCH_X_MAX (or, given a finite ``x_start``, from
    just above it after checking that F stays positive further up) to the
    first sign change, then refines the bracket. Returns
    (log beta, log gamma, x, ok).
    """
    lo = branch_x_min(s0, i0)
    hi = BRANCH_X_MAX
    if not lo < hi:
        return np.nan, np.nan, np.nan, False
    xtol = 1e-13
    f_hi = _branch_sign(method, hi, piv, pit, s0, i0, r0, as_printed)
    if not f_hi > 0.0:
        return np.nan, np.nan, np.nan, False
    xb, fb = hi, f_hi
    if math.isfinite(x_start) and lo < x_start < hi:
        # coarse look above the warm start: positive everywhere means the
        # largest root is at or below the first point that is positive
        probes = 4
        ok_above = True
        for k in range(probes, 0, -1):
            xk = x_start + (hi - x_start) * (k / (probes + 1.0)) ** 2
            fk = _branch_sign(method, xk, piv, pit, s0, i0, r0, as_printed)
            if not fk > 0.0:
                ok_above = False
                break
            xb, fb = xk, fk
        if ok_above:
            step = 0.02
            x = x_start
            while True:
                f = _branch_sign(method, x, piv, pit, s0, i0, r0, as_printed)
                if f > 0.0:
                    xb, fb = x, f
                    x = max(x - step, lo + 0.5 * (x - lo))
                    step *= 2.0
                    if x - lo < 1e-12:
                        return np.nan, np.nan, np.nan, False
                    continue
                if math.isnan(f):
                    break
                xr = _branch_refine(method, x, f, xb, fb, piv, pit, s0, i0, r0, as_printed, xtol)
                if not math.isfinite(xr):
                    break
                _, lb, lg = branch_residual(method, xr, piv, pit, s0, i0, r0, as_printed)
                return lb, lg, xr, True
        xb, fb = hi, f_hi
    # full scan: geometric in the distance to the threshold
    span = hi - lo
    for k in range(1, n_scan + 1):
        x = lo + span * (1e-9 / 1.0) ** (k / n_scan)
        f = _branch_sign(method, x, piv, pit, s0, i0, r0, as_printed)
        if f > 0.0:
            xb, fb = x, f
            continue
        if math.isnan(f):
            continue
        xr = _branch_refine(method, x, f, xb, fb, piv, pit, s0, i0, r0, as_printed, xtol)
        if not math.isfinite(xr):
            return np.nan, np.nan, np.nan, False
        _, lb, lg = branch_residual(method, xr, piv, pit, s0, i0, r0, as_printed)
        return lb, lg, xr, True
    return np.nan, np.nan, np.nan, False


@njit(cache=True, nogil=True)
def forward_incidence(s0, i0, beta, gamma):
    """(PIV, PIT, tau_a, boundary) from the analytic forward map."""
    tau_a = incidence_peak_tau(s0, i0, beta, gamma)
    if tau_a <= 0.0:
        return beta * s0 * i0, 0.0, 0.0, True
    s = s0 * math.exp(-beta * tau_a)
    i = prevalence_tau(tau_a, s0, i0, beta, gamma)
    tau_b = tau_a + i
    pit = time_of_tau(tau_b, s0, i0, beta, gamma)
    return beta * s * i, pit, tau_a, False


@njit(cache=True, nogil=True)
def prevalence_inverse(ppv, ppt, s0, i0):
    """(PPV, PPT) -> (log beta, log gamma, ok) for fixed initial conditions."""
    if not (i0 < ppv < s0 + i0 and ppt > 0.0):
        return np.nan, np.nan, False
    c = math.log1p(-(ppv - i0) / s0)
    p = (s0, i0, 1.0, 1.0, c)
    hi = 1.0
    while _fn(3, hi, p) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            return np.nan, np.nan, False
    x = brent(3, 0.0, hi, p, 1e-15, 500)
    if not x > 0.0:
        return np.nan, np.nan, False
    rho = math.exp(x) / s0
    v, e, n, status = time_integral(0.0, x, s0, i0, 1.0, 1.0 / rho, QUAD_ATOL, QUAD_MAXSUB)
    if status == 2 or not (math.isfinite(v) and v > 0.0):
        return np.nan, np.nan, False
    beta = v / ppt
    return math.log(beta), math.log(beta / rho), True
