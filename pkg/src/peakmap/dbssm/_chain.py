"""Numba kernels for the Dirichlet-Beta state-space sampler.

State layout: ``path[t]`` is theta_t = (S, I, R) for t = 0..n, where n is the
number of observed weeks. With the incidence target y_t has mean
beta * S_{t-1} * I_{t-1}; with the prevalence target it has mean I_t.
The prevalence-prior target keeps the incidence mean but inverts z as a
prevalence peak.
"""

import math

import numpy as np
from numba import njit

from .. import _numerics as nm

INCIDENCE = 0
PREVALENCE = 1
PREVALENCE_PRIOR = 2  # incidence likelihood, prevalence peak map
LOG_2PI = math.log(2.0 * math.pi)

# block indices for the acceptance counters
B_Z, B_THETA0, B_LAMBDA, B_IOTA, B_PATH, B_ZFIX, B_IOTA_NC, B_THETA0_FIX, B_JOINT = range(9)
N_BLOCKS = 9
# columns of the per-draw scalar output
C_BETA, C_GAMMA, C_LAMBDA, C_IOTA, C_PIV, C_PIT, C_LOGPOST = range(7)
N_SCALARS = 7
# grid size of the downward scan for the smallest-beta root
SCAN_POINTS = 60


@njit(cache=True, nogil=True)
def propagate(s, i, r, beta, gamma):
    """f(theta): one RK4 step of one week."""
    return nm.rk4_step(s, i, r, beta, gamma, 1.0)


@njit(cache=True, nogil=True)
def beta_logpdf(y, a, b):
    if not (a > 0.0 and b > 0.0):
        return -np.inf
    if not (0.0 < y < 1.0):
        return -np.inf
    return (
        (a - 1.0) * math.log(y) + (b - 1.0) * math.log1p(-y)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )


@njit(cache=True, nogil=True)
def dirichlet_logpdf3(x0, x1, x2, a0, a1, a2):
    if not (a0 > 0.0 and a1 > 0.0 and a2 > 0.0):
        return -np.inf
    if not (x0 > 0.0 and x1 > 0.0 and x2 > 0.0):
        return -np.inf
    return (
        (a0 - 1.0) * math.log(x0) + (a1 - 1.0) * math.log(x1) + (a2 - 1.0) * math.log(x2)
        + math.lgamma(a0 + a1 + a2) - math.lgamma(a0) - math.lgamma(a1) - math.lgamma(a2)
    )


@njit(cache=True, nogil=True)
def gamma_logpdf(x, shape, rate):
    if not x > 0.0:
        return -np.inf
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


@njit(cache=True, nogil=True)
def obs_mean(path, t, beta, target):
    if target == INCIDENCE:
        return beta * path[t - 1, 0] * path[t - 1, 1]
    return path[t, 1]


@njit(cache=True, nogil=True)
def obs_term(y, m, lam):
    if not (0.0 < m < 1.0):
        return -np.inf
    return beta_logpdf(y, lam * m, lam * (1.0 - m))


@njit(cache=True, nogil=True)
def trans_term(path, t, beta, gamma, iota):
    fs, fi, fr = propagate(path[t - 1, 0], path[t - 1, 1], path[t - 1, 2], beta, gamma)
    if not (fs > 0.0 and fi > 0.0 and fr > 0.0):
        return -np.inf
    return dirichlet_logpdf3(path[t, 0], path[t, 1], path[t, 2], iota * fs, iota * fi, iota * fr)


@njit(cache=True, nogil=True)
def loglik_obs(y, path, beta, lam, target):
    total = 0.0
    for t in range(1, y.shape[0] + 1):
        total += obs_term(y[t - 1], obs_mean(path, t, beta, target), lam)
    return total


@njit(cache=True, nogil=True)
def loglik_trans(path, beta, gamma, iota):
    total = 0.0
    for t in range(1, path.shape[0]):
        total += trans_term(path, t, beta, gamma, iota)
    return total


@njit(cache=True, nogil=True)
def _ndtr(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit(cache=True, nogil=True)
def z_log_mass(i0, mu, cov, piv_hi, pit_lo, pit_hi, gl_x, gl_w):
    """log P(PIV in (i0, piv_hi), PIT in (pit_lo, pit_hi)) under N(mu, cov)."""
    s1 = math.sqrt(cov[0, 0])
    s2 = math.sqrt(cov[1, 1])
    corr = cov[0, 1] / (s1 * s2)
    lo = max(pit_lo, mu[1] - 9.0 * s2)
    hi = min(pit_hi, mu[1] + 9.0 * s2)
    if hi <= lo:
        return -np.inf
    cs = s1 * math.sqrt(1.0 - corr * corr)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    mass = 0.0
    for k in range(gl_x.shape[0]):
        y = half * gl_x[k] + mid
        u = (y - mu[1]) / s2
        cm = mu[0] + corr * s1 * u
        px = _ndtr((piv_hi - cm) / cs) - _ndtr((i0 - cm) / cs)
        mass += half * gl_w[k] * math.exp(-0.5 * u * u) / (s2 * math.sqrt(2.0 * math.pi)) * px
    if not mass > 0.0:
        return -np.inf
    return math.log(mass)


@njit(cache=True, nogil=True)
def z_logprior(piv, pit, i0, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w):
    """Truncated bivariate normal log density; the PIV lower bound is i0."""
    if not (i0 < piv < piv_hi and pit_lo < pit < pit_hi):
        return -np.inf
    d0 = piv - mu[0]
    d1 = pit - mu[1]
    q = prec[0, 0] * d0 * d0 + 2.0 * prec[0, 1] * d0 * d1 + prec[1, 1] * d1 * d1
    return -0.5 * q - 0.5 * logdet - LOG_2PI - z_log_mass(
        i0, mu, cov, piv_hi, pit_lo, pit_hi, gl_x, gl_w
    )


@njit(cache=True, nogil=True)
def solve_params(target, method, piv, pit, s0, i0, r0, counts):
    """h^{-1}(z, theta0): (log beta, log gamma, ok).

    The incidence map takes the smallest-beta solution from a full scan, so
    the result does not depend on the chain's current state. ``counts``
    tallies (solves, failures).
    """
    counts[0] += 1
    if target == PREVALENCE:
        lb, lg, ok = nm.prevalence_inverse(piv, pit, s0, i0)
    else:
        lb, lg, _, ok = nm.solve_branch(method, piv, pit, s0, i0, r0, False, np.nan, SCAN_POINTS)
    if not ok:
        counts[1] += 1
    return lb, lg, ok


@njit(cache=True, nogil=True)
def shift_path(path, out, beta, gamma, beta_new, gamma_new, s0, i0, r0, w=1.0):
    """theta'_t = theta_t - w f(theta_{t-1}) + w f'(theta'_{t-1}).

    w = 1 keeps the transition noise, w = 0 keeps the path. For any fixed w
    the map is triangular with identity diagonal blocks, so its Jacobian is
    1, and the reverse move uses the same w. Returns False when the shifted
    path leaves the simplex.
    """
    out[0, 0] = s0
    out[0, 1] = i0
    out[0, 2] = r0
    for t in range(1, path.shape[0]):
        a0, a1, a2 = propagate(path[t - 1, 0], path[t - 1, 1], path[t - 1, 2], beta, gamma)
        b0, b1, b2 = propagate(out[t - 1, 0], out[t - 1, 1], out[t - 1, 2], beta_new, gamma_new)
        x0 = path[t, 0] + w * (b0 - a0)
        x1 = path[t, 1] + w * (b1 - a1)
        x2 = path[t, 2] + w * (b2 - a2)
        if not (x0 > 0.0 and x1 > 0.0 and x2 > 0.0):
            return False
        tot = x0 + x1 + x2
        out[t, 0] = x0 / tot
        out[t, 1] = x1 / tot
        out[t, 2] = x2 / tot
    return True


@njit(cache=True, nogil=True)
def scale_path(path, out, beta, gamma, c):
    """theta'_t = f(theta'_{t-1}) + c * (theta_t - f(theta_{t-1})), theta'_0 = theta_0.

    Rescales the transition noise about the deterministic flow. Each step
    scales two free simplex coordinates by c, so the Jacobian is c^(2n).
    Returns False when the result leaves the simplex.
    """
    out[0, 0] = path[0, 0]
    out[0, 1] = path[0, 1]
    out[0, 2] = path[0, 2]
    for t in range(1, path.shape[0]):
        a0, a1, a2 = propagate(path[t - 1, 0], path[t - 1, 1], path[t - 1, 2], beta, gamma)
        b0, b1, b2 = propagate(out[t - 1, 0], out[t - 1, 1], out[t - 1, 2], beta, gamma)
        x0 = b0 + c * (path[t, 0] - a0)
        x1 = b1 + c * (path[t, 1] - a1)
        x2 = b2 + c * (path[t, 2] - a2)
        if not (x0 > 0.0 and x1 > 0.0 and x2 > 0.0):
            return False
        tot = x0 + x1 + x2
        out[t, 0] = x0 / tot
        out[t, 1] = x1 / tot
        out[t, 2] = x2 / tot
    return True


@njit(cache=True, nogil=True)
def reflect(x, lo, hi):
    w = hi - lo
    for _ in range(64):
        if x < lo:
            x = 2.0 * lo - x
        elif x > hi:
            x = 2.0 * hi - x
        else:
            return x
    # pathological step: fold by the period instead
    x = lo + (x - lo) % (2.0 * w)
    if x > hi:
        x = 2.0 * hi - x
    return x


@njit(cache=True, nogil=True)
def sample_dirichlet3(a0, a1, a2):
    g0 = np.random.gamma(a0, 1.0)
    g1 = np.random.gamma(a1, 1.0)
    g2 = np.random.gamma(a2, 1.0)
    tot = g0 + g1 + g2
    return g0 / tot, g1 / tot, g2 / tot


@njit(cache=True, nogil=True)
def _chol2(c):
    l00 = math.sqrt(c[0, 0])
    l10 = c[1, 0] / l00
    l11 = math.sqrt(max(c[1, 1] - l10 * l10, 1e-300))
    return l00, l10, l11


@njit(cache=True, nogil=True)
def _adapt_cov(mean, m2, count, base):
    """Empirical covariance with a small ridge, or ``base`` while history is short."""
    out = base.copy()
    if count > 50:
        for a in range(2):
            for b in range(2):
                out[a, b] = m2[a, b] / (count - 1)
        ridge = 1e-6 * (out[0, 0] + out[1, 1]) * 0.5 + 1e-300
        out[0, 0] += max(1e-6 * out[0, 0], ridge)
        out[1, 1] += max(1e-6 * out[1, 1], ridge)
    return out


@njit(cache=True, nogil=True)
def _welford(mean, m2, count, x0, x1):
    count += 1
    d0 = x0 - mean[0]
    d1 = x1 - mean[1]
    mean[0] += d0 / count
    mean[1] += d1 / count
    e0 = x0 - mean[0]
    e1 = x1 - mean[1]
    m2[0, 0] += d0 * e0
    m2[0, 1] += d0 * e1
    m2[1, 0] += d1 * e0
    m2[1, 1] += d1 * e1
    return count


@njit(cache=True, nogil=True)
def sweep_path(y, path, beta, gamma, lam, iota, target, accepted, tried):
    """One pass of single-site Metropolis updates over theta_1..theta_n.

    Each theta_t is proposed from its transition Dir(iota * f(theta_{t-1})),
    so only the terms downstream of theta_t enter the ratio.
    """
    n = y.shape[0]
    for t in range(1, n + 1):
        fs, fi, fr = propagate(path[t - 1, 0], path[t - 1, 1], path[t - 1, 2], beta, gamma)
        if not (fs > 0.0 and fi > 0.0 and fr > 0.0):
            continue
        ns, ni, nr = sample_dirichlet3(iota * fs, iota * fi, iota * fr)
        tried[B_PATH] += 1
        if not (ns > 0.0 and ni > 0.0 and nr > 0.0):
            continue
        os_, oi, or_ = path[t, 0], path[t, 1], path[t, 2]
        # terms touching theta_t other than its own transition (which the proposal cancels)
        old = 0.0
        if t < n:
            old += trans_term(path, t + 1, beta, gamma, iota)
        if target == INCIDENCE:
            if t < n:
                old += obs_term(y[t], obs_mean(path, t + 1, beta, target), lam)
        else:
            old += obs_term(y[t - 1], obs_mean(path, t, beta, target), lam)
        path[t, 0], path[t, 1], path[t, 2] = ns, ni, nr
        new = 0.0
        if t < n:
            new += trans_term(path, t + 1, beta, gamma, iota)
        if target == INCIDENCE:
            if t < n:
                new += obs_term(y[t], obs_mean(path, t + 1, beta, target), lam)
        else:
            new += obs_term(y[t - 1], obs_mean(path, t, beta, target), lam)
        log_r = new - old
        if math.isfinite(log_r) and np.random.random() < math.exp(min(0.0, log_r)):
            accepted[B_PATH] += 1
        else:
            path[t, 0], path[t, 1], path[t, 2] = os_, oi, or_


@njit(cache=True, nogil=True)
def _welford_nd(mean, m2, count, x):
    count += 1
    d = x - mean
    mean += d / count
    e = x - mean
    for a in range(x.shape[0]):
        for b in range(x.shape[0]):
            m2[a, b] += d[a] * e[b]
    return count


@njit(cache=True, nogil=True)
def _adapt_cov_nd(m2, count, base):
    """Empirical covariance with a relative ridge, or ``base`` while history is short."""
    if count <= 100:
        return base.copy()
    out = m2 / (count - 1)
    for a in range(out.shape[0]):
        out[a, a] += 1e-6 * out[a, a] + 1e-300
    return out


@njit(cache=True, nogil=True)
def run_chain(
    y, target, method,
    alpha0, lam_shape, lam_rate, iota_shape, iota_rate,
    mu, cov, piv_hi, pit_lo, pit_hi, gl_x, gl_w,
    path0, piv0, pit0, lam0, iota0,
    n_iter, burn, thin, seed,
):
    """One Metropolis-within-Gibbs chain.

    Returns (scalars, paths, iters, accepted, tried, solves, status); status is
    0 on success and 1 if the initial posterior is not finite.
    """
    np.random.seed(seed)
    obs_t = PREVALENCE if target == PREVALENCE else INCIDENCE
    prior_t = INCIDENCE if target == INCIDENCE else PREVALENCE
    n = y.shape[0]
    n_keep = 0
    for it in range(burn, n_iter):
        if (it - burn + 1) % thin == 0:
            n_keep += 1
    scalars = np.empty((n_keep, N_SCALARS))
    paths = np.empty((n_keep, n + 1, 3))
    iters = np.empty(n_keep, dtype=np.int64)
    accepted = np.zeros(N_BLOCKS, dtype=np.int64)
    tried = np.zeros(N_BLOCKS, dtype=np.int64)
    solves = np.zeros(2, dtype=np.int64)

    prec = np.linalg.inv(cov)
    logdet = math.log(np.linalg.det(cov))

    path = path0.copy()
    prop = path0.copy()
    piv, pit = piv0, pit0
    lam, iota = lam0, iota0
    lb, lg, ok = solve_params(
        prior_t, method, piv, pit, path[0, 0], path[0, 1], path[0, 2], solves
    )
    if not ok:
        return scalars, paths, iters, accepted, tried, solves, 1
    beta, gamma = math.exp(lb), math.exp(lg)

    lo_obs = loglik_obs(y, path, beta, lam, obs_t)
    lo_tr = loglik_trans(path, beta, gamma, iota)
    lp_z = z_logprior(piv, pit, path[0, 1], mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
    lp_0 = dirichlet_logpdf3(path[0, 0], path[0, 1], path[0, 2], alpha0[0], alpha0[1], alpha0[2])
    if not (math.isfinite(lo_obs) and math.isfinite(lo_tr) and math.isfinite(lp_z) and math.isfinite(lp_0)):
        return scalars, paths, iters, accepted, tried, solves, 1

    # adaptive proposal state (frozen after burn-in)
    z_base = np.array([[(0.05 * piv) ** 2, 0.0], [0.0, 0.3 ** 2]])
    z_mean = np.zeros(2)
    z_m2 = np.zeros((2, 2))
    z_cnt = 0
    z_ls = 0.0
    u_base = np.array([[0.01, 0.0], [0.0, 0.01]])
    u_mean = np.zeros(2)
    u_m2 = np.zeros((2, 2))
    u_cnt = 0
    u_ls = 0.0
    zf_ls = 0.0
    uf_ls = 0.0
    inc_ls = math.log(0.3)
    lam_ls = math.log(0.3)
    iota_ls = math.log(0.3)
    z_cov = z_base.copy()
    u_cov = u_base.copy()
    j_base = np.zeros((4, 4))
    j_base[:2, :2] = z_base
    j_base[2:, 2:] = u_base
    j_cov = j_base.copy()
    j_chol = np.linalg.cholesky(j_cov)
    j_mean = np.zeros(4)
    j_m2 = np.zeros((4, 4))
    j_cnt = 0
    j_ls = math.log(0.5)
    j_x = np.empty(4)
    adapt_from = burn // 4

    k = 0
    for it in range(n_iter):
        adapting = it < burn
        gain = 1.0 / (it + 1.0) ** 0.6

        # ---- block 1: z, with (beta, gamma) through h^{-1} and a path shift
        l00, l10, l11 = _chol2(z_cov)
        sc = math.exp(z_ls)
        e0 = np.random.standard_normal()
        e1 = np.random.standard_normal()
        i0 = path[0, 1]
        piv_n = reflect(piv + sc * l00 * e0, i0, piv_hi)
        pit_n = reflect(pit + sc * (l10 * e0 + l11 * e1), pit_lo, pit_hi)
        tried[B_Z] += 1
        acc = 0.0
        lb_n, lg_n, ok = solve_params(
            prior_t, method, piv_n, pit_n, path[0, 0], i0, path[0, 2], solves
        )
        if ok:
            b_n, g_n = math.exp(lb_n), math.exp(lg_n)
            if shift_path(path, prop, beta, gamma, b_n, g_n, path[0, 0], i0, path[0, 2]):
                o_n = loglik_obs(y, prop, b_n, lam, obs_t)
                t_n = loglik_trans(prop, b_n, g_n, iota)
                z_n = z_logprior(piv_n, pit_n, i0, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
                log_r = (o_n + t_n + z_n) - (lo_obs + lo_tr + lp_z)
                if math.isfinite(log_r):
                    acc = math.exp(min(0.0, log_r))
                    if np.random.random() < acc:
                        piv, pit, lb, lg, beta, gamma = piv_n, pit_n, lb_n, lg_n, b_n, g_n
                        path, prop = prop, path
                        lo_obs, lo_tr, lp_z = o_n, t_n, z_n
                        accepted[B_Z] += 1
        if adapting:
            z_ls += gain * (acc - 0.3)
            if it >= adapt_from:
                z_cnt = _welford(z_mean, z_m2, z_cnt, piv, pit)
                if it % 50 == 0:
                    z_cov = _adapt_cov(z_mean, z_m2, z_cnt, z_base)

        sweep_path(y, path, beta, gamma, lam, iota, obs_t, accepted, tried)
        lo_obs = loglik_obs(y, path, beta, lam, obs_t)
        lo_tr = loglik_trans(path, beta, gamma, iota)

        # ---- block 1b: z again with a partial path shift, w ~ U(0, 1). w = 0
        # holds the path fixed; mixing the two parameterisations breaks the
        # coupling between z and the path noise.
        l00, l10, l11 = _chol2(z_cov)
        sc = math.exp(zf_ls)
        e0 = np.random.standard_normal()
        e1 = np.random.standard_normal()
        w = 2.0 * np.random.random() - 0.5
        i0 = path[0, 1]
        piv_n = reflect(piv + sc * l00 * e0, i0, piv_hi)
        pit_n = reflect(pit + sc * (l10 * e0 + l11 * e1), pit_lo, pit_hi)
        tried[B_ZFIX] += 1
        acc = 0.0
        lb_n, lg_n, ok = solve_params(
            prior_t, method, piv_n, pit_n, path[0, 0], i0, path[0, 2], solves
        )
        if ok:
            b_n, g_n = math.exp(lb_n), math.exp(lg_n)
            if shift_path(path, prop, beta, gamma, b_n, g_n, path[0, 0], i0, path[0, 2], w):
                o_n = loglik_obs(y, prop, b_n, lam, obs_t)
                t_n = loglik_trans(prop, b_n, g_n, iota)
                z_n = z_logprior(piv_n, pit_n, i0, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
                log_r = (o_n + t_n + z_n) - (lo_obs + lo_tr + lp_z)
                if math.isfinite(log_r):
                    acc = math.exp(min(0.0, log_r))
                    if np.random.random() < acc:
                        piv, pit, lb, lg, beta, gamma = piv_n, pit_n, lb_n, lg_n, b_n, g_n
                        path, prop = prop, path
                        lo_obs, lo_tr, lp_z = o_n, t_n, z_n
                        accepted[B_ZFIX] += 1
        if adapting:
            zf_ls += gain * (acc - 0.3)

        # ---- block 2: theta0 by a random walk in additive log-ratio coordinates
        s0, i0, r0 = path[0, 0], path[0, 1], path[0, 2]
        l00, l10, l11 = _chol2(u_cov)
        sc = math.exp(u_ls)
        e0 = np.random.standard_normal()
        e1 = np.random.standard_normal()
        u0 = math.log(s0 / r0) + sc * l00 * e0
        u1 = math.log(i0 / r0) + sc * (l10 * e0 + l11 * e1)
        m = max(u0, u1, 0.0)
        den = math.exp(u0 - m) + math.exp(u1 - m) + math.exp(-m)
        s0n = math.exp(u0 - m) / den
        i0n = math.exp(u1 - m) / den
        r0n = math.exp(-m) / den
        tried[B_THETA0] += 1
        acc = 0.0
        if i0n < piv and s0n > 0.0 and i0n > 0.0 and r0n > 0.0:
            lb_n, lg_n, ok = solve_params(prior_t, method, piv, pit, s0n, i0n, r0n, solves)
            if ok:
                b_n, g_n = math.exp(lb_n), math.exp(lg_n)
                if shift_path(path, prop, beta, gamma, b_n, g_n, s0n, i0n, r0n):
                    o_n = loglik_obs(y, prop, b_n, lam, obs_t)
                    t_n = loglik_trans(prop, b_n, g_n, iota)
                    z_n = z_logprior(piv, pit, i0n, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
                    p_n = dirichlet_logpdf3(s0n, i0n, r0n, alpha0[0], alpha0[1], alpha0[2])
                    jac = math.log(s0n * i0n * r0n) - math.log(s0 * i0 * r0)
                    log_r = (o_n + t_n + z_n + p_n) - (lo_obs + lo_tr + lp_z + lp_0) + jac
                    if math.isfinite(log_r):
                        acc = math.exp(min(0.0, log_r))
                        if np.random.random() < acc:
                            lb, lg, beta, gamma = lb_n, lg_n, b_n, g_n
                            path, prop = prop, path
                            lo_obs, lo_tr, lp_z, lp_0 = o_n, t_n, z_n, p_n
                            accepted[B_THETA0] += 1
        if adapting:
            u_ls += gain * (acc - 0.3)
            if it >= adapt_from:
                u_cnt = _welford(u_mean, u_m2, u_cnt, math.log(path[0, 0] / path[0, 2]),
                                 math.log(path[0, 1] / path[0, 2]))
                if it % 50 == 0:
                    u_cov = _adapt_cov(u_mean, u_m2, u_cnt, u_base)

        # ---- block 2b: theta0 again with theta_1..theta_n held fixed
        s0, i0, r0 = path[0, 0], path[0, 1], path[0, 2]
        l00, l10, l11 = _chol2(u_cov)
        sc = math.exp(uf_ls)
        e0 = np.random.standard_normal()
        e1 = np.random.standard_normal()
        u0 = math.log(s0 / r0) + sc * l00 * e0
        u1 = math.log(i0 / r0) + sc * (l10 * e0 + l11 * e1)
        m = max(u0, u1, 0.0)
        den = math.exp(u0 - m) + math.exp(u1 - m) + math.exp(-m)
        s0n = math.exp(u0 - m) / den
        i0n = math.exp(u1 - m) / den
        r0n = math.exp(-m) / den
        tried[B_THETA0_FIX] += 1
        acc = 0.0
        if i0n < piv and s0n > 0.0 and i0n > 0.0 and r0n > 0.0:
            lb_n, lg_n, ok = solve_params(prior_t, method, piv, pit, s0n, i0n, r0n, solves)
            if ok:
                b_n, g_n = math.exp(lb_n), math.exp(lg_n)
                prop[:] = path
                prop[0, 0], prop[0, 1], prop[0, 2] = s0n, i0n, r0n
                o_n = loglik_obs(y, prop, b_n, lam, obs_t)
                t_n = loglik_trans(prop, b_n, g_n, iota)
                z_n = z_logprior(piv, pit, i0n, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
                p_n = dirichlet_logpdf3(s0n, i0n, r0n, alpha0[0], alpha0[1], alpha0[2])
                jac = math.log(s0n * i0n * r0n) - math.log(s0 * i0 * r0)
                log_r = (o_n + t_n + z_n + p_n) - (lo_obs + lo_tr + lp_z + lp_0) + jac
                if math.isfinite(log_r):
                    acc = math.exp(min(0.0, log_r))
                    if np.random.random() < acc:
                        lb, lg, beta, gamma = lb_n, lg_n, b_n, g_n
                        path, prop = prop, path
                        lo_obs, lo_tr, lp_z, lp_0 = o_n, t_n, z_n, p_n
                        accepted[B_THETA0_FIX] += 1
        if adapting:
            uf_ls += gain * (acc - 0.3)

        # ---- block 2c: z and theta0 jointly, path shifted; an adapted 4-d
        # covariance follows the ridge between the initial prevalence and beta
        s0, i0, r0 = path[0, 0], path[0, 1], path[0, 2]
        sc = math.exp(j_ls)
        e = np.random.standard_normal(4)
        step = sc * (j_chol @ e)
        piv_n = piv + step[0]
        pit_n = pit + step[1]
        u0 = math.log(s0 / r0) + step[2]
        u1 = math.log(i0 / r0) + step[3]
        m = max(u0, u1, 0.0)
        den = math.exp(u0 - m) + math.exp(u1 - m) + math.exp(-m)
        s0n = math.exp(u0 - m) / den
        i0n = math.exp(u1 - m) / den
        r0n = math.exp(-m) / den
        tried[B_JOINT] += 1
        acc = 0.0
        if (i0n < piv_n < piv_hi and pit_lo < pit_n < pit_hi
                and s0n > 0.0 and i0n > 0.0 and r0n > 0.0):
            lb_n, lg_n, ok = solve_params(prior_t, method, piv_n, pit_n, s0n, i0n, r0n, solves)
            if ok:
                b_n, g_n = math.exp(lb_n), math.exp(lg_n)
                if shift_path(path, prop, beta, gamma, b_n, g_n, s0n, i0n, r0n):
                    o_n = loglik_obs(y, prop, b_n, lam, obs_t)
                    t_n = loglik_trans(prop, b_n, g_n, iota)
                    z_n = z_logprior(piv_n, pit_n, i0n, mu, cov, prec, logdet, piv_hi, pit_lo, pit_hi, gl_x, gl_w)
                    p_n = dirichlet_logpdf3(s0n, i0n, r0n, alpha0[0], alpha0[1], alpha0[2])
                    jac = math.log(s0n * i0n * r0n) - math.log(s0 * i0 * r0)
                    log_r = (o_n + t_n + z_n + p_n) - (lo_obs + lo_tr + lp_z + lp_0) + jac
                    if math.isfinite(log_r):
                        acc = math.exp(min(0.0, log_r))
                        if np.random.random() < acc:
                            piv, pit, lb, lg, beta, gamma = piv_n, pit_n, lb_n, lg_n, b_n, g_n
                            path, prop = prop, path
                            lo_obs, lo_tr, lp_z, lp_0 = o_n, t_n, z_n, p_n
                            accepted[B_JOINT] += 1
        if adapting:
            j_ls += gain * (acc - 0.25)
            if it >= adapt_from:
                j_x[0] = piv
                j_x[1] = pit
                j_x[2] = math.log(path[0, 0] / path[0, 2])
                j_x[3] = math.log(path[0, 1] / path[0, 2])
                j_cnt = _welford_nd(j_mean, j_m2, j_cnt, j_x)
                if it % 50 == 0:
                    j_cov = _adapt_cov_nd(j_m2, j_cnt, j_base)
                    j_chol = np.linalg.cholesky(j_cov)

        # ---- block 3: lambda and iota, log-space random walks
        lam_n = lam * math.exp(math.exp(lam_ls) * np.random.standard_normal())
        o_n = loglik_obs(y, path, beta, lam_n, obs_t)
        log_r = (
            o_n + gamma_logpdf(lam_n, lam_shape, lam_rate) + math.log(lam_n)
            - lo_obs - gamma_logpdf(lam, lam_shape, lam_rate) - math.log(lam)
        )
        tried[B_LAMBDA] += 1
        acc = math.exp(min(0.0, log_r)) if math.isfinite(log_r) else 0.0
        if np.random.random() < acc:
            lam, lo_obs = lam_n, o_n
            accepted[B_LAMBDA] += 1
        if adapting:
            lam_ls += gain * (acc - 0.44)

        iota_n = iota * math.exp(math.exp(iota_ls) * np.random.standard_normal())
        t_n = loglik_trans(path, beta, gamma, iota_n)
        log_r = (
            t_n + gamma_logpdf(iota_n, iota_shape, iota_rate) + math.log(iota_n)
            - lo_tr - gamma_logpdf(iota, iota_shape, iota_rate) - math.log(iota)
        )
        tried[B_IOTA] += 1
        acc = math.exp(min(0.0, log_r)) if math.isfinite(log_r) else 0.0
        if np.random.random() < acc:
            iota, lo_tr = iota_n, t_n
            accepted[B_IOTA] += 1
        if adapting:
            iota_ls += gain * (acc - 0.44)

        # ---- block 3b: iota with the path noise rescaled to match (non-centred)
        step = math.exp(inc_ls) * np.random.standard_normal()
        iota_n = iota * math.exp(step)
        tried[B_IOTA_NC] += 1
        acc = 0.0
        if scale_path(path, prop, beta, gamma, math.exp(-0.5 * step)):
            o_n = loglik_obs(y, prop, beta, lam, obs_t)
            t_n = loglik_trans(prop, beta, gamma, iota_n)
            log_r = (
                o_n + t_n + gamma_logpdf(iota_n, iota_shape, iota_rate) + math.log(iota_n)
                - lo_obs - lo_tr - gamma_logpdf(iota, iota_shape, iota_rate) - math.log(iota)
                - n * step
            )
            if math.isfinite(log_r):
                acc = math.exp(min(0.0, log_r))
                if np.random.random() < acc:
                    iota, lo_obs, lo_tr = iota_n, o_n, t_n
                    path, prop = prop, path
                    accepted[B_IOTA_NC] += 1
        if adapting:
            inc_ls += gain * (acc - 0.44)

        # ---- block 4: theta_1..theta_n, single-site proposals from the transition
        sweep_path(y, path, beta, gamma, lam, iota, obs_t, accepted, tried)
        lo_obs = loglik_obs(y, path, beta, lam, obs_t)
        lo_tr = loglik_trans(path, beta, gamma, iota)

        if it >= burn and (it - burn + 1) % thin == 0:
            scalars[k, C_BETA] = beta
            scalars[k, C_GAMMA] = gamma
            scalars[k, C_LAMBDA] = lam
            scalars[k, C_IOTA] = iota
            scalars[k, C_PIV] = piv
            scalars[k, C_PIT] = pit
            scalars[k, C_LOGPOST] = (
                lo_obs + lo_tr + lp_z + lp_0
                + gamma_logpdf(lam, lam_shape, lam_rate) + gamma_logpdf(iota, iota_shape, iota_rate)
            )
            paths[k] = path
            iters[k] = it
            k += 1
    return scalars, paths, iters, accepted, tried, solves, 0
