"""Compiled inner loops for the SEM likelihood and the Metropolis-within-Gibbs sweep.

All randomness is drawn outside (numpy ``Generator``) and passed in, so the
kernels are deterministic functions of their inputs.

Layout conventions used by every kernel:

* ``At``/``Aeff``: (p, p) latent / thresholded gene-gene coefficients, row = target.
* ``Bt``/``Beff``: (p, 2) latent / thresholded DNA coefficients; column 0 is
  copy number (X column 2i), column 1 methylation (X column 2i+1), 0-based.
* ``S``: (p, p+2, p+2) per-gene Gram blocks over ``[Y_1..Y_p, X_2i, X_2i+1]``.
"""

import math

import numpy as np
from numba import njit

LOG_DET_FLOOR = math.log(1e-12)
LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def lu_logabsdet(M):
    """log|det M| by LU with partial pivoting; -inf when |det| < 1e-12."""
    a = M.copy()
    m = a.shape[0]
    total = 0.0
    for k in range(m):
        piv = k
        best = abs(a[k, k])
        for r in range(k + 1, m):
            v = abs(a[r, k])
            if v > best:
                best = v
                piv = r
        if best == 0.0:
            return -np.inf
        if piv != k:
            for c in range(m):
                tmp = a[k, c]
                a[k, c] = a[piv, c]
                a[piv, c] = tmp
        total += math.log(best)
        pivot = a[k, k]
        for r in range(k + 1, m):
            f = a[r, k] / pivot
            if f != 0.0:
                for c in range(k + 1, m):
                    a[r, c] -= f * a[k, c]
    if total < LOG_DET_FLOOR:
        return -np.inf
    return total


@njit(cache=True)
def logdet_i_minus(Aeff):
    p = Aeff.shape[0]
    M = -Aeff.copy()
    for i in range(p):
        M[i, i] += 1.0
    return lu_logabsdet(M)


@njit(cache=True)
def row_rss(i, Aeff, Beff, S):
    """Residual sum of squares of equation ``i`` from its Gram block."""
    p = Aeff.shape[0]
    w = np.empty(p + 2)
    for k in range(p):
        w[k] = -Aeff[i, k]
    w[i] = 1.0
    w[p] = -Beff[i, 0]
    w[p + 1] = -Beff[i, 1]
    Si = S[i]
    total = 0.0
    for r in range(p + 2):
        acc = 0.0
        for c in range(p + 2):
            acc += Si[r, c] * w[c]
        total += w[r] * acc
    return total


@njit(cache=True)
def threshold_row(i, At, Bt, t, Aeff, Beff):
    p = At.shape[0]
    for j in range(p):
        Aeff[i, j] = At[i, j] if (j != i and abs(At[i, j]) > t[i]) else 0.0
    for k in range(2):
        Beff[i, k] = Bt[i, k] if abs(Bt[i, k]) > t[i] else 0.0


@njit(cache=True)
def _log_norm_kernel(x, var):
    return -0.5 * x * x / var


@njit(cache=True)
def _try_a(i, j, new, log_ratio, log_u, n, At, t, sigma, Aeff, Beff, S, logdet, rss, counters):
    """Accept/reject ``At[i, j] = new`` given the non-likelihood part of the log ratio."""
    if not math.isfinite(new):
        return False, logdet, rss[i]
    old_eff = Aeff[i, j]
    new_eff = new if abs(new) > t[i] else 0.0
    new_logdet = logdet
    new_rss = rss[i]
    if n > 0 and new_eff != old_eff:
        Aeff[i, j] = new_eff
        counters[0] += 1
        new_logdet = logdet_i_minus(Aeff)
        if new_logdet == -np.inf:
            Aeff[i, j] = old_eff
            return False, logdet, rss[i]
        new_rss = row_rss(i, Aeff, Beff, S)
        log_ratio += n * (new_logdet - logdet) - 0.5 * (new_rss - rss[i]) / sigma[i]
        Aeff[i, j] = old_eff
    if log_u < log_ratio:
        At[i, j] = new
        Aeff[i, j] = new_eff
        return True, new_logdet, new_rss
    return False, logdet, rss[i]


@njit(cache=True)
def update_a(i, j, z, log_u, sd, n, At, Bt, t, tau, sigma, Aeff, Beff, S, logdet, rss, counters):
    """One random-walk Metropolis step on latent ``At[i, j]``.

    Returns ``(accepted, logdet, rss_i)``. ``counters[0]`` counts LU evaluations.
    """
    old = At[i, j]
    new = old + sd * z
    log_ratio = _log_norm_kernel(new, tau[i, j]) - _log_norm_kernel(old, tau[i, j])
    return _try_a(i, j, new, log_ratio, log_u, n, At, t, sigma, Aeff, Beff, S, logdet, rss, counters)


@njit(cache=True)
def update_a_prior_draw(i, j, new, new_tau, log_u, n, At, t, tau, sigma, Aeff, Beff, S, logdet, rss,
                        counters):
    """Joint independence move on ``(At[i, j], tau[i, j])`` proposed from their prior.

    The prior terms cancel, so the log ratio is the likelihood difference alone.
    """
    ok, logdet, r = _try_a(i, j, new, 0.0, log_u, n, At, t, sigma, Aeff, Beff, S, logdet, rss, counters)
    if ok:
        tau[i, j] = new_tau
    return ok, logdet, r


@njit(cache=True)
def _try_b(i, k, new, log_ratio, log_u, n, Bt, t, sigma, Aeff, Beff, S, rss):
    if not math.isfinite(new):
        return False, rss[i]
    old_eff = Beff[i, k]
    new_eff = new if abs(new) > t[i] else 0.0
    new_rss = rss[i]
    if n > 0 and new_eff != old_eff:
        Beff[i, k] = new_eff
        new_rss = row_rss(i, Aeff, Beff, S)
        Beff[i, k] = old_eff
        log_ratio += -0.5 * (new_rss - rss[i]) / sigma[i]
    if log_u < log_ratio:
        Bt[i, k] = new
        Beff[i, k] = new_eff
        return True, new_rss
    return False, rss[i]


@njit(cache=True)
def update_b(i, k, z, log_u, sd, n, At, Bt, t, nu, sigma, Aeff, Beff, S, rss):
    """One random-walk Metropolis step on latent ``Bt[i, k]``; B never touches the determinant."""
    old = Bt[i, k]
    new = old + sd * z
    log_ratio = _log_norm_kernel(new, nu[i, k]) - _log_norm_kernel(old, nu[i, k])
    return _try_b(i, k, new, log_ratio, log_u, n, Bt, t, sigma, Aeff, Beff, S, rss)


@njit(cache=True)
def update_b_prior_draw(i, k, new, new_nu, log_u, n, Bt, t, nu, sigma, Aeff, Beff, S, rss):
    """Joint independence move on ``(Bt[i, k], nu[i, k])`` proposed from their prior."""
    ok, r = _try_b(i, k, new, 0.0, log_u, n, Bt, t, sigma, Aeff, Beff, S, rss)
    if ok:
        nu[i, k] = new_nu
    return ok, r


@njit(cache=True)
def reflect(x, upper):
    while x < 0.0 or x > upper:
        if x < 0.0:
            x = -x
        if x > upper:
            x = 2.0 * upper - x
    return x


@njit(cache=True)
def update_t(i, z, log_u, sd, t0, n, At, Bt, t, sigma, Aeff, Beff, S, logdet, rss, counters):
    """Reflected random-walk Metropolis step on threshold ``t[i]``.

    Returns ``(accepted, logdet, rss_i)``.
    """
    p = At.shape[0]
    old_t = t[i]
    new_t = reflect(old_t + sd * z, t0)
    if n == 0:
        if log_u < 0.0:
            t[i] = new_t
            threshold_row(i, At, Bt, t, Aeff, Beff)
            return True, logdet, rss[i]
        return False, logdet, rss[i]
    old_a = Aeff[i].copy()
    old_b = Beff[i].copy()
    t[i] = new_t
    threshold_row(i, At, Bt, t, Aeff, Beff)
    a_changed = False
    b_changed = False
    for j in range(p):
        if Aeff[i, j] != old_a[j]:
            a_changed = True
    for k in range(2):
        if Beff[i, k] != old_b[k]:
            b_changed = True
    new_logdet = logdet
    new_rss = rss[i]
    log_ratio = 0.0
    if a_changed:
        counters[0] += 1
        new_logdet = logdet_i_minus(Aeff)
    if new_logdet == -np.inf:
        log_ratio = -np.inf
    elif a_changed or b_changed:
        new_rss = row_rss(i, Aeff, Beff, S)
        log_ratio = n * (new_logdet - logdet) - 0.5 * (new_rss - rss[i]) / sigma[i]
    if log_u < log_ratio:
        return True, new_logdet, new_rss
    t[i] = old_t
    for j in range(p):
        Aeff[i, j] = old_a[j]
    for k in range(2):
        Beff[i, k] = old_b[k]
    return False, logdet, rss[i]


@njit(cache=True)
def update_variances(g_tau, g_nu, g_sig, n, At, Bt, tau, nu, sigma, rss,
                     a_tau, b_tau, a_nu, b_nu, a_sig, b_sig):
    """Exact inverse-gamma Gibbs draws given standard-gamma variates.

    ``g_*`` are Gamma(shape, 1) draws with shapes ``a_tau + 1/2``,
    ``a_nu + 1/2`` and ``a_sig + n/2``; IG(a, b) = b / Gamma(a, 1).
    """
    p = At.shape[0]
    for i in range(p):
        for j in range(p):
            if i != j:
                tau[i, j] = (b_tau + 0.5 * At[i, j] * At[i, j]) / g_tau[i, j]
        for k in range(2):
            nu[i, k] = (b_nu + 0.5 * Bt[i, k] * Bt[i, k]) / g_nu[i, k]
        extra = 0.5 * rss[i] if n > 0 else 0.0
        sigma[i] = (b_sig + extra) / g_sig[i]


@njit(cache=True)
def run_block(n_iter, start_iter, burn_in, thin, n, t0,
              At, Bt, t, tau, nu, sigma, Aeff, Beff, S, state_scalars, rss,
              sdA, sdB, sdT, zA, uA, zB, uB, zT, uT, gTau, gNu, gSig, gPA, gPB,
              accA, accB, accT, counters,
              out_At, out_Bt, out_t, out_tau, out_nu, out_sigma, out_pos,
              a_tau, b_tau, a_nu, b_nu, a_sig, b_sig):
    """Run ``n_iter`` systematic-scan sweeps.

    Even iterations move latent coefficients with the tuned scale ``sdA``/``sdB``;
    odd iterations propose each coefficient jointly with its variance from the
    prior, using Gamma(alpha, 1) variates ``gPA``/``gPB``.
    ``accA``/``accB`` are (2, ...) counters indexed by that kernel choice.
    Retained draws are written to ``out_*`` starting at ``out_pos[0]``.
    """
    p = At.shape[0]
    logdet = state_scalars[0]
    for it in range(n_iter):
        global_it = start_iter + it
        kind = global_it % 2
        for i in range(p):
            for j in range(p):
                if i == j:
                    continue
                if kind == 0:
                    ok, logdet, r = update_a(i, j, zA[it, i, j], uA[it, i, j], sdA[i, j], n, At, Bt, t,
                                             tau, sigma, Aeff, Beff, S, logdet, rss, counters)
                else:
                    new_tau = b_tau / gPA[it, i, j]
                    ok, logdet, r = update_a_prior_draw(i, j, math.sqrt(new_tau) * zA[it, i, j], new_tau,
                                                        uA[it, i, j], n, At, t, tau, sigma, Aeff, Beff, S,
                                                        logdet, rss, counters)
                rss[i] = r
                if ok:
                    accA[kind, i, j] += 1
        for i in range(p):
            for k in range(2):
                if kind == 0:
                    ok, r = update_b(i, k, zB[it, i, k], uB[it, i, k], sdB[i, k], n, At, Bt, t,
                                     nu, sigma, Aeff, Beff, S, rss)
                else:
                    new_nu = b_nu / gPB[it, i, k]
                    ok, r = update_b_prior_draw(i, k, math.sqrt(new_nu) * zB[it, i, k], new_nu, uB[it, i, k],
                                                n, Bt, t, nu, sigma, Aeff, Beff, S, rss)
                rss[i] = r
                if ok:
                    accB[kind, i, k] += 1
        for i in range(p):
            ok, logdet, r = update_t(i, zT[it, i], uT[it, i], sdT[i], t0, n, At, Bt, t,
                                     sigma, Aeff, Beff, S, logdet, rss, counters)
            rss[i] = r
            if ok:
                accT[i] += 1
        update_variances(gTau[it], gNu[it], gSig[it], n, At, Bt, tau, nu, sigma, rss,
                         a_tau, b_tau, a_nu, b_nu, a_sig, b_sig)
        if global_it >= burn_in and (global_it - burn_in) % thin == thin - 1:
            pos = out_pos[0]
            out_At[pos] = At
            out_Bt[pos] = Bt
            out_t[pos] = t
            out_tau[pos] = tau
            out_nu[pos] = nu
            out_sigma[pos] = sigma
            out_pos[0] = pos + 1
    state_scalars[0] = logdet
