"""Compiled path recursions shared by the simulators and the baselines.

All kernels operate row-wise on 2-D arrays (paths x time) so the same code
serves one long observed path and thousands of short synthetic ones.
"""

import math

import numpy as np
from numba import njit

_POISSON_SMALL = 30.0


@njit(cache=True)
def sv_paths(phi, sig_eta, sig_x, v, eta, z0):
    m, n = v.shape
    x = np.empty((m, n))
    scale0 = sig_eta / math.sqrt(1.0 - phi * phi)
    for i in range(m):
        h = scale0 * z0[i]
        for t in range(n):
            h = phi * h + sig_eta * eta[i, t]
            x[i, t] = sig_x * math.exp(0.5 * h) * v[i, t]
    return x


@njit(cache=True)
def garch_paths(omega, beta, alpha, u, h1):
    m, n = u.shape
    x = np.empty((m, n))
    h = np.empty((m, n))
    for i in range(m):
        hv = h1
        for t in range(n):
            if t > 0:
                hv = omega + beta * hv + alpha * x[i, t - 1] * x[i, t - 1]
            h[i, t] = hv
            x[i, t] = math.sqrt(hv) * u[i, t]
    return x, h


@njit(cache=True)
def garch_variance(omega, beta, alpha, x, h1):
    n = x.shape[0]
    h = np.empty(n)
    hv = h1
    for t in range(n):
        if t > 0:
            hv = omega + beta * hv + alpha * x[t - 1] * x[t - 1]
        h[t] = hv
    return h


@njit(cache=True)
def arma_paths(phi, psi, sd, u):
    m, n = u.shape
    x = np.empty((m, n))
    for i in range(m):
        xp = 0.0
        vp = 0.0
        for t in range(n):
            v = sd * u[i, t]
            xp = phi * xp + v + psi * vp
            vp = v
            x[i, t] = xp
    return x


@njit(cache=True)
def _poisson_inverse(lam, unif):
    """Exact Poisson quantile by CDF inversion (monotone in ``lam``)."""
    if lam <= 0.0:
        return 0.0
    if lam < _POISSON_SMALL:
        p = math.exp(-lam)
        cdf = p
        k = 0
        while unif > cdf and p > 0.0:
            k += 1
            p *= lam / k
            cdf += p
        return float(k)
    # mode-centred search; cdf at the mode accumulated downward in log space
    mode = math.floor(lam)
    logp_mode = -lam + mode * math.log(lam) - math.lgamma(mode + 1.0)
    p_mode = math.exp(logp_mode)
    cdf = p_mode
    p = p_mode
    k = mode
    while k > 0:
        p *= k / lam
        k -= 1
        cdf += p
        if p < 1e-18 * cdf:
            break
    k = mode
    if unif <= cdf:
        # walk down: find smallest k with cdf(k) >= unif
        p = p_mode
        while k > 0:
            prev = cdf - p
            if prev < unif:
                break
            cdf = prev
            p *= k / lam
            k -= 1
        return float(k)
    p = p_mode
    while unif > cdf and p > 0.0:
        k += 1
        p *= lam / k
        cdf += p
    return float(k)


@njit(cache=True)
def ricker_paths(log_r, sig_u, phi, u, unif, max_intensity):
    m, n = u.shape
    x = np.empty((m, n))
    log_n = np.empty((m, n))
    log_phi = math.log(phi)
    log_cap = math.log(max_intensity)
    for i in range(m):
        ln = 0.0
        nn = 1.0
        for t in range(n):
            ln = log_r + ln - nn + sig_u * u[i, t]
            if ln + log_phi > log_cap:
                return x, log_n, i, t
            nn = math.exp(ln)
            log_n[i, t] = ln
            x[i, t] = _poisson_inverse(phi * nn, unif[i, t])
    return x, log_n, -1, -1


@njit(cache=True)
def sv_bootstrap_filter(x, phi, sig_eta, sig_x, eta, z0, spacings):
    """Bootstrap particle filter log-likelihood.

    ``spacings`` holds K+1 Exp(1) draws per step; their normalised cumulative
    sums are the order statistics of K uniforms, giving multinomial resampling
    in O(K) by a merge walk.
    """
    n = x.shape[0]
    k = z0.shape[0]
    h = np.empty(k)
    ht = np.empty(k)
    logw = np.empty(k)
    scale0 = sig_eta / math.sqrt(1.0 - phi * phi)
    for i in range(k):
        h[i] = scale0 * z0[i]
    log_norm = -0.5 * math.log(2.0 * math.pi * sig_x * sig_x)
    inv2s2 = 0.5 / (sig_x * sig_x)
    total = 0.0
    for t in range(n):
        x2 = x[t] * x[t]
        wmax = -np.inf
        for i in range(k):
            hv = phi * h[i] + sig_eta * eta[t, i]
            ht[i] = hv
            lw = log_norm - 0.5 * hv - x2 * math.exp(-hv) * inv2s2
            logw[i] = lw
            if lw > wmax:
                wmax = lw
        if not (wmax > -np.inf) or math.isnan(wmax):
            return -1e300
        s = 0.0
        for i in range(k):
            logw[i] = math.exp(logw[i] - wmax)
            s += logw[i]
        total += wmax + math.log(s / k)
        # multinomial resampling with sorted uniforms
        csum_e = 0.0
        for j in range(k + 1):
            csum_e += spacings[t, j]
        j = 0
        acc = logw[0] / s
        e_run = 0.0
        for i in range(k):
            e_run += spacings[t, i]
            target = e_run / csum_e
            while target > acc and j < k - 1:
                j += 1
                acc += logw[j] / s
            h[i] = ht[j]
    return total
