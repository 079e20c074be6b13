"""Compiled inner loops."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def compensated_cumsum(x):
    """Neumaier-compensated prefix sums with a leading zero (length n + 1)."""
    n = x.size
    out = np.empty(n + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(n):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i + 1] = s + c
    return out


@njit(cache=True, nogil=True)
def tv1d_direct(y, lam):
    """Condat's direct algorithm for 1-D total-variation denoising.

    Returns the minimiser of 0.5*||y - x||^2 + lam * sum |x[i] - x[i-1]|.
    Each segment is written with a single value, so plateaus are exact.
    """
    n = y.size
    x = np.empty(n)
    if n == 0:
        return x
    k = 0
    k0 = 0
    kplus = 0
    kminus = 0
    twolam = 2.0 * lam
    minlam = -lam
    umin = lam
    umax = minlam
    vmin = y[0] - lam
    vmax = y[0] + lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                while True:
                    x[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = k0
                kminus = k0
                vmin = y[k]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    x[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k0
                vmax = y[k]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while True:
                    x[k0] = vmin
                    k0 += 1
                    if k0 > k:
                        break
                return x
        umin += y[k + 1] - vmin
        if umin < minlam:
            while True:
                x[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = k0
            kplus = k0
            kminus = k0
            vmin = y[k]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
        else:
            umax += y[k + 1] - vmax
            if umax > lam:
                while True:
                    x[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k0
                kminus = k0
                vmax = y[k]
                vmin = vmax - twolam
                umin = lam
                umax = minlam
            else:
                k += 1
                if umin >= lam:
                    kminus = k
                    vmin += (umin - lam) / (kminus - k0 + 1)
                    umin = lam
                if umax <= minlam:
                    kplus = k
                    vmax += (umax + lam) / (kplus - k0 + 1)
                    umax = minlam


@njit(cache=True, nogil=True)
def red_black_sweeps(z, y, lam, n_sweeps):
    """Cyclic coordinate ascent on the FLSA dual, even then odd interior indices.

    ``z`` has length n + 1 with z[0] = z[n] = 0 held fixed; updated in place.
    """
    n = y.size
    for _ in range(n_sweeps):
        for start in (1, 2):
            for j in range(start, n, 2):
                v = 0.5 * (z[j - 1] + z[j + 1] + y[j] - y[j - 1])
                if v > lam:
                    v = lam
                elif v < -lam:
                    v = -lam
                z[j] = v
    return z
