"""Compiled inner loops for the linear solver.

All reductions run in a fixed sequential order so results are bit-reproducible.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def apply_op(x, a, coup, inv_h2, out):
    """out = a*x - coup * lap(x), Neumann faces dropped."""
    m, n = x.shape
    for j in range(m):
        for i in range(n):
            c = x[j, i]
            s = 0.0
            if i > 0:
                s += x[j, i - 1] - c
            if i < n - 1:
                s += x[j, i + 1] - c
            if j > 0:
                s += x[j - 1, i] - c
            if j < m - 1:
                s += x[j + 1, i] - c
            out[j, i] = a * c - coup[j, i] * s * inv_h2


@numba.njit(cache=True)
def _dot(u, v):
    m, n = u.shape
    s = 0.0
    for j in range(m):
        for i in range(n):
            s += u[j, i] * v[j, i]
    return s


@numba.njit(cache=True)
def _inf(u):
    m, n = u.shape
    s = 0.0
    for j in range(m):
        for i in range(n):
            a = abs(u[j, i])
            if a > s:
                s = a
    return s


@numba.njit(cache=True)
def bicgstab_cycle(b, x, r, a, coup, inv_h2, inv_diag, target, max_it):
    """One BiCGStab cycle from residual ``r`` (updated in place with ``x``).

    Returns the iteration count; stops on convergence of the recursive
    residual, on breakdown, or after ``max_it`` iterations.
    """
    m, n = b.shape
    r_hat = r.copy()
    p = np.zeros_like(b)
    v = np.zeros_like(b)
    y = np.empty_like(b)
    s = np.empty_like(b)
    t = np.empty_like(b)
    rho = 1.0
    alpha = 1.0
    omega = 1.0
    it = 0
    while it < max_it:
        it += 1
        rho_new = _dot(r_hat, r)
        if rho_new == 0.0 or omega == 0.0:
            break
        beta = (rho_new / rho) * (alpha / omega)
        for j in range(m):
            for i in range(n):
                p[j, i] = r[j, i] + beta * (p[j, i] - omega * v[j, i])
                y[j, i] = p[j, i] * inv_diag[j, i]
        apply_op(y, a, coup, inv_h2, v)
        denom = _dot(r_hat, v)
        if denom == 0.0:
            break
        alpha = rho_new / denom
        snorm = 0.0
        for j in range(m):
            for i in range(n):
                x[j, i] += alpha * y[j, i]
                s[j, i] = r[j, i] - alpha * v[j, i]
                if abs(s[j, i]) > snorm:
                    snorm = abs(s[j, i])
        if snorm <= target:
            r[:, :] = s
            break
        for j in range(m):
            for i in range(n):
                y[j, i] = s[j, i] * inv_diag[j, i]
        apply_op(y, a, coup, inv_h2, t)
        tt = _dot(t, t)
        omega = _dot(t, s) / tt if tt > 0.0 else 0.0
        rnorm = 0.0
        for j in range(m):
            for i in range(n):
                x[j, i] += omega * y[j, i]
                r[j, i] = s[j, i] - omega * t[j, i]
                if abs(r[j, i]) > rnorm:
                    rnorm = abs(r[j, i])
        rho = rho_new
        if rnorm <= target:
            break
    return it
