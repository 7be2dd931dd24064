"""Pure-Python implementations of the hot loops.

Used when the compiled ``_core`` extension is unavailable or when
``INTDIFF_BACKEND=python`` is set. The Euler stepper performs the same
floating-point operations in the same order as the compiled one, so paths are
bitwise identical across backends. The kernel sums are exactly rounded
(``math.fsum``) rather than compensated, so they agree with the compiled
backend to within a few ulps.
"""

from __future__ import annotations

import math

import numpy as np


def euler_affine(x0, kappa, theta, sigma, sqrt_diffusion, truncate, dt, z, trapezoid):
    """Euler scheme for ``dX = kappa (theta - X) dt + sigma X^p dW`` with ``p`` in {0, 1/2}.

    Returns ``(x, y, bad_step)``; ``bad_step`` is -1 unless a non-finite state
    appeared, in which case the arrays are truncated garbage past that step.
    """
    m = len(z)
    zs = z.tolist() if isinstance(z, np.ndarray) else list(z)
    x = [0.0] * (m + 1)
    y = [0.0] * (m + 1)
    sqdt = math.sqrt(dt)
    sqrt = math.sqrt
    isfinite = math.isfinite
    xk = float(x0)
    yk = 0.0
    x[0] = xk
    for k in range(m):
        if sqrt_diffusion:
            xt = 0.0 if (truncate and xk < 0.0) else xk
            diff = sigma * sqrt(xt)
        else:
            diff = sigma
        xn = xk + kappa * (theta - xk) * dt + diff * sqdt * zs[k]
        if not isfinite(xn):
            return np.asarray(x), np.asarray(y), k
        if trapezoid:
            yk = yk + 0.5 * (xk + xn) * dt
        else:
            yk = yk + xk * dt
        x[k + 1] = xn
        y[k + 1] = yk
        xk = xn
    return np.asarray(x), np.asarray(y), -1


def _kernel_matrix(code, u):
    a = np.abs(u)
    if code == 0:
        out = 0.75 * (1.0 - u * u)
    elif code == 1:
        out = np.full_like(u, 0.5)
    else:
        out = 1.0 - a
    out[a > 1.0] = 0.0
    return out


def nw_sums(weights_at, responses, eval_points, h, code):
    """Kernel-weighted sums ``sum_j K_h(w_j - x) r_j`` and ``sum_j K_h(w_j - x)`` per point."""
    w = np.asarray(weights_at, dtype=float)
    r = np.asarray(responses, dtype=float)
    pts = np.asarray(eval_points, dtype=float)
    num = np.empty(len(pts))
    den = np.empty(len(pts))
    for i, x in enumerate(pts):
        kh = _kernel_matrix(code, (w - x) / h) / h
        nz = np.flatnonzero(kh)
        khn = kh[nz]
        num[i] = math.fsum((khn * r[nz]).tolist())
        den[i] = math.fsum(khn.tolist())
    return num, den
