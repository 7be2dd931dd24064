# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: the affine-drift Euler stepper and Nadaraya-Watson kernel sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite

cnp.import_array()


def euler_affine(double x0, double kappa, double theta, double sigma,
                 bint sqrt_diffusion, bint truncate, double dt, z, bint trapezoid):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t m = zv.shape[0]
    x_arr = np.zeros(m + 1)
    y_arr = np.zeros(m + 1)
    cdef double[::1] x = x_arr
    cdef double[::1] y = y_arr
    cdef double sqdt = sqrt(dt)
    cdef double xk = x0, yk = 0.0, xn, xt, diff
    cdef Py_ssize_t k
    cdef Py_ssize_t bad = -1
    x[0] = xk
    with nogil:
        for k in range(m):
            if sqrt_diffusion:
                xt = 0.0 if (truncate and xk < 0.0) else xk
                diff = sigma * sqrt(xt)
            else:
                diff = sigma
            xn = xk + kappa * (theta - xk) * dt + diff * sqdt * zv[k]
            if not isfinite(xn):
                bad = k
                break
            if trapezoid:
                yk = yk + 0.5 * (xk + xn) * dt
            else:
                yk = yk + xk * dt
            x[k + 1] = xn
            y[k + 1] = yk
            xk = xn
    return x_arr, y_arr, bad


cdef inline double _kernel(int code, double u) noexcept nogil:
    cdef double a = fabs(u)
    if a > 1.0:
        return 0.0
    if code == 0:
        return 0.75 * (1.0 - u * u)
    if code == 1:
        return 0.5
    return 1.0 - a


def nw_sums(weights_at, responses, eval_points, double h, int code):
    """Neumaier-compensated kernel sums accumulated in observation order."""
    cdef const double[::1] w = np.ascontiguousarray(weights_at, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(responses, dtype=np.float64)
    cdef const double[::1] pts = np.ascontiguousarray(eval_points, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], npts = pts.shape[0], i, j
    num_arr = np.empty(npts)
    den_arr = np.empty(npts)
    cdef double[::1] num = num_arr
    cdef double[::1] den = den_arr
    cdef double x, kh, v, t, sn, cn, sd, cd
    with nogil:
        for i in range(npts):
            x = pts[i]
            sn = 0.0
            cn = 0.0
            sd = 0.0
            cd = 0.0
            for j in range(n):
                kh = _kernel(code, (w[j] - x) / h) / h
                if kh == 0.0:
                    continue
                v = kh * r[j]
                t = sn + v
                if fabs(sn) >= fabs(v):
                    cn = cn + ((sn - t) + v)
                else:
                    cn = cn + ((v - t) + sn)
                sn = t
                t = sd + kh
                if fabs(sd) >= fabs(kh):
                    cd = cd + ((sd - t) + kh)
                else:
                    cd = cd + ((kh - t) + sd)
                sd = t
            num[i] = sn + cn
            den[i] = sd + cd
    return num_arr, den_arr
