# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


cdef inline double _clamp(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def dykstra(v, lo, hi, A, b, double tol, int max_iter, double feas_tol):
    cdef double[::1] x = np.array(v, dtype=np.float64)
    cdef const double[::1] lo_ = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hi_ = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = A_.shape[0], n = x.shape[0]
    cdef double[:, ::1] inc = np.zeros((m + 1, n))
    cdef double[::1] prev = np.empty(n)
    cdef double[::1] y = np.empty(n)
    cdef Py_ssize_t k, j
    cdef int sweep = 0
    cdef double s, delta = INFINITY, viol, diff, step
    with nogil:
        while sweep < max_iter:
            sweep += 1
            delta = 0.0
            for j in range(n):
                prev[j] = x[j]
            for k in range(m):
                s = 0.0
                for j in range(n):
                    y[j] = x[j] + inc[k, j]
                    s += A_[k, j] * y[j]
                s -= b_[k]
                if s > 0.0:
                    for j in range(n):
                        x[j] = y[j] - s * A_[k, j]
                        step = s * A_[k, j]
                        diff = step - inc[k, j]
                        delta += diff * diff
                        inc[k, j] = step
                else:
                    for j in range(n):
                        x[j] = y[j]
                        diff = inc[k, j]
                        delta += diff * diff
                        inc[k, j] = 0.0
            for j in range(n):
                y[j] = x[j] + inc[m, j]
                x[j] = _clamp(y[j], lo_[j], hi_[j])
                step = y[j] - x[j]
                diff = step - inc[m, j]
                delta += diff * diff
                inc[m, j] = step
                diff = x[j] - prev[j]
                delta += diff * diff
            delta = sqrt(delta)
            if delta < tol:
                viol = 0.0
                for k in range(m):
                    s = -b_[k]
                    for j in range(n):
                        s += A_[k, j] * x[j]
                    if s > viol:
                        viol = s
                if viol <= feas_tol:
                    break
    return np.asarray(x), sweep, delta


def box_qp(q, g, lo, hi, x0, double L, double tol, int max_iter):
    cdef const double[:, ::1] q_ = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] g_ = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[::1] lo_ = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hi_ = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] x0_ = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t n = g_.shape[0], j, k
    cdef double[::1] y = np.empty(n)
    cdef double[::1] z = np.empty(n)
    cdef double[::1] y_new = np.empty(n)
    cdef double[::1] d = np.empty(n)
    cdef double[::1] tmp = np.empty(n)
    cdef double t = 1.0, t_new, step = 1.0 / L, res = INFINITY
    cdef double dd, dqd, acc, r, rr, mom
    cdef int it, status = 1
    for j in range(n):
        y[j] = _clamp(x0_[j], lo_[j], hi_[j])
        z[j] = y[j]
    it = 0
    with nogil:
        while it < max_iter:
            it += 1
            for j in range(n):
                acc = g_[j]
                for k in range(n):
                    acc += q_[j, k] * z[k]
                y_new[j] = _clamp(z[j] - step * acc, lo_[j], hi_[j])
            dd = 0.0
            for j in range(n):
                d[j] = y_new[j] - y[j]
                dd += d[j] * d[j]
            if dd > 0.0:
                dqd = 0.0
                for j in range(n):
                    acc = 0.0
                    for k in range(n):
                        acc += q_[j, k] * d[k]
                    dqd += d[j] * acc
                if dqd < -1e-12 * dd * (L if L > 1.0 else 1.0):
                    status = 2
                    break
            rr = 0.0
            for j in range(n):
                acc = g_[j]
                for k in range(n):
                    acc += q_[j, k] * y_new[k]
                r = y_new[j] - _clamp(y_new[j] - acc, lo_[j], hi_[j])
                rr += r * r
            res = sqrt(rr)
            if res <= tol:
                status = 0
                break
            acc = 0.0
            for j in range(n):
                acc += (z[j] - y_new[j]) * d[j]
            if acc > 0.0:
                t = 1.0
                for j in range(n):
                    z[j] = y_new[j]
            else:
                t_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
                mom = (t - 1.0) / t_new
                for j in range(n):
                    z[j] = y_new[j] + mom * d[j]
                t = t_new
            for j in range(n):
                y[j] = y_new[j]
    if status == 1:
        return np.asarray(y).copy(), max_iter, res, 1
    return np.asarray(y_new).copy(), it, res, status
