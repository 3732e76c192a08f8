"""Pure-Python kernels; the reference behaviour for ``_kernels.pyx``.

Both modules expose the same two functions with identical semantics.

Status codes returned by ``box_qp``: 0 converged, 1 iteration budget
exhausted, 2 negative curvature detected.
"""
import numpy as np


def dykstra(v, lo, hi, A, b, tol, max_iter, feas_tol):
    """Project ``v`` onto ``{lo <= x <= hi, A x <= b}`` (rows of ``A`` unit norm).

    Returns ``(x, sweeps, delta)`` where ``delta`` is the size of the last sweep
    update of ``x`` and of the correction increments together; the iterate alone
    can stall while the increments are still moving.  ``sweeps == max_iter``
    signals non-convergence.
    """
    x = np.array(v, dtype=float)
    m, n = A.shape
    inc = np.zeros((m + 1, n))
    delta = np.inf
    sweep = 0
    while sweep < max_iter:
        sweep += 1
        x_prev = x.copy()
        inc_prev = inc.copy()
        for k in range(m):
            y = x + inc[k]
            s = A[k] @ y - b[k]
            if s > 0.0:
                x = y - s * A[k]
            else:
                x = y
            inc[k] = y - x
        y = x + inc[m]
        x = np.minimum(np.maximum(y, lo), hi)
        inc[m] = y - x
        delta = np.sqrt(np.sum((x - x_prev) ** 2) + np.sum((inc - inc_prev) ** 2))
        if delta < tol:
            viol = np.max(A @ x - b) if m else 0.0
            if viol <= feas_tol:
                break
    return x, sweep, float(delta)


def box_qp(q, g, lo, hi, x0, L, tol, max_iter):
    """Accelerated projected gradient with adaptive restart on a box.

    Minimizes ``0.5 y'qy + g'y`` over ``lo <= y <= hi`` using step ``1/L``.
    Returns ``(y, iters, residual, status)``; ``residual`` is the norm of the
    projected-gradient step ``y - P(y - grad)``.
    """
    y = np.minimum(np.maximum(np.array(x0, dtype=float), lo), hi)
    z = y.copy()
    t = 1.0
    step = 1.0 / L
    res = np.inf
    for it in range(1, max_iter + 1):
        grad_z = q @ z + g
        y_new = np.minimum(np.maximum(z - step * grad_z, lo), hi)
        d = y_new - y
        dd = d @ d
        if dd > 0.0 and d @ (q @ d) < -1e-12 * dd * max(L, 1.0):
            return y_new, it, float(res), 2
        grad_y = q @ y_new + g
        r = y_new - np.minimum(np.maximum(y_new - grad_y, lo), hi)
        res = np.sqrt(r @ r)
        if res <= tol:
            return y_new, it, float(res), 0
        # gradient-based restart
        if (z - y_new) @ (y_new - y) > 0.0:
            t = 1.0
            z = y_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = y_new + ((t - 1.0) / t_new) * d
            t = t_new
        y = y_new
    return y, max_iter, float(res), 1
