"""Projections and small convex programs over one player's feasible section."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import ConvergenceError, DomainError, NotPSDError, PreconditionError
from .model import TAU_FEAS, BlockVector, ConstantConstraints, GameSpec, SharedConstraints

_ZERO_ROW = 1e-14


@dataclass(frozen=True, eq=False)
class FeasibleSection:
    """Polytope ``{y : lo <= y <= hi, A y <= b}`` with unit-norm rows of ``A``."""

    lo: np.ndarray
    hi: np.ndarray
    A: np.ndarray
    b: np.ndarray

    @classmethod
    def build(cls, lo, hi, A=None, b=None, tol: float = TAU_FEAS) -> "FeasibleSection":
        """Normalize rows, drop rows that vanish, merge parallel duplicates.

        Raises ``DomainError`` when a vanishing row is violated or the box is empty.
        """
        lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
        n = lo.size
        if np.any(lo > hi + tol):
            raise DomainError("empty box")
        hi = np.maximum(hi, lo)
        if A is None or np.size(A) == 0:
            return cls(lo, hi, np.zeros((0, n)), np.zeros(0))
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        norms = np.linalg.norm(A, axis=1)
        zero = norms <= _ZERO_ROW
        if np.any(b[zero] < -tol):
            raise DomainError("a constraint row independent of the block is violated")
        A, b, norms = A[~zero], b[~zero], norms[~zero]
        A = A / norms[:, None]
        b = b / norms
        if A.shape[0] > 1:
            keys, inverse = np.unique(np.round(A, 14), axis=0, return_inverse=True)
            inverse = np.ravel(inverse)
            b_min = np.full(keys.shape[0], np.inf)
            np.minimum.at(b_min, inverse, b)
            first = np.array([np.flatnonzero(inverse == k)[0] for k in range(keys.shape[0])])
            order = np.argsort(first)
            A, b = A[first[order]], b_min[order]
        return cls(lo, hi, np.ascontiguousarray(A), b)

    @classmethod
    def for_player(cls, game: GameSpec, i: int, x) -> "FeasibleSection":
        """Section of player ``i`` given the opponents' blocks of ``x``."""
        x = game.bundle(x)
        lo, hi = game.lower[i].copy(), game.upper[i].copy()
        cons = game.constraints
        if isinstance(cons, SharedConstraints):
            off = game.offsets
            s = cons.set
            if s.lo is not None:
                lo = np.maximum(lo, s.lo[off[i]:off[i + 1]])
            if s.hi is not None:
                hi = np.minimum(hi, s.hi[off[i]:off[i + 1]])
            if s.lo is not None or s.hi is not None:
                others_lo = np.full(game.total_dim, -np.inf) if s.lo is None else s.lo
                others_hi = np.full(game.total_dim, np.inf) if s.hi is None else s.hi
                xm = x.minus(i)
                mask = np.ones(game.total_dim, bool)
                mask[off[i]:off[i + 1]] = False
                if np.any(xm < others_lo[mask] - TAU_FEAS) or np.any(xm > others_hi[mask] + TAU_FEAS):
                    raise DomainError(f"opponents of player {i} violate the shared box", player=i)
            A_i = s.A[:, off[i]:off[i + 1]]
            rest = s.A @ x.data - A_i @ x.block(i)
            try:
                return cls.build(lo, hi, A_i, s.b - rest)
            except DomainError as exc:
                raise DomainError(f"feasible section of player {i} is empty: {exc}", player=i)
        elif not _is_constant(cons):
            raise PreconditionError("oracle constraint maps have no polyhedral sections")
        try:
            return cls.build(lo, hi)
        except DomainError as exc:
            raise DomainError(f"feasible section of player {i} is empty: {exc}", player=i)

    @classmethod
    def joint(cls, game: GameSpec) -> "FeasibleSection":
        """The whole feasible set ``C`` intersected with the admissible boxes."""
        lo, hi = game.lo, game.hi
        cons = game.constraints
        if isinstance(cons, SharedConstraints):
            s = cons.set
            if s.lo is not None:
                lo = np.maximum(lo, s.lo)
            if s.hi is not None:
                hi = np.minimum(hi, s.hi)
            return cls.build(lo, hi, s.A, s.b)
        if not _is_constant(cons):
            raise PreconditionError("oracle constraint maps have no polyhedral description")
        return cls.build(lo, hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def contains(self, y, tol: float = TAU_FEAS) -> bool:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y < self.lo - tol) or np.any(y > self.hi + tol):
            return False
        return not self.n_rows or bool(np.max(self.A @ y - self.b) <= tol)

    def interval(self):
        """Exact ``(lo, hi)`` of a one-dimensional section."""
        if self.dim != 1:
            raise PreconditionError("interval() needs a one-dimensional section")
        lo, hi = float(self.lo[0]), float(self.hi[0])
        for a, beta in zip(self.A[:, 0], self.b):
            if a > 0:
                hi = min(hi, beta / a)
            else:
                lo = max(lo, beta / a)
        return lo, hi

    def is_empty(self, hint=None, tol: float = TAU_FEAS) -> bool:
        if self.dim == 1:
            lo, hi = self.interval()
            return lo > hi + tol
        if np.any(self.lo > self.hi + tol):
            return True
        if not self.n_rows:
            return False
        if hint is not None and self.contains(hint, tol):
            return False
        res = linprog(
            np.zeros(self.dim),
            A_ub=self.A,
            b_ub=self.b + tol,
            bounds=list(zip(self.lo, self.hi)),
            method="highs",
        )
        return res.status == 2

    def require_nonempty(self, player=None, hint=None):
        if self.is_empty(hint):
            raise DomainError(
                f"feasible section of player {player} is empty (outside the domain)",
                player=player,
            )


def _is_constant(cons) -> bool:
    return isinstance(cons, ConstantConstraints)


def project_box(v, lo, hi) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise PreconditionError("project_box needs lo <= hi")
    return np.minimum(np.maximum(np.asarray(v, dtype=float), lo), hi)


def project_polytope(v, section: FeasibleSection, tol: float = 1e-13, max_iter: int = 200000) -> np.ndarray:
    """Euclidean projection onto the section by Dykstra's alternating projections.

    Box-only and one-dimensional sections are projected in closed form.  ``tol``
    is relative to the magnitude of ``v`` and of the right-hand sides.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not section.n_rows:
        return np.minimum(np.maximum(v, section.lo), section.hi)
    if section.dim == 1:
        lo, hi = section.interval()
        if lo > hi + TAU_FEAS:
            raise DomainError("projection onto an empty section")
        return np.array([min(max(v[0], lo), max(lo, hi))])
    if section.contains(v, 0.0):
        return v.copy()
    scale = max(1.0, float(np.max(np.abs(v))), float(np.max(np.abs(section.b))))
    x, sweeps, delta = kernels.dykstra(
        v, section.lo, section.hi, section.A, section.b, tol * scale, max_iter, TAU_FEAS
    )
    if sweeps >= max_iter:
        viol = float(np.max(section.A @ x - section.b))
        raise ConvergenceError(
            f"Dykstra projection did not converge in {max_iter} sweeps "
            f"(last step {delta:.3e}, violation {viol:.3e})",
            last_iterate=x,
            residual=delta,
        )
    return x


def _lipschitz(q: np.ndarray) -> float:
    if q.shape[0] <= 512:
        return float(np.linalg.eigvalsh(q).max())
    v = np.ones(q.shape[0]) / np.sqrt(q.shape[0])
    lam = 0.0
    for _ in range(100):
        w = q @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return 1.1 * lam


def stationarity_residual(q, g, y, section: FeasibleSection) -> float:
    grad = q @ y + g
    return float(np.linalg.norm(y - project_polytope(y - grad, section)))


def minimize_quadratic_1block(
    q, g, section: FeasibleSection, tol: float = 1e-10, max_iter: int = 10000, x0=None
) -> np.ndarray:
    """Minimize ``0.5 y'qy + g'y`` over the section.

    Accelerated projected gradient with step ``1/L`` and gradient restart; a
    scalar problem is solved by clamping the unconstrained minimizer.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    n = g.size
    if q.shape != (n, n):
        raise PreconditionError(f"q has shape {q.shape}, expected {(n, n)}")
    if n == 1:
        lo, hi = section.interval()
        if lo > hi + TAU_FEAS:
            raise DomainError("minimization over an empty section")
        hi = max(lo, hi)
        a, c = q[0, 0], g[0]
        if a < 0.0:
            raise NotPSDError(f"negative curvature {a} in a scalar subproblem")
        if a == 0.0:
            return np.array([hi if c < 0.0 else lo])
        return np.array([min(max(-c / a, lo), hi)])
    L = _lipschitz(q)
    if L <= 0.0:
        if np.linalg.eigvalsh(q).min() < -1e-12:
            raise NotPSDError("quadratic term is negative definite")
        y, _ = minimize_linear_1block(g, section, tol)
        return y
    start = section.lo.copy() if x0 is None else np.asarray(x0, dtype=float)
    if not section.n_rows:
        y, it, res, status = kernels.box_qp(q, g, section.lo, section.hi, start, L, tol, max_iter)
        if status == 2:
            raise NotPSDError("negative curvature along an iterate direction")
        if status == 1:
            raise ConvergenceError(
                f"box QP did not reach tolerance {tol} (residual {res:.3e})",
                last_iterate=y,
                residual=res,
            )
        return y
    y = project_polytope(start, section)
    z = y.copy()
    t = 1.0
    step = 1.0 / L
    res = np.inf
    for _ in range(max_iter):
        y_new = project_polytope(z - step * (q @ z + g), section)
        d = y_new - y
        dd = d @ d
        if dd > 0.0 and d @ (q @ d) < -1e-12 * dd * max(L, 1.0):
            raise NotPSDError("negative curvature along an iterate direction")
        res = stationarity_residual(q, g, y_new, section)
        if res <= tol:
            return y_new
        if (z - y_new) @ d > 0.0:
            t = 1.0
            z = y_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = y_new + ((t - 1.0) / t_new) * d
            t = t_new
        y = y_new
    raise ConvergenceError(
        f"polytope QP did not reach tolerance {tol} (residual {res:.3e})",
        last_iterate=y,
        residual=res,
    )


def minimize_linear_1block(g, section: FeasibleSection, tol: float = 1e-10):
    """Minimizer and minimum of ``g'y`` over the section.

    Zero components pick the lower bound.  Sections with halfspace rows are
    handed to HiGHS, which returns a vertex.
    """
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if not (np.all(np.isfinite(section.lo)) and np.all(np.isfinite(section.hi))):
        raise PreconditionError("linear minimization over an unbounded section")
    if section.dim == 1:
        lo, hi = section.interval()
        if lo > hi + TAU_FEAS:
            raise DomainError("minimization over an empty section")
        y = np.array([max(lo, hi) if g[0] < 0.0 else lo])
        return y, float(g @ y)
    if not section.n_rows:
        y = np.where(g < 0.0, section.hi, section.lo)
        return y, float(g @ y)
    if not np.any(g):
        y = project_polytope(section.lo, section)
        return y, 0.0
    res = linprog(
        g,
        A_ub=section.A,
        b_ub=section.b,
        bounds=list(zip(section.lo, section.hi)),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        raise DomainError("minimization over an empty section")
    if res.status != 0:
        raise ConvergenceError(f"linear program failed: {res.message}")
    y = np.asarray(res.x, dtype=float)
    return y, float(g @ y)


def player_section(game: GameSpec, i: int, x) -> FeasibleSection:
    section = FeasibleSection.for_player(game, i, x)
    bv = game.bundle(x)
    section.require_nonempty(player=i, hint=bv.block(i))
    return section


def joint_projection(game: GameSpec, x, section=None) -> BlockVector:
    section = FeasibleSection.joint(game) if section is None else section
    return BlockVector(project_polytope(np.asarray(x, dtype=float), section), game.dims)


def sample_in_section(section: FeasibleSection, anchor, rng, boundary: bool = False) -> np.ndarray:
    """Random point of the section on the segment from ``anchor`` towards a random box point.

    With ``boundary=True`` the ray through that point is followed to the
    boundary of the section instead.  ``anchor`` must be feasible.
    """
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    z = rng.uniform(section.lo, section.hi)
    d = z - anchor
    t_max = 1.0
    if boundary:
        with np.errstate(divide="ignore", invalid="ignore"):
            to_box = np.where(d > 0, (section.hi - anchor) / d, np.where(d < 0, (section.lo - anchor) / d, np.inf))
        t_max = max(float(np.min(to_box)), 0.0)
    if section.n_rows:
        slope = section.A @ d
        room = section.b - section.A @ anchor
        pos = slope > 0.0
        if np.any(pos):
            t_max = min(t_max, float(np.min(np.maximum(room[pos], 0.0) / slope[pos])))
    t = t_max if boundary else rng.uniform(0.0, t_max)
    return anchor + t * d
