"""Nikaido-Isoda function, merit gap and QVI residual.

``psi(x, y)`` sums every player's loss at its unilateral deviation ``y_i``
against ``x_{-i}``.  Because the feasible set ``X(x)`` is a product of player
sections, the merit function ``min_y psi(x, y)`` splits into one small
program per player.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .model import (
    BlockVector,
    GameSpec,
    QuadraticObjective,
    evaluate_objective,
    is_fixed_point,
    partial_gradient,
)
from .subproblems import (
    FeasibleSection,
    minimize_linear_1block,
    minimize_quadratic_1block,
    player_section,
    project_polytope,
)

TAU_SOLVE = 1e-8
TAU_CERT = 1e-6


@dataclass(frozen=True)
class GapReport:
    psi_xx: float
    phi: float
    gap: float
    per_player_improvement: tuple
    argmin: BlockVector
    fixed_point: bool

    def to_dict(self) -> dict:
        return {
            "psi_xx": self.psi_xx,
            "phi": self.phi,
            "gap": self.gap,
            "per_player_improvement": list(self.per_player_improvement),
            "argmin": self.argmin.data.tolist(),
            "fixed_point": self.fixed_point,
        }


def psi(game: GameSpec, x, y) -> float:
    x = game.bundle(x)
    y = game.bundle(y)
    total = 0.0
    for i in range(game.n_players):
        total += evaluate_objective(game, i, x.replace(i, y.block(i)))
    return total


def own_quadratic(game: GameSpec, i: int, x):
    """``(q, g)`` with ``J_i(y_i, x_{-i}) = 0.5 y_i'q y_i + g'y_i + const``."""
    obj = game.objectives[i]
    off = game.offsets
    sl = slice(off[i], off[i + 1])
    x0 = game.bundle(x).replace(i, np.zeros(game.dims[i])).data
    q = obj.Q[sl, sl]
    g = obj.Q[sl] @ x0 + obj.c[sl]
    return q, g


def block_argmin(
    game: GameSpec, i: int, x, section: FeasibleSection = None, tol: float = TAU_SOLVE,
    max_iter: int = 10000,
) -> np.ndarray:
    """Minimizer of ``J_i(., x_{-i})`` over player ``i``'s feasible section."""
    x = game.bundle(x)
    if section is None:
        section = player_section(game, i, x)
    if isinstance(game.objectives[i], QuadraticObjective):
        q, g = own_quadratic(game, i, x)
        return minimize_quadratic_1block(q, g, section, tol=tol, max_iter=max_iter)
    return _oracle_block_min(game, i, x, section, tol, max_iter)


def _oracle_block_min(game, i, x, section, tol, max_iter):
    """Projected gradient with Armijo backtracking for black-box objectives."""
    y = project_polytope(x.block(i), section)

    def f(v):
        return evaluate_objective(game, i, x.replace(i, v))

    def grad(v):
        return partial_gradient(game, i, x.replace(i, v))

    fy, gy = f(y), grad(y)
    step = 1.0
    res = np.inf
    for _ in range(max_iter):
        res = float(np.linalg.norm(y - project_polytope(y - gy, section)))
        if res <= tol:
            return y
        for _ in range(60):
            y_new = project_polytope(y - step * gy, section)
            f_new = f(y_new)
            if f_new <= fy + gy @ (y_new - y) + (0.5 / step) * np.sum((y_new - y) ** 2):
                break
            step *= 0.5
        y, fy, gy = y_new, f_new, grad(y_new)
        step *= 2.0
    raise ConvergenceError(
        f"oracle best response of player {i} did not converge (residual {res:.3e})",
        last_iterate=y,
        residual=res,
    )


def merit_phi(game: GameSpec, x, tol: float = TAU_SOLVE) -> GapReport:
    """Merit value ``min_{y in X(x)} psi(x, y)`` with the per-player breakdown.

    Raises ``DomainError`` naming the player whose section is empty.
    """
    x = game.bundle(x)
    sections = [player_section(game, i, x) for i in range(game.n_players)]
    current = [evaluate_objective(game, i, x) for i in range(game.n_players)]
    best_blocks = []
    best_vals = []
    for i, sec in enumerate(sections):
        y_i = block_argmin(game, i, x, sec, tol)
        best_blocks.append(y_i)
        best_vals.append(evaluate_objective(game, i, x.replace(i, y_i)))
    improvements = tuple(c - b for c, b in zip(current, best_vals))
    psi_xx = float(sum(current))
    phi = float(sum(best_vals))
    return GapReport(
        psi_xx=psi_xx,
        phi=phi,
        gap=float(sum(improvements)),
        per_player_improvement=improvements,
        argmin=BlockVector.from_blocks(best_blocks),
        fixed_point=is_fixed_point(game, x),
    )


def is_gne(game: GameSpec, x, tol: float = TAU_CERT) -> bool:
    """Fixed point of the constraint map with merit gap at most ``tol``."""
    x = game.bundle(x)
    if not is_fixed_point(game, x):
        return False
    return merit_phi(game, x, tol=min(TAU_SOLVE, 0.01 * tol)).gap <= tol


def qvi_residual(game: GameSpec, x, tol: float = 1e-10) -> float:
    """``min_{y in X(x)} sum_i <grad_i J_i(x), y_i - x_i>``; zero certifies equilibrium."""
    x = game.bundle(x)
    total = 0.0
    for i in range(game.n_players):
        g = partial_gradient(game, i, x)
        section = player_section(game, i, x)
        _, val = minimize_linear_1block(g, section, tol)
        total += val - float(g @ x.block(i))
    return total
