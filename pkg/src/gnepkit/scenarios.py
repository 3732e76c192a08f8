"""Built-in games: Cournot duopoly/oligopoly, a heat-equation spot market and
random jointly convex quadratic games."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError
from .model import (
    ConstantConstraints,
    GameSpec,
    QuadraticObjective,
    SharedConstraints,
    SharedSet,
)
from .solvers import PotentialSpec


def _check_cournot(eta, p, costs):
    costs = np.atleast_1d(np.asarray(costs, dtype=float))
    if not p > 0:
        raise PreconditionError(f"price slope p must be positive, got {p}")
    if not (np.all(costs > 0) and np.all(costs < eta)):
        raise PreconditionError(f"unit costs must lie in (0, eta={eta}), got {costs.tolist()}")
    return costs


def _cournot_matrix(p: float, n: int) -> np.ndarray:
    return p * (np.ones((n, n)) + np.eye(n))


def build_cournot(eta: float, p: float, costs, cap: Optional[float] = None) -> GameSpec:
    """Cournot game with losses ``J_i = -x_i (eta - c_i - p * sum_j x_j)``.

    Each firm produces in ``[0, eta/p]``.  With ``cap`` the firms share the
    capacity constraint ``sum_i x_i <= cap``.
    """
    costs = _check_cournot(eta, p, costs)
    n = costs.size
    Q = _cournot_matrix(p, n)
    objectives = []
    for i in range(n):
        # only row/column i of the full Cournot matrix matters for player i
        Qi = np.zeros((n, n))
        Qi[i, :] = Q[i, :]
        Qi[:, i] = Q[:, i]
        Qi[i, i] = 2.0 * p
        ci = np.zeros(n)
        ci[i] = -(eta - costs[i])
        objectives.append(QuadraticObjective(Qi, ci, 0.0))
    bound = eta / p
    lower = [np.zeros(1)] * n
    upper = [np.full(1, bound)] * n
    if cap is None:
        constraints = ConstantConstraints()
    else:
        if not cap > 0:
            raise PreconditionError(f"capacity must be positive, got {cap}")
        constraints = SharedConstraints(
            SharedSet(np.ones((1, n)), np.array([float(cap)]), np.zeros(n), lo=np.zeros(n))
        )
    return GameSpec(tuple([1] * n), tuple(objectives), tuple(lower), tuple(upper), constraints)


def build_cournot_potential(eta: float, p: float, costs) -> PotentialSpec:
    """Exact potential ``sum_i [p x_i^2 - (eta - c_i) x_i] + p sum_{i<j} x_i x_j``."""
    costs = _check_cournot(eta, p, costs)
    n = costs.size
    return PotentialSpec(QuadraticObjective(_cournot_matrix(p, n), -(eta - costs), 0.0))


def cournot_best_response(eta, p, costs, i, x_minus_i, cap=None) -> float:
    """Closed-form best response: the unconstrained one truncated to the section."""
    costs = np.asarray(costs, dtype=float)
    others = float(np.sum(x_minus_i))
    hi = eta / p if cap is None else min(eta / p, cap - others)
    return min(max((eta - costs[i] - p * others) / (2 * p), 0.0), hi)


# -- heat-equation spot market ------------------------------------------------


@dataclass(frozen=True)
class HeatMarketConfig:
    """Discretized spot market driven by ``y_t - y_xx = sum_i u_i`` on (0, 1).

    ``target`` is the tracked state level ``y_d`` (scalar or space-time vector),
    ``alphas`` the control costs and ``tracking`` the per-player weight of the
    tracking term.  Player ``i`` keeps the state below ``state_cap - buffers[i]``.
    """

    grid_points: int = 8
    time_steps: int = 6
    horizon: float = 1.0
    caps: tuple = (1.0, 1.0)
    state_cap: float = 0.1
    buffers: tuple = (0.01, 0.02)
    target: object = 0.2
    alphas: tuple = (0.01, 0.01)
    tracking: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.grid_points < 3 or self.time_steps < 2:
            raise PreconditionError("need at least 3 grid points and 2 time steps")
        if not self.horizon > 0:
            raise PreconditionError("horizon must be positive")
        if any(c <= 0 for c in self.caps):
            raise PreconditionError("control caps must be positive")
        if any(b < 0 or b >= self.state_cap for b in self.buffers):
            raise PreconditionError("buffers must lie in [0, state_cap)")
        if any(a < 0 for a in self.alphas) or any(w < 0 for w in self.tracking):
            raise PreconditionError("objective weights must be nonnegative")

    @property
    def dt(self) -> float:
        return self.horizon / self.time_steps

    @property
    def block_dim(self) -> int:
        return self.grid_points * self.time_steps

    def per_player(self, values, n_players: int, name: str) -> np.ndarray:
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if values.size == 1:
            return np.full(n_players, values[0])
        if values.size != n_players:
            raise PreconditionError(f"{name} needs one entry per player")
        return values


def heat_solution_matrix(cfg: HeatMarketConfig) -> np.ndarray:
    """Dense map from a stacked source ``(f^1, ..., f^T)`` to states ``(y^1, ..., y^T)``.

    Central differences in space with homogeneous Dirichlet conditions, zero
    initial state and implicit Euler in time.
    """
    M, T, dt = cfg.grid_points, cfg.time_steps, cfg.dt
    h = 1.0 / (M + 1)
    lap = (2.0 * np.eye(M) - np.eye(M, k=1) - np.eye(M, k=-1)) / h**2
    step = np.eye(M) + dt * lap
    if np.linalg.cond(step) > 1e14:
        raise PreconditionError("singular time-stepping matrix")
    B = np.linalg.inv(step)
    powers = [dt * B]
    for _ in range(T - 1):
        powers.append(B @ powers[-1])
    S = np.zeros((M * T, M * T))
    for n in range(T):
        for k in range(n + 1):
            S[n * M:(n + 1) * M, k * M:(k + 1) * M] = powers[n - k]
    return S


def build_heat_market(cfg: HeatMarketConfig, n_players: int = 2) -> GameSpec:
    if n_players < 2:
        raise PreconditionError("a game needs at least two players")
    S = heat_solution_matrix(cfg)
    m = cfg.block_dim
    caps = cfg.per_player(cfg.caps, n_players, "caps")
    buffers = cfg.per_player(cfg.buffers, n_players, "buffers")
    alphas = cfg.per_player(cfg.alphas, n_players, "alphas")
    tracking = cfg.per_player(cfg.tracking, n_players, "tracking")
    target = np.broadcast_to(np.asarray(cfg.target, dtype=float), (m,)).copy()
    E = np.hstack([S] * n_players)
    EtE = E.T @ E
    Ety = E.T @ target
    objectives = []
    for i in range(n_players):
        Q = tracking[i] * EtE
        Q[i * m:(i + 1) * m, i * m:(i + 1) * m] += alphas[i] * np.eye(m)
        objectives.append(QuadraticObjective(Q, -tracking[i] * Ety, 0.5 * tracking[i] * target @ target))
    A = np.vstack([E] * n_players)
    b = np.concatenate([np.full(m, cfg.state_cap - buffers[i]) for i in range(n_players)])
    shared = SharedSet(A, b, np.zeros(n_players * m), lo=np.zeros(n_players * m))
    return GameSpec(
        tuple([m] * n_players),
        tuple(objectives),
        tuple(np.zeros(m) for _ in range(n_players)),
        tuple(np.full(m, caps[i]) for i in range(n_players)),
        SharedConstraints(shared),
    )


# -- random jointly convex games ----------------------------------------------


RIDGE = 1e-3


def build_random_jointly_convex(n_players: int, dims, density: float = 1.0, seed: int = 0) -> GameSpec:
    """Random quadratic game on a random polytope with a certified interior point.

    Every objective is ``K + own_i`` where ``K = M'M`` is shared and ``own_i``
    is a PSD block on player ``i``'s coordinates plus a ridge of ``1e-3``, so
    the pseudogradient (at unit weights) is strongly monotone.
    """
    dims = [int(d) for d in np.atleast_1d(dims)]
    if len(dims) == 1:
        dims = dims * n_players
    if len(dims) != n_players or any(d <= 0 for d in dims):
        raise PreconditionError("need one positive dimension per player")
    if not 0 < density <= 1:
        raise PreconditionError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = sum(dims)
    off = np.concatenate(([0], np.cumsum(dims)))

    def sparse(shape):
        mat = rng.normal(size=shape)
        return mat * (rng.random(shape) < density)

    M = sparse((n, n))
    K = M.T @ M / n
    objectives = []
    for i in range(n_players):
        N = rng.normal(size=(2 * dims[i], dims[i]))
        Q = K.copy()
        Q[off[i]:off[i + 1], off[i]:off[i + 1]] += N.T @ N / (2 * dims[i]) + RIDGE * np.eye(dims[i])
        Q = 0.5 * (Q + Q.T)
        objectives.append(QuadraticObjective(Q, rng.normal(size=n), 0.0))
    half = rng.uniform(0.5, 2.0, size=n)
    lo, hi = -half, half
    interior = rng.uniform(-0.5, 0.5, size=n) * half
    n_rows = max(1, n)
    A = sparse((n_rows, n))
    empty = ~np.any(A, axis=1)
    A[empty, rng.integers(0, n, size=int(empty.sum()))] = 1.0
    b = A @ interior + rng.uniform(0.1, 1.0, size=n_rows)
    shared = SharedSet(A, b, interior)
    return GameSpec(
        tuple(dims),
        tuple(objectives),
        tuple(lo[off[i]:off[i + 1]] for i in range(n_players)),
        tuple(hi[off[i]:off[i + 1]] for i in range(n_players)),
        SharedConstraints(shared),
    )
