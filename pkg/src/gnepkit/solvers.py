"""Best-response iteration, Rosen's projected pseudogradient method, potential
minimization and the weight (multiplier-bias) sweep."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, GnepError, GradientUnavailable, PreconditionError
from .model import (
    BlockVector,
    GameSpec,
    OracleObjective,
    QuadraticObjective,
    WeightVector,
    evaluate_objective,
    is_fixed_point,
    partial_gradient,
)
from .nikaido_isoda import TAU_SOLVE, block_argmin, merit_phi
from .subproblems import (
    FeasibleSection,
    minimize_linear_1block,
    minimize_quadratic_1block,
    project_polytope,
)

METHODS = ("BestResponse", "Rosen", "Potential")

FORCING: dict = {
    "identity": lambda t: t,
    "square": lambda t: t * t,
    "min-linear": lambda t: min(t, 1.0) * t,
}


@dataclass
class SolveReport:
    x_star: BlockVector
    iterations: int
    residual: float
    converged: bool
    method: str
    tol: float
    trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    certificate: Optional[float] = None

    def to_dict(self, with_trace: bool = False) -> dict:
        out = {
            "method": self.method,
            "x_star": self.x_star.data.tolist(),
            "dims": list(self.x_star.dims),
            "iterations": self.iterations,
            "residual": self.residual,
            "tol": self.tol,
            "converged": self.converged,
            "flags": list(self.flags),
            "certificate": self.certificate,
        }
        if with_trace:
            out["trace"] = [
                {"iter": k, "residual": res, "x": list(x)} for k, res, x in self.trace
            ]
        return out

    def trace_csv(self) -> str:
        """Trace as CSV with columns ``iter, residual, x0, x1, ...``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = self.x_star.data.size
        writer.writerow(["iter", "residual"] + [f"x{k}" for k in range(n)])
        for k, res, x in self.trace:
            writer.writerow([k, repr(float(res))] + [repr(float(v)) for v in x])
        return buf.getvalue()


@dataclass(frozen=True)
class PotentialSpec:
    """A candidate potential over the full bundle.

    ``objective.partial_gradient(i, x)`` must give the gradient of the potential
    with respect to block ``i`` when the objective is an oracle.
    """

    objective: object
    forcing: str = "identity"

    def __post_init__(self):
        if self.forcing not in FORCING:
            raise PreconditionError(
                f"unknown forcing function {self.forcing!r}; choose from {sorted(FORCING)}"
            )
        if not isinstance(self.objective, (QuadraticObjective, OracleObjective)):
            raise TypeError("potential must be a QuadraticObjective or OracleObjective")

    @property
    def forcing_fn(self) -> Callable[[float], float]:
        return FORCING[self.forcing]

    def value(self, x) -> float:
        return self.objective.value(np.asarray(x, dtype=float))

    def gradient(self, game: GameSpec, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if isinstance(self.objective, QuadraticObjective):
            return self.objective.gradient(x)
        if self.objective.partial_gradient is None:
            raise GradientUnavailable("potential oracle has no gradient")
        return np.concatenate(
            [np.ravel(self.objective.partial_gradient(i, x)) for i in range(game.n_players)]
        )


def _require_shared(game: GameSpec, what: str):
    if not game.is_shared:
        raise PreconditionError(f"{what} requires a shared constraint set C")


def _weights(game: GameSpec, r) -> WeightVector:
    r = r if isinstance(r, WeightVector) else WeightVector(r)
    if len(r) != game.n_players:
        raise DimensionError(f"{len(r)} weights for {game.n_players} players")
    return r


# -- best responses -----------------------------------------------------------


def best_response(game: GameSpec, i: int, x_minus_i, tol: float = 1e-10) -> np.ndarray:
    """Minimizer of ``J_i(., x_{-i})`` over ``X_i^ad`` intersected with ``X_i(x_{-i})``."""
    x = BlockVector.assemble(game.dims, i, game.lower[i], x_minus_i)
    section = FeasibleSection.for_player(game, i, x)
    section.require_nonempty(player=i)
    return block_argmin(game, i, x, section, tol)


def solve_best_response(
    game: GameSpec, x0, mode: str = "gauss-seidel", tol: float = 1e-8, max_iter: int = 1000
) -> SolveReport:
    """Fixed-point iteration on the best-response map.

    Gauss-Seidel sweeps players in ascending order; Jacobi answers the previous
    iterate for everyone at once.  The result is certified by the merit gap at
    ``10 * tol``.
    """
    mode = mode.lower().replace("_", "-")
    if mode not in ("gauss-seidel", "jacobi"):
        raise PreconditionError(f"unknown sweep mode {mode!r}")
    x = game.bundle(x0)
    inner = min(1e-10, 0.01 * tol)
    trace = []
    step = np.inf
    it = 0
    while it < max_iter:
        it += 1
        prev = x
        if mode == "gauss-seidel":
            for i in range(game.n_players):
                x = x.replace(i, block_argmin(game, i, x, tol=inner))
        else:
            blocks = [block_argmin(game, i, prev, tol=inner) for i in range(game.n_players)]
            x = BlockVector.from_blocks(blocks)
        step = float(np.max(np.abs(x.data - prev.data)))
        trace.append((it, step, x.data.tolist()))
        if step < tol:
            break
    cert_tol = 10.0 * tol
    flags = []
    if not is_fixed_point(game, x):
        flags.append("not_fixed_point")
        gap = np.inf
    else:
        gap = merit_phi(game, x, tol=min(TAU_SOLVE, 0.01 * cert_tol)).gap
    converged = step < tol and gap <= cert_tol
    if step >= tol:
        flags.append("max_iter")
    elif gap > cert_tol:
        flags.append("certification_failed")
    return SolveReport(x, it, float(gap), converged, "BestResponse", cert_tol, trace, flags)


# -- Rosen's method -----------------------------------------------------------


def pseudogradient(game: GameSpec, r, x) -> BlockVector:
    """Stacked ``r_i * grad_i J_i(x)``."""
    r = _weights(game, r)
    x = game.bundle(x)
    blocks = [r[i] * partial_gradient(game, i, x) for i in range(game.n_players)]
    return BlockVector.from_blocks(blocks)


def pseudogradient_jacobian(game: GameSpec, r) -> np.ndarray:
    """Constant Jacobian of the pseudogradient for quadratic games."""
    if not game.is_quadratic:
        raise PreconditionError("the pseudogradient Jacobian is constant only for quadratic games")
    r = _weights(game, r)
    off = game.offsets
    rows = [r[i] * game.objectives[i].Q[off[i]:off[i + 1]] for i in range(game.n_players)]
    return np.vstack(rows)


def _power_norm(D: np.ndarray, iters: int = 200) -> float:
    """Bound on the spectral norm of ``D`` by power iteration on ``D'D``."""
    v = np.ones(D.shape[1]) / np.sqrt(D.shape[1])
    lam = 0.0
    for _ in range(iters):
        w = D.T @ (D @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam_new = np.sqrt(nw)
        v = w / nw
        if abs(lam_new - lam) <= 1e-12 * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return 1.01 * lam


def vi_residual(game: GameSpec, r, x, section: FeasibleSection = None) -> float:
    """Natural residual ``||x - P_C(x - d(x, r))||``."""
    section = FeasibleSection.joint(game) if section is None else section
    x = game.bundle(x)
    d = pseudogradient(game, r, x).data
    return float(np.linalg.norm(x.data - project_polytope(x.data - d, section)))


def vi_certificate(game: GameSpec, r, x, section: FeasibleSection = None) -> float:
    """``min_{y in C} <d(x, r), y - x>``; nonnegative up to tolerance at a variational equilibrium."""
    section = FeasibleSection.joint(game) if section is None else section
    x = game.bundle(x)
    d = pseudogradient(game, r, x).data
    _, val = minimize_linear_1block(d, section)
    return val - float(d @ x.data)


def solve_rosen(
    game: GameSpec,
    r,
    x0=None,
    step: Optional[float] = None,
    tol: float = 1e-8,
    max_iter: int = 100000,
    max_backtracks: int = 50,
) -> SolveReport:
    """Projected pseudogradient iteration for a variational equilibrium.

    ``x <- P_C(x - step * d(x, r))``; a trial that increases the natural
    residual halves the step and is retried.
    """
    _require_shared(game, "a variational equilibrium")
    r = _weights(game, r)
    section = FeasibleSection.joint(game)
    x = game.bundle(game.constraints.set.feasible_point if x0 is None else x0)
    if not section.contains(x.data):
        raise PreconditionError("Rosen's method needs a start inside C and the admissible boxes")
    if step is None:
        L = _power_norm(pseudogradient_jacobian(game, r)) if game.is_quadratic else 1.0
        step = 0.1 / L if L > 0.0 else 1.0

    def residual(v):
        d = pseudogradient(game, r, v).data
        return float(np.linalg.norm(v - project_polytope(v - d, section))), d

    xv = x.data
    res, d = residual(xv)
    trace = [(0, res, xv.tolist())]
    flags = []
    it = 0
    while res > tol and it < max_iter:
        it += 1
        for _ in range(max_backtracks + 1):
            trial = project_polytope(xv - step * d, section)
            res_trial, d_trial = residual(trial)
            if res_trial <= res:
                break
            step *= 0.5
        else:
            flags.append("backtracking_exhausted")
            break
        xv, res, d = trial, res_trial, d_trial
        trace.append((it, res, xv.tolist()))
    x_star = BlockVector(xv, game.dims)
    converged = res <= tol
    if not converged and "backtracking_exhausted" not in flags:
        flags.append("max_iter")
    cert = vi_certificate(game, r, x_star, section)
    if converged and cert < -10.0 * tol:
        flags.append("certificate_failed")
    return SolveReport(x_star, it, res, converged, "Rosen", tol, trace, flags, cert)


# -- potential games ----------------------------------------------------------


def solve_potential(
    game: GameSpec, pot: PotentialSpec, x0=None, tol: float = 1e-8, max_iter: int = 10000
) -> SolveReport:
    """Minimize the potential over ``C`` and certify the minimizer as an equilibrium.

    A minimizer whose merit gap exceeds ``10 * tol`` is flagged
    ``potential_mismatch``: the supplied function is then not a potential of
    this game.
    """
    _require_shared(game, "potential minimization")
    section = FeasibleSection.joint(game)
    x = game.bundle(game.constraints.set.feasible_point if x0 is None else x0)
    start = project_polytope(x.data, section)
    obj = pot.objective
    if isinstance(obj, QuadraticObjective):
        if np.any(obj.Q) or np.any(obj.c):
            y = minimize_quadratic_1block(obj.Q, obj.c, section, tol=tol, max_iter=max_iter, x0=start)
        else:
            y = start
        iters = 1
    else:
        y, iters = _projected_gradient(lambda v: pot.value(v), lambda v: pot.gradient(game, v),
                                       start, section, tol, max_iter)
    x_star = BlockVector(y, game.dims)
    cert_tol = 10.0 * tol
    gap = merit_phi(game, x_star, tol=min(TAU_SOLVE, 0.01 * cert_tol)).gap
    flags = [] if gap <= cert_tol else ["potential_mismatch"]
    trace = [(iters, gap, y.tolist())]
    return SolveReport(x_star, iters, float(gap), gap <= cert_tol, "Potential", cert_tol, trace, flags)


def _projected_gradient(f, grad, y, section, tol, max_iter):
    fy, gy = f(y), grad(y)
    step = 1.0
    for it in range(1, max_iter + 1):
        res = np.linalg.norm(y - project_polytope(y - gy, section))
        if res <= tol:
            return y, it
        for _ in range(60):
            y_new = project_polytope(y - step * gy, section)
            f_new = f(y_new)
            if f_new <= fy + gy @ (y_new - y) + (0.5 / step) * np.sum((y_new - y) ** 2):
                break
            step *= 0.5
        y, fy, gy = y_new, f_new, grad(y_new)
        step *= 2.0
    return y, max_iter


def potential_gradient_gap(game: GameSpec, pot: PotentialSpec, points) -> float:
    """Largest ``|grad_i P(x) - grad_i J_i(x)|`` over the given bundles."""
    worst = 0.0
    off = game.offsets
    for x in points:
        x = game.bundle(x)
        gp = pot.gradient(game, x.data)
        for i in range(game.n_players):
            diff = gp[off[i]:off[i + 1]] - partial_gradient(game, i, x)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


# -- weights and equilibrium selection ----------------------------------------


@dataclass
class BiasEntry:
    r: tuple
    x: Optional[BlockVector]
    objective_values: Optional[tuple]
    unique: Optional[bool]
    converged: bool
    spread: Optional[float] = None
    error: Optional[str] = None


def alternate_start(game: GameSpec) -> BlockVector:
    """Box midpoint projected onto ``C``."""
    section = FeasibleSection.joint(game)
    return BlockVector(project_polytope(0.5 * (section.lo + section.hi), section), game.dims)


def bias_sweep(game: GameSpec, weights, tol: float = 1e-8, x0=None, max_iter: int = 100000) -> list:
    """Variational equilibria for several weight vectors, with a two-start uniqueness probe.

    A failing entry carries its error message; the rest of the sweep still runs.
    """
    _require_shared(game, "a variational equilibrium")
    start = game.bundle(game.constraints.set.feasible_point if x0 is None else x0)
    alt = alternate_start(game)
    out = []
    for r in weights:
        r = tuple(r)
        try:
            rep_a = solve_rosen(game, r, start, tol=tol, max_iter=max_iter)
            rep_b = solve_rosen(game, r, alt, tol=tol, max_iter=max_iter)
        except GnepError as exc:
            out.append(BiasEntry(r, None, None, None, False, error=str(exc)))
            continue
        x = rep_a.x_star
        spread = float(np.max(np.abs(rep_a.x_star.data - rep_b.x_star.data)))
        vals = tuple(evaluate_objective(game, i, x) for i in range(game.n_players))
        out.append(
            BiasEntry(r, x, vals, spread <= 10.0 * tol, rep_a.converged and rep_b.converged, spread)
        )
    return out


@dataclass(frozen=True)
class BiasDirection:
    holds: bool
    value: float
    j: int


def verify_bias_direction(game: GameSpec, r, s, x_r, x_s) -> BiasDirection:
    """Sign of the directional derivative of ``J_j`` at ``x_r`` towards ``x_r_j - x_s_j``.

    ``r`` and ``s`` must differ only in coordinate ``j``, with ``r_j > s_j``.
    """
    r = _weights(game, r)
    s = _weights(game, s)
    diff = [k for k in range(game.n_players) if r[k] != s[k]]
    if len(diff) != 1:
        raise PreconditionError(f"weights must differ in exactly one coordinate, got {len(diff)}")
    j = diff[0]
    if not r[j] > s[j]:
        raise PreconditionError(f"need r_j > s_j at j={j}")
    x_r = game.bundle(x_r)
    x_s = game.bundle(x_s)
    direction = x_r.block(j) - x_s.block(j)
    if not np.any(direction):
        raise PreconditionError(f"equilibria coincide in block {j}; the direction is zero")
    value = float(partial_gradient(game, j, x_r) @ direction)
    return BiasDirection(value < 0.0, value, j)
