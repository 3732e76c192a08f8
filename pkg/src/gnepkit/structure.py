"""Sampling-based falsifiers for structural properties of constraint maps and games.

Every checker searches for a counterexample within a fixed budget.  A verdict
with ``holds=True`` only says that none was found; ``holds=False`` always
carries a witness that :func:`replay_witness` re-checks exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GnepError, PreconditionError
from .model import BlockVector, GameSpec, evaluate_objective, feasible, is_fixed_point
from .solvers import pseudogradient, pseudogradient_jacobian
from .subproblems import FeasibleSection, player_section, sample_in_section

DSC_MARGIN = 1e-12
LSC_MARGIN = 1e-2
LSC_LEVELS = 20


class EmptyGraphError(GnepError):
    """Rejection sampling never produced a point of the graph."""


@dataclass
class Verdict:
    property: str
    holds: bool
    witness: Optional[dict]
    samples_tested: int
    seed: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "holds": self.holds,
            "meaning": "no counterexample found within budget" if self.holds else "counterexample found",
            "witness": _jsonable(self.witness),
            "samples_tested": self.samples_tested,
            "seed": self.seed,
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass(frozen=True)
class SetValuedOracle:
    """A set-valued map ``F`` given by a membership test ``y in F(x)``.

    ``sample_point(rng)`` draws domain points, ``sample_value(rng, x)`` proposes
    candidate values; ``sample_pair(rng)``, when given, proposes graph points
    directly.  Proposals are always filtered through ``membership``.
    """

    sample_point: Callable
    membership: Callable
    sample_value: Optional[Callable] = None
    sample_pair: Optional[Callable] = None
    name: str = ""

    def propose(self, rng):
        if self.sample_pair is not None:
            return self.sample_pair(rng)
        x = self.sample_point(rng)
        return x, self.sample_value(rng, x)


@dataclass(frozen=True)
class IntervalMap:
    """``F(x) = [lo(x), hi(x)]`` on ``[0, 1]``; ``lo > hi`` means empty."""

    lo: Callable[[float], float]
    hi: Callable[[float], float]
    name: str = ""
    special_points: tuple = (0.0, 0.5, 1.0)
    value_range: tuple = (-0.25, 1.25)

    def __call__(self, x: float):
        return self.lo(x), self.hi(x)

    def contains(self, x, y) -> bool:
        x, y = float(np.ravel(x)[0]), float(np.ravel(y)[0])
        if not 0.0 <= x <= 1.0:
            return False
        lo, hi = self(x)
        return lo <= y <= hi

    def distance(self, x: float, y: float) -> float:
        lo, hi = self(x)
        if lo > hi:
            return np.inf
        return max(lo - y, 0.0, y - hi)

    def sample_domain(self, rng) -> float:
        if self.special_points and rng.random() < 0.2:
            return float(self.special_points[rng.integers(len(self.special_points))])
        return float(rng.random())

    def oracle(self) -> SetValuedOracle:
        a, b = self.value_range
        return SetValuedOracle(
            sample_point=self.sample_domain,
            membership=self.contains,
            sample_value=lambda rng, x: float(rng.uniform(a, b)),
            name=self.name,
        )


def _branch_a_lo(x):
    return 0.0


def _branch_a_hi(x):
    return 1.0 if x == 0.0 else x


BUILTIN_MAPS = {
    # F(0) = [0, 1], F(x) = [0, x]: KKM with closed graph, not lower semicontinuous at 0
    "kkm-demo-a": IntervalMap(_branch_a_lo, _branch_a_hi, "kkm-demo-a"),
    # F(x) = [0, x] on [0, 1/2], [x, 1] on (1/2, 1]
    "kkm-demo-b": IntervalMap(
        lambda x: 0.0 if x <= 0.5 else x, lambda x: x if x <= 0.5 else 1.0, "kkm-demo-b"
    ),
    # F(x) = [x, 1] on [0, 1/2], [0, x] on (1/2, 1]
    "kkm-demo-b-mirrored": IntervalMap(
        lambda x: x if x <= 0.5 else 0.0, lambda x: 1.0 if x <= 0.5 else x, "kkm-demo-b-mirrored"
    ),
    "constant": IntervalMap(lambda x: 0.0, lambda x: 1.0, "constant"),
    "ramp": IntervalMap(lambda x: 0.0, lambda x: x, "ramp"),
    "shift": IntervalMap(lambda x: x + 1.0, lambda x: x + 1.0, "shift", value_range=(0.0, 2.5)),
}


def constraint_map_oracle(game: GameSpec, i: int) -> SetValuedOracle:
    """``x_{-i} -> X_i^ad`` intersected with ``X_i(x_{-i})`` as a set-valued oracle."""
    section = FeasibleSection.joint(game)
    anchor = np.asarray(game.constraints.set.feasible_point if game.is_shared else game.lo, float)

    def pair(rng):
        z = BlockVector(sample_in_section(section, anchor, rng), game.dims)
        return z.minus(i), z.block(i)

    def point(rng):
        return pair(rng)[0]

    return SetValuedOracle(
        sample_point=point,
        membership=lambda x_minus_i, y: feasible(game, i, y, x_minus_i),
        sample_value=lambda rng, x: pair(rng)[1],
        sample_pair=pair,
        name=f"constraint-map-{i}",
    )


# -- graph convexity and KKM --------------------------------------------------


def _combine(theta, a, b):
    if np.isscalar(a):
        return theta * a + (1.0 - theta) * b
    return theta * np.asarray(a) + (1.0 - theta) * np.asarray(b)


def check_graph_convexity(oracle: SetValuedOracle, n_samples: int = 2000, seed: int = 0) -> Verdict:
    if n_samples < 1:
        raise PreconditionError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    budget = 10 * n_samples
    draws = 0
    found = 0

    def graph_point():
        nonlocal draws, found
        while draws < budget:
            draws += 1
            x, y = oracle.propose(rng)
            if oracle.membership(x, y):
                found += 1
                return x, y
        return None

    tested = 0
    for _ in range(n_samples):
        p = graph_point()
        q = graph_point()
        if p is None or q is None:
            break
        theta = float(rng.uniform(0.0, 1.0))
        zx, zy = _combine(theta, p[0], q[0]), _combine(theta, p[1], q[1])
        tested += 1
        if not oracle.membership(zx, zy):
            witness = {"x": p[0], "y": p[1], "x2": q[0], "y2": q[1], "theta": theta,
                       "combination": [zx, zy]}
            return Verdict("graph-convexity", False, witness, tested, seed)
    if found == 0:
        raise EmptyGraphError(f"graph appears empty: no member in {draws} draws")
    return Verdict("graph-convexity", True, None, tested, seed)


def check_kkm(
    oracle: SetValuedOracle,
    n_subsets: int = 500,
    max_subset_size: int = 4,
    hull_samples: int = 50,
    seed: int = 0,
) -> Verdict:
    """Search for a finite subset whose convex hull escapes the union of its values."""
    if max_subset_size < 1:
        raise PreconditionError("max_subset_size must be at least 1")
    rng = np.random.default_rng(seed)
    tested = 0
    for _ in range(n_subsets):
        size = int(rng.integers(1, max_subset_size + 1))
        pts = [oracle.sample_point(rng) for _ in range(size)]
        weights = rng.dirichlet(np.ones(size), size=hull_samples) if size > 1 else np.ones((1, 1))
        for w in weights:
            z = float(np.dot(w, pts)) if np.isscalar(pts[0]) else w @ np.asarray(pts)
            tested += 1
            if not any(oracle.membership(p, z) for p in pts):
                witness = {"points": pts, "weights": w, "hull_point": z}
                return Verdict("kkm", False, witness, tested, seed)
    return Verdict("kkm", True, None, tested, seed)


# -- diagonal strict convexity ------------------------------------------------


def _dsc_expression(game, r, x, y):
    dx = pseudogradient(game, r, x).data
    dy = pseudogradient(game, r, y).data
    diff = y - x
    return float(dx @ diff + dy @ (-diff))


def check_dsc(game: GameSpec, r, n_pairs: int = 2000, seed: int = 0) -> Verdict:
    """Test ``d(x,r)(y-x) + d(y,r)(x-y) < 0`` on sampled pairs of ``C``.

    For quadratic games the symmetrized pseudogradient Jacobian decides the
    property exactly; its smallest eigenvalue is reported and fixes the verdict.
    """
    if not game.is_shared:
        raise PreconditionError("diagonal strict convexity is defined relative to a shared set C")
    rng = np.random.default_rng(seed)
    section = FeasibleSection.joint(game)
    anchor = np.asarray(game.constraints.set.feasible_point, dtype=float)
    witness = None
    tested = 0
    centroid = np.zeros(game.total_dim)
    for _ in range(n_pairs):
        x = sample_in_section(section, anchor, rng)
        y = sample_in_section(section, anchor, rng)
        centroid += x + y
        diff = y - x
        nd = float(diff @ diff)
        if nd == 0.0:
            continue
        tested += 1
        expr = _dsc_expression(game, r, x, y)
        if expr >= -DSC_MARGIN * nd:
            witness = {"x": x, "y": y, "value": expr}
            break
    details = {"sampled_holds": witness is None}
    holds = witness is None
    if game.is_quadratic:
        D = pseudogradient_jacobian(game, r)
        sym = D + D.T
        evals, evecs = np.linalg.eigh(sym)
        details["min_eigenvalue"] = float(evals[0])
        details["symmetrized_jacobian"] = sym
        holds = bool(evals[0] > 0.0)
        if not holds and witness is None and tested:
            witness = _eigen_witness(game, r, section, centroid / (2 * tested), evecs[:, 0])
    return Verdict("dsc", holds, witness, tested, seed, details)


def _eigen_witness(game, r, section, center, v):
    """Pair ``(x, x + t v)`` inside C along the least eigenvector."""
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(v > 0, (section.hi - center) / v, np.inf)
        down = np.where(v < 0, (section.lo - center) / v, np.inf)
    t = min(1.0, float(np.min(up)), float(np.min(down)))
    if section.n_rows:
        slope = section.A @ v
        room = section.b - section.A @ center
        pos = slope > 0
        if np.any(pos):
            t = min(t, float(np.min(np.maximum(room[pos], 0) / slope[pos])))
    t *= 0.5
    if t <= 0.0:
        return {"x": center, "y": center, "value": 0.0}
    y = center + t * v
    return {"x": center, "y": y, "value": _dsc_expression(game, r, center, y)}


# -- lower semicontinuity of interval maps ------------------------------------


def check_lsc_interval(
    fmap: IntervalMap,
    x0: float,
    n_probes: int = 200,
    seed: int = 0,
    margin: float = LSC_MARGIN,
    levels: int = LSC_LEVELS,
) -> Verdict:
    """Probe lower semicontinuity of an interval map at ``x0``.

    For sampled ``y0`` in ``F(x0)`` the largest distance from ``y0`` to ``F(x)``
    over probes ``|x - x0| <= 2^-k`` must fall below ``margin`` by level
    ``levels``; otherwise the last offending probe is the witness.
    """
    if not 0.0 <= x0 <= 1.0:
        raise PreconditionError(f"x0={x0} lies outside [0, 1]")
    lo0, hi0 = fmap(x0)
    if lo0 > hi0:
        return Verdict("lsc", True, None, 0, seed, {"note": "F(x0) is empty"})
    rng = np.random.default_rng(seed)
    candidates = [lo0, hi0, 0.5 * (lo0 + hi0)] + list(rng.uniform(lo0, hi0, size=5))
    tested = 0
    for y0 in candidates:
        worst = None
        for k in range(1, levels + 1):
            delta = 2.0 ** -k
            a, b = max(0.0, x0 - delta), min(1.0, x0 + delta)
            probes = np.concatenate(([a, b], rng.uniform(a, b, size=n_probes)))
            probes = probes[probes != x0]
            if probes.size == 0:
                continue
            dists = np.array([fmap.distance(p, y0) for p in probes])
            tested += probes.size
            j = int(np.argmax(dists))
            worst = (delta, float(probes[j]), float(dists[j]))
        if worst is not None and worst[2] > margin:
            witness = {"x0": x0, "y0": float(y0), "delta": worst[0], "probe": worst[1],
                       "distance": worst[2], "margin": margin}
            return Verdict("lsc", False, witness, tested, seed)
    return Verdict("lsc", True, None, tested, seed)


# -- geometric equilibrium ----------------------------------------------------


def check_geometric_equilibrium(
    game: GameSpec, x, epsilon: float = 1e-6, n_probes: int = 500, seed: int = 0
) -> Verdict:
    """Look for a feasible alternative some player strictly prefers.

    Preferences are induced by the objectives: ``x_hat_i`` is preferred when
    ``J_i(x_hat_i, x_{-i}) < J_i(x) - epsilon``.  Half of the probes sit on the
    boundary of the feasible section along random rays from ``x_i``.
    """
    x = game.bundle(x)
    if not is_fixed_point(game, x):
        raise PreconditionError("the geometric equilibrium test needs a fixed point of the constraint map")
    rng = np.random.default_rng(seed)
    tested = 0
    for i in range(game.n_players):
        section = player_section(game, i, x)
        base = evaluate_objective(game, i, x)
        for k in range(n_probes):
            cand = sample_in_section(section, x.block(i), rng, boundary=(k % 2 == 0))
            tested += 1
            val = evaluate_objective(game, i, x.replace(i, cand))
            if val < base - epsilon and feasible(game, i, cand, x.minus(i)):
                witness = {"player": i, "x": x.data, "alternative": cand,
                           "current_value": base, "alternative_value": val, "epsilon": epsilon}
                return Verdict("geometric-equilibrium", False, witness, tested, seed)
    return Verdict("geometric-equilibrium", True, None, tested, seed)


# -- witness replay -----------------------------------------------------------


def replay_witness(verdict: Verdict, target) -> bool:
    """Re-check a failing verdict's witness without sampling.

    ``target`` is the oracle, interval map or game the verdict came from.
    Returns True when the violation is reproduced.
    """
    w = verdict.witness
    if verdict.holds or w is None:
        return False
    prop = verdict.property
    if prop == "graph-convexity":
        return (
            bool(target.membership(w["x"], w["y"]))
            and bool(target.membership(w["x2"], w["y2"]))
            and not target.membership(*w["combination"])
        )
    if prop == "kkm":
        pts, wts = w["points"], np.asarray(w["weights"])
        z = float(np.dot(wts, pts)) if np.isscalar(pts[0]) else wts @ np.asarray(pts)
        if not np.allclose(z, w["hull_point"], rtol=0, atol=1e-15):
            return False
        return not any(target.membership(p, w["hull_point"]) for p in pts)
    if prop == "lsc":
        return target.distance(w["probe"], w["y0"]) > w["margin"]
    if prop == "dsc":
        game, r = target
        x, y = np.asarray(w["x"]), np.asarray(w["y"])
        nd = float((y - x) @ (y - x))
        return nd > 0 and _dsc_expression(game, r, x, y) >= -DSC_MARGIN * nd
    if prop == "geometric-equilibrium":
        game = target
        x = game.bundle(w["x"])
        i = w["player"]
        val = evaluate_objective(game, i, x.replace(i, w["alternative"]))
        return bool(
            feasible(game, i, w["alternative"], x.minus(i))
            and val < evaluate_objective(game, i, x) - w["epsilon"]
        )
    raise PreconditionError(f"unknown property {prop!r}")
