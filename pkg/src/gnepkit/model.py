"""Games, strategy bundles, objectives and constraint maps.

Players are indexed from 0.  A strategy bundle is stored as one flat float
array together with the per-player block sizes; ``x_minus_i`` always means the
concatenation of every block except block ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DimensionError, GradientUnavailable, PreconditionError

TAU_FEAS = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _offsets(dims: Sequence[int]) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(dims))).astype(int)


@dataclass(frozen=True, eq=False)
class BlockVector:
    """A strategy bundle ``x = (x_1, ..., x_N)`` stored as one flat vector."""

    data: np.ndarray
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d <= 0 for d in dims):
            raise DimensionError(f"block dimensions must be positive, got {dims}")
        data = _frozen(np.ravel(self.data))
        if data.size != sum(dims):
            raise DimensionError(
                f"bundle has {data.size} entries but blocks sum to {sum(dims)}"
            )
        if not np.all(np.isfinite(data)):
            raise DimensionError("bundle contains non-finite entries")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_blocks(cls, blocks) -> "BlockVector":
        blocks = [np.atleast_1d(np.asarray(b, dtype=float)).ravel() for b in blocks]
        return cls(np.concatenate(blocks), tuple(b.size for b in blocks))

    @classmethod
    def assemble(cls, dims, i: int, x_i, x_minus_i) -> "BlockVector":
        """Inverse of ``(x.block(i), x.minus(i))``."""
        off = _offsets(dims)
        x_i = np.atleast_1d(np.asarray(x_i, dtype=float)).ravel()
        x_minus_i = np.atleast_1d(np.asarray(x_minus_i, dtype=float)).ravel()
        if x_i.size != dims[i] or x_minus_i.size != off[-1] - dims[i]:
            raise DimensionError(
                f"cannot assemble player {i}: got block of size {x_i.size} and "
                f"complement of size {x_minus_i.size}",
                player=i,
            )
        data = np.concatenate((x_minus_i[: off[i]], x_i, x_minus_i[off[i]:]))
        return cls(data, tuple(dims))

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def offsets(self) -> np.ndarray:
        return _offsets(self.dims)

    def block(self, i: int) -> np.ndarray:
        off = self.offsets
        return self.data[off[i]:off[i + 1]]

    @property
    def blocks(self) -> list:
        return [self.block(i) for i in range(self.n_players)]

    def minus(self, i: int) -> np.ndarray:
        off = self.offsets
        return np.concatenate((self.data[: off[i]], self.data[off[i + 1]:]))

    def replace(self, i: int, x_i) -> "BlockVector":
        x_i = np.atleast_1d(np.asarray(x_i, dtype=float)).ravel()
        if x_i.size != self.dims[i]:
            raise DimensionError(
                f"block {i} has dimension {self.dims[i]}, got {x_i.size}",
                player=i,
                block=i,
            )
        off = self.offsets
        data = self.data.copy()
        data[off[i]:off[i + 1]] = x_i
        return BlockVector(data, self.dims)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __repr__(self):
        return f"BlockVector({[b.tolist() for b in self.blocks]})"


# -- objectives ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """``J(x) = 0.5 x'Qx + c'x + d`` over the full bundle."""

    Q: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        Q = _frozen(np.atleast_2d(self.Q))
        c = _frozen(np.ravel(self.c))
        if Q.shape != (c.size, c.size):
            raise DimensionError(f"Q has shape {Q.shape}, c has size {c.size}")
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise PreconditionError("quadratic objective needs a symmetric Q")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", float(self.d))

    def value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.d)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.Q @ x + self.c

    def scaled(self, s: float) -> "QuadraticObjective":
        return QuadraticObjective(s * self.Q, s * self.c, s * self.d)


@dataclass(frozen=True, eq=False)
class OracleObjective:
    """Black-box objective.

    ``evaluate(x)`` takes the flat bundle; ``partial_gradient(i, x)`` returns the
    gradient with respect to block ``i`` and may be omitted.
    """

    evaluate: Callable[[np.ndarray], float]
    partial_gradient: Optional[Callable[[int, np.ndarray], np.ndarray]] = None

    def value(self, x: np.ndarray) -> float:
        return float(self.evaluate(x))

    def scaled(self, s: float) -> "OracleObjective":
        f, g = self.evaluate, self.partial_gradient
        return OracleObjective(
            lambda x: s * f(x),
            None if g is None else (lambda i, x: s * np.asarray(g(i, x))),
        )


Objective = Union[QuadraticObjective, OracleObjective]


# -- constraints --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SharedSet:
    """Polytope ``{x : A x <= b, lo <= x <= hi}`` shared by all players."""

    A: np.ndarray
    b: np.ndarray
    feasible_point: np.ndarray
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        fp = np.ravel(self.feasible_point)
        A = np.asarray(self.A, dtype=float)
        A = _frozen(A.reshape(0, fp.size) if A.size == 0 else np.atleast_2d(A))
        b = _frozen(np.ravel(self.b))
        if A.shape[0] != b.size:
            raise DimensionError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "feasible_point", _frozen(np.ravel(self.feasible_point)))
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(np.ravel(v)))
        if self.feasible_point.size != A.shape[1]:
            raise DimensionError("feasible point does not match the number of columns of A")
        if not self.contains(self.feasible_point):
            raise PreconditionError("stored feasible point is not in the shared set")

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        """Normalized signed violation of every inequality row."""
        norms = np.linalg.norm(self.A, axis=1)
        norms[norms == 0.0] = 1.0
        return (self.A @ x - self.b) / norms

    def contains(self, x: np.ndarray, tol: float = TAU_FEAS) -> bool:
        x = np.asarray(x, dtype=float)
        if self.A.shape[0] and np.max(self.row_violation(x)) > tol:
            return False
        if self.lo is not None and np.any(x < self.lo - tol):
            return False
        if self.hi is not None and np.any(x > self.hi + tol):
            return False
        return True


@dataclass(frozen=True)
class ConstantConstraints:
    """Feasible set of each player is its admissible box."""


@dataclass(frozen=True, eq=False)
class SharedConstraints:
    """Constraint maps obtained by slicing a shared polytope."""

    set: SharedSet


@dataclass(frozen=True, eq=False)
class OracleConstraints:
    """``membership(i, x_i, x_minus_i)``; per-player convexity is the caller's promise."""

    membership: Callable[[int, np.ndarray, np.ndarray], bool]


Constraints = Union[ConstantConstraints, SharedConstraints, OracleConstraints]


@dataclass(frozen=True)
class WeightVector:
    r: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in np.ravel(self.r))
        if not r or not all(np.isfinite(v) and v > 0 for v in r):
            raise PreconditionError(f"weights must be strictly positive, got {r}")
        object.__setattr__(self, "r", r)

    def __len__(self):
        return len(self.r)

    def __iter__(self):
        return iter(self.r)

    def __getitem__(self, i):
        return self.r[i]

    @classmethod
    def ones(cls, n: int) -> "WeightVector":
        return cls((1.0,) * n)


# -- the game -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GameSpec:
    dims: tuple
    objectives: tuple
    lower: tuple
    upper: tuple
    constraints: Constraints = field(default_factory=ConstantConstraints)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        n = len(dims)
        if n < 2:
            raise PreconditionError("a game needs at least two players")
        if any(d <= 0 for d in dims):
            raise DimensionError(f"block dimensions must be positive, got {dims}")
        if len(self.objectives) != n:
            raise DimensionError(f"{len(self.objectives)} objectives for {n} players")
        object.__setattr__(self, "objectives", tuple(self.objectives))
        lower = tuple(_frozen(np.atleast_1d(v).ravel()) for v in self.lower)
        upper = tuple(_frozen(np.atleast_1d(v).ravel()) for v in self.upper)
        if len(lower) != n or len(upper) != n:
            raise DimensionError("one lower and one upper bound vector per player required")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if lo.size != dims[i] or hi.size != dims[i]:
                raise DimensionError(f"box of player {i} has wrong size", player=i, block=i)
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise PreconditionError(f"box of player {i} must be bounded")
            if np.any(lo > hi):
                raise PreconditionError(f"box of player {i} is empty")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        total = sum(dims)
        off = _offsets(dims)
        for i, obj in enumerate(self.objectives):
            if isinstance(obj, QuadraticObjective):
                if obj.c.size != total:
                    raise DimensionError(
                        f"objective of player {i} has dimension {obj.c.size}, expected {total}",
                        player=i,
                    )
                own = obj.Q[off[i]:off[i + 1], off[i]:off[i + 1]]
                if np.linalg.eigvalsh(own).min() < -1e-10 * max(1.0, np.abs(own).max()):
                    raise PreconditionError(
                        f"objective of player {i} is not convex in its own variable"
                    )
            elif not isinstance(obj, OracleObjective):
                raise TypeError(f"unsupported objective type {type(obj).__name__}")
        if isinstance(self.constraints, SharedConstraints):
            if self.constraints.set.dim != total:
                raise DimensionError("shared set dimension does not match the game")

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> np.ndarray:
        return _offsets(self.dims)

    @property
    def lo(self) -> np.ndarray:
        return np.concatenate(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.concatenate(self.upper)

    @property
    def is_shared(self) -> bool:
        return isinstance(self.constraints, SharedConstraints)

    @property
    def is_quadratic(self) -> bool:
        return all(isinstance(o, QuadraticObjective) for o in self.objectives)

    def bundle(self, x) -> BlockVector:
        """Coerce a flat array, block list or BlockVector to a bundle of this game."""
        if isinstance(x, BlockVector):
            bv = x
        else:
            arr = np.asarray(x, dtype=object if _ragged(x) else float)
            if arr.dtype == object or arr.ndim > 1:
                bv = BlockVector.from_blocks(x)
            else:
                bv = BlockVector(arr, self.dims)
        if bv.dims != self.dims:
            raise DimensionError(f"bundle dims {bv.dims} do not match game dims {self.dims}")
        return bv

    def scaled(self, r) -> "GameSpec":
        """The game with objective ``i`` multiplied by ``r[i]``."""
        r = WeightVector(r)
        if len(r) != self.n_players:
            raise DimensionError(f"{len(r)} weights for {self.n_players} players")
        objs = tuple(o.scaled(w) for o, w in zip(self.objectives, r))
        return GameSpec(self.dims, objs, self.lower, self.upper, self.constraints)

    def box_center(self) -> BlockVector:
        return BlockVector(0.5 * (self.lo + self.hi), self.dims)


def _ragged(x) -> bool:
    if isinstance(x, np.ndarray):
        return False
    try:
        lens = {np.size(v) for v in x}
    except TypeError:
        return False
    return len(lens) > 1 or any(np.ndim(v) > 0 for v in x)


# -- primitives ---------------------------------------------------------------


def _check_player(game: GameSpec, i: int):
    if not 0 <= i < game.n_players:
        raise DimensionError(f"player index {i} out of range 0..{game.n_players - 1}", player=i)


def evaluate_objective(game: GameSpec, i: int, x) -> float:
    _check_player(game, i)
    x = game.bundle(x)
    return game.objectives[i].value(x.data)


def partial_gradient(game: GameSpec, i: int, x) -> np.ndarray:
    """Gradient of player ``i``'s objective with respect to its own block."""
    _check_player(game, i)
    x = game.bundle(x)
    obj = game.objectives[i]
    if isinstance(obj, QuadraticObjective):
        off = game.offsets
        rows = obj.Q[off[i]:off[i + 1]]
        return rows @ x.data + obj.c[off[i]:off[i + 1]]
    if obj.partial_gradient is None:
        raise GradientUnavailable(f"objective of player {i} has no gradient oracle")
    g = np.atleast_1d(np.asarray(obj.partial_gradient(i, x.data), dtype=float)).ravel()
    if g.size != game.dims[i]:
        raise DimensionError(f"gradient oracle of player {i} returned size {g.size}", player=i)
    return g


def feasible(game: GameSpec, i: int, x_i, x_minus_i, tol: float = TAU_FEAS) -> bool:
    """``x_i`` lies in player i's box and in the constraint map at ``x_minus_i``."""
    _check_player(game, i)
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float)).ravel()
    if x_i.size != game.dims[i]:
        raise DimensionError(f"block {i} has dimension {game.dims[i]}", player=i, block=i)
    if np.any(x_i < game.lower[i] - tol) or np.any(x_i > game.upper[i] + tol):
        return False
    cons = game.constraints
    if isinstance(cons, ConstantConstraints):
        return True
    if isinstance(cons, SharedConstraints):
        full = BlockVector.assemble(game.dims, i, x_i, x_minus_i).data
        return cons.set.contains(full, tol)
    return bool(cons.membership(i, x_i, np.asarray(x_minus_i, dtype=float)))


def is_fixed_point(game: GameSpec, x, tol: float = TAU_FEAS) -> bool:
    x = game.bundle(x)
    return all(feasible(game, i, x.block(i), x.minus(i), tol) for i in range(game.n_players))
