"""JSON scenario format (schema version 1).

Floats are written with ``repr``, which round-trips IEEE doubles exactly.
"""
from __future__ import annotations

import json

import jsonschema
import numpy as np

from .errors import GnepError
from .model import (
    ConstantConstraints,
    GameSpec,
    OracleObjective,
    QuadraticObjective,
    SharedConstraints,
    SharedSet,
)
from .scenarios import build_cournot
from .solvers import FORCING, PotentialSpec

SCHEMA_VERSION = 1


class ScenarioError(GnepError, ValueError):
    """Malformed scenario document."""


_vector = {"type": "array", "items": {"type": "number"}}
_matrix = {"type": "array", "items": _vector}
_quadratic = {
    "type": "object",
    "properties": {
        "type": {"const": "quadratic"},
        "Q": _matrix,
        "c": _vector,
        "d": {"type": "number"},
    },
    "required": ["type", "Q", "c"],
    "additionalProperties": False,
}
_builtin = {
    "type": "object",
    "properties": {
        "type": {"const": "builtin"},
        "name": {"enum": ["cournot", "zero"]},
        "params": {"type": "object"},
    },
    "required": ["type", "name"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "players": {"type": "integer", "minimum": 2},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "objectives": {"type": "array", "items": {"oneOf": [_quadratic, _builtin]}},
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"lo": _vector, "hi": _vector},
                "required": ["lo", "hi"],
                "additionalProperties": False,
            },
        },
        "constraints": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"type": {"const": "constant"}},
                    "required": ["type"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "shared"},
                        "A": _matrix,
                        "b": _vector,
                        "feasible_point": _vector,
                        "lo": _vector,
                        "hi": _vector,
                    },
                    "required": ["type", "A", "b", "feasible_point"],
                    "additionalProperties": False,
                },
            ]
        },
        "potential": {
            "type": "object",
            "properties": {
                "type": {"const": "quadratic"},
                "Q": _matrix,
                "c": _vector,
                "d": {"type": "number"},
                "forcing": {"enum": sorted(FORCING)},
            },
            "required": ["type", "Q", "c"],
            "additionalProperties": False,
        },
        "weights": {"type": "array", "items": _vector},
    },
    "required": ["schema", "players", "dims", "objectives", "boxes", "constraints"],
    "additionalProperties": False,
}


def _quadratic_dict(obj: QuadraticObjective) -> dict:
    return {"type": "quadratic", "Q": obj.Q.tolist(), "c": obj.c.tolist(), "d": obj.d}


def game_to_dict(game: GameSpec, potential: PotentialSpec = None, weights=None) -> dict:
    objectives = []
    for i, obj in enumerate(game.objectives):
        if isinstance(obj, OracleObjective):
            raise ScenarioError(f"objective of player {i} is an oracle and cannot be serialized")
        objectives.append(_quadratic_dict(obj))
    cons = game.constraints
    if isinstance(cons, ConstantConstraints):
        cdict = {"type": "constant"}
    elif isinstance(cons, SharedConstraints):
        s = cons.set
        cdict = {"type": "shared", "A": s.A.tolist(), "b": s.b.tolist(),
                 "feasible_point": s.feasible_point.tolist()}
        if s.lo is not None:
            cdict["lo"] = s.lo.tolist()
        if s.hi is not None:
            cdict["hi"] = s.hi.tolist()
    else:
        raise ScenarioError("oracle constraint maps cannot be serialized")
    doc = {
        "schema": SCHEMA_VERSION,
        "players": game.n_players,
        "dims": list(game.dims),
        "objectives": objectives,
        "boxes": [{"lo": lo.tolist(), "hi": hi.tolist()} for lo, hi in zip(game.lower, game.upper)],
        "constraints": cdict,
    }
    if potential is not None:
        if not isinstance(potential.objective, QuadraticObjective):
            raise ScenarioError("only quadratic potentials can be serialized")
        doc["potential"] = dict(_quadratic_dict(potential.objective), forcing=potential.forcing)
    if weights is not None:
        doc["weights"] = [list(map(float, w)) for w in weights]
    return doc


def _builtin_objective(spec: dict, dims, i: int) -> QuadraticObjective:
    n = sum(dims)
    params = spec.get("params", {})
    if spec["name"] == "zero":
        return QuadraticObjective(np.zeros((n, n)), np.zeros(n), 0.0)
    # cournot: 1-D blocks, player index defaults to the objective's position
    if any(d != 1 for d in dims):
        raise ScenarioError(f"objectives[{i}]: builtin cournot objective needs 1-D blocks")
    try:
        costs = params["c"] if isinstance(params["c"], list) else [params["c"]] * n
        game = build_cournot(float(params["eta"]), float(params["p"]), costs)
    except KeyError as exc:
        raise ScenarioError(f"objectives[{i}].params: missing {exc}") from None
    return game.objectives[int(params.get("player", i))]


def game_from_dict(doc: dict):
    """Validate a scenario document; returns ``(game, potential, weights)``."""
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario field {path}: {exc.message}") from None
    dims = doc["dims"]
    n = doc["players"]
    if len(dims) != n or len(doc["objectives"]) != n or len(doc["boxes"]) != n:
        raise ScenarioError("players, dims, objectives and boxes must have matching lengths")
    try:
        objectives = []
        for i, spec in enumerate(doc["objectives"]):
            if spec["type"] == "quadratic":
                objectives.append(QuadraticObjective(spec["Q"], spec["c"], spec.get("d", 0.0)))
            else:
                objectives.append(_builtin_objective(spec, dims, i))
        c = doc["constraints"]
        if c["type"] == "constant":
            constraints = ConstantConstraints()
        else:
            constraints = SharedConstraints(
                SharedSet(c["A"], c["b"], c["feasible_point"], lo=c.get("lo"), hi=c.get("hi"))
            )
        game = GameSpec(
            tuple(dims),
            tuple(objectives),
            tuple(b["lo"] for b in doc["boxes"]),
            tuple(b["hi"] for b in doc["boxes"]),
            constraints,
        )
        potential = None
        if "potential" in doc:
            p = doc["potential"]
            potential = PotentialSpec(
                QuadraticObjective(p["Q"], p["c"], p.get("d", 0.0)), p.get("forcing", "identity")
            )
    except ScenarioError:
        raise
    except (GnepError, ValueError, TypeError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None
    weights = doc.get("weights")
    return game, potential, weights


def dumps(game: GameSpec, potential=None, weights=None, indent=None) -> str:
    return json.dumps(game_to_dict(game, potential, weights), indent=indent)


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return game_from_dict(doc)


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def save(path, game: GameSpec, potential=None, weights=None):
    with open(path, "w") as fh:
        fh.write(dumps(game, potential, weights, indent=1))
