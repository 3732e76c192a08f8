"""Command line interface: ``gnepkit solve | check | sweep``.

Exit codes: 0 success (converged / property holds), 1 input error,
2 solver did not converge, 3 property fails (witness printed).
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys

import numpy as np

from . import serialization
from .errors import ConvergenceError, GnepError
from .model import GameSpec
from .nikaido_isoda import is_gne, merit_phi
from .scenarios import (
    HeatMarketConfig,
    build_cournot,
    build_cournot_potential,
    build_heat_market,
    build_random_jointly_convex,
)
from .solvers import (
    bias_sweep,
    pseudogradient_jacobian,
    solve_best_response,
    solve_potential,
    solve_rosen,
)
from .structure import (
    BUILTIN_MAPS,
    EmptyGraphError,
    Verdict,
    check_dsc,
    check_geometric_equilibrium,
    check_graph_convexity,
    check_kkm,
    check_lsc_interval,
    constraint_map_oracle,
)

log = logging.getLogger("gnepkit")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_FAILS = 0, 1, 2, 3


class InputError(Exception):
    pass


def parse_params(text: str) -> dict:
    """``"eta=4,p=1,c=1:1.5"`` -> ``{"eta": 4.0, "p": 1.0, "c": [1.0, 1.5]}``."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InputError(f"bad parameter {item!r}; expected key=value")
        try:
            vals = [float(v) for v in value.split(":")]
        except ValueError:
            raise InputError(f"parameter {key!r}: cannot parse {value!r} as numbers") from None
        out[key.strip()] = vals if len(vals) > 1 else vals[0]
    return out


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}") from None


def _take(params: dict, key: str, default):
    return params.pop(key, default)


def build_builtin(name: str, params: dict):
    """Returns ``(game, potential, weights)`` for a built-in scenario."""
    params = dict(params)
    if name == "cournot":
        eta = float(_take(params, "eta", 4.0))
        p = float(_take(params, "p", 1.0))
        costs = np.atleast_1d(_take(params, "c", [1.0, 1.5]))
        cap = _take(params, "cap", None)
        if params:
            raise InputError(f"unknown cournot parameters: {sorted(params)}")
        game = build_cournot(eta, p, costs, cap)
        potential = build_cournot_potential(eta, p, costs) if cap is not None else None
        return game, potential, None
    if name == "heat":
        n = int(_take(params, "players", 2))
        tup = lambda v: tuple(np.atleast_1d(v).tolist())  # noqa: E731
        cfg = HeatMarketConfig(
            grid_points=int(_take(params, "M", 8)),
            time_steps=int(_take(params, "T", 6)),
            horizon=float(_take(params, "horizon", 1.0)),
            caps=tup(_take(params, "caps", 1.0)),
            state_cap=float(_take(params, "ymax", 0.1)),
            buffers=tup(_take(params, "buffers", [0.01, 0.02])),
            target=float(_take(params, "target", 0.2)),
            alphas=tup(_take(params, "alpha", 0.01)),
            tracking=tup(_take(params, "tracking", 1.0)),
        )
        if params:
            raise InputError(f"unknown heat parameters: {sorted(params)}")
        return build_heat_market(cfg, n), None, None
    if name == "random":
        n = int(_take(params, "players", 2))
        dims = [int(d) for d in np.atleast_1d(_take(params, "dims", 2))]
        density = float(_take(params, "density", 1.0))
        seed = int(_take(params, "seed", 0))
        if params:
            raise InputError(f"unknown random parameters: {sorted(params)}")
        return build_random_jointly_convex(n, dims, density, seed), None, None
    raise InputError(f"unknown builtin scenario {name!r}")


def load_game(args):
    if args.scenario and args.builtin:
        raise InputError("give either --scenario or --builtin, not both")
    if args.scenario:
        try:
            return serialization.load(args.scenario)
        except OSError as exc:
            raise InputError(f"cannot read scenario: {exc}") from None
    if args.builtin:
        return build_builtin(args.builtin, parse_params(args.params))
    raise InputError("no game given; use --scenario or --builtin")


def resolve_start(game: GameSpec, text):
    if text is None or text == "feasible":
        return game.constraints.set.feasible_point if game.is_shared else game.lo
    if text == "lower":
        return game.lo
    if text == "center":
        return game.box_center
    return parse_vector(text)


def _emit(payload: dict, out):
    text = json.dumps(payload, indent=1)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


# -- solve --------------------------------------------------------------------


def cmd_solve(args) -> int:
    game, potential, _ = load_game(args)
    x0 = resolve_start(game, args.x0)
    if args.method == "br":
        rep = solve_best_response(game, x0, mode=args.mode, tol=args.tol, max_iter=args.max_iter)
    elif args.method == "rosen":
        r = parse_vector(args.r) if args.r else np.ones(game.n_players)
        rep = solve_rosen(game, r, x0, tol=args.tol, max_iter=args.max_iter)
    else:
        if potential is None:
            raise InputError("this scenario has no potential")
        rep = solve_potential(game, potential, x0, tol=args.tol, max_iter=args.max_iter)
    _emit(rep.to_dict(), args.out)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(rep.trace_csv())
    if not rep.converged:
        log.warning("no convergence: residual %.3g after %d iterations", rep.residual, rep.iterations)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


# -- check --------------------------------------------------------------------


def _interval_map(args):
    if not args.map:
        raise InputError(f"property {args.property} needs --map")
    if args.map not in BUILTIN_MAPS:
        raise InputError(f"unknown map {args.map!r}; choose from {sorted(BUILTIN_MAPS)}")
    return BUILTIN_MAPS[args.map]


def _point(game, args):
    if args.point is None:
        raise InputError(f"property {args.property} needs --point")
    return game.bundle(parse_vector(args.point))


def run_check(args):
    prop = args.property
    if prop == "kkm":
        return check_kkm(_interval_map(args).oracle(), n_subsets=args.subsets,
                         max_subset_size=args.subset_size, hull_samples=args.hull_samples,
                         seed=args.seed)
    if prop == "lsc":
        return check_lsc_interval(_interval_map(args), args.at, n_probes=args.probes, seed=args.seed)
    if prop == "graphconvex" and args.map:
        return check_graph_convexity(_interval_map(args).oracle(), n_samples=args.samples, seed=args.seed)
    game, _, _ = load_game(args)
    if prop == "graphconvex":
        players = range(game.n_players) if args.player is None else [args.player]
        tested = 0
        for i in players:
            v = check_graph_convexity(constraint_map_oracle(game, i), n_samples=args.samples, seed=args.seed)
            tested += v.samples_tested
            if not v.holds:
                v.details["player"] = i
                return v
        return Verdict("graph-convexity", True, None, tested, args.seed)
    if prop == "dsc":
        r = parse_vector(args.r) if args.r else np.ones(game.n_players)
        return check_dsc(game, r, n_pairs=args.samples, seed=args.seed)
    if prop == "geometric":
        return check_geometric_equilibrium(game, _point(game, args), epsilon=args.epsilon,
                                           n_probes=args.probes, seed=args.seed)
    if prop == "gne":
        x = _point(game, args)
        report = merit_phi(game, x)
        holds = is_gne(game, x, tol=args.tol)
        witness = None if holds else {"x": x.data, "gap": report.gap,
                                      "per_player_improvement": report.per_player_improvement,
                                      "fixed_point": report.fixed_point}
        return Verdict("gne", holds, witness, 1, args.seed, {"gap_report": report.to_dict()})
    raise InputError(f"unknown property {prop!r}")


def cmd_check(args) -> int:
    try:
        verdict = run_check(args)
    except EmptyGraphError as exc:
        raise InputError(str(exc)) from None
    _emit(verdict.to_dict(), args.out)
    return EXIT_OK if verdict.holds else EXIT_FAILS


# -- sweep --------------------------------------------------------------------


def parse_grid(text: str, n_players: int) -> list:
    """``"r2=0.8:1:2"`` -> weight vectors with unspecified coordinates fixed at 1."""
    axes = [[1.0] for _ in range(n_players)]
    for key, values in parse_params(text).items():
        if not (key.startswith("r") and key[1:].isdigit()):
            raise InputError(f"grid key {key!r} must look like r1, r2, ...")
        k = int(key[1:]) - 1
        if not 0 <= k < n_players:
            raise InputError(f"grid key {key!r} out of range for {n_players} players")
        axes[k] = list(np.atleast_1d(values))
    return [tuple(float(v) for v in combo) for combo in itertools.product(*axes)]


def cmd_sweep(args) -> int:
    game, _, weights = load_game(args)
    if args.grid:
        weights = parse_grid(args.grid, game.n_players)
    if not weights:
        raise InputError("no weights to sweep; use --grid")
    x0 = resolve_start(game, args.x0)
    entries = bias_sweep(game, weights, tol=args.tol, x0=x0, max_iter=args.max_iter)
    n, N = game.total_dim, game.n_players
    header = ([f"r{k + 1}" for k in range(N)] + [f"x{k}" for k in range(n)]
              + [f"J{k + 1}" for k in range(N)] + ["unique", "converged", "dsc_min_eigenvalue"])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for e in entries:
            if e.error:
                log.warning("weights %s failed: %s", e.r, e.error)
                row_x, row_j = [""] * n, [""] * N
            else:
                row_x = [repr(float(v)) for v in e.x.data]
                row_j = [repr(float(v)) for v in e.objective_values]
            eig = ""
            if game.is_quadratic:
                D = pseudogradient_jacobian(game, e.r)
                eig = repr(float(np.linalg.eigvalsh(D + D.T)[0]))
            writer.writerow([repr(float(v)) for v in e.r] + row_x + row_j
                            + [e.unique, e.converged, eig])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK if all(e.converged for e in entries) else EXIT_NOT_CONVERGED


# -- entry point --------------------------------------------------------------


def _add_game_args(p):
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--builtin", choices=["cournot", "heat", "random"])
    p.add_argument("--params", default="", help="builtin parameters, e.g. eta=4,p=1,c=1:1.5,cap=1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnepkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute an equilibrium")
    _add_game_args(p)
    p.add_argument("--method", choices=["br", "rosen", "potential"], default="rosen")
    p.add_argument("--mode", choices=["gauss-seidel", "jacobi"], default="gauss-seidel")
    p.add_argument("--r", help="player weights for rosen, e.g. 1,2")
    p.add_argument("--x0", help="start: feasible, lower, center or comma-separated values")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--trace", help="write the iteration trace CSV here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="falsify a structural property by sampling")
    _add_game_args(p)
    p.add_argument("--map", help=f"built-in interval map: {', '.join(sorted(BUILTIN_MAPS))}")
    p.add_argument("--property", required=True,
                   choices=["graphconvex", "kkm", "dsc", "lsc", "geometric", "gne"])
    p.add_argument("--point", help="bundle to test (geometric, gne)")
    p.add_argument("--at", type=float, default=0.0, help="domain point for lsc")
    p.add_argument("--player", type=int, help="restrict graphconvex to one player")
    p.add_argument("--r", help="weights for dsc")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--subsets", type=int, default=500)
    p.add_argument("--subset-size", type=int, default=4)
    p.add_argument("--hull-samples", type=int, default=50)
    p.add_argument("--probes", type=int, default=500)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-6, help="gap tolerance for gne")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="variational equilibria over a grid of weights")
    _add_game_args(p)
    p.add_argument("--grid", help="weight grid, e.g. r2=0.8:1:2 (other weights stay 1)")
    p.add_argument("--x0")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, GnepError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
