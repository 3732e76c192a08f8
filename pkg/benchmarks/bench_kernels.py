"""Compare the compiled kernels with their pure-Python twins.

Run with ``python benchmarks/bench_kernels.py``.  The end-to-end heat-market
solve is timed in a subprocess per backend, since the backend is chosen at
import time through ``GNEPKIT_PURE_PYTHON``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gnepkit import _kernels_py

try:
    from gnepkit import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

HEAT_SNIPPET = """
import time
from gnepkit.scenarios import HeatMarketConfig, build_heat_market
from gnepkit.solvers import solve_rosen
game = build_heat_market(HeatMarketConfig())
t = time.perf_counter()
rep = solve_rosen(game, (1, 1), tol=1e-6)
print(time.perf_counter() - t, rep.iterations)
"""


def dykstra_case(seed=0, m=40, n=20):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    A /= np.linalg.norm(A, axis=1)[:, None]
    b = np.abs(rng.normal(size=m)) + 0.1
    return (3 * rng.normal(size=n), -np.ones(n), np.ones(n), A, b, 1e-12, 100000, 1e-9)


def box_qp_case(seed=0, n=60):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    q = M.T @ M / n + 0.01 * np.eye(n)
    L = float(np.linalg.eigvalsh(q).max())
    return (q, rng.normal(size=n), -np.ones(n), np.ones(n), np.zeros(n), L, 1e-10, 50000)


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def heat_time(pure: bool):
    env = dict(os.environ, GNEPKIT_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", HEAT_SNIPPET], env=env, capture_output=True,
                         text=True, check=True)
    secs, iters = out.stdout.split()
    return float(secs), int(iters)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--skip-heat", action="store_true")
    args = parser.parse_args(argv)
    if _kernels_c is None:
        sys.exit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    rows = []
    for name, case in [("dykstra 40x20", dykstra_case()), ("box_qp n=60", box_qp_case())]:
        fn = name.split()[0]
        tc = bench(getattr(_kernels_c, fn), case, args.repeat)
        tp = bench(getattr(_kernels_py, fn), case, args.repeat)
        rows.append((name, tc, tp))
    if not args.skip_heat:
        tc, _ = heat_time(pure=False)
        tp, _ = heat_time(pure=True)
        rows.append(("heat-market rosen", tc, tp))
    print(f"{'case':<20}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, tc, tp in rows:
        print(f"{name:<20}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
