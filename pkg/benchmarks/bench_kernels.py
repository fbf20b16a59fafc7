"""Numba vs. numpy kernel timings, plus whole-episode timings under each backend.

    python benchmarks/bench_kernels.py [--repeat 5] [--episodes 200]

Kernel timings compare both namespaces in one process. Episode timings
start a fresh interpreter per backend with AGIGAME_NUMBA set, since the
choice is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from agigame import kernels
from agigame._accel import HAVE_NUMBA

EPISODE_SNIPPET = """
import time
from agigame import MechanismConfig, Parameters, SimulationConfig, kernels
from agigame.engine import run_episode, run_episodes
cfg = SimulationConfig(params=Parameters(horizon=100, n_initial={n}, lambda_entry=0.05),
                       mechanisms=MechanismConfig(base_audit_frequency=0.5), episodes={episodes})
run_episode(cfg, 0, record=False)
t = time.perf_counter()
run_episodes(cfg, record=False)
print(kernels.BACKEND, (time.perf_counter() - t) / {episodes})
"""


def kernel_cases(n, rng):
    T = rng.uniform(0, 5, n)
    r = rng.uniform(0, 1, n)
    c = rng.lognormal(0, 0.5, n)
    e = rng.uniform(0, 1, n)
    s = (rng.uniform(size=n) < 0.5).astype(float)
    V = (rng.uniform(size=n) < 0.5).astype(float)
    access = np.ones(n)
    return {
        "capability_next": (T, r, c, e, s, 0.1, 0.1),
        "knowledge_next": (1.0, s, T, 0.5),
        "security": (V, T),
        "stage_utilities": (T, 1.0, 2.0, s, r, V, access, 0.1, 1.0, 0.1, 0.1, 0.2, 0.1, 0.1),
        "discounted_sum": (rng.normal(size=n), 0.9),
    }


def best_of(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>8}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for n in (4, 64, 4096):
        for name, args in kernel_cases(n, rng).items():
            getattr(kernels.NUMBA, name)(*args)  # compile
            t_np = best_of(getattr(kernels.NUMPY, name), args, repeat)
            t_nb = best_of(getattr(kernels.NUMBA, name), args, repeat)
            print(f"{name:<18}{n:>8}{t_np * 1e6:>12.2f}{t_nb * 1e6:>12.2f}{t_np / t_nb:>9.1f}")
    m = 1_000_000
    grid = [rng.uniform(0.05, 2.0, m) for _ in range(8)]
    grid[5] = rng.uniform(0.05, 0.99, m)  # delta
    kernels.NUMBA.theorem1_grid(*grid)
    t_np = best_of(kernels.NUMPY.theorem1_grid, grid, repeat)
    t_nb = best_of(kernels.NUMBA.theorem1_grid, grid, repeat)
    print(f"{'theorem1_grid':<18}{m:>8}{t_np * 1e6:>12.0f}{t_nb * 1e6:>12.0f}{t_np / t_nb:>9.1f}")


def bench_episodes(episodes, n):
    print(f"\nwhole episodes (horizon 100, N={n}, {episodes} episodes)")
    for flag in ("0", "1"):
        env = dict(os.environ, AGIGAME_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", EPISODE_SNIPPET.format(n=n, episodes=episodes)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  AGIGAME_NUMBA={flag}: backend {out[0]:<6} {float(out[1]) * 1e3:.2f} ms/episode")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--players", type=int, default=6)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        sys.exit("numba is not importable; nothing to compare")
    bench_kernels(args.repeat)
    bench_episodes(args.episodes, args.players)


if __name__ == "__main__":
    main()
