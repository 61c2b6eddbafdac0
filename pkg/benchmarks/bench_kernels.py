"""Numba kernels versus the numpy fallback.

Part 1 times each kernel pair in-process on one large random loop.
Part 2 times a whole simulation in two subprocesses, one per value of
CHAINGATHER_NUMBA, and checks that both produce the same report.

    python3 benchmarks/bench_kernels.py [--n 4096] [--sim rectangle:256x256]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat=5):
    fn()  # warm-up (JIT compile on the numba side)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_table(n):
    from chaingather import kernels as K
    from chaingather.generators import random_loop
    from chaingather.runs import edge_arrays

    ch = random_loop(n, seed=1)
    xs, ys = ch.xs, ch.ys
    turn = K._turns_np(xs, ys)
    gid, gbad, hard = edge_arrays(ch)
    runners = np.arange(0, n, 97, dtype=np.int64)
    occ = np.full(n, -1, np.int64)
    occ[runners] = np.arange(runners.size)
    dirs = np.where(runners % 2 == 0, 1, -1).astype(np.int64)
    pause = np.zeros(runners.size, np.int64)
    pairs = [
        ("turns", lambda: K._turns_nb(xs, ys), lambda: K._turns_np(xs, ys)),
        ("groups", lambda: K._groups_nb(turn), lambda: K._groups_np(turn)),
        ("steps", lambda: K._steps_nb(xs, ys), lambda: K._steps_np(xs, ys)),
        ("match_merges", lambda: K._match_nb(xs, ys, 12), lambda: K._match_np(xs, ys, 12)),
        ("fuse_groups", lambda: K._fuse_nb(xs, ys), lambda: K._fuse_np(xs, ys)),
        ("run_plan", lambda: K._run_plan_nb(xs, ys, occ, runners, dirs, pause),
         lambda: K._run_plan_py(xs, ys, occ, runners, dirs, pause)),
        ("scan_ahead", lambda: K._scan_ahead_nb(occ, gid, gbad, hard, runners, dirs, n),
         lambda: K._scan_ahead_py(occ, gid, gbad, hard, runners, dirs, n)),
    ]
    print(f"kernels on random_loop({n}), best of 5, numba={K.USE_NUMBA}")
    print(f"{'kernel':<14}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, nb, py in pairs:
        a, b = best_of(nb), best_of(py)
        print(f"{name:<14}{a * 1e3:>10.3f}{b * 1e3:>10.3f}{b / a:>9.1f}")


def simulate(spec, flag):
    code = ("import json,time,sys\n"
            "from chaingather.generators import parse_gen\n"
            "from chaingather.scheduler import run_to_gathering\n"
            "ch=parse_gen(sys.argv[1])\n"
            "run_to_gathering(parse_gen('rectangle:8x8'),audit=False)\n"
            "t=time.perf_counter();r=run_to_gathering(ch,audit=False)\n"
            "print(json.dumps({'wall':time.perf_counter()-t,'report':r.summary()}))\n")
    env = dict(os.environ, CHAINGATHER_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", code, spec], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--sim", default="rectangle:128x128")
    args = ap.parse_args()
    kernel_table(args.n)
    on, off = simulate(args.sim, "1"), simulate(args.sim, "0")
    print(f"\nsimulation {args.sim}: numba {on['wall']:.2f}s, numpy {off['wall']:.2f}s, "
          f"speedup {off['wall'] / on['wall']:.1f}x")
    print("reports identical:", on["report"] == off["report"])


if __name__ == "__main__":
    main()
