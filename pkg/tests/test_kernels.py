"""The numba kernels and the numpy fallbacks must agree bit for bit."""
import json
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from chaingather import kernels as K
from chaingather.chain import build_chain
from chaingather.runs import edge_arrays

STEP = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0), "stay": (0, 0)}


@st.composite
def walks(draw):
    half = draw(st.lists(st.sampled_from(["N", "E", "S", "W", "stay"]), min_size=2, max_size=40))
    undo = {"N": "S", "S": "N", "E": "W", "W": "E", "stay": "stay"}
    back = [undo[m] for m in half]
    rest = draw(st.permutations(back))
    return build_chain(half + list(rest))


def same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(np.asarray(x), np.asarray(y))


@given(walks())
@settings(max_examples=150, deadline=None)
def test_static_kernels_agree(ch):
    xs, ys = ch.xs, ch.ys
    same(K._turns_nb(xs, ys), K._turns_np(xs, ys))
    same(K._steps_nb(xs, ys), K._steps_np(xs, ys))
    same(K._fuse_nb(xs, ys), K._fuse_np(xs, ys))
    t = K._turns_np(xs, ys)
    same(K._groups_nb(t), K._groups_np(t))
    for kmax in (1, 3, 12):
        same(K._match_nb(xs, ys, kmax), K._match_np(xs, ys, kmax))


@given(walks(), st.data())
@settings(max_examples=150, deadline=None)
def test_run_kernels_agree(ch, data):
    n = ch.n
    if n < 3:
        return
    runners = np.array(sorted(data.draw(st.sets(st.integers(0, n - 1), max_size=6))), np.int64)
    dirs = np.array([data.draw(st.sampled_from([1, -1])) for _ in runners], np.int64)
    pause = np.array([data.draw(st.integers(0, 3)) for _ in runners], np.int64)
    occ = np.full(n, -1, np.int64)
    occ[runners] = np.arange(runners.size)
    same(K._run_plan_nb(ch.xs, ch.ys, occ, runners, dirs, pause),
         K._run_plan_py(ch.xs, ch.ys, occ, runners, dirs, pause))
    if (K._turns_np(ch.xs, ch.ys) == K.DEGEN).any():
        return
    gid, gbad, hard = edge_arrays(ch)
    for reach in (3, 10, n):
        same(K._scan_ahead_nb(occ, gid, gbad, hard, runners, dirs, reach),
             K._scan_ahead_py(occ, gid, gbad, hard, runners, dirs, reach))


def test_fallback_path_gives_same_simulation():
    code = ("import json\nfrom chaingather import kernels\n"
            "from chaingather.generators import random_loop\n"
            "from chaingather.scheduler import run_to_gathering\n"
            "r = run_to_gathering(random_loop(256, 2))\n"
            "print(json.dumps([kernels.USE_NUMBA, r.summary(), r.events]))\n")
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, CHAINGATHER_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        out[flag] = json.loads(res.stdout)
    assert out["0"][0] is False and out["1"][0] is True
    assert out["0"][1:] == out["1"][1:]
