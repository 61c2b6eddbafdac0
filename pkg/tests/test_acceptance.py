"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run alone with ``python3 tests/test_acceptance.py`` or through pytest; the
lines are repeated in pytest's terminal summary.
"""
import functools
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from chaingather.cli import DOUBLING_BOUND, FROZEN_C, SimConfig, run_command, scaling_checks
from chaingather.generators import random_loop, rectangle, staircase
from chaingather.oracle import locality_audit, sweep
from chaingather.scheduler import SimState, constants_profile, run_to_gathering
from chaingather.trace import phase_record, transform_record

LINES = []
CONSTS = constants_profile("default")
SQUARE_SIZES = [32, 64, 128, 256, 512, 1024, 2048]
N_LOOPS = 120


def report(number, name, passed, detail):
    line = f"criterion {number} {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    LINES.append(line)
    print(line)
    return passed


# ------------------------------------------------------------ shared runs

@functools.lru_cache(maxsize=None)
def square_runs():
    rows, snaps, t0 = [], {}, time.perf_counter()
    for n in SQUARE_SIZES:
        side = n // 4
        seen = []
        r = run_to_gathering(rectangle(side, side), CONSTS,
                             on_phase=lambda p, ch, ev: seen.append((p, ch)))
        rows.append({"n": n, "gathered_phase": r.gathered_phase,
                     "ratio": None if r.gathered_phase is None else r.gathered_phase / n})
        snaps[f"square n={n}"] = seen
    return rows, snaps, time.perf_counter() - t0


def loop_size(i):
    return 128 + 2 * ((i * 37) % 193)     # spread over 128..512


@functools.lru_cache(maxsize=None)
def loop_suite():
    out = []
    for i in range(N_LOOPS):
        r = run_to_gathering(random_loop(loop_size(i), seed=i), CONSTS)
        out.append((loop_size(i), i, r))
    return out


def loop_violations(checks):
    bad = []
    for n, seed, r in loop_suite():
        bad += [(n, seed, v) for v in r.invariant_violations if v["check"] in checks]
    return bad


# ------------------------------------------------------------- criteria

def criterion_1():
    rows, _, wall = square_runs()
    bad = scaling_checks(rows, FROZEN_C, DOUBLING_BOUND)
    if wall > 120:
        bad.append(f"wall {wall:.0f}s > 120s")
    ratios = ", ".join(f"{r['n']}:{r['gathered_phase']}" for r in rows)
    detail = f"c={FROZEN_C}, gathered phases {ratios}, wall {wall:.1f}s"
    if bad:
        detail += "; " + "; ".join(bad)
    return report(1, "linear scaling", not bad, detail)


def criterion_2():
    t0 = time.perf_counter()
    res = sweep(nmax=12, kmax=CONSTS.K)
    wall = time.perf_counter() - t0
    counts = res.summary()["counterexamples"]
    ok = res.ok and wall <= 300
    detail = (f"{res.chains} chains, {res.mergeless} mergeless, {res.merge_configs} merge "
              f"configurations, counterexamples {counts}, {wall:.0f}s")
    for k in (2, 4):
        extra = sweep(nmax=12, kmax=k, lemmas=("decomposition_total", "samesign_vm_pair"))
        print(f"  info: K={k} sweep, {extra.mergeless} mergeless chains, "
              f"counterexamples {extra.summary()['counterexamples']}")
    return report(2, "exhaustive lemma sweep", ok, detail)


def criterion_3():
    bad = loop_violations({"progress"})
    runs = loop_suite()
    windows = sum(r.phases // CONSTS.L for _, _, r in runs if r.gathered_phase)
    return report(3, "progress windows", not bad,
                  f"{len(runs)} loops, {windows} windows, {len(bad)} violations")


def criterion_4():
    checks = {"node_disjoint", "nesting", "pair_survival", "unique_merge", "merge_inside",
              "merge_from_behind"}
    bad = loop_violations(checks)
    pairs = sum(r.good_pairs for _, _, r in loop_suite())
    merges = sum(r.merges for _, _, r in loop_suite())
    return report(4, "pipelining audit", not bad,
                  f"{pairs} good pairs, {merges} merges, {len(bad)} violations")


def criterion_5():
    bad = loop_violations({"quasi_edge"})
    phases = sum(r.phases for _, _, r in loop_suite())
    return report(5, "quasi-edge preservation", not bad,
                  f"{phases} audited phases, {len(bad)} violations")


def _records(ch):
    out = []
    run_to_gathering(ch, CONSTS, audit=False, on_phase=lambda p, c, e: out.append(phase_record(p, c, e)))
    return out


def criterion_6():
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        for gen in ("rectangle:40x24", "random:400"):
            paths = [Path(tmp) / f"{k}.jsonl" for k in "ab"]
            for p in paths:
                run_command(SimConfig(gen=gen, seed=3, trace=str(p), audit=True))
            if paths[0].read_bytes() != paths[1].read_bytes():
                problems.append(f"{gen} trace differs between runs")
    maps = {"translate(17,-5)": (lambda x, y: (x + 17, y - 5), lambda x, y: (x - 17, y + 5)),
            "rotate 90": (lambda x, y: (-y, x), lambda x, y: (y, -x))}
    checked = 0
    for ch in (rectangle(40, 24), random_loop(400, 3), staircase(16)):
        base = _records(ch)
        for name, (fwd, inv) in maps.items():
            back = [transform_record(r, inv) for r in _records(ch.transformed(fwd))]
            checked += 1
            if back != base:
                problems.append(f"{name} breaks equivariance on n={ch.n}")
    detail = f"2 byte-identical reruns, {checked} transformed reruns"
    if problems:
        detail += "; " + "; ".join(problems)
    return report(6, "determinism and equivariance", not problems, detail)


def criterion_7():
    _, snaps, _ = square_runs()
    runs = {k: v for k, v in snaps.items() if len(v) > 1}
    for n, seed, r in loop_suite()[:3]:
        seen = []
        run_to_gathering(random_loop(n, seed), CONSTS, audit=False,
                         on_phase=lambda p, ch, ev: seen.append((p, ch)))
        runs[f"random n={n}"] = seen
    failures, audited = [], 0
    for name, seen in runs.items():
        pick = np.unique(np.linspace(0, len(seen) - 1, 10).round().astype(int))
        for k in pick.tolist():
            p, ch = seen[k]
            v = locality_audit(SimState(ch, CONSTS, phase=p))
            audited += 1
            if not v:
                failures.append(f"{name} phase {p}: {v.detail}")
    detail = f"{len(runs)} runs, {audited} snapshots at radius V={CONSTS.V}"
    if failures:
        detail += "; " + "; ".join(failures[:5])
    return report(7, "locality", not failures, detail)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 8)])
def test_acceptance(crit):
    assert crit()


if __name__ == "__main__":
    results = [crit() for crit in CRITERIA]
    sys.exit(0 if all(results) else 1)
