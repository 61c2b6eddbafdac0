"""Per-robot decisions recomputed from a LocalView alone.

The window is turned into a small pseudo-chain (relative positions, tags
with anonymous ids) and the engine's rules are evaluated on it; only the
center robot's outcome is read.  Where the window does not wrap, its two
ends are joined by a non-unit step, which every rule treats as a hard
break, so nothing beyond the window can leak in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import NO_RUN, ClosedChain, _tag_arrays, local_view
from .merge import plan_merges
from .runs import (_collision_stops, lost_runs, merge_filter, plan_execute,
                   plan_init)


@dataclass(frozen=True)
class Decision:
    """Everything a robot decides in one phase snapshot."""

    execute: tuple      # (act, hop_x, hop_y); act 0 for robots without a run
    stop: bool          # own run stopped by cleanup arbitration
    cleanup_hop: tuple  # hop in the runner-triggered merges
    merge_hop: tuple    # hop in the merge subphase
    init_hop: tuple
    init_start: tuple   # (direction, hop_x, hop_y) or ()


def decisions(chain, consts):
    """Engine decisions for every robot of ``chain`` (one Decision each)."""
    n = chain.n
    t = chain.tags
    execute = [(0, 0, 0)] * n
    if n >= 3:
        runners, act, _, hx, hy, _ = plan_execute(chain)
        for r, i in enumerate(runners.tolist()):
            a = int(act[r])
            execute[i] = (a, int(hx[r]) if a == 1 else 0, int(hy[r]) if a == 1 else 0)
    stopped = set()
    if n >= 3:
        lost = lost_runs(chain)
        work = chain.copy()
        if lost:
            from .runs import _clear_tags
            _clear_tags(work, np.nonzero(np.isin(work.tags["run_id"], sorted(lost)))[0])
        stopped = lost | _collision_stops(work, consts.C)
    cplan = plan_merges(chain, consts.K, merge_filter(chain, runner_black=True))
    mplan = plan_merges(chain, consts.K, merge_filter(chain))
    idx, idy, starts = plan_init(chain)
    start_at = {i: (d, h[0], h[1]) for i, d, h in starts}
    out = []
    for i in range(n):
        out.append(Decision(
            execute[i],
            bool(t["run_id"][i] != NO_RUN and int(t["run_id"][i]) in stopped),
            (int(cplan.dx[i]), int(cplan.dy[i])),
            (int(mplan.dx[i]), int(mplan.dy[i])),
            (int(idx[i]), int(idy[i])),
            start_at.get(i, ()),
        ))
    return out


def view_chain(view):
    """Pseudo-chain built from a LocalView; returns (chain, center slot)."""
    m = len(view.window)
    pts = np.asarray(view.window, np.int64).reshape(m, 2)
    tags = _tag_arrays(m)
    for s, tag in enumerate(view.tags):
        if tag is None:
            continue
        birth, rdir, pause, (hx, hy), paired = tag
        tags["run_id"][s] = s
        tags["birth"][s] = birth
        tags["rdir"][s] = rdir
        tags["pause"][s] = pause
        tags["hx"][s] = hx
        tags["hy"][s] = hy
        tags["paired"][s] = paired
    chain = ClosedChain(pts[:, 0].copy(), pts[:, 1].copy(), tags)
    if not view.wraps and m > 1:
        # a far sentinel robot closes the loop with two non-unit steps
        far = 4 * m + 8
        chain.xs = np.concatenate([chain.xs, [far]])
        chain.ys = np.concatenate([chain.ys, [far]])
        for key in chain.tags:
            fill = NO_RUN if key == "run_id" else (-1 if key == "birth" else 0)
            chain.tags[key] = np.concatenate([chain.tags[key], [fill]])
    return chain, -view.offsets[0]


def local_decision(view, consts):
    """The center robot's Decision computed from its view only."""
    chain, c = view_chain(view)
    return decisions(chain, consts)[c]


def robot_decision(chain, i, consts, radius=None):
    view = local_view(chain, i, consts.V if radius is None else radius)
    return local_decision(view, consts)
