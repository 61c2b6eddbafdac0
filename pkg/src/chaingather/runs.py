"""Runs: start at stairway ends, travel along quasi edges, stop on collision or merge.

A run is a jog (EM(1) bump) whose ahead-level corner carries the tag.  The
robot behind the runner sits one step off the edge, on the run's hop side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chain import NO_RUN, apply_moves
from .merge import execute_plan, plan_merges


@dataclass
class RunRecord:
    run_id: int
    birth: int
    direction: int
    hop_side: tuple
    start_uid: int
    stop_phase: int | None = None
    stop_reason: str | None = None
    pair: int | None = None

    @property
    def active(self):
        return self.stop_phase is None


@dataclass
class GoodPair:
    pair_id: int
    runs: tuple          # (run moving +1, run moving -1)
    phase: int
    merged: int | None = None   # index of the associated merge event
    closed: bool = False


@dataclass
class RunRegistry:
    records: dict = field(default_factory=dict)
    pairs: dict = field(default_factory=dict)
    next_id: int = 0

    def new_run(self, birth, direction, hop_side, uid):
        rec = RunRecord(self.next_id, birth, direction, hop_side, uid)
        self.records[rec.run_id] = rec
        self.next_id += 1
        return rec

    def stop(self, run_id, phase, reason):
        rec = self.records[run_id]
        if rec.active:
            rec.stop_phase = phase
            rec.stop_reason = reason
        return rec

    def active_pairs(self):
        return [p for p in self.pairs.values() if not p.closed]

    def pair_of(self, run_id):
        return self.records[run_id].pair


def run_event(kind, rec, phase, index, reason=None):
    ev = {"kind": kind, "run": rec.run_id, "phase": phase, "index": int(index),
          "birth": rec.birth, "direction": rec.direction, "hop_side": list(rec.hop_side)}
    if reason is not None:
        ev["reason"] = reason
    return ev


def edge_arrays(chain):
    """Turn-group ids, non-quasi-edge groups and hard breaks (reversals)."""
    turn = kernels.turns(chain.xs, chain.ys)
    gid, _, gbad = kernels.groups(turn)
    hard = (turn == kernels.UTURN) | (turn == kernels.DEGEN)
    return gid, gbad, hard


def _occupancy(chain):
    n = chain.n
    runners = chain.runners()
    occ = np.full(n, -1, np.int64)
    occ[runners] = np.arange(runners.size)
    return runners, occ


def _clear_tags(chain, idx):
    for key, val in (("run_id", NO_RUN), ("birth", -1), ("rdir", 0), ("pause", 0), ("hx", 0), ("hy", 0),
                     ("paired", 0)):
        chain.tags[key][idx] = val


def _move_tags(chain, src, dst):
    vals = {key: chain.tags[key][src].copy() for key in chain.tags}
    _clear_tags(chain, src)
    for key, v in vals.items():
        chain.tags[key][dst] = v


def plan_execute(chain):
    """Decide every run's step for this call.

    Returns (runners, act, new_pause, hop_x, hop_y, targets) where act is
    0 (wait), 1 (hop and pass the tag one robot on) or 2 (pass the tag three
    robots on and pause).  Two runs aiming at the same robot both wait.
    """
    n = chain.n
    runners, occ = _occupancy(chain)
    t = chain.tags
    d = t["rdir"][runners]
    act, npause, hx, hy = kernels.run_plan(chain.xs, chain.ys, occ, runners, d, t["pause"][runners])
    act = np.asarray(act).copy()
    npause = np.asarray(npause).copy()
    # A hop must agree with the stored hop side; otherwise the jog is not ours.
    bx = chain.xs[(runners - d) % n] - chain.xs[runners]
    by = chain.ys[(runners - d) % n] - chain.ys[runners]
    own = (bx == t["hx"][runners]) & (by == t["hy"][runners])
    act[~own] = 0
    npause[(act == 0) & ~own] = np.maximum(t["pause"][runners] - 1, 0)[(act == 0) & ~own]
    reach = np.where(act == 2, 3, 1)
    targets = (runners + d * reach) % n
    moving = act > 0
    if moving.any():
        tv, cnt = np.unique(targets[moving], return_counts=True)
        clash = np.isin(targets, tv[cnt > 1]) & moving
        act[clash] = 0
        npause[clash] = np.maximum(t["pause"][runners] - 1, 0)[clash]
    return runners, act, npause, np.asarray(hx), np.asarray(hy), targets


def execute_runs(chain, registry, phase):
    """One execution call for every run.  Returns (chain, events, new_index)."""
    n = chain.n
    runners, act, npause, hx, hy, targets = plan_execute(chain)
    if runners.size == 0:
        return chain, [], np.arange(n, dtype=np.int64)
    work = chain.copy()
    work.tags["pause"][runners] = npause
    dx = np.zeros(n, np.int64)
    dy = np.zeros(n, np.int64)
    a1 = runners[act == 1]
    dx[a1] = hx[act == 1]
    dy[a1] = hy[act == 1]
    moving = act > 0
    if moving.any():
        _move_tags(work, runners[moving], targets[moving])
    out, fusions, dropped, new_index = apply_moves(work, (dx, dy))
    events = []
    for rid in dropped:
        rec = registry.stop(rid, phase, "fusion")
        events.append(run_event("run_stop", rec, phase, -1, "fusion"))
    return out, events, new_index


def run_spans(chain):
    """(runner, next robot ahead) index pairs of every run, as arrays.

    This pair is what a run claims: the robot it sits on and the one it
    moves into next.  Sibling runs born at one corner share the robot
    behind them, so the behind robot is not part of the claim.
    """
    r = chain.runners()
    return r, (r + chain.tags["rdir"][r]) % chain.n


def lost_runs(chain):
    """Run ids whose runner no longer sits on a jog matching its hop side."""
    r = chain.runners()
    if r.size == 0:
        return set()
    n = chain.n
    t = chain.tags
    d = t["rdir"][r]
    hx, hy = t["hx"][r], t["hy"][r]
    bx = chain.xs[(r - d) % n] - chain.xs[r]
    by = chain.ys[(r - d) % n] - chain.ys[r]
    ex = chain.xs[(r + d) % n] - chain.xs[r]
    ey = chain.ys[(r + d) % n] - chain.ys[r]
    ok = (bx == hx) & (by == hy) & (np.abs(ex) + np.abs(ey) == 1) & (ex * hx + ey * hy == 0)
    return set(t["run_id"][r[~ok]].tolist())


def on_quasi_edge(chain, i):
    """The run at robot i is a clean bump: both levels continue straight."""
    n = chain.n
    t = chain.tags
    d = int(t["rdir"][i])
    p = [(int(chain.xs[(i + k * d) % n]), int(chain.ys[(i + k * d) % n])) for k in (-2, -1, 0, 1, 2)]
    ex, ey = p[3][0] - p[2][0], p[3][1] - p[2][1]
    hx, hy = int(t["hx"][i]), int(t["hy"][i])
    return (abs(ex) + abs(ey) == 1 and ex * hx + ey * hy == 0
            and p[1] == (p[2][0] + hx, p[2][1] + hy)
            and p[0] == (p[1][0] - ex, p[1][1] - ey)
            and p[4] == (p[3][0] + ex, p[3][1] + ey))


def _collision_stops(chain, C):
    """Run ids stopped by collision arbitration.

    Each run looks at the first run ahead within C+2 robots.  Runs that
    collide: the older one stops; of equal age, the rear one stops when
    both head the same way and both stop when they face each other without
    being partners (paired runs included, since two facing same-age
    paired runs that are not partners have both lost their partner to a
    merge already).  A paired run is only stopped by a younger paired run
    (its own pair has then merged long ago, by the nesting order); against
    a younger unpaired run the younger one stops.
    """
    runners, occ = _occupancy(chain)
    if runners.size < 2:
        return set()
    gid, gbad, hard = edge_arrays(chain)
    t = chain.tags
    d = t["rdir"][runners]
    slot, steps, same = kernels.scan_ahead(occ, gid, gbad, hard, runners, d, C + 2)
    birth = t["birth"][runners]
    rid = t["run_id"][runners]
    paired = t["paired"][runners]
    hx, hy = t["hx"][runners], t["hy"][runners]
    stop = set()
    for r in range(runners.size):
        o = int(slot[r])
        if o < 0:
            continue
        facing = d[o] != d[r]
        dist = int(steps[r]) - (2 if facing else 1)
        if not ((dist <= C and same[r]) or dist <= 0):
            continue
        partners = (facing and paired[r] and paired[o] and birth[r] == birth[o]
                    and hx[r] == hx[o] and hy[r] == hy[o])
        if partners:
            continue
        if birth[r] != birth[o]:
            old = r if birth[r] < birth[o] else o
            young = r + o - old
            # a paired run yields only to a younger paired run; an unpaired
            # younger run gives way to it instead
            if not paired[old] or paired[young]:
                stop.add(int(rid[old]))
            else:
                stop.add(int(rid[young]))
            continue
        if facing and paired[r] and paired[o]:
            # same-age paired runs of different pairs: both partners already merged
            stop.update((int(rid[r]), int(rid[o])))
            continue
        cand = [r] if not facing else [r, o]
        stop.update(int(rid[c]) for c in cand if not paired[c])
    return stop


def stop_runs(chain, registry, run_ids, phase, reason):
    events = []
    if not run_ids:
        return events
    rid = chain.tags["run_id"]
    idx = np.nonzero(np.isin(rid, sorted(run_ids)))[0]
    for i in idx.tolist():
        rec = registry.stop(int(rid[i]), phase, reason)
        events.append(run_event("run_stop", rec, phase, i, reason))
    _clear_tags(chain, idx)
    return events


def behind_robots(chain):
    """Mask of robots sitting right behind a runner (the upper corner of its jog)."""
    r = chain.runners()
    mask = np.zeros(chain.n, bool)
    mask[(r - chain.tags["rdir"][r]) % chain.n] = True
    return mask


def merge_filter(chain, runner_black=False):
    """Candidate filter for plan_merges.

    A module that would hop the robot behind a runner is skipped: runs are
    never merged from behind.  With ``runner_black`` only modules holding a
    runner among their blacks are kept (the cleanup merges).
    """
    n = chain.n
    tagged = chain.tags["run_id"] != NO_RUN
    behind = behind_robots(chain)

    def only(starts, ks):
        keep = np.ones(starts.size, bool)
        for j, (s, k) in enumerate(zip(starts.tolist(), ks.tolist())):
            blacks = (s + np.arange(k)) % n
            if behind[blacks].any():
                keep[j] = False
            elif runner_black:
                keep[j] = tagged[blacks].any()
        return keep

    return only


def runner_merge_plan(chain, kmax):
    """Merge plan restricted to modules that have a runner among their blacks."""
    return plan_merges(chain, kmax, merge_filter(chain, runner_black=True))


def cleanup_runs(chain, registry, phase, consts, merges=None):
    """Collision arbitration, then merges of runner-carrying patterns.

    Returns (chain, events, merge_events, new_index).  ``merges`` if given is a
    list receiving the applied MergeEvent objects.
    """
    work = chain.copy()
    events = stop_runs(work, registry, lost_runs(work), phase, "lost")
    stops = _collision_stops(work, consts.C)
    events += stop_runs(work, registry, stops, phase, "collision")
    n = work.n
    new_index = np.arange(n, dtype=np.int64)
    plan = runner_merge_plan(work, consts.K)
    merge_events = []
    if plan.acting.any():
        before = work
        work, merge_events, stopped, new_index = execute_plan(before, plan, phase, source="cleanup")
        for rid in stopped:
            i = int(np.nonzero(before.tags["run_id"] == rid)[0][0])
            rec = registry.stop(rid, phase, "merge")
            events.append(run_event("run_stop", rec, phase, i, "merge"))
    if merges is not None:
        merges.extend(merge_events)
    return work, events, merge_events, new_index


# ------------------------------------------------------------ initialization

def _alternating(turn, idx):
    v = turn[idx]
    return bool(np.all(np.abs(v) == 1) and np.all(v[1:] == -v[:-1]))


def plan_init(chain):
    """Robots that hop and runs that start at this initialization.

    Returns (dx, dy, starts) with starts a list of (runner index, direction,
    hop side) in post-hop indexing (hops never fuse robots).
    """
    n = chain.n
    dx = np.zeros(n, np.int64)
    dy = np.zeros(n, np.int64)
    starts = []
    if n < 8:
        return dx, dy, starts
    turn = kernels.turns(chain.xs, chain.ys)
    mask = turn != 0
    if mask.all() or not mask.any():
        return dx, dy, starts
    tagged = chain.tags["run_id"] != NO_RUN
    xs, ys = chain.xs, chain.ys
    first = int(np.argmin(mask))
    heads = np.nonzero(mask & ~np.roll(mask, 1))[0]
    heads = sorted(heads.tolist(), key=lambda a: (a - first) % n)
    for a in heads:
        t = 0
        while mask[(a + t) % n]:
            t += 1
        b = (a + t - 1) % n
        if t == 1:
            c = a
            if abs(int(turn[c])) != 1:
                continue
            near = [(c + k) % n for k in range(-2, 3)]
            if tagged[near].any():
                continue
            p, q = (c - 1) % n, (c + 1) % n
            ux, uy = int(xs[p] - xs[c]), int(ys[p] - ys[c])
            vx, vy = int(xs[q] - xs[c]), int(ys[q] - ys[c])
            dx[c], dy[c] = ux + vx, uy + vy
            starts.append((q, 1, (ux, uy)))
            starts.append((p, -1, (vx, vy)))
        elif t >= 3:
            if _alternating(turn, [(a + j) % n for j in range(3)]):
                h = (int(xs[(a + 1) % n] - xs[a]), int(ys[(a + 1) % n] - ys[a]))
                starts.append((a, -1, h))
            if _alternating(turn, [(b - j) % n for j in range(3)]):
                h = (int(xs[(b - 1) % n] - xs[b]), int(ys[(b - 1) % n] - ys[b]))
                starts.append((b, 1, h))
    return dx, dy, starts


def _jog(i, d, n):
    return {i % n, (i + d) % n}


def initialize_runs(chain, registry, phase, uid=None):
    """Start runs at every stairway end.  Returns (chain, events, new_index)."""
    n = chain.n
    dx, dy, starts = plan_init(chain)
    if not starts:
        return chain, [], np.arange(n, dtype=np.int64)
    work, _, _, new_index = apply_moves(chain, (dx, dy))
    events = []
    t = work.tags
    old = {}
    for i in np.nonzero(t["run_id"] != NO_RUN)[0].tolist():
        d = int(t["rdir"][i])
        for k in _jog(i, d, work.n):
            old.setdefault(k, []).append(int(t["run_id"][i]))
    claim = {}
    for s, (i, d, _) in enumerate(starts):
        for k in _jog(i, d, work.n):
            claim.setdefault(k, []).append(s)
    dead_new = set()
    dead_old = set()
    for k, ss in claim.items():
        if len(ss) > 1:
            dead_new.update(ss)
        dead_old.update(old.get(k, []))
    events += stop_runs(work, registry, dead_old, phase, "init-overlap")
    new = []
    for s, (i, d, h) in enumerate(starts):
        u = int(uid[i]) if uid is not None else i
        rec = registry.new_run(phase, d, h, u)
        events.append(run_event("run_start", rec, phase, i))
        if s in dead_new:
            registry.stop(rec.run_id, phase, "init-overlap")
            events.append(run_event("run_stop", rec, phase, i, "init-overlap"))
            continue
        t["run_id"][i] = rec.run_id
        t["birth"][i] = phase
        t["rdir"][i] = d
        t["pause"][i] = 0
        t["hx"][i], t["hy"][i] = h
        new.append(rec.run_id)
    events += register_pairs(work, registry, phase, new)
    return work, events, new_index


def is_good_pair(chain, i, j):
    """Runs tagged at robots i and j form a good pair.

    They must face each other, hop toward the same side (so one jog mirrors
    the other across an axis orthogonal to the edge) and share one quasi
    edge.  Other runs between them are ignored.
    """
    n = chain.n
    t = chain.tags
    if t["run_id"][i] == NO_RUN or t["run_id"][j] == NO_RUN or i == j:
        return False
    di, dj = int(t["rdir"][i]), int(t["rdir"][j])
    if di != -dj:
        return False
    if (t["hx"][i], t["hy"][i]) != (t["hx"][j], t["hy"][j]):
        return False
    occ = np.full(n, -1, np.int64)
    occ[i], occ[j] = 0, 1
    gid, gbad, hard = edge_arrays(chain)
    slot, _, same = kernels.scan_ahead(occ, gid, gbad, hard, np.array([i], np.int64),
                                       np.array([di], np.int64), n)
    return int(slot[0]) == 1 and bool(same[0])


def register_pairs(chain, registry, phase, new_ids):
    """Register good pairs among runs born this phase."""
    events = []
    if len(new_ids) < 2:
        return events
    t = chain.tags
    where = {int(t["run_id"][i]): i for i in np.nonzero(t["run_id"] != NO_RUN)[0].tolist()}
    fresh = set(new_ids)
    # older runs in between do not matter: pairs nest around them
    runners = np.array(sorted(where[a] for a in new_ids if a in where), np.int64)
    occ = np.full(chain.n, -1, np.int64)
    occ[runners] = np.arange(runners.size)
    gid, gbad, hard = edge_arrays(chain)
    for a in new_ids:
        i = where.get(a)
        if i is None or t["rdir"][i] != 1:
            continue
        slot, _, same = kernels.scan_ahead(occ, gid, gbad, hard, np.array([i], np.int64),
                                           np.array([1], np.int64), chain.n)
        if slot[0] < 0 or not same[0]:
            continue
        j = int(runners[slot[0]])
        b = int(t["run_id"][j])
        if b not in fresh or t["rdir"][j] != -1 or (t["hx"][i], t["hy"][i]) != (t["hx"][j], t["hy"][j]):
            continue
        pid = len(registry.pairs)
        registry.pairs[pid] = GoodPair(pid, (a, b), phase)
        registry.records[a].pair = pid
        registry.records[b].pair = pid
        t["paired"][i] = 1
        t["paired"][j] = 1
        events.append({"kind": "good_pair", "pair": pid, "phase": phase,
                       "runs": [a, b], "indices": [i, j]})
    return events
