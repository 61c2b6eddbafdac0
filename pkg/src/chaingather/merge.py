"""Merge subphase: choose which merge modules act and apply their hops together."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import NO_RUN, apply_moves
from .shape import match_arrays


@dataclass
class MergePlan:
    starts: np.ndarray
    ks: np.ndarray
    acting: np.ndarray          # bool per match
    blocked: np.ndarray
    suppressed: np.ndarray
    overlap: list               # per match: list of (other match, "type1"/"type2")
    dx: np.ndarray
    dy: np.ndarray

    def acting_indices(self):
        return np.nonzero(self.acting)[0]


@dataclass
class MergeEvent:
    merge_type: int
    span: tuple
    robots_removed: int
    phase: int
    action: str = "A3"
    source: str = "merge"
    runs: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {"kind": "merge", "merge_type": self.merge_type, "span": list(self.span),
                "robots_removed": self.robots_removed, "phase": self.phase,
                "action": self.action, "source": self.source, "runs": list(self.runs)}


def _robots(s, k, n):
    return [(s + j) % n for j in range(-1, k + 1)]


def plan_merges(chain, kmax, only=None):
    """Decide every robot's merge hop from the current snapshot.

    Among modules of one type, a module overlapping two others with the
    same overlap type is blocked (only the ends of such runs act).  A
    module is suppressed if it conflicts with an unblocked module of a
    smaller type.  Every acting black hops by its module's hop vector;
    a black of two overlapping acting modules adds both vectors.

    ``only`` optionally filters candidate modules (bool mask over matches).
    """
    n = chain.n
    starts, ks = match_arrays(chain, kmax)
    if only is not None:
        keep = only(starts, ks)
        starts, ks = starts[keep], ks[keep]
    m = len(starts)
    dx = np.zeros(n, np.int64)
    dy = np.zeros(n, np.int64)
    blocked = np.zeros(m, bool)
    suppressed = np.zeros(m, bool)
    overlap = [[] for _ in range(m)]
    if m == 0:
        return MergePlan(starts, ks, np.zeros(0, bool), blocked, suppressed, overlap, dx, dy)
    robots = [set(_robots(s, k, n)) for s, k in zip(starts.tolist(), ks.tolist())]
    blacks = [set((s + j) % n for j in range(k)) for s, k in zip(starts.tolist(), ks.tolist())]
    at = {}
    for j, s in enumerate(starts.tolist()):
        at.setdefault(s, []).append(j)
    crowd = []
    # same-type overlaps (the only way two same-type modules share >1 robot)
    for j, (s, k) in enumerate(zip(starts.tolist(), ks.tolist())):
        seen = set()
        for delta in range(-(k + 1), k + 2):
            for o in at.get((s + delta) % n, ()):
                if o == j or o in seen or ks[o] != k:
                    continue
                seen.add(o)
                shared = len(robots[j] & robots[o])
                if shared == 2:
                    overlap[j].append((o, "type1"))
                elif shared == 3:
                    overlap[j].append((o, "type2"))
                elif shared > 3 and o < j:
                    # only on tiny chains: the earlier module wins
                    crowd.append((j, o))
        t1 = sum(1 for _, t in overlap[j] if t == "type1")
        t2 = sum(1 for _, t in overlap[j] if t == "type2")
        blocked[j] = t1 >= 2 or t2 >= 2
    for j, o in crowd:
        if not (blocked[o] or suppressed[o]):
            suppressed[j] = True
    order = np.argsort(ks, kind="stable")
    for j in order.tolist():
        k = ks[j]
        for o in order.tolist():
            if ks[o] >= k:
                break
            if blocked[o] or suppressed[o]:
                continue
            if blacks[o] & robots[j] or blacks[j] & robots[o]:
                suppressed[j] = True
                break
    acting = ~blocked & ~suppressed
    for j in np.nonzero(acting)[0].tolist():
        s, k = int(starts[j]), int(ks[j])
        w0 = (s - 1) % n
        hx = int(chain.xs[w0] - chain.xs[s])
        hy = int(chain.ys[w0] - chain.ys[s])
        for b in blacks[j]:
            dx[b] += hx
            dy[b] += hy
    return MergePlan(starts, ks, acting, blocked, suppressed, overlap, dx, dy)


def _action_name(plan, j):
    partners = [t for o, t in plan.overlap[j] if plan.acting[o]]
    if "type1" in partners:
        return "A9"
    if "type2" in partners:
        return "A10"
    return "A3"


def execute_plan(chain, plan, phase, source="merge"):
    """Apply an acting merge plan.  Returns (chain, events, stopped run ids, new_index)."""
    n = chain.n
    acting = plan.acting_indices()
    if acting.size == 0:
        return chain, [], [], np.arange(n, dtype=np.int64)
    work = chain.copy()
    stopped = []
    rid = work.tags["run_id"]
    module_runs = []
    for j in acting.tolist():
        rs = _robots(int(plan.starts[j]), int(plan.ks[j]), n)
        runs = sorted({int(rid[i]) for i in rs if rid[i] != NO_RUN})
        module_runs.append(runs)
    for runs in module_runs:
        stopped.extend(runs)
    stopped = sorted(set(stopped))
    if stopped:
        clear = np.isin(rid, stopped)
        work.tags["run_id"] = np.where(clear, NO_RUN, rid)
        work.tags["birth"][clear] = -1
        work.tags["pause"][clear] = 0
    out, fusions, dropped, new_index = apply_moves(work, (plan.dx, plan.dy))
    owner = {}
    for pos, j in enumerate(acting.tolist()):
        for i in _robots(int(plan.starts[j]), int(plan.ks[j]), n):
            owner.setdefault(i, pos)
    removed = [0] * len(acting)
    for f in fusions:
        pos = min(owner.get(i, len(acting)) for i in f.members)
        if pos < len(acting):
            removed[pos] += len(f.members) - 1
    events = []
    for pos, j in enumerate(acting.tolist()):
        s, k = int(plan.starts[j]), int(plan.ks[j])
        events.append(MergeEvent(k, tuple(_robots(s, k, n)), removed[pos], phase,
                                 _action_name(plan, j), source, tuple(module_runs[pos])))
    return out, events, stopped, new_index


def merge_subphase(chain, matches=None, kmax=12, phase=0):
    """Run one merge subphase.  Returns (chain, list of MergeEvent)."""
    plan = plan_merges(chain, kmax)
    out, events, _, _ = execute_plan(chain, plan, phase)
    return out, events


def gathered(chain, kmax):
    w, h = chain.bbox()
    return w <= kmax - 1 and h <= kmax - 1
