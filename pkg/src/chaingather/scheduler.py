"""Lock-step driver: phases, constants, gathering loop and live invariant checks."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .merge import execute_plan, gathered, plan_merges
from .runs import (RunRegistry, cleanup_runs, execute_runs, initialize_runs,
                   edge_arrays, merge_filter, on_quasi_edge, stop_runs)

SLACK = 8


class InvalidProfile(ValueError):
    pass


@dataclass(frozen=True)
class Constants:
    C: int = 8
    K: int = 12
    L: int = 32
    V: int = 64
    D_init: int = 3

    def problems(self):
        out = []
        if not self.C + 4 > self.K - 1:
            out.append(f"C+4 = {self.C + 4} must exceed K-1 = {self.K - 1}")
        if not self.L > self.K + SLACK:
            out.append(f"L = {self.L} must exceed K+{SLACK} = {self.K + SLACK}")
        if not self.L > self.C + SLACK:
            out.append(f"L = {self.L} must exceed C+{SLACK} = {self.C + SLACK}")
        need = 2 * max(self.K, self.C, self.D_init) + 4
        if self.V < need:
            out.append(f"V = {self.V} must be at least {need}")
        if min(self.C, self.K, self.L) < 1:
            out.append("C, K and L must be positive")
        return out

    def check(self):
        bad = self.problems()
        if bad:
            raise InvalidProfile("; ".join(bad))
        return self

    def as_dict(self):
        return {"C": self.C, "K": self.K, "L": self.L, "V": self.V, "D_init": self.D_init}


PROFILES = {
    "default": Constants(8, 12, 32, 64, 3),
    "stress": Constants(12, 16, 48, 96, 3),
}


def constants_profile(name=None, **override):
    """Named constants profile, optionally with fields replaced; always validated.

    ``name=None`` reads ``CHAINGATHER_PROFILE`` and falls back to default.
    """
    if name is None:
        name = os.environ.get("CHAINGATHER_PROFILE", "default")
    if name not in PROFILES:
        raise InvalidProfile(f"unknown profile {name!r}")
    base = PROFILES[name].as_dict()
    base.update(override)
    return Constants(**base).check()


def carry_uid(uid, new_index):
    """Persistent robot ids after a fusion; a group keeps its lowest-index id."""
    new_index = np.asarray(new_index)
    if new_index.size == uid.size and (new_index == np.arange(uid.size)).all():
        return uid
    m = int(new_index.max()) + 1
    first = np.full(m, uid.size, np.int64)
    np.minimum.at(first, new_index, np.arange(uid.size))
    return uid[first]


@dataclass
class SimState:
    chain: object
    consts: Constants
    registry: RunRegistry = field(default_factory=RunRegistry)
    phase: int = 0
    uid: np.ndarray = None
    event_log: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    audit: bool = True
    merge_count: int = 0
    window_hits: set = field(default_factory=set)

    def __post_init__(self):
        if self.uid is None:
            self.uid = np.arange(self.chain.n, dtype=np.int64)

    @property
    def round(self):
        return self.phase


# ---------------------------------------------------------------- audits

def _jog_overlap(chain):
    r = chain.runners()
    if r.size < 2:
        return []
    n = chain.n
    ahead = (r + chain.tags["rdir"][r]) % n
    cnt = np.bincount(np.concatenate([r, ahead]), minlength=n)
    return np.nonzero(cnt > 1)[0].tolist()


def _pair_indices(state, pair):
    t = state.chain.tags
    a, b = pair.runs
    ia = np.nonzero(t["run_id"] == a)[0]
    ib = np.nonzero(t["run_id"] == b)[0]
    if ia.size == 0 or ib.size == 0:
        return None
    return int(ia[0]), int(ib[0])


def _subchain_mask(n, i, j, pad=0):
    mask = np.zeros(n, bool)
    length = (j - i) % n + 1 + 2 * pad
    mask[(i - pad + np.arange(min(length, n))) % n] = True
    return mask


def _open_pairs(state):
    return [p for p in state.registry.active_pairs() if p.merged is None]


def _check_quasi_edges(state, where):
    chain = state.chain
    pairs = _open_pairs(state)
    if not pairs or chain.n < 3:
        return
    gid, gbad, hard = edge_arrays(chain)
    n = chain.n
    for p in pairs:
        ij = _pair_indices(state, p)
        if ij is None:
            continue
        i, j = ij
        inner = (i + 1 + np.arange((j - i - 1) % n)) % n
        bad = (gbad[inner] & (gid[inner] != gid[i]) & (gid[inner] != gid[j])) | hard[inner]
        if bad.any():
            state.violations.append({"check": "quasi_edge", "phase": state.phase, "pair": p.pair_id,
                                     "where": where, "robot": int(inner[np.argmax(bad)])})


def _check_disjoint(state, where):
    clash = _jog_overlap(state.chain)
    if clash:
        state.violations.append({"check": "node_disjoint", "phase": state.phase,
                                 "where": where, "robots": clash})


def _check_nesting(state, new_pairs):
    n = state.chain.n
    masks = {}
    for p in _open_pairs(state):
        ij = _pair_indices(state, p)
        if ij is not None:
            masks[p.pair_id] = _subchain_mask(n, *ij)
    for pid in new_pairs:
        if pid not in masks:
            continue
        m = masks[pid]
        for qid, mq in masks.items():
            if qid == pid or state.registry.pairs[qid].phase >= state.registry.pairs[pid].phase:
                continue
            inter = m & mq
            if inter.any() and not (inter == mq).all():
                state.violations.append({"check": "nesting", "phase": state.phase,
                                         "pair": pid, "older": qid})


# ----------------------------------------------------------------- phases

def _annotate(state, before, merge_events):
    """Link merges to good pairs and flag merges reaching behind a runner."""
    n = before.n
    t = before.tags
    reg = state.registry
    out = []
    for ev in merge_events:
        d = ev.to_dict()
        blacks = set(ev.span[1:-1])
        span = set(ev.span)
        pairs = []
        behind = []
        inside = True
        for rid in ev.runs:
            where = np.nonzero(t["run_id"] == rid)[0]
            if where.size == 0:
                continue
            i = int(where[0])
            if (i - int(t["rdir"][i])) % n in blacks and on_quasi_edge(before, i):
                behind.append(rid)
            pid = reg.pair_of(rid)
            if pid is None or reg.pairs[pid].merged is not None or pid in pairs:
                continue
            pairs.append(pid)
            a, b = reg.pairs[pid].runs
            ia = np.nonzero(t["run_id"] == a)[0]
            ib = np.nonzero(t["run_id"] == b)[0]
            if ia.size and ib.size:
                mask = _subchain_mask(n, int(ia[0]), int(ib[0]), pad=1)
                inside = inside and bool(mask[sorted(span)].all())
        d["event"] = state.merge_count
        d["pairs"] = pairs
        d["inside"] = inside
        d["behind"] = behind
        for pid in pairs:
            reg.pairs[pid].merged = state.merge_count
        state.merge_count += 1
        out.append(d)
    return out


def _close_pairs(state):
    for p in state.registry.active_pairs():
        a, b = p.runs
        if not state.registry.records[a].active and not state.registry.records[b].active:
            p.closed = True


def _apply(state, chain, new_index):
    state.uid = carry_uid(state.uid, new_index)
    state.chain = chain


def _cleanup(state, events, where):
    before = state.chain
    chain, evs, merges, new_index = cleanup_runs(before, state.registry, state.phase, state.consts)
    events += evs
    events += _annotate(state, before, merges)
    _apply(state, chain, new_index)
    if state.audit:
        _check_disjoint(state, where)


def merge_subphase_state(state, events):
    before = state.chain
    plan = plan_merges(before, state.consts.K, merge_filter(before))
    if not plan.acting.any():
        return
    chain, merges, stopped, new_index = execute_plan(before, plan, state.phase)
    for rid in stopped:
        i = int(np.nonzero(before.tags["run_id"] == rid)[0][0])
        rec = state.registry.stop(rid, state.phase, "merge")
        events.append({"kind": "run_stop", "run": rid, "phase": state.phase, "index": i,
                       "birth": rec.birth, "direction": rec.direction,
                       "hop_side": list(rec.hop_side), "reason": "merge"})
    events += _annotate(state, before, merges)
    _apply(state, chain, new_index)


def step_phase(state):
    """One phase: runs move, then every L-th phase merge and initialization."""
    c = state.consts
    events = []
    n0 = state.chain.n
    if gathered(state.chain, c.K):
        state.event_log.append(events)
        state.phase += 1
        return state
    if state.chain.n >= 3:
        chain, evs, new_index = execute_runs(state.chain, state.registry, state.phase)
        events += evs
        _apply(state, chain, new_index)
        _cleanup(state, events, "execute")
        if state.phase % c.L == 0:
            merge_subphase_state(state, events)
            _cleanup(state, events, "merge")
            chain, evs, new_index = initialize_runs(state.chain, state.registry, state.phase, state.uid)
            events += evs
            _apply(state, chain, new_index)
            if state.audit:
                _check_disjoint(state, "init")
                fresh = [e["pair"] for e in evs if e["kind"] == "good_pair"]
                _check_nesting(state, fresh)
            _cleanup(state, events, "init")
        if state.audit:
            _check_quasi_edges(state, "phase")
    _close_pairs(state)
    if state.chain.n > n0:
        state.violations.append({"check": "monotone", "phase": state.phase})
    if any(e["kind"] in ("merge", "good_pair") for e in events):
        state.window_hits.add(state.phase // c.L)
    state.event_log.append(events)
    state.phase += 1
    return state


@dataclass
class GatheringReport:
    gathered_phase: int | None
    final_n: int
    initial_n: int
    phases: int
    timeout: bool
    events: list
    invariant_violations: list
    merges: int
    good_pairs: int
    runs: int

    def summary(self):
        return {"gathered_phase": self.gathered_phase, "initial_n": self.initial_n,
                "final_n": self.final_n, "phases": self.phases, "timeout": self.timeout,
                "merges": self.merges, "good_pairs": self.good_pairs, "runs": self.runs,
                "violations": len(self.invariant_violations)}


def _progress(state, gathered_at):
    L = state.consts.L
    last = (gathered_at if gathered_at is not None else state.phase) // L
    for w in range(last):
        if w not in state.window_hits:
            state.violations.append({"check": "progress", "window": [w * L, (w + 1) * L - 1]})


def finalize(state, max_phases, on_phase=None, lead=()):
    """Plumbing beyond the gathering criterion: apply every merge (no type
    bound) each phase until at most two robots remain.

    ``lead`` events are prepended to the first finalize phase's events."""
    lead = list(lead)
    while state.chain.n > 2 and state.phase < max_phases:
        events, lead = lead, []
        before = state.chain
        ids = before.runners()
        if ids.size:
            events += stop_runs(before, state.registry,
                                set(before.tags["run_id"][ids].tolist()), state.phase, "finalize")
        plan = plan_merges(before, before.n)
        if not plan.acting.any() and plan.starts.size:
            # every module blocked (e.g. a symmetric box): act on the smallest one alone
            pick = int(np.argmin(plan.ks))
            plan = plan_merges(before, before.n, lambda s, k: np.arange(s.size) == pick)
        if not plan.acting.any():
            lead = events
            break
        chain, merges, _, new_index = execute_plan(before, plan, state.phase, source="finalize")
        events += [m.to_dict() for m in merges]
        _apply(state, chain, new_index)
        state.event_log.append(events)
        if on_phase is not None:
            on_phase(state.phase, before, events)
        state.phase += 1
    return lead


def run_to_gathering(chain0, consts=None, max_phases=None, audit=True, finalize_flag=False,
                     on_phase=None):
    """Iterate phases until the chain fits a (K-1)x(K-1) box or time runs out.

    ``on_phase(phase, chain_at_start, events)`` sees every phase, including
    the gathering phase (its events start with a ``gathered`` event).
    """
    consts = consts or constants_profile("default")
    if max_phases is None:
        max_phases = 64 * chain0.n + 1024
    state = SimState(chain0.copy(), consts, audit=audit)
    gathered_at = None
    while True:
        if gathered(state.chain, consts.K):
            gathered_at = state.phase
            break
        if state.phase >= max_phases:
            break
        before = state.chain
        step_phase(state)
        if on_phase is not None:
            on_phase(state.phase - 1, before, state.event_log[-1])
    if audit:
        _progress(state, gathered_at)
        from .oracle import audit_events
        state.violations += audit_events(state.event_log).violations
    gathered_chain = state.chain
    if gathered_at is not None:
        lead = [{"kind": "gathered", "phase": gathered_at}]
        if finalize_flag:
            lead = finalize(state, max_phases + 4 * chain0.n, on_phase, lead)
        if lead and on_phase is not None:
            on_phase(state.phase, state.chain, lead)
    reg = state.registry
    rep = GatheringReport(gathered_at, state.chain.n, chain0.n, state.phase, gathered_at is None,
                          state.event_log, state.violations, state.merge_count,
                          len(reg.pairs), reg.next_id)
    rep.state = state
    rep.gathered_chain = gathered_chain
    return rep
