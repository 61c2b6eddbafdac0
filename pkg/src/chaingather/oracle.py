"""Independent checks: exhaustive small-chain enumeration, lemma verdicts and log audits.

Nothing here reuses the engine's decomposition or matching code paths
where an independent recomputation is cheap; lemma checks scan turn
sequences directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .chain import ChainError, build_chain

NMAX_BUDGET = 14

# dx, dy per step code: N, E, S, W
_DX = np.array([0, 1, 0, -1], np.int64)
_DY = np.array([1, 0, -1, 0], np.int64)


class BudgetExceeded(ValueError):
    pass


@dataclass
class Verdict:
    lemma: str
    passed: bool
    detail: str = ""
    counterexample: object = None

    def __bool__(self):
        return self.passed


@dataclass
class AuditReport:
    violations: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    def counts(self):
        out = {}
        for v in self.violations:
            out[v["check"]] = out.get(v["check"], 0) + 1
        return out


# ------------------------------------------------------------ event audit

def _flat(event_log):
    for phase_events in event_log:
        for ev in phase_events:
            yield ev


def audit_events(event_log):
    """Survival, injectivity, containment and direction checks over a run's events.

    ``event_log`` is a list (per phase) of event dicts as produced by the
    scheduler.  Node-disjointness, nesting and quasi-edge checks need the
    chain state and are performed live by the scheduler.
    """
    rep = AuditReport()
    pair_of = {}
    merged = {}
    claimed = {}
    n_merge = 0
    for ev in _flat(event_log):
        kind = ev.get("kind")
        if kind == "good_pair":
            for r in ev["runs"]:
                pair_of[r] = ev["pair"]
        elif kind == "merge":
            n_merge += 1
            pairs = ev.get("pairs", [])
            if len(pairs) > 1:
                rep.violations.append({"check": "unique_merge", "event": ev.get("event"),
                                       "pairs": list(pairs)})
            for p in pairs:
                if p in merged:
                    rep.violations.append({"check": "unique_merge", "event": ev.get("event"), "pair": p})
                merged[p] = ev.get("event")
                if ev.get("event") in claimed and claimed[ev.get("event")] != p:
                    rep.violations.append({"check": "unique_merge", "event": ev.get("event"), "pair": p})
                claimed[ev.get("event")] = p
            if pairs and not ev.get("inside", True):
                rep.violations.append({"check": "merge_inside", "event": ev.get("event"), "pairs": pairs})
            if ev.get("behind"):
                rep.violations.append({"check": "merge_from_behind", "event": ev.get("event"),
                                       "runs": list(ev["behind"])})
        elif kind == "run_stop":
            p = pair_of.get(ev["run"])
            if p is not None and p not in merged and ev.get("reason") != "merge":
                rep.violations.append({"check": "pair_survival", "run": ev["run"], "pair": p,
                                       "phase": ev["phase"], "reason": ev.get("reason")})
    rep.checked = {"merges": n_merge, "pairs": len(set(pair_of.values()))}
    return rep


# ------------------------------------------------------------ enumeration

@njit
def _canonical(code, n, buf):
    """Smallest base-4 value over 8 symmetries and n cyclic shifts."""
    best = -1
    for sym in range(8):
        rot = sym % 4
        flip = sym >= 4
        for i in range(n):
            c = code[i]
            if flip:
                c = (4 - c) % 4
            buf[i] = (c + rot) % 4
        for s in range(n):
            v = 0
            for i in range(n):
                v = v * 4 + buf[(s + i) % n]
            if best < 0 or v < best:
                best = v
    return best


@njit
def _closed_walks(n, degenerate):
    """Canonical representatives of closed n-step walks, as base-4 values."""
    out = np.empty(1024, np.int64)
    cnt = 0
    code = np.zeros(n, np.int64)
    buf = np.zeros(n, np.int64)
    dx = np.array([0, 1, 0, -1])
    dy = np.array([1, 0, -1, 0])
    xs = np.zeros(n + 1, np.int64)
    ys = np.zeros(n + 1, np.int64)
    depth = 0
    code[0] = -1
    while depth >= 0:
        code[depth] += 1
        if code[depth] > 3:
            depth -= 1
            continue
        c = code[depth]
        if not degenerate and depth > 0 and c == (code[depth - 1] + 2) % 4:
            continue
        x = xs[depth] + dx[c]
        y = ys[depth] + dy[c]
        left = n - depth - 1
        if abs(x) + abs(y) > left:
            continue
        xs[depth + 1] = x
        ys[depth + 1] = y
        if depth + 1 < n:
            depth += 1
            code[depth] = -1
            continue
        if not degenerate and code[0] == (code[n - 1] + 2) % 4:
            continue
        v = 0
        for i in range(n):
            v = v * 4 + code[i]
        if _canonical(code, n, buf) == v:
            if cnt == out.shape[0]:
                grown = np.empty(2 * cnt, np.int64)
                grown[:cnt] = out
                out = grown
            out[cnt] = v
            cnt += 1
    return out[:cnt]


_LETTERS = "NESW"


def decode(value, n):
    """Step letters of a base-4 walk value."""
    digits = []
    for _ in range(n):
        digits.append(_LETTERS[value % 4])
        value //= 4
    return digits[::-1]


def closed_walk_codes(n, degenerate=True):
    if n < 4 or n % 2:
        return np.zeros(0, np.int64)
    return _closed_walks(n, degenerate)


def enumerate_small_chains(nmax, degenerate=True, nmin=4):
    """Every closed walk of length nmin..nmax once up to the 8 grid symmetries
    and cyclic shifts.

    ``degenerate=False`` drops walks with an immediate reversal (a step
    followed by its opposite), which leaves only genuine polygons (possibly
    self-intersecting).
    """
    if nmax > NMAX_BUDGET:
        raise BudgetExceeded(f"nmax = {nmax} exceeds the budget of {NMAX_BUDGET}")
    for n in range(max(nmin, 4), nmax + 1):
        for v in closed_walk_codes(n, degenerate).tolist():
            yield build_chain(decode(v, n))


def chain_counts(nmax, degenerate=True):
    if nmax > NMAX_BUDGET:
        raise BudgetExceeded(f"nmax = {nmax} exceeds the budget of {NMAX_BUDGET}")
    return {n: int(closed_walk_codes(n, degenerate).size) for n in range(4, nmax + 1, 2)}


# ---------------------------------------------------------------- lemmas

LEMMAS = ("decomposition_total", "samesign_vm_pair", "merge_progress", "goodpair_after_init")

_VEC = {(0, 1): 0, (1, 0): 1, (0, -1): 2, (-1, 0): 3}


def _turn_letters(chain):
    """Turn at each robot from raw coordinates, without the kernels."""
    pts = chain.position_list()
    n = len(pts)
    codes = []
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        codes.append(_VEC.get((b[0] - a[0], b[1] - a[1])))
    out = []
    for i in range(n):
        p, q = codes[i - 1], codes[i]
        if p is None or q is None:
            out.append("D")
        else:
            out.append({0: "S", 1: "R", 2: "U", 3: "L"}[(q - p) % 4])
    return out


def _turn_runs(letters):
    """Maximal cyclic runs of turning robots as (first index, letters)."""
    n = len(letters)
    if all(c != "S" for c in letters):
        return None
    start = letters.index("S")
    runs = []
    cur = None
    for k in range(1, n + 1):
        i = (start + k) % n
        if letters[i] == "S":
            if cur:
                runs.append(cur)
            cur = None
        elif cur is None:
            cur = (i, [letters[i]])
        else:
            cur[1].append(letters[i])
    return runs


def _has_small_merge(chain, kmax):
    from .shape import is_mergeless
    return not is_mergeless(chain, kmax)


def _decomposition_total(chain):
    from .shape import NotMergeless, coverage, decompose
    letters = _turn_letters(chain)
    runs = _turn_runs(letters)
    if runs is None or any(c in "UD" for c in letters):
        return Verdict("decomposition_total", False, "no straight robot or a reversal", chain)
    expect = []
    for a, seq in runs:
        if any(seq[j] == seq[j + 1] for j in range(len(seq) - 1)):
            return Verdict("decomposition_total", False, "same-direction turns", chain)
        t = len(seq)
        expect.append(("VM" if t % 2 else "EM", t // 2, t))
    try:
        mods = decompose(chain)
    except NotMergeless as exc:
        return Verdict("decomposition_total", False, str(exc), chain)
    got = [(m.kind, m.height, m.turns) for m in mods if m.turns > 0]
    if sorted(got) != sorted(expect):
        return Verdict("decomposition_total", False, f"modules {got} != turn runs {expect}", chain)
    n = chain.n
    cov = coverage(mods, n)
    if (cov < 1).any():
        return Verdict("decomposition_total", False, "robot left uncovered", chain)
    for m1, m2 in zip(mods, mods[1:] + mods[:1]):
        if len(mods) > 1 and len(set(m1.indices(n)) & set(m2.indices(n))) < 3:
            return Verdict("decomposition_total", False, f"{m1.label} and {m2.label} not glued", chain)
    return Verdict("decomposition_total", True)


def _samesign_vm_pair(chain):
    letters = _turn_letters(chain)
    runs = _turn_runs(letters)
    if runs is None:
        return Verdict("samesign_vm_pair", False, "no straight robot", chain)
    signs = []
    for _, seq in runs:
        if len(seq) % 2:
            signs.append(seq.count("L") - seq.count("R"))
    for j in range(len(signs)):
        if signs[j] * signs[(j + 1) % len(signs)] > 0 and len(signs) > 1:
            return Verdict("samesign_vm_pair", True)
    return Verdict("samesign_vm_pair", False, f"vertex signs {signs}", chain)


def _merge_progress(chain, kmax):
    from .merge import merge_subphase
    n0 = chain.n
    try:
        out, _ = merge_subphase(chain, kmax=kmax)
    except ChainError as exc:
        return Verdict("merge_progress", False, f"broken: {exc}", chain)
    w, h = out.bbox()
    w0, h0 = chain.bbox()
    if out.n < n0 or (max(w0, h0) <= kmax - 1):
        return Verdict("merge_progress", True)
    return Verdict("merge_progress", False, f"count {n0} -> {out.n}, box {w0}x{h0}", chain)


def _goodpair_after_init(chain):
    from .runs import RunRegistry, initialize_runs
    reg = RunRegistry()
    try:
        out, _, _ = initialize_runs(chain, reg, 0)
    except ChainError as exc:
        return Verdict("goodpair_after_init", False, f"broken: {exc}", chain)
    t = out.tags
    n = out.n
    letters = _turn_letters(out)
    tagged = [i for i in range(n) if t["run_id"][i] >= 0]
    for i in tagged:
        if t["rdir"][i] != 1:
            continue
        for j in tagged:
            if t["rdir"][j] != -1 or (t["hx"][i], t["hy"][i]) != (t["hx"][j], t["hy"][j]):
                continue
            inner = [(i + k) % n for k in range(1, (j - i) % n)]
            if _clean_between(letters, inner, i, j):
                return Verdict("goodpair_after_init", True)
    return Verdict("goodpair_after_init", False, f"{len(tagged)} runs, no mirrored facing pair", chain)


def _clean_between(letters, inner, i, j):
    """Only straight robots and two-turn jogs between the runners' own stairs."""
    n = len(letters)
    k = 0
    while k < len(inner) and letters[inner[k]] != "S":
        k += 1
    end = len(inner)
    while end > k and letters[inner[end - 1]] != "S":
        end -= 1
    mid = inner[k:end]
    q = 0
    while q < len(mid):
        if letters[mid[q]] == "S":
            q += 1
            continue
        r = q
        while r < len(mid) and letters[mid[r]] != "S":
            r += 1
        seq = [letters[x] for x in mid[q:r]]
        if len(seq) != 2 or seq[0] == seq[1] or "U" in seq or "D" in seq:
            return False
        q = r
    return n > 0


def check_lemma(chain, lemma_id, kmax=12):
    """Verdict for one lemma on one chain, recomputed independently of the engine."""
    if lemma_id == "decomposition_total":
        return _decomposition_total(chain)
    if lemma_id == "samesign_vm_pair":
        return _samesign_vm_pair(chain)
    if lemma_id == "merge_progress":
        return _merge_progress(chain, kmax)
    if lemma_id == "goodpair_after_init":
        return _goodpair_after_init(chain)
    raise ValueError(f"unknown lemma {lemma_id!r}")


@dataclass
class SweepResult:
    nmax: int
    kmax: int
    chains: int
    mergeless: int
    merge_configs: int
    failures: dict

    def counterexamples(self, lemma):
        return self.failures.get(lemma, [])

    @property
    def ok(self):
        return not any(self.failures.values())

    def summary(self):
        return {"nmax": self.nmax, "kmax": self.kmax, "chains": self.chains,
                "mergeless": self.mergeless, "merge_configs": self.merge_configs,
                "counterexamples": {k: len(v) for k, v in self.failures.items()}}


def sweep(nmax=12, kmax=12, lemmas=("decomposition_total", "samesign_vm_pair", "merge_progress"),
          degenerate=True):
    """Run lemma checks over every enumerated chain.

    Mergeless chains (no merge pattern of type <= kmax) go to the structural
    lemmas, all others to merge_progress.
    """
    failures = {lem: [] for lem in lemmas}
    total = mergeless = merges = 0
    for chain in enumerate_small_chains(nmax, degenerate):
        total += 1
        if _has_small_merge(chain, kmax):
            merges += 1
            if "merge_progress" in lemmas:
                v = check_lemma(chain, "merge_progress", kmax)
                if not v:
                    failures["merge_progress"].append(v)
            continue
        mergeless += 1
        for lem in lemmas:
            if lem == "merge_progress":
                continue
            v = check_lemma(chain, lem, kmax)
            if not v:
                failures[lem].append(v)
    return SweepResult(nmax, kmax, total, mergeless, merges, failures)


def audit_trace(events, traces=()):
    """Event-log audit plus a replay check of every given trace file."""
    from .trace import replay_check
    rep = audit_events(events)
    for path in traces:
        for problem in replay_check(path):
            rep.violations.append({"check": "replay", "trace": str(path), "detail": problem})
    return rep


# -------------------------------------------------------------- locality

def locality_audit(state, consts=None, radius=None, robots=None):
    """Compare every robot's engine decision with the one recomputed from its
    LocalView (radius V, or ``radius`` to provoke failures)."""
    from .chain import local_view
    from .local_rules import decisions, local_decision
    consts = consts or state.consts
    chain = state.chain
    radius = consts.V if radius is None else radius
    glob = decisions(chain, consts)
    bad = []
    for i in (range(chain.n) if robots is None else robots):
        loc = local_decision(local_view(chain, i, radius, state.phase), consts)
        if loc != glob[i]:
            bad.append({"robot": i, "engine": glob[i], "local": loc})
    detail = f"{len(bad)} of {chain.n} robots differ" if bad else f"{chain.n} robots agree"
    return Verdict("locality", not bad, detail, bad or None)
