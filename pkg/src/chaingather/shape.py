"""Static chain geometry: module decomposition, quasi edges and merge patterns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .chain import ChainError

DIRS = {0: (0, 1), 1: (1, 0), 2: (0, -1), 3: (-1, 0)}


class NotMergeless(ChainError):
    pass


@dataclass(frozen=True)
class Module:
    kind: str          # "EM" or "VM"
    height: int
    span: tuple        # (first, last) robot index, inclusive, cyclic
    turn_dir: str      # "L", "R" or "none"
    stair_first_side: str
    turns: int

    def indices(self, n):
        a, b = self.span
        return [(a + j) % n for j in range((b - a) % n + 1)]

    @property
    def label(self):
        return f"{self.kind}({self.height})"


@dataclass(frozen=True)
class QuasiEdge:
    span: tuple
    orientation: str   # "horizontal" or "vertical"
    bumps: tuple       # spans of EM(1) modules


@dataclass(frozen=True)
class MergeMatch:
    merge_type: int
    black: tuple
    white: tuple
    hop_dir: tuple

    @property
    def start(self):
        return self.black[0]

    def robots(self):
        return (self.white[0],) + self.black + (self.white[1],)


def _letter(v):
    return {1: "L", -1: "R"}.get(int(v), "none")


def decompose(chain):
    """Cyclic list of edge and vertex modules of a mergeless chain."""
    n = chain.n
    if n < 3:
        raise NotMergeless("need at least three robots")
    turn = kernels.turns(chain.xs, chain.ys)
    if ((turn == kernels.UTURN) | (turn == kernels.DEGEN)).any():
        raise NotMergeless("reversal or coincident neighbours")
    same = (turn != 0) & (turn == np.roll(turn, -1))
    if same.any():
        raise NotMergeless(f"two consecutive turns in the same direction at robot {int(np.argmax(same))}")
    if (turn != 0).all():
        raise NotMergeless("no three collinear robots")
    mask = turn != 0
    starts = np.nonzero(mask & ~np.roll(mask, 1))[0]
    first = int(np.argmin(mask))
    starts = sorted(starts, key=lambda a: (a - first) % n)
    groups = []
    for a in starts:
        t = 0
        while mask[(a + t) % n]:
            t += 1
        groups.append((int(a), t))
    modules = []
    for g, (a, t) in enumerate(groups):
        b = (a + t - 1) % n
        kind = "VM" if t % 2 else "EM"
        net = int(turn[[(a + j) % n for j in range(t)]].sum())
        modules.append(Module(kind, t // 2, ((a - 2) % n, (b + 2) % n),
                              _letter(net) if kind == "VM" else "none", _letter(turn[a]), t))
        na, _ = groups[(g + 1) % len(groups)]
        gap = (na - b) % n
        if gap >= 3 or (len(groups) == 1 and gap == 0):
            modules.append(Module("EM", 0, (b, na), "none", "none", 0))
    return modules


def coverage(modules, n):
    """Number of modules covering each robot."""
    cnt = np.zeros(n, np.int64)
    for m in modules:
        cnt[m.indices(n)] += 1
    return cnt


def classify_vertices(modules, walk_orientation="forward"):
    """(module, "convex" | "concave") for every vertex module."""
    flip = walk_orientation == "backward"
    out = []
    for m in modules:
        if m.kind != "VM":
            continue
        convex = (m.turn_dir == "L") != flip
        out.append((m, "convex" if convex else "concave"))
    return out


def find_quasi_edges(modules, chain=None):
    """Maximal cyclic runs of EM(0)/EM(1) modules."""
    q = [m.kind == "EM" and m.height <= 1 for m in modules]
    if all(q) or not any(q):
        return []
    k = len(modules)
    start = q.index(False)
    edges = []
    run = []
    for j in range(1, k + 1):
        m = modules[(start + j) % k]
        if q[(start + j) % k]:
            run.append(m)
            continue
        if run:
            edges.append(run)
            run = []
    out = []
    for run in edges:
        span = (run[0].span[0], run[-1].span[1])
        orientation = "unknown"
        if chain is not None:
            i = (span[0] + 1) % chain.n
            dx = int(chain.xs[(i + 1) % chain.n] - chain.xs[i])
            orientation = "horizontal" if dx != 0 else "vertical"
        bumps = tuple(m.span for m in run if m.height == 1)
        out.append(QuasiEdge(span, orientation, bumps))
    return out


def match_arrays(chain, kmax):
    starts, ks = kernels.match_merges(chain.xs, chain.ys, kmax)
    return np.asarray(starts, np.int64), np.asarray(ks, np.int64)


def match_merge_modules(chain, kmax=12):
    """All merge modules of type 1..kmax, in cyclic order from robot 0."""
    n = chain.n
    starts, ks = match_arrays(chain, kmax)
    out = []
    for s, k in zip(starts.tolist(), ks.tolist()):
        black = tuple((s + j) % n for j in range(k))
        w0, w1 = (s - 1) % n, (s + k) % n
        hop = (int(chain.xs[w0] - chain.xs[s]), int(chain.ys[w0] - chain.ys[s]))
        out.append(MergeMatch(k, black, (w0, w1), hop))
    return out


def overlap_type(m1, m2):
    shared = len(set(m1.robots()) & set(m2.robots()))
    if m1 == m2:
        return "none"
    return {2: "type1", 3: "type2"}.get(shared, "none")


def is_mergeless(chain, kmax=12):
    return len(match_arrays(chain, kmax)[0]) == 0
