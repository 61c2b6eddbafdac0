"""Closed chains of robots on the integer grid.

A chain is stored as parallel numpy arrays: positions ``xs, ys`` and the
per-robot run tag fields.  Index arithmetic is cyclic everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels

STEPS = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0), "stay": (0, 0), "0": (0, 0)}
TURN_LETTERS = {0: "S", 1: "L", -1: "R", 2: "U"}

NO_RUN = -1


class ChainError(Exception):
    pass


class NotClosed(ChainError):
    pass


class BadStep(ChainError):
    pass


class BrokenChain(ChainError):
    pass


class DegenerateStep(ChainError):
    pass


class Position(NamedTuple):
    x: int
    y: int


class RunTag(NamedTuple):
    run_id: int
    birth_phase: int
    direction: int
    hop_side: tuple
    pause: int


class RobotState(NamedTuple):
    pos: Position
    runner: RunTag | None
    pause: int


def _tag_arrays(n):
    return {
        "run_id": np.full(n, NO_RUN, np.int64),
        "birth": np.full(n, -1, np.int64),
        "rdir": np.zeros(n, np.int64),
        "pause": np.zeros(n, np.int64),
        "hx": np.zeros(n, np.int64),
        "hy": np.zeros(n, np.int64),
        "paired": np.zeros(n, np.int64),
    }


TAG_FIELDS = ("run_id", "birth", "rdir", "pause", "hx", "hy", "paired")


@dataclass
class ClosedChain:
    xs: np.ndarray
    ys: np.ndarray
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.int64)
        self.ys = np.asarray(self.ys, dtype=np.int64)
        if not self.tags:
            self.tags = _tag_arrays(len(self.xs))

    @classmethod
    def from_positions(cls, positions):
        pts = np.asarray(list(positions), dtype=np.int64).reshape(-1, 2)
        chain = cls(pts[:, 0].copy(), pts[:, 1].copy())
        chain.validate()
        return chain

    def __len__(self):
        return int(self.xs.shape[0])

    @property
    def n(self):
        return len(self)

    def copy(self):
        return ClosedChain(self.xs.copy(), self.ys.copy(), {k: v.copy() for k, v in self.tags.items()})

    def positions(self):
        return [Position(int(x), int(y)) for x, y in zip(self.xs, self.ys)]

    def position_list(self):
        return [[int(x), int(y)] for x, y in zip(self.xs, self.ys)]

    def robot(self, i):
        i %= self.n
        t = self.tags
        tag = None
        if t["run_id"][i] != NO_RUN:
            tag = RunTag(int(t["run_id"][i]), int(t["birth"][i]), int(t["rdir"][i]),
                         (int(t["hx"][i]), int(t["hy"][i])), int(t["pause"][i]))
        return RobotState(Position(int(self.xs[i]), int(self.ys[i])), tag, int(t["pause"][i]))

    def runners(self):
        return np.nonzero(self.tags["run_id"] != NO_RUN)[0]

    def validate(self):
        """Raise BrokenChain if some cyclic neighbour pair is more than one step apart."""
        if self.n < 2:
            return
        gap = np.abs(np.roll(self.xs, -1) - self.xs) + np.abs(np.roll(self.ys, -1) - self.ys)
        bad = np.nonzero(gap > 1)[0]
        if bad.size:
            i = int(bad[0])
            raise BrokenChain(f"robots {i} and {(i + 1) % self.n} are {int(gap[i])} apart")

    def bbox(self):
        return (int(self.xs.max() - self.xs.min()), int(self.ys.max() - self.ys.min()))

    def transformed(self, fn):
        """Apply a grid map ``fn(x, y) -> (x, y)`` to positions and hop sides."""
        out = self.copy()
        out.xs, out.ys = fn(self.xs, self.ys)
        zx = np.zeros_like(self.xs)
        ox, oy = fn(zx, zx)
        hx, hy = fn(self.tags["hx"], self.tags["hy"])
        out.tags["hx"], out.tags["hy"] = hx - ox, hy - oy
        return out


def parse_steps(text):
    letters = [tok.strip() for tok in text.replace("\n", ",").split(",") if tok.strip()]
    return letters


def build_chain(moves):
    """Chain whose i-th robot sits at the i-th prefix sum of ``moves``."""
    if isinstance(moves, str):
        moves = parse_steps(moves)
    moves = list(moves)
    if not moves:
        raise ValueError("empty move sequence")
    vec = []
    for m in moves:
        if isinstance(m, str):
            if m not in STEPS:
                raise BadStep(f"unknown step {m!r}")
            vec.append(STEPS[m])
        else:
            dx, dy = int(m[0]), int(m[1])
            if abs(dx) + abs(dy) > 1:
                raise BadStep(f"step {m!r} is longer than one")
            vec.append((dx, dy))
    d = np.asarray(vec, dtype=np.int64)
    total = d.sum(axis=0)
    if total[0] != 0 or total[1] != 0:
        raise NotClosed(f"displacement {tuple(int(v) for v in total)}")
    pts = np.vstack([[0, 0], np.cumsum(d, axis=0)[:-1]])
    return ClosedChain(pts[:, 0].copy(), pts[:, 1].copy())


def chain_to_steps(chain):
    dx = np.roll(chain.xs, -1) - chain.xs
    dy = np.roll(chain.ys, -1) - chain.ys
    names = {(0, 1): "N", (1, 0): "E", (0, -1): "S", (-1, 0): "W", (0, 0): "stay"}
    return ",".join(names[(int(a), int(b))] for a, b in zip(dx, dy))


@dataclass
class MergeFusion:
    """Robots ``members`` (pre-move indices) collapsed into ``survivor``."""

    survivor: int
    members: tuple
    new_index: int


def fuse(chain):
    """Fuse maximal groups of coincident neighbours.

    Returns (new chain, fusions, dropped run ids, old->new index map).
    The survivor keeps the
    lowest index of its group and keeps a run tag only if exactly one
    member carried one.
    """
    n = chain.n
    if n == 1:
        return chain.copy(), [], [], np.zeros(1, np.int64)
    new_index, m = kernels.fuse_groups(chain.xs, chain.ys)
    new_index = np.asarray(new_index, np.int64)
    m = int(m)
    if m == n:
        return chain.copy(), [], [], np.arange(n, dtype=np.int64)
    order = np.arange(n)
    first = np.full(m, n, np.int64)
    np.minimum.at(first, new_index, order)
    xs = chain.xs[first]
    ys = chain.ys[first]
    rid = chain.tags["run_id"]
    tagged = (rid != NO_RUN).astype(np.int64)
    ntag = np.bincount(new_index, weights=tagged, minlength=m).astype(np.int64)
    holder = np.full(m, -1, np.int64)
    tidx = np.nonzero(tagged)[0]
    holder[new_index[tidx]] = tidx
    tags = _tag_arrays(m)
    keep = ntag == 1
    src = holder[keep]
    for key in TAG_FIELDS:
        tags[key][keep] = chain.tags[key][src]
    dropped = sorted(int(rid[i]) for i in tidx if ntag[new_index[i]] > 1)
    fusions = []
    sizes = np.bincount(new_index, minlength=m)
    for g in np.nonzero(sizes > 1)[0]:
        members = tuple(int(i) for i in np.nonzero(new_index == g)[0])
        fusions.append(MergeFusion(int(first[g]), members, int(g)))
    out = ClosedChain(xs, ys, tags)
    return out, fusions, dropped, new_index


def apply_moves(chain, moves):
    """Apply all ``moves`` (index -> target position or displacement array pair)
    at once, then fuse coincident neighbours.

    ``moves`` may be a dict ``{i: (x, y)}`` of absolute targets.  Returns
    (chain, fusions, dropped run ids, new_index map).
    """
    n = chain.n
    out = chain.copy()
    if isinstance(moves, dict):
        for i, target in moves.items():
            x, y = int(target[0]), int(target[1])
            i = int(i) % n
            if abs(x - chain.xs[i]) + abs(y - chain.ys[i]) > 2:
                raise BrokenChain(f"robot {i} asked to move further than a diagonal hop")
            out.xs[i], out.ys[i] = x, y
    else:
        dx, dy = moves
        out.xs = chain.xs + dx
        out.ys = chain.ys + dy
    out.validate()
    return fuse(out)


def turn_sequence(chain):
    """Turn letter at every robot: L (+90), R (-90), S (straight), U (reversal)."""
    if chain.n < 3:
        raise DegenerateStep("turns need at least three robots")
    t = kernels.turns(chain.xs, chain.ys)
    if (t == kernels.DEGEN).any():
        i = int(np.nonzero(t == kernels.DEGEN)[0][0])
        raise DegenerateStep(f"robot {i} coincides with a neighbour")
    return [TURN_LETTERS[int(v)] for v in t]


def turning_sum(letters):
    """Signed total turning in degrees; None if a reversal occurs."""
    if "U" in letters:
        return None
    return 90 * (letters.count("L") - letters.count("R"))


@dataclass(frozen=True)
class LocalView:
    center: int
    offsets: tuple
    window: tuple
    tags: tuple
    round: int
    wraps: bool
    n: int

    def rel(self, k):
        """Relative position of the robot ``k`` steps along the chain."""
        if not self.sees(k):
            raise IndexError(f"offset {k} outside the view")
        return self.window[self._slot(k)]

    def tag(self, k):
        if not self.sees(k):
            raise IndexError(f"offset {k} outside the view")
        return self.tags[self._slot(k)]

    def _slot(self, k):
        lo = self.offsets[0]
        if self.wraps:
            k = (k - lo) % self.n + lo
        return k - lo

    def sees(self, k):
        return self.wraps or (self.offsets[0] <= k <= self.offsets[-1])


def local_view(chain, i, radius, round_=0):
    """Window of robots within chain distance ``radius`` of robot ``i``,
    positions relative to ``i`` and run tags with relative hop sides."""
    n = chain.n
    i %= n
    if 2 * radius + 1 >= n:
        lo = -((n - 1) // 2)
        hi = n - 1 + lo
        wraps = True
    else:
        lo, hi = -radius, radius
        wraps = False
    offsets = tuple(range(lo, hi + 1))
    idx = [(i + k) % n for k in offsets]
    cx, cy = int(chain.xs[i]), int(chain.ys[i])
    window = tuple((int(chain.xs[j]) - cx, int(chain.ys[j]) - cy) for j in idx)
    t = chain.tags
    tags = tuple(
        None if t["run_id"][j] == NO_RUN else
        (int(t["birth"][j]), int(t["rdir"][j]), int(t["pause"][j]), (int(t["hx"][j]), int(t["hy"][j])),
         int(t["paired"][j]))
        for j in idx
    )
    return LocalView(i, offsets, window, tags, round_, wraps, n)
