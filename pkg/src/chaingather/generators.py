"""Benchmark chain families."""
from __future__ import annotations

import numpy as np

from .chain import build_chain


class InvalidParam(ValueError):
    pass


def rectangle(w, h):
    """Perimeter of a w x h rectangle, counter-clockwise from the lower left corner."""
    if w < 1 or h < 1:
        raise InvalidParam("rectangle sides must be positive")
    return build_chain(["E"] * w + ["N"] * h + ["W"] * w + ["S"] * h)


def staircase(s):
    """Closed diamond-like loop with ``s`` unit stairs per quadrant."""
    if s < 1:
        raise InvalidParam("staircase needs at least one stair")
    moves = []
    for a, b in (("E", "N"), ("N", "W"), ("W", "S"), ("S", "E")):
        moves += [a, b] * s
    return build_chain(moves)


def random_loop(n, seed=0, max_tries=1_000_000):
    """Closed lattice walk of n unit steps sampled uniformly by rejection.

    Self-intersections and reversals are kept.  Uses numpy's PCG64 so a
    seed reproduces the loop on every platform.
    """
    if n < 4 or n % 2:
        raise InvalidParam("random_loop needs an even n >= 4")
    rng = np.random.Generator(np.random.PCG64(seed))
    dx = np.array([0, 1, 0, -1])
    dy = np.array([1, 0, -1, 0])
    batch = 256
    tried = 0
    while tried < max_tries:
        codes = rng.integers(0, 4, size=(batch, n))
        ok = (dx[codes].sum(axis=1) == 0) & (dy[codes].sum(axis=1) == 0)
        hit = np.nonzero(ok)[0]
        if hit.size:
            return build_chain(list(zip(dx[codes[hit[0]]], dy[codes[hit[0]]])))
        tried += batch
    raise InvalidParam(f"no closed walk of length {n} in {max_tries} tries")


def parse_gen(spec, seed=0):
    """``rectangle:WxH``, ``staircase:S`` or ``random:N``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "rectangle":
            w, _, h = arg.lower().partition("x")
            return rectangle(int(w), int(h))
        if kind == "staircase":
            return staircase(int(arg))
        if kind == "random":
            return random_loop(int(arg), seed)
    except ValueError as exc:
        if isinstance(exc, InvalidParam):
            raise
        raise InvalidParam(f"bad generator argument in {spec!r}") from exc
    raise InvalidParam(f"unknown generator {spec!r}")
