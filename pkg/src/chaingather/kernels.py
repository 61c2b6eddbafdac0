"""Hot array kernels.

Every kernel has a numba loop version and a vectorised numpy version with
identical results; ``_accel.USE_NUMBA`` picks which one is exported.
Positions are two int64 arrays ``xs, ys`` indexed cyclically.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

STRAIGHT, LEFT, RIGHT, UTURN, DEGEN = 0, 1, -1, 2, 3

# step codes: N, E, S, W; -1 for a zero step
DX = np.array([0, 1, 0, -1], dtype=np.int64)
DY = np.array([1, 0, -1, 0], dtype=np.int64)


def step_code(dx, dy):
    if dx == 0 and dy == 1:
        return 0
    if dx == 1 and dy == 0:
        return 1
    if dx == 0 and dy == -1:
        return 2
    if dx == -1 and dy == 0:
        return 3
    return -1


# ---------------------------------------------------------------- turns

@njit
def _turns_nb(xs, ys):
    n = xs.shape[0]
    out = np.zeros(n, dtype=np.int8)
    for i in range(n):
        p = (i - 1) % n
        q = (i + 1) % n
        ax = xs[i] - xs[p]
        ay = ys[i] - ys[p]
        bx = xs[q] - xs[i]
        by = ys[q] - ys[i]
        if (ax == 0 and ay == 0) or (bx == 0 and by == 0):
            out[i] = 3
            continue
        cross = ax * by - ay * bx
        dot = ax * bx + ay * by
        if cross == 1:
            out[i] = 1
        elif cross == -1:
            out[i] = -1
        elif dot == -1:
            out[i] = 2
        else:
            out[i] = 0
    return out


def _turns_np(xs, ys):
    ax = xs - np.roll(xs, 1)
    ay = ys - np.roll(ys, 1)
    bx = np.roll(xs, -1) - xs
    by = np.roll(ys, -1) - ys
    cross = ax * by - ay * bx
    dot = ax * bx + ay * by
    out = np.where(cross == 1, 1, np.where(cross == -1, -1, np.where(dot == -1, 2, 0)))
    zero = ((ax == 0) & (ay == 0)) | ((bx == 0) & (by == 0))
    out[zero] = 3
    return out.astype(np.int8)


# --------------------------------------------------------------- groups

@njit
def _groups_nb(turn):
    # maximal cyclic runs of non-straight robots
    n = turn.shape[0]
    gid = np.full(n, -1, dtype=np.int64)
    gsize = np.zeros(n, dtype=np.int64)
    gbad = np.zeros(n, dtype=np.bool_)
    start = -1
    for i in range(n):
        if turn[i] == 0:
            start = i
            break
    if start == -1:
        ok = n == 2 and turn[0] + turn[1] == 0 and turn[0] != 2 and turn[0] != 3
        for i in range(n):
            gid[i] = 0
            gsize[i] = n
            gbad[i] = not ok
        return gid, gsize, gbad
    g = -1
    j = 0
    while j < n:
        i = (start + j) % n
        if turn[i] == 0:
            j += 1
            continue
        g += 1
        m = 0
        s = 0
        ok = True
        while j + m < n and turn[(start + j + m) % n] != 0:
            t = turn[(start + j + m) % n]
            if t != 1 and t != -1:
                ok = False
            s += t
            m += 1
        ok = ok and m == 2 and s == 0
        for r in range(m):
            i2 = (start + j + r) % n
            gid[i2] = g
            gsize[i2] = m
            gbad[i2] = not ok
        j += m
    return gid, gsize, gbad


def _groups_np(turn):
    n = turn.shape[0]
    mask = turn != 0
    if not mask.any():
        return np.full(n, -1, np.int64), np.zeros(n, np.int64), np.zeros(n, bool)
    t = turn.astype(np.int64)
    if mask.all():
        ok = n == 2 and t.sum() == 0 and np.isin(t, (1, -1)).all()
        return np.zeros(n, np.int64), np.full(n, n, np.int64), np.full(n, not ok)
    start = int(np.argmin(mask))
    order = (start + np.arange(n)) % n
    m = mask[order]
    starts = m & ~np.roll(m, 1)
    g = np.cumsum(starts) - 1
    g = np.where(m, g, -1)
    ng = int(starts.sum())
    sel = g >= 0
    size = np.bincount(g[sel], minlength=ng)
    tr = t[order][sel]
    tot = np.bincount(g[sel], weights=tr, minlength=ng)
    unit = np.bincount(g[sel], weights=np.isin(tr, (1, -1)).astype(float), minlength=ng)
    okg = (size == 2) & (tot == 0) & (unit == 2)
    gid = np.full(n, -1, np.int64)
    gid[order] = g
    gsize = np.zeros(n, np.int64)
    gbad = np.zeros(n, bool)
    gsize[order[sel]] = size[g[sel]]
    gbad[order[sel]] = ~okg[g[sel]]
    return gid, gsize, gbad


# ---------------------------------------------------------------- steps

@njit
def _steps_nb(xs, ys):
    n = xs.shape[0]
    st = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        q = (i + 1) % n
        dx = xs[q] - xs[i]
        dy = ys[q] - ys[i]
        if dx == 0 and dy == 1:
            st[i] = 0
        elif dx == 1 and dy == 0:
            st[i] = 1
        elif dx == 0 and dy == -1:
            st[i] = 2
        elif dx == -1 and dy == 0:
            st[i] = 3
    return st


def _steps_np(xs, ys):
    dx = np.roll(xs, -1) - xs
    dy = np.roll(ys, -1) - ys
    st = np.full(xs.shape[0], -1, np.int64)
    st[(dx == 0) & (dy == 1)] = 0
    st[(dx == 1) & (dy == 0)] = 1
    st[(dx == 0) & (dy == -1)] = 2
    st[(dx == -1) & (dy == 0)] = 3
    return st


# -------------------------------------------------------- merge matches

@njit
def _match_nb(xs, ys, kmax):
    """Merge modules as (b1 index, k); whites sit at b1-1 and b1+k."""
    n = xs.shape[0]
    st = _steps_nb(xs, ys)
    starts = np.empty(n, dtype=np.int64)
    ks = np.empty(n, dtype=np.int64)
    cnt = 0
    if n < 3:
        return starts[:0], ks[:0]
    for s in range(n):
        a = st[(s - 1) % n]
        b = st[s]
        if a < 0 or b < 0:
            continue
        q = (a + 2) % 4
        if b == q:
            starts[cnt] = s
            ks[cnt] = 1
            cnt += 1
            continue
        if b == a:
            continue
        r = 1
        while r < kmax and st[(s + r) % n] == b:
            r += 1
        k = r + 1
        if k > kmax or k > n - 2:
            continue
        if st[(s + r) % n] == q:
            starts[cnt] = s
            ks[cnt] = k
            cnt += 1
    return starts[:cnt], ks[:cnt]


def _match_np(xs, ys, kmax):
    n = xs.shape[0]
    empty = np.zeros(0, np.int64)
    if n < 3:
        return empty, empty
    st = _steps_np(xs, ys)
    a = np.roll(st, 1)
    b = st
    valid = (a >= 0) & (b >= 0)
    q = (a + 2) % 4
    k1 = valid & (b == q)
    turn = valid & (b != q) & (b != a)
    # r = length of the run of steps equal to st[s], capped at kmax
    r = np.ones(n, np.int64)
    alive = np.ones(n, bool)
    for j in range(1, kmax):
        alive &= np.roll(st, -j) == st
        r += alive
    nxt = st[(np.arange(n) + r) % n]
    k = r + 1
    kk = turn & (k <= kmax) & (k <= n - 2) & (nxt == q)
    ks = np.where(k1, 1, np.where(kk, k, 0))
    idx = np.nonzero(ks)[0]
    return idx.astype(np.int64), ks[idx].astype(np.int64)


# ---------------------------------------------------------------- fuse

@njit
def _fuse_nb(xs, ys):
    """Group consecutive coincident robots. Returns (new_index, m)."""
    n = xs.shape[0]
    new_index = np.zeros(n, dtype=np.int64)
    start = -1
    for i in range(n):
        p = (i - 1) % n
        if xs[p] != xs[i] or ys[p] != ys[i]:
            start = i
            break
    if start == -1:
        return new_index, 1
    label = np.zeros(n, dtype=np.int64)
    g = -1
    for j in range(n):
        i = (start + j) % n
        p = (i - 1) % n
        if xs[p] != xs[i] or ys[p] != ys[i]:
            g += 1
        label[i] = g
    m = g + 1
    shift = label[0]
    for i in range(n):
        new_index[i] = (label[i] - shift) % m
    return new_index, m


def _fuse_np(xs, ys):
    n = xs.shape[0]
    new_from_prev = (np.roll(xs, 1) != xs) | (np.roll(ys, 1) != ys)
    if not new_from_prev.any():
        return np.zeros(n, np.int64), 1
    start = int(np.argmax(new_from_prev))
    order = (start + np.arange(n)) % n
    label = np.empty(n, np.int64)
    label[order] = np.cumsum(new_from_prev[order]) - 1
    m = int(new_from_prev.sum())
    return (label - label[0]) % m, m


# ------------------------------------------------------------ run moves

@njit
def _run_plan_nb(xs, ys, occ, runners, dirs, pause):
    """Per-run action after the pause decrement: 0 idle, 1 hop (A1), 2 jump (A2).

    ``occ`` maps robot index to a run slot (-1 when untagged).
    Returns (action, new_pause, hop_x, hop_y).
    """
    n = xs.shape[0]
    m = runners.shape[0]
    act = np.zeros(m, dtype=np.int64)
    npause = np.zeros(m, dtype=np.int64)
    hx = np.zeros(m, dtype=np.int64)
    hy = np.zeros(m, dtype=np.int64)
    for r in range(m):
        i = runners[r]
        d = dirs[r]
        pz = pause[r] - 1
        if pz < 0:
            pz = 0
        npause[r] = pz
        if pz > 0 or n < 6:
            continue
        i0 = i % n
        ib = (i - d) % n
        i1 = (i + d) % n
        i2 = (i + 2 * d) % n
        i3 = (i + 3 * d) % n
        ex = xs[i1] - xs[i0]
        ey = ys[i1] - ys[i0]
        bx = xs[ib] - xs[i0]
        by = ys[ib] - ys[i0]
        if abs(ex) + abs(ey) != 1 or abs(bx) + abs(by) != 1 or ex * bx + ey * by != 0:
            continue
        if xs[i2] != xs[i0] + 2 * ex or ys[i2] != ys[i0] + 2 * ey:
            continue
        if xs[i3] == xs[i0] + 3 * ex and ys[i3] == ys[i0] + 3 * ey:
            if occ[i1] < 0:
                act[r] = 1
                hx[r] = ex + bx
                hy[r] = ey + by
        elif xs[i3] == xs[i2] - bx and ys[i3] == ys[i2] - by:
            if occ[i3] < 0 and occ[i1] < 0 and occ[i2] < 0:
                act[r] = 2
                npause[r] = 3
    return act, npause, hx, hy


def _run_plan_py(xs, ys, occ, runners, dirs, pause):
    n = xs.shape[0]
    m = runners.shape[0]
    npause = np.maximum(pause.astype(np.int64) - 1, 0)
    act = np.zeros(m, np.int64)
    hx = np.zeros(m, np.int64)
    hy = np.zeros(m, np.int64)
    if m == 0 or n < 6:
        return act, npause, hx, hy
    i0 = runners % n
    d = dirs.astype(np.int64)
    ib, i1, i2, i3 = ((runners + c * d) % n for c in (-1, 1, 2, 3))
    ex, ey = xs[i1] - xs[i0], ys[i1] - ys[i0]
    bx, by = xs[ib] - xs[i0], ys[ib] - ys[i0]
    ok = (npause == 0) & (np.abs(ex) + np.abs(ey) == 1) & (np.abs(bx) + np.abs(by) == 1)
    ok &= ex * bx + ey * by == 0
    ok &= (xs[i2] == xs[i0] + 2 * ex) & (ys[i2] == ys[i0] + 2 * ey)
    a1 = ok & (xs[i3] == xs[i0] + 3 * ex) & (ys[i3] == ys[i0] + 3 * ey) & (occ[i1] < 0)
    a2 = ok & ~a1 & (xs[i3] == xs[i2] - bx) & (ys[i3] == ys[i2] - by)
    a2 &= (occ[i3] < 0) & (occ[i1] < 0) & (occ[i2] < 0)
    act[a1] = 1
    act[a2] = 2
    npause[a2] = 3
    hx[a1] = (ex + bx)[a1]
    hy[a1] = (ey + by)[a1]
    return act, npause, hx, hy


# ------------------------------------------------------ collision scans

@njit
def _scan_ahead_nb(occ, gid, gbad, hard, runners, dirs, reach):
    """First tagged robot ahead of each runner within ``reach`` steps.

    Returns (slot, steps, same_edge); slot is -1 when nothing was found.
    same_edge is False when a robot of a non-quasi-edge turn group (other
    than the groups holding either runner) lies strictly between them, or
    when a ``hard`` robot (reversal or coincident neighbour) does.
    """
    n = occ.shape[0]
    m = runners.shape[0]
    slot = np.full(m, -1, dtype=np.int64)
    steps = np.zeros(m, dtype=np.int64)
    same = np.zeros(m, dtype=np.bool_)
    for r in range(m):
        i = runners[r]
        d = dirs[r]
        span = min(reach, n - 1)
        hit = -1
        for j in range(1, span + 1):
            if occ[(i + j * d) % n] >= 0:
                hit = j
                break
        if hit < 0:
            continue
        ko = (i + hit * d) % n
        slot[r] = occ[ko]
        steps[r] = hit
        ok = True
        for j in range(1, hit):
            k = (i + j * d) % n
            if hard[k] or (gbad[k] and gid[k] != gid[i % n] and gid[k] != gid[ko]):
                ok = False
                break
        same[r] = ok
    return slot, steps, same


def _scan_ahead_py(occ, gid, gbad, hard, runners, dirs, reach):
    n = occ.shape[0]
    m = runners.shape[0]
    slot = np.full(m, -1, np.int64)
    steps = np.zeros(m, np.int64)
    same = np.zeros(m, bool)
    for r in range(m):
        i = int(runners[r])
        d = int(dirs[r])
        span = min(reach, n - 1)
        ks = (i + d * np.arange(1, span + 1)) % n
        hit = np.nonzero(occ[ks] >= 0)[0]
        if hit.size == 0:
            continue
        j = int(hit[0])
        k_other = ks[j]
        between = ks[:j]
        g_between = gid[between]
        ok = ~(gbad[between] & (g_between != gid[i % n]) & (g_between != gid[k_other]))
        ok &= ~hard[between]
        slot[r] = occ[k_other]
        steps[r] = j + 1
        same[r] = bool(ok.all())
    return slot, steps, same


if USE_NUMBA:
    turns = _turns_nb
    groups = _groups_nb
    steps = _steps_nb
    match_merges = _match_nb
    fuse_groups = _fuse_nb
    run_plan = _run_plan_nb
    scan_ahead = _scan_ahead_nb
else:
    turns = _turns_np
    groups = _groups_np
    steps = _steps_np
    match_merges = _match_np
    fuse_groups = _fuse_np
    run_plan = _run_plan_py
    scan_ahead = _scan_ahead_py
