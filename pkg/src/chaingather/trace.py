"""Trace output: canonical JSON Lines, SVG frames and an ASCII render."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TRACE_VERSION = 1


def _canon(obj):
    if isinstance(obj, dict):
        return {k: _canon(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def phase_record(phase, chain, events):
    """One trace line; key order is fixed, event dicts are key-sorted."""
    return {"round": phase, "phase": phase, "n": chain.n,
            "positions": chain.position_list(), "events": [_canon(e) for e in events]}


class TraceWriter:
    """Streams a header, one record per phase and a closing report."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.fh = open(self.path, "w", encoding="ascii", newline="\n")
        self.write({"header": _canon(dict(header, version=TRACE_VERSION))})

    def write(self, obj):
        self.fh.write(dumps(obj) + "\n")

    def record(self, phase, chain, events):
        self.write(phase_record(phase, chain, events))

    def close(self, report):
        self.write({"report": _canon(report)})
        self.fh.close()


def read_trace(path):
    header, records, report = None, [], None
    with open(path, encoding="ascii") as fh:
        for line in fh:
            obj = json.loads(line)
            if "header" in obj:
                header = obj["header"]
            elif "report" in obj:
                report = obj["report"]
            else:
                records.append(obj)
    return header, records, report


def replay_check(path):
    """Re-verify chain invariants on every record of a trace file.

    Returns a list of problems (empty when the trace is sound).
    """
    header, records, _ = read_trace(path)
    problems = []
    prev_n = header["n"] if header else None
    prev_phase = -1
    for rec in records:
        pts = np.asarray(rec["positions"], np.int64).reshape(-1, 2)
        if rec["n"] != len(pts):
            problems.append(f"phase {rec['phase']}: n={rec['n']} but {len(pts)} positions")
        if rec["phase"] != prev_phase + 1 or rec["round"] != rec["phase"]:
            problems.append(f"phase {rec['phase']}: out of sequence")
        if len(pts) > 1:
            gap = np.abs(np.roll(pts, -1, axis=0) - pts).sum(axis=1)
            if (gap > 1).any():
                problems.append(f"phase {rec['phase']}: neighbours {int(np.argmax(gap > 1))} apart")
        if prev_n is not None and rec["n"] > prev_n:
            problems.append(f"phase {rec['phase']}: robot count grew")
        prev_n = rec["n"]
        prev_phase = rec["phase"]
    return problems


def transform_record(rec, fn):
    """Apply a grid map to positions and hop-side vectors of a trace record."""
    out = dict(rec)
    pts = np.asarray(rec["positions"], np.int64).reshape(-1, 2)
    if len(pts):
        x, y = fn(pts[:, 0], pts[:, 1])
        out["positions"] = [[int(a), int(b)] for a, b in zip(x, y)]
    zero = np.zeros(1, np.int64)
    ox, oy = fn(zero, zero)
    evs = []
    for e in rec["events"]:
        e = dict(e)
        if "hop_side" in e:
            hx, hy = fn(np.array([e["hop_side"][0]]), np.array([e["hop_side"][1]]))
            e["hop_side"] = [int(hx[0] - ox[0]), int(hy[0] - oy[0])]
        evs.append(e)
    out["events"] = evs
    return out


# ---------------------------------------------------------------- frames

def ascii_render(chain, max_size=60):
    """Robots as characters on a grid: 'o' robot, '@' runner, '#' stacked."""
    xs, ys = chain.xs, chain.ys
    w = int(xs.max() - xs.min()) + 1
    h = int(ys.max() - ys.min()) + 1
    if max(w, h) > max_size:
        return f"<{chain.n} robots in a {w}x{h} box>"
    grid = [[" "] * w for _ in range(h)]
    runner = chain.tags["run_id"] >= 0
    for i in range(chain.n):
        cx, cy = int(xs[i] - xs.min()), int(ys.max() - ys[i])
        cur = grid[cy][cx]
        mark = "@" if runner[i] else "o"
        grid[cy][cx] = mark if cur == " " else ("@" if "@" in (cur, mark) else "#")
    return "\n".join("".join(row).rstrip() for row in grid)


def svg_frame(chain, events=(), scale=10, pad=2):
    """SVG polyline of the chain; runners are drawn red, merge sites orange."""
    xs, ys = chain.xs, chain.ys
    x0, y1 = int(xs.min()) - pad, int(ys.max()) + pad
    w = (int(xs.max()) - x0 + pad) * scale
    h = (y1 - int(ys.min()) + pad) * scale

    def px(i):
        return (int(xs[i]) - x0) * scale, (y1 - int(ys[i])) * scale

    pts = " ".join("%d,%d" % px(i) for i in list(range(chain.n)) + [0])
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
             f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1"/>']
    for i in np.nonzero(chain.tags["run_id"] >= 0)[0].tolist():
        x, y = px(i)
        parts.append(f'<circle cx="{x}" cy="{y}" r="{scale // 3}" fill="red"/>')
    return "\n".join(parts + ["</svg>"])


def merge_sites(events):
    return [e for e in events if e.get("kind") == "merge"]


def write_svg(path, chain, events=(), scale=10):
    text = svg_frame(chain, events, scale)
    sites = merge_sites(events)
    if sites:
        marks = []
        for e in sites:
            for i in e["span"]:
                if i < chain.n:
                    marks.append(i)
        body = text.rsplit("</svg>", 1)[0]
        xs, ys = chain.xs, chain.ys
        x0, y1 = int(xs.min()) - 2, int(ys.max()) + 2
        for i in sorted(set(marks)):
            cx, cy = (int(xs[i]) - x0) * scale, (y1 - int(ys[i])) * scale
            body += f'<circle cx="{cx}" cy="{cy}" r="{scale // 2}" fill="none" stroke="orange"/>\n'
        text = body + "</svg>"
    Path(path).write_text(text + "\n", encoding="ascii")
