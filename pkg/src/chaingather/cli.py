"""Command line: run, scale, enumerate-check and audit."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .chain import ChainError, build_chain
from .generators import InvalidParam, parse_gen
from .scheduler import Constants, InvalidProfile, constants_profile, run_to_gathering
from .trace import TraceWriter, ascii_render, write_svg

RNG_NAME = "numpy.PCG64"
FROZEN_C = 4.0
DOUBLING_BOUND = 2.6


class FailsLinearity(AssertionError):
    pass


@dataclass
class SimConfig:
    """Everything that determines a simulation's output."""

    chain: str | None = None          # path to a step-letter file
    gen: str | None = None            # generator spec
    profile: str = "default"
    seed: int = 0
    max_phases: int | None = None
    finalize: bool = False
    audit: bool = False
    trace: str | None = None
    frames: str | None = None
    frame_every: int = 0
    consts: Constants | None = None   # explicit constants bypass profile lookup

    @property
    def profile_name(self):
        if self.consts is not None:
            return "custom"
        return os.environ.get("CHAINGATHER_PROFILE", self.profile)

    def constants(self):
        if self.consts is not None:
            return self.consts
        return constants_profile(self.profile_name)

    def load_chain(self):
        if self.chain:
            return build_chain(Path(self.chain).read_text().strip())
        if self.gen:
            return parse_gen(self.gen, self.seed)
        raise InvalidParam("give --chain or --gen")

    def header(self, consts, chain):
        return {"seed": self.seed, "rng": RNG_NAME, "source": self.chain or self.gen,
                "profile": self.profile_name, "constants": consts.as_dict(),
                "max_phases": self.max_phases, "finalize": self.finalize,
                "audit": self.audit, "n": chain.n, "positions": chain.position_list()}


def _frame_phases(total, every):
    if every:
        return set(range(0, total + 1, every))
    step = max(1, total // 10)
    return set(range(0, total + 1, step))


def run_command(config, out=None):
    """Run one simulation; returns (exit code, GatheringReport)."""
    out = out or sys.stdout
    consts = config.constants()
    chain0 = config.load_chain()
    writer = TraceWriter(config.trace, config.header(consts, chain0)) if config.trace else None
    snapshots = []

    def on_phase(phase, chain, events):
        if writer:
            writer.record(phase, chain, events)
        if config.frames:
            snapshots.append((phase, chain, events))

    report = run_to_gathering(chain0, consts, config.max_phases, audit=config.audit,
                              finalize_flag=config.finalize, on_phase=on_phase)
    state = report.state
    if writer:
        body = report.summary()
        body["final_positions"] = state.chain.position_list()
        body["violations_list"] = report.invariant_violations
        writer.close(body)
    if config.frames:
        fdir = Path(config.frames)
        fdir.mkdir(parents=True, exist_ok=True)
        keep = _frame_phases(snapshots[-1][0] if snapshots else 0, config.frame_every)
        for phase, ch, evs in snapshots:
            if phase in keep or evs and evs[0].get("kind") == "gathered":
                write_svg(fdir / f"frame_{phase:06d}.svg", ch, evs)
        out.write(ascii_render(state.chain) + "\n")
    return exit_code(report, config.audit), report


def exit_code(report, audit):
    if audit and report.invariant_violations:
        return 1
    if report.gathered_phase is None:
        return 2
    return 0


# ----------------------------------------------------------------- scaling

def scaling_table(family, sizes, consts=None, runner=None):
    """Rows {n, gathered_phase, ratio}; ``runner(chain, consts)`` may replace the
    simulator (the default returns the gathered phase of run_to_gathering)."""
    if list(sizes) != sorted(sizes):
        raise InvalidParam("sizes must be ascending")
    consts = consts or constants_profile("default")
    runner = runner or (lambda ch, c: run_to_gathering(ch, c, audit=False).gathered_phase)
    rows = []
    for n in sizes:
        chain = family(n)
        gp = runner(chain, consts)
        rows.append({"n": chain.n, "gathered_phase": gp,
                     "ratio": None if gp is None else gp / chain.n})
    return rows


def scaling_checks(rows, c=FROZEN_C, doubling=DOUBLING_BOUND):
    """Failed assertions of the linearity summary, as strings."""
    bad = []
    for r in rows:
        if r["gathered_phase"] is None:
            bad.append(f"n={r['n']}: timeout")
        elif r["ratio"] > c:
            bad.append(f"n={r['n']}: ratio {r['ratio']:.4f} > {c}")
    for a, b in zip(rows, rows[1:]):
        if a["gathered_phase"] is None or b["gathered_phase"] is None or b["n"] != 2 * a["n"]:
            continue
        if a["gathered_phase"] == 0:
            if b["gathered_phase"] > 0:
                bad.append(f"n={a['n']}->{b['n']}: doubling ratio inf")
            continue
        q = b["gathered_phase"] / a["gathered_phase"]
        if q > doubling:
            bad.append(f"n={a['n']}->{b['n']}: doubling ratio {q:.4f} > {doubling}")
    return bad


def scaling_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "gathered_phase", "ratio"])
    for r in rows:
        ratio = "" if r["ratio"] is None else f"{r['ratio']:.6f}"
        gp = "" if r["gathered_phase"] is None else r["gathered_phase"]
        w.writerow([r["n"], gp, ratio])
    return buf.getvalue()


def scaling_report(family, sizes, consts=None, runner=None, c=FROZEN_C, doubling=DOUBLING_BOUND):
    """CSV table; raises FailsLinearity (carrying the table) if a bound is broken."""
    rows = scaling_table(family, sizes, consts, runner)
    text = scaling_csv(rows)
    bad = scaling_checks(rows, c, doubling)
    if bad:
        err = FailsLinearity("; ".join(bad))
        err.rows, err.csv = rows, text
        raise err
    return text


def family_from_spec(spec):
    """``rectangle`` (square sides n/4), ``rectangle:R`` (aspect R:1),
    ``staircase`` or ``random`` (seeded by size)."""
    from .generators import random_loop, rectangle, staircase
    kind, _, arg = spec.partition(":")
    if kind == "rectangle":
        r = int(arg or 1)

        def fam(n):
            h = n // (2 * (r + 1))
            return rectangle(r * h, h)
        return fam
    if kind == "staircase":
        return lambda n: staircase(max(1, n // 8))
    if kind == "random":
        return lambda n: random_loop(n, seed=n)
    raise InvalidParam(f"unknown family {spec!r}")


# ----------------------------------------------------------------- verbs

def _config(args):
    return SimConfig(chain=args.chain, gen=args.gen, profile=args.profile, seed=args.seed,
                     max_phases=args.max_phases, finalize=args.finalize, audit=args.audit,
                     trace=args.trace, frames=args.frames)


def cmd_run(args):
    code, report = run_command(_config(args))
    print(_fmt(report.summary()))
    return code


def cmd_audit(args):
    args.audit = True
    code, report = run_command(_config(args))
    print(_fmt(report.summary()))
    for v in report.invariant_violations:
        print(_fmt(v))
    return code


def cmd_scale(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    consts = constants_profile(os.environ.get("CHAINGATHER_PROFILE", args.profile))
    t0 = time.perf_counter()
    try:
        text = scaling_report(family_from_spec(args.family), sizes, consts)
        ok = True
    except FailsLinearity as exc:
        text, ok = exc.csv, False
        print(f"FailsLinearity: {exc}", file=sys.stderr)
    if args.csv:
        Path(args.csv).write_text(text)
    sys.stdout.write(text)
    print(f"# wall {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0 if ok else 1


def cmd_enumerate(args):
    from .oracle import chain_counts, sweep
    counts = chain_counts(args.nmax)
    print(_fmt({"counts": counts}))
    res = sweep(args.nmax, args.kmax)
    print(_fmt(res.summary()))
    return 0 if res.ok else 1


def _fmt(obj):
    from .trace import _canon, dumps
    return dumps(_canon(obj))


def build_parser():
    p = argparse.ArgumentParser(prog="chaingather", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    def sim_flags(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--chain", help="file with comma-separated N/E/S/W steps")
        src.add_argument("--gen", help="rectangle:WxH | staircase:S | random:N")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--profile", default="default", choices=["default", "stress"])
        sp.add_argument("--max-phases", type=int, default=None)
        sp.add_argument("--trace")
        sp.add_argument("--frames")
        sp.add_argument("--finalize", action="store_true")
        sp.add_argument("--audit", action="store_true")

    sim_flags(sub.add_parser("run", help="simulate one chain"))
    sim_flags(sub.add_parser("audit", help="simulate with auditing and list violations"))
    sp = sub.add_parser("scale", help="gathering time versus n")
    sp.add_argument("--family", default="rectangle")
    sp.add_argument("--sizes", default="32,64,128,256,512,1024,2048")
    sp.add_argument("--profile", default="default", choices=["default", "stress"])
    sp.add_argument("--csv")
    sp = sub.add_parser("enumerate-check", help="exhaustive lemma sweep")
    sp.add_argument("--nmax", type=int, default=12)
    sp.add_argument("--kmax", type=int, default=12)
    return p


VERBS = {"run": cmd_run, "audit": cmd_audit, "scale": cmd_scale, "enumerate-check": cmd_enumerate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except (InvalidParam, InvalidProfile, ChainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
