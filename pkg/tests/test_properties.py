"""Whole-simulation properties on generated chains."""
from hypothesis import given, settings, strategies as st

from chaingather.chain import ClosedChain
from chaingather.generators import random_loop, rectangle
from chaingather.scheduler import run_to_gathering
from chaingather.trace import phase_record, transform_record

MAPS = {
    "shift": (lambda x, y: (x + 17, y - 5), lambda x, y: (x - 17, y + 5)),
    "rot90": (lambda x, y: (-y, x), lambda x, y: (y, -x)),
    "mirror": (lambda x, y: (-x, y), lambda x, y: (-x, y)),
}

chains = st.one_of(
    st.builds(rectangle, st.integers(1, 40), st.integers(1, 40)),
    st.builds(lambda h, s: random_loop(2 * h, s), st.integers(40, 200), st.integers(0, 10**6)),
)


def records(ch):
    out = []
    report = run_to_gathering(ch, on_phase=lambda p, c, e: out.append(phase_record(p, c, e)))
    return out, report


@given(chains, st.sampled_from(sorted(MAPS)))
@settings(max_examples=25, deadline=None)
def test_trace_equivariance(ch, name):
    fwd, inv = MAPS[name]
    base, _ = records(ch)
    moved, _ = records(ch.transformed(fwd))
    assert [transform_record(r, inv) for r in moved] == base


@given(chains)
@settings(max_examples=25, deadline=None)
def test_every_phase_connected_and_monotone(ch):
    recs, report = records(ch)
    prev = ch.n
    for r in recs:
        assert r["n"] <= prev
        ClosedChain.from_positions(r["positions"]).validate()
        prev = r["n"]
    report.state.chain.validate()
    assert report.invariant_violations == []
    assert report.gathered_phase is not None
