from hypothesis import given, settings, strategies as st

from chaingather.chain import ClosedChain, build_chain
from chaingather.generators import random_loop, rectangle
from chaingather.merge import gathered, merge_subphase, plan_merges


def loop(*parts):
    return build_chain(",".join(p for part in parts for p in part))


COMB = loop(["E"] * 10, "N,E,S,E,N,E,S,E,N,E,S".split(","), ["E"] * 10,
            ["N"] * 20, ["W"] * 25, ["S"] * 20)
SPIKE = loop(["E"] * 10, ["N", "S"], ["E"] * 10, ["N"] * 20, ["W"] * 20, ["S"] * 20)


def test_single_reversal_removes_two():
    out, events = merge_subphase(SPIKE)
    assert out.n == SPIKE.n - 2
    assert [(e.merge_type, e.robots_removed) for e in events] == [(1, 2)]


def test_mergeless_chain_unchanged():
    ch = rectangle(20, 20)
    out, events = merge_subphase(ch)
    assert events == [] and out.position_list() == ch.position_list()


def test_type2_ring_blocks_but_is_gathered():
    ch = build_chain("N,E,S,W,N,E,S,W")
    plan = plan_merges(ch, 12)
    assert plan.starts.size == 8 and not plan.acting.any()
    out, events = merge_subphase(ch)
    assert events == [] and out.n == ch.n
    assert gathered(out, 12)


def test_comb_outer_teeth_act():
    plan = plan_merges(COMB, 12)
    k2 = plan.ks == 2
    assert k2.sum() == 5
    assert plan.acting[k2].tolist() == [True, False, False, False, True]
    out, events = merge_subphase(COMB)
    out.validate()
    assert out.n == COMB.n - 4
    assert len(events) == 2


def test_unit_square_folds():
    out, _ = merge_subphase(ClosedChain.from_positions([(0, 0), (1, 0), (1, 1), (0, 1)]))
    assert out.n == 2


def test_gathered_box():
    assert gathered(rectangle(11, 11), 12)
    assert not gathered(rectangle(12, 3), 12)


@given(st.integers(2, 100), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_merge_keeps_chain_connected_and_shrinks(half, seed):
    ch = random_loop(2 * half, seed)
    out, events = merge_subphase(ch)
    out.validate()
    assert out.n <= ch.n
    if events:
        assert out.n < ch.n or gathered(out, 12)
    assert ch.n - out.n == sum(e.robots_removed for e in events)
