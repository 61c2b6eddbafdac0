import pytest
from hypothesis import given, settings, strategies as st

from chaingather.chain import (BrokenChain, ClosedChain, NotClosed, BadStep, apply_moves, build_chain,
                               chain_to_steps, local_view, turn_sequence, turning_sum)
from chaingather.generators import random_loop, rectangle


def cyclic_eq(a, b):
    return len(a) == len(b) and any(a[k:] + a[:k] == b for k in range(len(a)))


def test_unit_square_positions():
    ch = build_chain("E,N,W,S")
    assert ch.position_list() == [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_not_closed():
    with pytest.raises(NotClosed):
        build_chain("E,N")


def test_bad_step():
    with pytest.raises(BadStep):
        build_chain("E,X,W")


def test_rectangle_3x2():
    ch = build_chain("E,E,E,N,N,W,W,W,S,S")
    assert ch.n == 10
    assert ch.bbox() == (3, 2)
    assert chain_to_steps(ch) == "E,E,E,N,N,W,W,W,S,S"


def test_empty_moves_identity():
    ch = rectangle(3, 2)
    out, fusions, dropped, _ = apply_moves(ch, {})
    assert out.position_list() == ch.position_list()
    assert fusions == [] and dropped == []


def test_reversal_collapses_to_one_robot():
    ch = ClosedChain.from_positions([(0, 0), (0, 1), (0, 0)])
    out, fusions, _, _ = apply_moves(ch, {1: (0, 0)})
    assert out.n == 1
    assert out.position_list() == [[0, 0]]
    assert sum(len(f.members) - 1 for f in fusions) == 2


def test_square_fold_removes_two():
    ch = build_chain("E,N,W,S")
    out, _, _, _ = apply_moves(ch, {2: (1, 0), 3: (0, 0)})
    assert out.n == 2


def test_move_too_far():
    with pytest.raises(BrokenChain):
        apply_moves(rectangle(3, 3), {0: (5, 5)})


def test_turn_sequences():
    assert turn_sequence(build_chain("E,N,W,S")) == list("LLLL")
    assert cyclic_eq(turn_sequence(build_chain("E,E,N,N,W,W,S,S")), list("SLSLSLSL"))
    seq = turn_sequence(build_chain("E,E,W,N,W,S"))
    assert seq[2] == "U"


def test_local_view_small():
    ch = build_chain("E,N,W,S")
    assert local_view(ch, 2, 0).window == ((0, 0),)
    assert set(local_view(ch, 0, 1).window) == {(0, 0), (1, 0), (0, 1)}


@st.composite
def loops(draw, lo=4, hi=120):
    n = draw(st.integers(lo // 2, hi // 2)) * 2
    return random_loop(n, draw(st.integers(0, 2**32)))


@given(loops())
@settings(max_examples=60, deadline=None)
def test_random_loops_are_connected(ch):
    ch.validate()
    assert ch.n % 2 == 0


@given(loops(), st.integers(-50, 50), st.integers(-50, 50))
@settings(max_examples=40, deadline=None)
def test_local_view_translation_invariant(ch, tx, ty):
    moved = ch.transformed(lambda x, y: (x + tx, y + ty))
    for i in range(0, ch.n, 3):
        assert local_view(ch, i, 5) == local_view(moved, i, 5)


@given(loops())
@settings(max_examples=40, deadline=None)
def test_local_view_rotation_equivariant(ch):
    rot = ch.transformed(lambda x, y: (-y, x))
    for i in range(0, ch.n, 5):
        a, b = local_view(ch, i, 4), local_view(rot, i, 4)
        assert b.window == tuple((-y, x) for x, y in a.window)


@given(st.integers(1, 30), st.integers(1, 30))
def test_rectangle_turning_sum(w, h):
    # counter-clockwise simple loops turn by exactly one full left revolution
    assert turning_sum(turn_sequence(rectangle(w, h))) == 360


@given(st.integers(1, 30), st.integers(1, 30))
def test_clockwise_turning_sum(w, h):
    ch = build_chain(["N"] * h + ["E"] * w + ["S"] * h + ["W"] * w)
    assert turning_sum(turn_sequence(ch)) == -360


@given(loops(), st.data())
@settings(max_examples=50, deadline=None)
def test_moves_keep_count_monotone(ch, data):
    # collapsing a robot onto a neighbour never adds robots and keeps the chain connected
    i = data.draw(st.integers(0, ch.n - 1))
    j = (i + 1) % ch.n
    try:
        out, _, _, _ = apply_moves(ch, {i: (int(ch.xs[j]), int(ch.ys[j]))})
    except BrokenChain:
        return
    assert out.n <= ch.n
    out.validate()
