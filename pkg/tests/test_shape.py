import pytest
from hypothesis import given, settings, strategies as st

from chaingather.chain import ClosedChain, build_chain
from chaingather.generators import rectangle, staircase
from chaingather.shape import (NotMergeless, classify_vertices, coverage, decompose,
                               find_quasi_edges, is_mergeless, match_merge_modules, overlap_type)

CROSS = "E,E,N,N,E,E,N,N,W,W,N,N,W,W,S,S,W,W,S,S,E,E,S,S"
STAIRS = "E,E,N,E,N,E,E,N,N,N,N,W,W,W,W,W,S,S,S,S,S,S"
COMB = "E,N,E,S,E,N,E,S,E,N,E,S,S,W,W,W,W,W,W,N"


def labels(ch):
    return [m.label for m in decompose(ch)]


def test_rectangle_modules():
    assert labels(rectangle(4, 3)) == ["VM(0)", "EM(0)"] * 4


def test_staircase_segment_is_em2():
    ch = build_chain(STAIRS)
    assert labels(ch).count("EM(2)") == 1


def test_u_turn_not_mergeless():
    with pytest.raises(NotMergeless):
        decompose(build_chain("E,E,W,N,W,S"))


def test_decomposition_covers_every_robot_once_or_at_joints():
    ch = staircase(5)
    cov = coverage(decompose(ch), ch.n)
    assert cov.min() >= 1 and cov.max() <= 2


def test_convexity_follows_orientation():
    mods = decompose(rectangle(5, 2))
    assert [c for _, c in classify_vertices(mods)] == ["convex"] * 4
    assert [c for _, c in classify_vertices(mods, "backward")] == ["concave"] * 4


def test_cross_corners():
    kinds = [c for _, c in classify_vertices(decompose(build_chain(CROSS)))]
    assert kinds.count("convex") == 8 and kinds.count("concave") == 4


def test_straight_side_is_one_quasi_edge():
    ch = rectangle(6, 6)
    edges = find_quasi_edges(decompose(ch), ch)
    assert len(edges) == 4
    assert all(e.bumps == () for e in edges)


def test_jogged_side_has_one_bump():
    ch = build_chain("E,E,E,N,E,E,E,N,N,N,W,W,W,W,W,W,S,S,S,S")
    edges = find_quasi_edges(decompose(ch), ch)
    assert sorted(len(e.bumps) for e in edges) == [0, 0, 0, 1]


def test_high_stairs_excluded_from_quasi_edges():
    ch = build_chain(STAIRS)
    mods = decompose(ch)
    stair = [set(m.indices(ch.n)) for m in mods if m.kind == "EM" and m.height >= 2]
    assert stair
    for e in find_quasi_edges(mods, ch):
        a, b = e.span
        inner = {(a + j) % ch.n for j in range(1, (b - a) % ch.n)}
        assert all(not (inner & s) for s in stair)


def test_straight_chain_has_no_match():
    assert is_mergeless(rectangle(20, 20))


def test_u_shape_match():
    sq = ClosedChain.from_positions([(0, 0), (1, 0), (1, 1), (0, 1)])
    ms = match_merge_modules(sq)
    assert any(m.merge_type == 2 and set(m.white) == {0, 1} and set(m.black) == {2, 3} for m in ms)


def test_reversal_match():
    ms = match_merge_modules(ClosedChain.from_positions([(0, 0), (0, 1), (0, 0)]))
    assert [(m.merge_type, m.black) for m in ms] == [(1, (1,))]


def test_overlap_types():
    ms = [m for m in match_merge_modules(build_chain(COMB)) if m.merge_type == 2]
    assert overlap_type(ms[0], ms[1]) == "type1"
    assert overlap_type(ms[0], ms[3]) == "none"
    ms = match_merge_modules(build_chain("N,N,E,S,W,S"))
    a = next(m for m in ms if m.black == (2, 3))
    b = next(m for m in ms if m.black == (3, 4))
    assert overlap_type(a, b) == "type2"


@given(st.integers(2, 25), st.integers(2, 25))
@settings(max_examples=40)
def test_rectangles_decompose_into_four_corners(w, h):
    mods = decompose(rectangle(w, h))
    assert [m.label for m in mods].count("VM(0)") == 4
