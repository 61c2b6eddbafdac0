import copy
import itertools

import pytest

from chaingather.chain import ClosedChain, build_chain, chain_to_steps
from chaingather.generators import rectangle, staircase
from chaingather.oracle import (BudgetExceeded, audit_events, audit_trace, chain_counts,
                                check_lemma, enumerate_small_chains, locality_audit, sweep)
from chaingather.local_rules import decisions
from chaingather.scheduler import SimState, constants_profile, run_to_gathering

# frozen after the first run; cross-checked below against a brute force for n <= 8
COUNTS = {4: 4, 6: 12, 8: 92, 10: 820, 12: 9013}
COUNTS_NO_REVERSAL = {4: 1, 6: 1, 8: 7, 10: 23, 12: 141}

ROT = {"N": "E", "E": "S", "S": "W", "W": "N"}
FLIP = {"N": "N", "S": "S", "E": "W", "W": "E"}


def brute_force(n, degenerate):
    """Closed walks of length n up to rotation, reflection and cyclic shift."""
    seen = set()
    for w in itertools.product("NESW", repeat=n):
        if w.count("N") != w.count("S") or w.count("E") != w.count("W"):
            continue
        if not degenerate and any({a, b} in ({"N", "S"}, {"E", "W"})
                                  for a, b in zip(w, w[1:] + w[:1])):
            continue
        forms = []
        for flip in (False, True):
            v = [FLIP[c] for c in w] if flip else list(w)
            for _ in range(4):
                v = [ROT[c] for c in v]
                forms += ["".join(v[k:] + v[:k]) for k in range(n)]
        seen.add(min(forms))
    return len(seen)


def test_pinned_counts():
    assert chain_counts(12) == COUNTS
    assert chain_counts(12, degenerate=False) == COUNTS_NO_REVERSAL


@pytest.mark.parametrize("n", [4, 6, 8])
def test_counts_match_brute_force(n):
    assert brute_force(n, True) == COUNTS[n]
    assert brute_force(n, False) == COUNTS_NO_REVERSAL[n]


def test_only_unit_square_at_four():
    chains = list(enumerate_small_chains(4, degenerate=False))
    assert len(chains) == 1 and sorted(chains[0].bbox()) == [1, 1]


def test_odd_lengths_are_empty():
    assert list(enumerate_small_chains(3)) == []
    assert chain_counts(11)[10] == COUNTS[10] and 11 not in chain_counts(11)


def test_membership_at_eight():
    boxes = [tuple(sorted(ch.bbox())) for ch in enumerate_small_chains(8, nmin=8)]
    assert (2, 2) in boxes and (1, 3) in boxes
    rev = [ch for ch in enumerate_small_chains(8, nmin=8) if "N,S" in chain_to_steps(ch)
           or "E,W" in chain_to_steps(ch)]
    assert rev


def test_budget():
    with pytest.raises(BudgetExceeded):
        list(enumerate_small_chains(15))


def test_lemmas_on_samples():
    assert check_lemma(rectangle(20, 20), "decomposition_total")
    assert check_lemma(rectangle(20, 20), "samesign_vm_pair")
    sq = ClosedChain.from_positions([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert check_lemma(sq, "merge_progress")
    assert check_lemma(rectangle(30, 20), "goodpair_after_init")


def test_small_sweep_is_clean():
    res = sweep(nmax=8, kmax=12)
    assert res.chains == sum(v for k, v in COUNTS.items() if k <= 8)
    assert res.ok


def test_low_k_sweep_finds_known_counterexamples():
    # K=2 is far below any valid profile; a self-retracing 8-walk then cannot shrink
    lemmas = ("decomposition_total", "samesign_vm_pair", "merge_progress", "goodpair_after_init")
    res = sweep(nmax=8, kmax=2, lemmas=lemmas)
    assert res.mergeless == 1
    assert not res.counterexamples("decomposition_total")
    assert not res.counterexamples("samesign_vm_pair")
    [bad] = res.counterexamples("merge_progress")
    assert bad.detail == "count 8 -> 8, box 1x2"


def test_rectangle_run_has_clean_audit():
    r = run_to_gathering(rectangle(30, 20))
    rep = audit_events(r.events)
    assert rep.ok and rep.checked["merges"] == r.merges
    assert r.invariant_violations == []


def test_duplicated_merge_association_is_flagged():
    r = run_to_gathering(rectangle(30, 20))
    log = copy.deepcopy(r.events)
    ev = next(e for evs in log for e in evs if e["kind"] == "merge" and e["pairs"])
    dup = dict(ev, event=10_000)
    log[-1].append(dup)
    rep = audit_events(log)
    assert len(rep.violations) == 1
    assert rep.violations[0]["check"] == "unique_merge"


def test_audit_trace_replays_files(tmp_path):
    from chaingather.cli import SimConfig, run_command
    path = tmp_path / "t.jsonl"
    _, rep = run_command(SimConfig(gen="rectangle:12x10", trace=str(path)))
    assert audit_trace(rep.events, [path]).ok


def test_locality_holds_at_radius_v():
    state = SimState(rectangle(8, 6), constants_profile("default"))
    assert locality_audit(state)


def test_locality_fails_when_view_too_small():
    # a k=9 merge spans 11 robots: a radius-3 view cannot see it
    state = SimState(rectangle(8, 6), constants_profile("default"))
    v = locality_audit(state, radius=3)
    assert not v and v.counterexample


def test_locality_mid_run():
    seen = []
    consts = constants_profile("default")
    run_to_gathering(staircase(20), consts,
                     on_phase=lambda p, ch, ev: seen.append((p, ch)) if p % 7 == 3 else None)
    for p, ch in seen[:4]:
        assert locality_audit(SimState(ch, consts, phase=p))


def test_decisions_rotate_with_the_frame():
    consts = constants_profile("default")
    ch = build_chain(",".join(["E"] * 10 + ["N", "S"] + ["E"] * 10 + ["N"] * 20 + ["W"] * 20 + ["S"] * 20))
    rot = ch.transformed(lambda x, y: (-y, x))
    for a, b in zip(decisions(ch, consts), decisions(rot, consts)):
        assert b.merge_hop == (-a.merge_hop[1], a.merge_hop[0])
        assert b.init_hop == (-a.init_hop[1], a.init_hop[0])
