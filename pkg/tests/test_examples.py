"""Small worked instances pinned to exact values."""

from fractions import Fraction as F

import pytest

from conftest import PI_236, uniform
from ldstack import Schedule, generate
from ldstack.auditor import FWeight, audit_bound, audit_orbit, audit_window, f_discrepancy, gap_stats_all
from ldstack.instances import FreshPairs
from ldstack.numeric import Ordering, add, cmp
from ldstack.oracle import lookahead_probe, minimax_search
from ldstack.rotor import Rotor, extract_rotor, verify_rotor
from ldstack.schedule import ScheduleExhausted
from ldstack.stacker import Stacker


def test_arithmetic():
    assert add(F(1, 2), F(1, 3)) == F(5, 6)
    assert cmp(F(5, 6), F(1)) is Ordering.LT
    assert cmp(F(-1, 3), F(-1, 3)) is Ordering.EQ
    assert cmp(-0.6, -1.0) is Ordering.GT


def test_prefixes():
    s = Schedule.stationary(PI_236)
    assert s.peek_prefix("b", 4) == F(4, 3)
    assert s.peek_prefix("zzz", 4) == 0
    for _ in range(6):
        s.advance_prefix()
    assert s.prefix_vector() == {"a": 3, "b": 2, "c": 1}
    u5 = Schedule.stationary(uniform(5))
    for _ in range(3):
        u5.advance_prefix()
    assert set(u5.prefix_vector().values()) == {F(3, 5)}
    assert Schedule.stationary(uniform(4)).peek_prefix("u1", 4) == 1


def test_pulls(adversary_table):
    assert Schedule.stationary({"a": F(1, 2), "b": F(1, 2)}).pull(7).masses == {"a": F(1, 2), "b": F(1, 2)}
    assert Schedule.generator(FreshPairs()).pull(3).masses == {"a3": F(1, 2), "b3": F(1, 2)}
    assert adversary_table.pull(4).masses == {"u4": F(1, 2), "u5": F(1, 2)}
    with pytest.raises(ScheduleExhausted):
        adversary_table.pull(5)


def test_candidate_sets(pi236):
    st = Stacker(pi236, check=True)
    assert [c.symbol for c in st.candidates()] == ["a", "b", "c"]
    st.commit("a")
    st.commit("b")
    assert [c.symbol for c in st.candidates()] == ["a", "c"]
    for s in "aba":
        st.commit(s)
    assert [c.symbol for c in st.candidates()] == ["c"]
    assert st.deadline("c") == 6
    assert st.step() == "c"
    assert set(st.discrepancies().values()) == {0}


def test_single_symbol():
    run = generate(Schedule.stationary({"a": 1}), 5)
    assert run.sequence == ["a"] * 5
    assert all(r.max_abs_D == 0 for r in run.trace.rows)
    assert audit_window(run.trace).value == 0
    r = extract_rotor({"a": 1})
    assert (r.m, r.pattern) == (1, ["a"])


def test_empty_run(pi236):
    run = generate(pi236, 0)
    assert run.sequence == [] and run.state.k == 0


def test_uniform5_head_leaves_two_low():
    run = generate(Schedule.table([uniform(5)] * 3, tail="halt"), 3)
    assert len(set(run.sequence)) == 3
    d3 = run.trace.vector(3)
    assert sorted(d3.values()).count(F(-3, 5)) == 2
    rep = audit_bound(None, run.sequence, Schedule.table([uniform(5)] * 3, tail="halt"))
    assert rep.ok


def test_uniform2_orbit(uniform2):
    run = generate(uniform2, 10)

    pts = set(audit_orbit(run.trace, uniform2.fresh()).points)
    assert pts == {(0, 0), (F(1, 2), F(-1, 2))}


def test_f_discrepancy_examples():
    assert f_discrepancy("abab", FWeight({"a": 1, "b": -1}, {"a": F(1, 2), "b": F(1, 2)}))[0] == 1
    w = FWeight({"a": 1, "b": -1, "c": -1}, PI_236)
    assert f_discrepancy("ababac", w) == (1, 0)
    assert f_discrepancy("ababac", FWeight({}, PI_236)) == (0, 0)


def test_gap_examples(pi236):
    seq = generate(pi236, 60).sequence
    rep = gap_stats_all(seq, PI_236)
    assert rep["a"].max_deviation == 0
    assert all(r.weak for r in rep.values())
    assert not all(r.strict for r in rep.values())
    assert rep["b"].max_deviation == 1
    assert gap_stats_all(["x"] * 9, {"x": 1})["x"].max_deviation == 0


def test_oracle_examples(pi236):
    res = minimax_search(pi236, 6)
    assert res.opt_value <= F(5, 6) and res.greedy_value == F(5, 6)


def test_lookahead_pre_adversary():
    res = lookahead_probe()
    assert all(len(p) == 2 for p in res.pairs.values())
    assert res.canonical_d4 and res.worst_d4 == F(-11, 10)


def test_rotor_examples():
    assert extract_rotor({"a": F(1, 2), "b": F(1, 2)}).pattern == ["a", "b"]
    half = {"a": F(1, 2), "b": F(1, 2)}
    assert not verify_rotor(Rotor(2, ["a", "a"], half)).composition
    rep = verify_rotor(Rotor(4, list("abab"), half))
    assert rep.composition and not rep.minimal
