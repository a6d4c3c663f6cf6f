from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from ldstack import Schedule, generate
from ldstack.auditor import (
    AuditError,
    FWeight,
    Trace,
    audit_bound,
    audit_induction,
    audit_orbit,
    audit_window,
    audit_zero_sum,
    f_discrepancy,
    gap_stats,
    gap_stats_all,
    recompute,
)
from ldstack.instances import random_schedule

PI = {"a": F(1, 2), "b": F(1, 3), "c": F(1, 6)}


def brute_d(sequence, sched):
    """D_k for k = 0..T as dicts, from the definition."""
    counts, prefix, out = {}, {}, [{}]
    for k, s in enumerate(sequence, 1):
        for label, m in sched.pull(k).masses.items():
            prefix[label] = prefix.get(label, 0) + m
        counts[s] = counts.get(s, 0) + 1
        keys = set(prefix) | set(counts)
        out.append({x: counts.get(x, 0) - prefix.get(x, 0) for x in keys})
    return out


def brute_window(ds):
    keys = set().union(*ds)
    return max(
        abs(ds[k].get(s, 0) - ds[j].get(s, 0)) for s in keys for j, k in combinations(range(len(ds)), 2)
    )


def test_recompute_matches_brute_force():
    sched = random_schedule(3, "generator", max_support=5, max_den=10)
    run = generate(sched, 80, horizon_cap=200)
    rc = recompute(run.sequence, sched.fresh())
    ds = brute_d(run.sequence, sched.fresh())
    for k in (1, 17, 80):
        got = {s: rc.value(rc.D[k, i]) for i, s in enumerate(rc.symbols)}
        assert {s: v for s, v in got.items() if s in ds[k]} == ds[k]


def test_bound_report_ok(pi236):
    run = generate(pi236, 60)
    rep = audit_bound(run.trace, run.sequence, pi236.fresh())
    assert rep.ok
    assert rep.max_abs == F(5, 6)
    assert rep.argmax == (5, "c")


def test_bound_flags_equality_at_one(uniform2):
    rep = audit_bound(None, ["a", "a"], uniform2)
    assert not rep.ok
    assert (2, "a", F(1)) in rep.violations and (2, "b", F(-1)) in rep.violations


def test_bound_detects_trace_mismatch(pi236):
    run = generate(pi236, 6)
    rows = list(run.trace.rows)
    rows[2] = rows[2]._replace(max_abs_D=F(1, 7))
    bad = Trace(run.trace.mode, run.trace.symbols, rows, run.trace.snapshots)
    assert audit_bound(bad, run.sequence, pi236.fresh()).mismatches == [3]


def test_length_mismatch():
    sched = Schedule.table([{"a": 1}], tail="halt")
    with pytest.raises(AuditError):
        audit_bound(None, ["a", "a"], sched)
    run = generate(Schedule.stationary(PI), 4)
    with pytest.raises(AuditError):
        audit_bound(run.trace, run.sequence[:3], Schedule.stationary(PI))


def test_zero_sum_and_orbit(pi236):
    run = generate(pi236, 60)
    assert audit_zero_sum(run.trace)
    orb = audit_orbit(run.trace, pi236.fresh())
    assert orb.in_box and orb.recurrence_ok
    assert orb.checked == 60
    assert orb.size == 6
    assert (F(0), F(0), F(0)) in orb.points


def test_orbit_detects_broken_recurrence(pi236):
    run = generate(pi236, 6)
    q, d = run.trace.snapshots[3]
    run.trace.snapshots[3] = (q, (d[0] + 1, d[1] - 1) + d[2:])
    assert not audit_orbit(run.trace, pi236.fresh()).recurrence_ok


def test_window_example(pi236):
    run = generate(pi236, 6)
    rep = audit_window(run.trace)
    ds = brute_d(run.sequence, pi236.fresh())
    assert rep.value == brute_window(ds) == 1
    assert rep.symbol == "b" and rep.steps == (1, 4)
    assert not rep.sampled


@pytest.mark.parametrize("seed", range(8))
def test_window_matches_pairs(seed):
    sched = random_schedule(seed, max_support=5, max_den=12, table_len=10)
    run = generate(sched, 40, horizon_cap=200)
    assert audit_window(run.trace).value == brute_window(brute_d(run.sequence, sched.fresh()))


def test_csv_roundtrip(pi236):
    run = generate(pi236, 30)
    text = run.trace.to_csv()
    back = Trace.from_csv(text)
    assert back.rows == run.trace.rows
    assert back.to_csv() == text


def test_induction_count(pi236):
    run = generate(pi236, 30)
    ok, rows = audit_induction(run.sequence, pi236.fresh(), [(0, 30), (4, 10), (5, 6)])
    assert ok
    assert rows[0] == (0, 30, 30, 30)


def test_induction_catches_bad_sequence(uniform2):
    ok, _ = audit_induction(list("ababab"), uniform2, [(0, 6), (3, 5)])
    assert ok
    ok, rows = audit_induction(["a"] * 6, uniform2.fresh(), [(4, 6)])
    assert not ok and rows[0][2] == 3


def test_f_discrepancy():
    w = FWeight({"a": 1, "b": -1}, {"a": F(1, 2), "b": F(1, 2)})
    assert f_discrepancy("abab", w) == (1, 0)
    assert f_discrepancy("abba", w) == (1, -1)
    assert f_discrepancy("bbaa", w) == (0, -2)
    with pytest.raises(AuditError):
        FWeight({"a": 1, "b": 0}, {"a": F(1, 2), "b": F(1, 2)})


def brute_gap(seq, p, s):
    pos = [i for i, x in enumerate(seq, 1) if x == s]
    return max(abs((pos[n] - pos[m]) - (n - m) / p) for m, n in combinations(range(len(pos)), 2))


def test_gap_stats_example(pi236):
    seq = generate(pi236, 60).sequence
    rep = gap_stats_all(seq, PI)
    for s, r in rep.items():
        assert r.max_deviation == brute_gap(seq, PI[s], s)
    assert rep["c"].max_deviation == 0


@given(st.lists(st.sampled_from("ab"), min_size=2, max_size=30), st.fractions(F(1, 10), F(9, 10)))
def test_gap_stats_matches_pairs(seq, p):
    if seq.count("a") < 2:
        with pytest.raises(AuditError):
            gap_stats(seq, {"a": p, "b": 1 - p}, "a")
        return
    r = gap_stats(seq, {"a": p, "b": 1 - p}, "a")
    assert r.max_deviation == brute_gap(seq, p, "a")
    assert r.weak == (r.max_deviation <= 1)


def test_head_matches_shorter_run(pi236):
    long = generate(pi236, 50).trace.head(20)
    short = generate(pi236.fresh(), 20).trace
    assert long.rows == short.rows and long.snapshots == short.snapshots
