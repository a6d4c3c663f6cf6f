from fractions import Fraction as F
from itertools import product

import pytest

from ldstack import Schedule
from ldstack.instances import random_schedule
from ldstack.oracle import (
    OracleLimitError,
    exhaustive_minimax,
    lookahead_probe,
    minimax_search,
    tightness_probe,
)

PI = {"a": F(1, 2), "b": F(1, 3), "c": F(1, 6)}


def product_minimax(sched, steps):
    """Optimum by itertools.product over every sequence."""
    dists = [sched.pull(i).masses for i in range(1, steps + 1)]
    syms = []
    for d in dists:
        syms += [s for s in d if s not in syms]
    best = None
    for seq in product(syms, repeat=steps):
        d, worst = dict.fromkeys(syms, F(0)), F(0)
        for dist, s in zip(dists, seq):
            for x, m in dist.items():
                d[x] -= m
            d[s] += 1
            worst = max(worst, max(map(abs, d.values())))
        if best is None or worst < best:
            best = worst
    return best


def test_pi236_horizon_six():
    res = minimax_search(Schedule.stationary(PI), 6)
    assert res.opt_value == F(1, 2)
    assert res.witness == list("abacba")
    assert res.greedy_value == F(5, 6)


def test_uniform_two_alternates():
    res = minimax_search(Schedule.stationary({"a": F(1, 2), "b": F(1, 2)}), 10)
    assert res.opt_value == F(1, 2)
    assert res.witness == list("ab" * 5)


def test_zero_steps():
    res = minimax_search(Schedule.stationary(PI), 0)
    assert res.opt_value == 0 and res.witness == []


@pytest.mark.parametrize("seed", range(10))
def test_pruned_equals_exhaustive(seed):
    sched = random_schedule(seed, max_support=3, max_den=6, table_len=5)
    T = 6
    res = minimax_search(sched, T)
    assert res.opt_value == minimax_search(sched, T, prune=False).opt_value
    assert res.opt_value == exhaustive_minimax(sched, T)[0]
    assert res.opt_value == product_minimax(sched.fresh(), T)
    assert res.opt_value <= res.greedy_value < 1


def test_witness_attains_value():
    sched = Schedule.stationary({"a": F(2, 5), "b": F(2, 5), "c": F(1, 5)})
    res = minimax_search(sched, 7)
    value, witness = exhaustive_minimax(sched, 7)
    assert value == res.opt_value
    assert product_minimax(sched.fresh(), 7) == value


def test_deterministic_and_threads_agree():
    sched = Schedule.stationary({"a": F(3, 7), "b": F(2, 7), "c": F(2, 7)})
    a, b = minimax_search(sched, 8), minimax_search(sched, 8)
    assert a == b
    t = minimax_search(sched, 8, threads=2)
    assert (t.opt_value, t.witness) == (a.opt_value, a.witness)


def test_limits():
    big = Schedule.stationary({f"s{i}": F(1, 7) for i in range(7)})
    with pytest.raises(OracleLimitError):
        minimax_search(big, 3)
    with pytest.raises(OracleLimitError):
        minimax_search(Schedule.stationary(PI), 21)
    with pytest.raises(ValueError):
        minimax_search(Schedule.stationary(PI), 3, n=4)
    with pytest.raises(ValueError):
        minimax_search(Schedule.stationary({"a": 0.5, "b": 0.5}, mode="float"), 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_tightness(n):
    res = tightness_probe(n)
    assert res.value == F(n - 1, n)
    assert res.oracle.opt_value == res.value
    assert res.certified


def test_lookahead_probe():
    res = lookahead_probe()
    assert len(res.prefixes) == 60
    assert all(len(p) == 2 for p in res.pairs.values())
    assert res.min_forced == F(11, 10)
    assert res.canonical_sequence == ["u1", "u2", "u3", "u4"]
    assert res.worst_d4 == F(-11, 10)
    assert res.full_knowledge.opt_value == F(4, 5)
    assert res.full_greedy_max < 1
