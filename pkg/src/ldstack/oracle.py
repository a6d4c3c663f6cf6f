"""Exhaustive minimax search over all length-T sequences of a small instance.

The value searched for is the horizon-T optimum

    min over s_1..s_T of  max over 1 <= k <= T and s of |D_k(s)|,

which can only be smaller than the infinite-horizon constant. The search is
a depth-first branch and bound in first-seen symbol order; a branch is cut
when its running maximum reaches the incumbent, or when the same
discrepancy vector was already reached at the same depth with a running
maximum no larger (the future depends only on depth and D). The first
optimum found is therefore the lexicographically first one.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import numeric
from .numeric import Mode
from .schedule import Schedule
from .stacker import DEFAULT_HORIZON_CAP, Stacker, Tiebreak, generate, step_online

MAX_SYMBOLS = 6
MAX_STEPS = 20
MAX_EXHAUSTIVE_LEAVES = 2 * 10 ** 6


class OracleLimitError(ValueError):
    pass


@dataclass
class OracleResult:
    opt_value: Fraction
    witness: list[str]
    nodes_explored: int
    greedy_value: Fraction
    horizon: int

    def to_dict(self) -> dict:
        return {
            "opt_value": numeric.fmt(self.opt_value),
            "greedy_value": numeric.fmt(self.greedy_value),
            "witness": self.witness,
            "nodes_explored": self.nodes_explored,
            "horizon": self.horizon,
        }


@dataclass
class Instance:
    symbols: list[str]
    scale: int
    rows: list[tuple[int, ...]]  # rows[k] = scaled pi_{k+1}


def instance(schedule: Schedule, steps: int) -> Instance:
    if schedule.mode is not Mode.EXACT:
        raise ValueError("the oracle needs an exact-mode schedule")
    sched = schedule.fresh()
    dists = [sched.pull(i) for i in range(1, steps + 1)]
    symbols: list[str] = []
    for d in dists:
        symbols.extend(s for s in d.masses if s not in symbols)
    scale = numeric.common_denominator(m for d in dists for m in d.masses.values())
    rows = []
    for d in dists:
        m = {s: v.numerator * (scale // v.denominator) for s, v in d.masses.items()}
        rows.append(tuple(m.get(s, 0) for s in symbols))
    return Instance(symbols, scale, rows)


def _dfs(rows, scale: int, n: int, start: tuple, depth0: int, prune: bool):
    T = len(rows)
    best = math.inf
    witness: list[int] | None = None
    nodes = 0
    seen: dict = {}
    path: list[int] = []

    def visit(depth, d, runmax):
        nonlocal best, witness, nodes
        nodes += 1
        if depth == T:
            if runmax < best:
                best, witness = runmax, list(path)
            return
        row = rows[depth]
        base = [x - r for x, r in zip(d, row)]
        for i in range(n):
            nd = list(base)
            nd[i] += scale
            m = max(runmax, max(map(abs, nd)))
            if prune:
                if m >= best:
                    continue
                key = (depth + 1, tuple(nd))
                prev = seen.get(key)
                if prev is not None and prev <= m:
                    continue
                seen[key] = m
            path.append(i)
            visit(depth + 1, nd, m)
            path.pop()

    d0, m0 = start
    visit(depth0, list(d0), m0)
    return best, witness, nodes


def _child(args):
    rows, scale, n, first, prune = args
    d = [-r for r in rows[0]]
    d[first] += scale
    best, witness, nodes = _dfs(rows, scale, n, (d, max(map(abs, d))), 1, prune)
    return best, witness, nodes


def greedy_value(schedule: Schedule, steps: int, tiebreak=Tiebreak.FIRST_SEEN,
                 horizon_cap: int | None = DEFAULT_HORIZON_CAP) -> Fraction:
    run = generate(schedule.fresh(), steps, tiebreak, horizon_cap)
    return max((r.max_abs_D for r in run.trace.rows), default=Fraction(0))


def minimax_search(
    schedule: Schedule,
    steps: int,
    n: int | None = None,
    prune: bool = True,
    threads: int = 1,
    force: bool = False,
    tiebreak: Tiebreak | str = Tiebreak.FIRST_SEEN,
) -> OracleResult:
    inst = instance(schedule, steps)
    size = len(inst.symbols)
    if n is not None and n != size:
        raise ValueError(f"schedule has {size} symbols in its first {steps} steps, not {n}")
    if not force and (size > MAX_SYMBOLS or steps > MAX_STEPS):
        raise OracleLimitError(
            f"instance n={size}, T={steps} exceeds n <= {MAX_SYMBOLS}, T <= {MAX_STEPS}"
        )
    greedy = greedy_value(schedule, steps, tiebreak)
    if steps == 0:
        return OracleResult(Fraction(0), [], 1, greedy, 0)

    if threads > 1:
        jobs = [(inst.rows, inst.scale, size, i, prune) for i in range(size)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_child, jobs))
        best, witness, nodes = math.inf, None, 1
        for i, (b, w, c) in enumerate(results):
            nodes += c
            if b < best:
                best, witness = b, [i] + w
    else:
        best, witness, nodes = _dfs(inst.rows, inst.scale, size, ([0] * size, 0), 0, prune)
    return OracleResult(
        Fraction(best, inst.scale),
        [inst.symbols[i] for i in witness],
        nodes,
        greedy,
        steps,
    )


def exhaustive_minimax(schedule: Schedule, steps: int) -> tuple[Fraction, list[str]]:
    """Brute-force optimum by enumerating every sequence level by level.

    Shares no code with :func:`minimax_search`; used to check its pruning.
    """
    inst = instance(schedule, steps)
    n = len(inst.symbols)
    if n ** steps > MAX_EXHAUSTIVE_LEAVES:
        raise OracleLimitError(f"{n}^{steps} sequences is too many to enumerate")
    if steps == 0:
        return Fraction(0), []
    dtype = np.int64 if (steps + 1) * inst.scale < 2 ** 60 else object
    D = np.zeros((1, n), dtype=dtype)
    runmax = np.zeros(1, dtype=dtype)
    eye = np.eye(n, dtype=dtype) * inst.scale
    for row in inst.rows:
        nd = (D - np.array(row, dtype=dtype))[:, None, :] + eye[None, :, :]
        nd = nd.reshape(-1, n)
        runmax = np.maximum(np.repeat(runmax, n), np.abs(nd).max(axis=1))
        D = nd
    best = int(np.argmin(runmax))
    digits = []
    for _ in range(steps):
        best, r = divmod(best, n)
        digits.append(r)
    witness = [inst.symbols[i] for i in reversed(digits)]
    return Fraction(int(runmax.min()), inst.scale), witness


# probes ----------------------------------------------------------------------


@dataclass
class TightnessResult:
    n: int
    value: Fraction
    oracle: OracleResult

    @property
    def certified(self) -> bool:
        return self.oracle.opt_value >= self.value


def uniform(symbols: list[str]) -> dict[str, Fraction]:
    return {s: Fraction(1, len(symbols)) for s in symbols}


def tightness_probe(n: int) -> TightnessResult:
    """On uniform-n, some symbol is still unseen after n-1 steps, so no
    sequence keeps every discrepancy below 1 - 1/n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > MAX_SYMBOLS:
        raise OracleLimitError(f"n={n} exceeds the oracle limit {MAX_SYMBOLS}")
    sched = Schedule.stationary(uniform([f"u{i}" for i in range(1, n + 1)]))
    return TightnessResult(n, Fraction(n - 1, n), minimax_search(sched, n - 1))


LOOKAHEAD_SYMBOLS = [f"u{i}" for i in range(1, 6)]


@dataclass
class LookaheadResult:
    prefixes: list[tuple[str, ...]]
    pairs: dict[tuple[str, ...], tuple[str, str]]
    forced: dict[tuple[str, ...], Fraction]
    canonical_table: list[dict[str, Fraction]]
    canonical_sequence: list[str]
    canonical_d4: dict[str, Fraction]
    full_knowledge: OracleResult
    full_greedy_sequence: list[str]
    full_greedy_max: Fraction

    @property
    def worst_d4(self) -> Fraction:
        return min(self.canonical_d4.values())

    @property
    def min_forced(self) -> Fraction:
        return min(self.forced.values())


def _online_state(table, prefix, lookahead=1) -> Stacker:
    st = Stacker(Schedule.table(table, tail="halt"), lookahead=lookahead)
    for s in prefix:
        st.commit(s)
    return st


def lookahead_probe() -> LookaheadResult:
    """Adversary against a rule that sees only one step ahead.

    Three uniform steps on five symbols leave two of them at -3/5 whatever
    is chosen; a fourth step uniform on exactly those two then forces one of
    them to -11/10. The same four-step table is unproblematic for a chooser
    that knows it in advance.
    """
    syms = LOOKAHEAD_SYMBOLS
    head = [uniform(syms)] * 3

    prefixes = []
    frontier = [()]
    while frontier:
        prefix = frontier.pop(0)
        if len(prefix) == 3:
            prefixes.append(prefix)
            continue
        st = _online_state(head, prefix)
        frontier.extend(prefix + (s,) for s in st.tied(lookahead=1))

    pairs, forced = {}, {}
    for prefix in prefixes:
        st = _online_state(head, prefix)
        low = tuple(s for s, d in st.discrepancies().items() if d == Fraction(-3, 5))
        pairs[prefix] = low
        table = head + [uniform(list(low))]
        outcomes = []
        for s4 in syms:
            st4 = _online_state(table, prefix + (s4,))
            outcomes.append(max(abs(d) for d in st4.discrepancies().values()))
        forced[prefix] = min(outcomes)

    # canonical run: the first-seen online chooser, then the adversary
    st = Stacker(Schedule.table(head, tail="halt"), lookahead=1)
    first = [step_online(st, 1) for _ in range(3)]
    low = [s for s, d in st.discrepancies().items() if d == Fraction(-3, 5)]
    table = head + [uniform(low)]
    st = Stacker(Schedule.table(table, tail="halt"), lookahead=1)
    seq = [step_online(st, 1) for _ in range(4)]
    assert seq[:3] == first

    full = Schedule.table(table, tail="halt")
    oracle = minimax_search(full, 4)
    run = generate(full.fresh(), 4)
    return LookaheadResult(
        prefixes,
        pairs,
        forced,
        table,
        seq,
        st.discrepancies(),
        oracle,
        run.sequence,
        max(r.max_abs_D for r in run.trace.rows),
    )
