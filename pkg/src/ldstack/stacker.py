"""Earliest-deadline greedy generator.

At step ``k+1`` a symbol ``s`` is a *candidate* when ``N_k(s) < P_{k+1}(s)``
(choosing it cannot push its discrepancy to 1 or more). Its *deadline* is the
first ``k' >= k+1`` with ``P_{k'}(s) >= N_k(s) + 1``, the step by which it
would be undersampled if never chosen. The generator picks the candidate
with the earliest deadline. With exact arithmetic every discrepancy
``N_k(s) - P_k(s)`` then stays strictly inside (-1, 1) for every ``k``.

Deadlines are found by one forward scan shared by all candidates; the scan
stops at the first step where any candidate's condition fires, which is the
minimum deadline because every condition is monotone in ``k'``. Stationary
regions of a schedule are handled in closed form instead of scanned.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from .auditor import Trace, TraceRow
from .numeric import Mode, Value, ceil_div
from .schedule import Schedule

log = logging.getLogger(__name__)

DEFAULT_HORIZON_CAP = 10 ** 6

#: Deadline value for "not found within the scanned horizon". Compares
#: greater than every resolved (integer) deadline.
UNRESOLVED = math.inf

_ZERO = Fraction(0)


class Tiebreak(str, enum.Enum):
    FIRST_SEEN = "first-seen"
    MOST_NEGATIVE = "most-negative"


class InvariantViolation(AssertionError):
    pass


class NoCandidate(RuntimeError):
    pass


@dataclass(frozen=True)
class Candidate:
    symbol: str
    slack: Value
    deadline: float | int | None = None


class Stacker:
    """Mutable generator state: step count, counts, and the schedule it drives.

    ``lookahead`` limits how many future steps deadline scans may see
    (``None`` means unlimited). ``check`` turns on per-step invariant
    assertions, which costs roughly a factor of two.
    """

    def __init__(
        self,
        sched: Schedule,
        tiebreak: Tiebreak | str = Tiebreak.FIRST_SEEN,
        horizon_cap: int | None = DEFAULT_HORIZON_CAP,
        lookahead: int | None = None,
        check: bool = False,
    ):
        if sched.k != 0:
            raise ValueError("stacker needs a schedule at frontier 0; use sched.fresh()")
        if horizon_cap is None and sched.stationary_from is None and sched.length is None:
            raise ValueError("an unbounded horizon needs a stationary or finite schedule")
        if horizon_cap is not None and horizon_cap < 1:
            raise ValueError("horizon_cap must be positive")
        self.sched = sched
        self.tiebreak = Tiebreak(tiebreak)
        self.horizon_cap = horizon_cap
        self.lookahead = _norm_lookahead(lookahead)
        self.check = check
        self.k = 0
        self.fallbacks: list[int] = []
        self._n: list[int] = []

    # read-only views ------------------------------------------------------

    @property
    def mode(self) -> Mode:
        return self.sched.mode

    @property
    def symbols(self) -> list[str]:
        return self.sched.symbols

    @property
    def counts(self) -> dict[str, int]:
        n = self._sync_counts()
        return {label: n[i] for i, label in enumerate(self.sched.symbols)}

    def discrepancy(self, label: str) -> Value:
        idx = self.sched.index.get(label)
        if idx is None:
            return Fraction(0) if self.mode is Mode.EXACT else 0.0
        return self._unscale(self._scaled_d()[idx])

    def discrepancies(self) -> dict[str, Value]:
        return {label: self._unscale(d) for label, d in zip(self.sched.symbols, self._scaled_d())}

    def _unscale(self, v) -> Value:
        return Fraction(v, self.sched.scale) if self.mode is Mode.EXACT else v

    def _sync_counts(self) -> list[int]:
        n = self._n
        missing = len(self.sched.symbols) - len(n)
        if missing > 0:
            n.extend([0] * missing)
        return n

    def _scaled_d(self) -> list:
        q = self.sched.scale
        n = self._sync_counts()
        return [n[i] * q - p for i, p in enumerate(self.sched._prefix)]

    # candidate / deadline machinery ----------------------------------------

    def _candidates(self) -> dict[int, object]:
        """Candidate index -> scaled slack ``P_{k+1}(s) - N_k(s)`` (> 0)."""
        step = self.sched.scaled_step(self.k + 1)
        q = self.sched.scale
        n = self._sync_counts()
        out = {}
        for idx, p in enumerate(self.sched._prefix):
            slack = p + step.get(idx, 0) - n[idx] * q
            if slack > 0:
                out[idx] = slack
        return out

    def _scan_limit(self, lookahead: int | None) -> float:
        limit = math.inf
        if self.horizon_cap is not None:
            limit = self.k + self.horizon_cap
        if self.sched.length is not None:
            limit = min(limit, self.sched.length)
        if lookahead is not None:
            limit = min(limit, self.k + lookahead)
        return limit

    def _deadlines(self, idxs, lookahead: int | None, first_only: bool) -> dict[int, float | int]:
        sched = self.sched
        k = self.k
        q = sched.scale
        n = self._sync_counts()
        acc = {i: sched._prefix[i] for i in idxs}
        target = {i: (n[i] + 1) * q for i in idxs}
        pending = set(idxs)
        out: dict[int, float | int] = {}
        for i in idxs:
            if acc[i] >= target[i]:
                out[i] = k + 1
                pending.discard(i)
        if out and first_only:
            return out

        start = sched.stationary_from
        closed_form = start is not None and (lookahead is None or start <= k + lookahead)
        limit = self._scan_limit(lookahead)
        kp = k
        while pending:
            if closed_form and kp >= start - 1:
                tail = sched.scaled_step(start)
                if sched.scale != q:
                    q = self._rescale_scan(q, acc, target)
                for i in pending:
                    p = tail.get(i, 0)
                    if p <= 0:
                        out[i] = UNRESOLVED
                    elif self.mode is Mode.EXACT:
                        out[i] = kp + max(1, ceil_div(target[i] - acc[i], p))
                    else:
                        out[i] = kp + max(1, math.ceil((target[i] - acc[i]) / p))
                break
            if kp + 1 > limit:
                for i in pending:
                    out[i] = UNRESOLVED
                break
            kp += 1
            step = sched.scaled_step(kp)
            if sched.scale != q:
                q = self._rescale_scan(q, acc, target)
            fired = False
            for i, m in step.items():
                if i in pending:
                    acc[i] += m
                    if acc[i] >= target[i]:
                        out[i] = kp
                        pending.discard(i)
                        fired = True
            if fired and first_only:
                break
        return out

    def _rescale_scan(self, q, acc, target):
        factor = self.sched.scale // q
        for d in (acc, target):
            for i in d:
                d[i] *= factor
        return self.sched.scale

    def _tiekey(self, idx: int):
        if self.tiebreak is Tiebreak.MOST_NEGATIVE:
            return (self._n[idx] * self.sched.scale - self.sched._prefix[idx], idx)
        return idx

    def _rank(self, lookahead: int | None):
        """Return (tied candidate indices, min deadline, used_fallback)."""
        cands = self._candidates()
        if not cands:
            raise NoCandidate(f"no candidate at step {self.k + 1}")
        deadlines = self._deadlines(list(cands), lookahead, first_only=True)
        resolved = {i: d for i, d in deadlines.items() if d != UNRESOLVED}
        if resolved:
            best = min(resolved.values())
            return [i for i, d in resolved.items() if d == best], best, False
        top = max(cands.values())
        return [i for i, s in cands.items() if s == top], UNRESOLVED, True

    # public operations -----------------------------------------------------------

    def candidates(self) -> list[Candidate]:
        syms = self.sched.symbols
        return [Candidate(syms[i], self._unscale(s)) for i, s in sorted(self._candidates().items())]

    def deadline(self, label: str, lookahead: int | None = None) -> float | int:
        """Earliest ``k' >= k+1`` with ``N_k(s) - P_{k'}(s) <= -1``, or UNRESOLVED."""
        cands = self._candidates()
        idx = self.sched.index.get(label)
        if idx is None or idx not in cands:
            raise ValueError(f"{label!r} is not a candidate at step {self.k + 1}")
        lookahead = _norm_lookahead(lookahead, self.lookahead)
        return self._deadlines([idx], lookahead, first_only=True)[idx]

    def tied(self, lookahead: int | None = None) -> list[str]:
        """Candidates sharing the selection key, before the tiebreak applies."""
        lookahead = _norm_lookahead(lookahead, self.lookahead)
        tied, _, _ = self._rank(lookahead)
        return [self.sched.symbols[i] for i in sorted(tied)]

    def select(self, lookahead: int | None = None) -> str:
        lookahead = _norm_lookahead(lookahead, self.lookahead)
        tied, best, fallback = self._rank(lookahead)
        chosen = min(tied, key=self._tiekey)
        label = self.sched.symbols[chosen]
        if fallback:
            self.fallbacks.append(self.k + 1)
            log.info(json.dumps({"k": self.k + 1, "event": "unresolved-fallback", "chosen": label}))
        elif self.check and best == self.k + 1 and len(tied) > 1:
            names = [self.sched.symbols[i] for i in tied]
            raise InvariantViolation(f"step {self.k + 1}: several critical symbols {names}")
        return label

    def commit(self, label: str) -> None:
        """Record ``label`` as the next term, whether or not the rule chose it."""
        self.sched.scaled_step(self.k + 1)
        idx = self.sched._register(label)
        n = self._sync_counts()
        n[idx] += 1
        self.sched.advance_prefix()
        self.k += 1
        if self.check:
            self._check()

    def step(self, lookahead: int | None = None) -> str:
        label = self.select(lookahead)
        self.commit(label)
        return label

    def _check(self) -> None:
        if sum(self._n) != self.k:
            raise InvariantViolation(f"counts sum to {sum(self._n)} at k={self.k}")
        q = self.sched.scale
        for label, d in zip(self.sched.symbols, self._scaled_d()):
            if not -q < d < q:
                raise InvariantViolation(
                    f"|D_{self.k}({label})| = {self._unscale(abs(d))} is not < 1"
                )


def _norm_lookahead(lookahead, default=None):
    if lookahead is None:
        return default
    if lookahead == math.inf:
        return None
    if lookahead < 1:
        raise ValueError("lookahead must be at least 1")
    return int(lookahead)


def step_online(state: Stacker, lookahead: int) -> str:
    """One step whose deadline scans may only see ``lookahead`` future steps.

    Carries no discrepancy guarantee; it exists to probe how much the rule
    depends on knowing future distributions.
    """
    return state.step(lookahead=lookahead)


@dataclass
class Run:
    sequence: list[str]
    state: Stacker
    trace: Trace


def snapshot_cadence(steps: int) -> int:
    return 1 if steps <= 10 ** 4 else 64


def generate(
    sched: Schedule,
    steps: int,
    tiebreak: Tiebreak | str = Tiebreak.FIRST_SEEN,
    horizon_cap: int | None = DEFAULT_HORIZON_CAP,
    lookahead: int | None = None,
    snapshot_every: int | None = None,
    check: bool = False,
) -> Run:
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    state = Stacker(sched, tiebreak, horizon_cap, lookahead, check)
    every = snapshot_every or snapshot_cadence(steps)
    exact = sched.mode is Mode.EXACT
    trace = Trace(sched.mode, sched.symbols)
    trace.snapshots[0] = (1, ())
    prev = (1, ())
    worst = 0
    sequence = []
    for _ in range(steps):
        label = state.step()
        sequence.append(label)
        q = sched.scale
        d = state._scaled_d()
        big, arg = 0, 0
        for i, v in enumerate(d):
            a = v if v >= 0 else -v
            if a > big:
                big, arg = a, i
        zero_sum = sum(d)
        k = state.k
        if exact:
            row = TraceRow(k, label, Fraction(big, q), sched.symbols[arg],
                           Fraction(zero_sum, q) if zero_sum else _ZERO)
        else:
            row = TraceRow(k, label, big, sched.symbols[arg], zero_sum)
        trace.rows.append(row)
        snap = (q, tuple(d))
        if row.max_abs_D > worst:
            # keep both sides of a new running extreme
            worst = row.max_abs_D
            trace.snapshots[k - 1] = prev
            trace.snapshots[k] = snap
        elif k % every == 0:
            trace.snapshots[k] = snap
        prev = snap
    trace.snapshots = dict(sorted(trace.snapshots.items()))
    return Run(sequence, state, trace)
