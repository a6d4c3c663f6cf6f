"""Verification and measurement of generated sequences.

Every audit recomputes discrepancies from the raw sequence and the schedule's
step distributions with its own fold (numpy, over a common denominator it
derives itself), so it never trusts the generator's bookkeeping. Only exact
mode gives hard verdicts; float-mode reports are advisory.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import numeric
from .numeric import Mode, Value
from .schedule import Schedule, ScheduleError

TRACE_HEADER = ["k", "chosen", "max_abs_D", "argmax", "zero_sum_residual"]

_INT64_SAFE = 2 ** 62


class AuditError(ValueError):
    pass


class TraceRow(NamedTuple):
    k: int
    chosen: str
    max_abs_D: Value
    argmax: str
    zero_sum_residual: Value


@dataclass
class Trace:
    """Per-step rows plus discrepancy snapshots.

    Snapshots map ``k`` to ``(scale, scaled D tuple)`` in symbol-index order;
    a tuple shorter than ``symbols`` means the missing symbols were not yet
    seen (their discrepancy is 0). ``k = 0`` is always present.
    """

    mode: Mode
    symbols: list[str]
    rows: list[TraceRow] = field(default_factory=list)
    snapshots: dict[int, tuple[int, tuple]] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.rows)

    def vector(self, k: int) -> dict[str, Value]:
        scale, d = self.snapshots[k]
        d = tuple(d) + (0,) * (len(self.symbols) - len(d))
        if self.mode is Mode.EXACT:
            return {s: Fraction(v, scale) for s, v in zip(self.symbols, d)}
        return {s: float(v) for s, v in zip(self.symbols, d)}

    def head(self, k: int) -> "Trace":
        """The trace of the first ``k`` steps."""
        return Trace(self.mode, self.symbols, self.rows[:k],
                     {j: v for j, v in self.snapshots.items() if j <= k})

    def matrix(self) -> tuple[list[int], np.ndarray, int]:
        """Snapshot ks, a (len(ks), n) array of D over a common scale, the scale."""
        ks = sorted(self.snapshots)
        n = len(self.symbols)
        if self.mode is Mode.FLOAT:
            out = np.zeros((len(ks), n))
            for r, k in enumerate(ks):
                d = self.snapshots[k][1]
                out[r, : len(d)] = d
            return ks, out, 1
        scale = 1
        for k in ks:
            scale = math.lcm(scale, self.snapshots[k][0])
        big = max((max(map(abs, d), default=0) * (scale // q) for q, d in self.snapshots.values()), default=0)
        dtype = np.int64 if big + scale < _INT64_SAFE else object
        out = np.zeros((len(ks), n), dtype=dtype)
        for r, k in enumerate(ks):
            q, d = self.snapshots[k]
            f = scale // q
            out[r, : len(d)] = [v * f for v in d] if f != 1 else d
        return ks, out, scale

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.rows:
            w.writerow([r.k, r.chosen, numeric.fmt(r.max_abs_D), r.argmax, numeric.fmt(r.zero_sum_residual)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, mode: Mode | str = Mode.EXACT) -> "Trace":
        mode = Mode(mode)
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise AuditError(f"bad trace header {header}")
        rows = []
        symbols: list[str] = []
        for rec in reader:
            k, chosen, big, arg, zs = rec
            rows.append(TraceRow(int(k), chosen, numeric.coerce(big, mode), arg, numeric.coerce(zs, mode)))
            if chosen not in symbols:
                symbols.append(chosen)
        return cls(mode, symbols, rows)


# independent recomputation ---------------------------------------------------


@dataclass
class Recomputed:
    """D, P and N*scale for k = 0..T as (T+1, n) arrays over ``scale``."""

    symbols: list[str]
    scale: int
    exact: bool
    P: np.ndarray
    NQ: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return self.NQ - self.P

    def value(self, v) -> Value:
        return Fraction(int(v), self.scale) if self.exact else float(v)


def step_matrix(dists, symbols: list[str], index: dict[str, int], exact: bool, scale: int) -> np.ndarray:
    T, n = len(dists), len(symbols)
    if not exact:
        out = np.zeros((T, n))
        for r, dist in enumerate(dists):
            for label, m in dist.masses.items():
                out[r, index[label]] = m
        return out
    dtype = np.int64 if (T + 1) * scale * 2 < _INT64_SAFE else object
    out = np.zeros((T, n), dtype=dtype)
    for r, dist in enumerate(dists):
        for label, m in dist.masses.items():
            out[r, index[label]] = m.numerator * (scale // m.denominator)
    return out


def _pull_all(schedule: Schedule, steps: int):
    try:
        return [schedule.pull(i) for i in range(1, steps + 1)]
    except ScheduleError as exc:
        raise AuditError(f"sequence/schedule length mismatch: {exc}") from exc


def recompute(sequence: Sequence[str], schedule: Schedule) -> Recomputed:
    T = len(sequence)
    dists = _pull_all(schedule, T)
    symbols: list[str] = []
    index: dict[str, int] = {}
    for dist in dists:
        for label in dist.masses:
            if label not in index:
                index[label] = len(symbols)
                symbols.append(label)
    for label in sequence:
        if label not in index:
            index[label] = len(symbols)
            symbols.append(label)
    exact = schedule.mode is Mode.EXACT
    scale = numeric.common_denominator(m for d in dists for m in d.masses.values()) if exact else 1
    pi = step_matrix(dists, symbols, index, exact, scale)
    P = np.zeros((T + 1, len(symbols)), dtype=pi.dtype)
    np.cumsum(pi, axis=0, out=P[1:])
    NQ = np.zeros_like(P)
    if T:
        hits = np.zeros_like(pi)
        hits[np.arange(T), [index[s] for s in sequence]] = scale if exact else 1.0
        np.cumsum(hits, axis=0, out=NQ[1:])
    return Recomputed(symbols, scale, exact, P, NQ)


# bound -------------------------------------------------------------------------


@dataclass
class BoundReport:
    steps: int
    exact: bool
    max_abs: Value
    argmax: tuple[int, str] | None
    violations: list[tuple[int, str, Value]]
    zero_sum_ok: bool
    mismatches: list[int]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.mismatches and self.zero_sum_ok

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "mode": "exact" if self.exact else "float",
            "advisory": not self.exact,
            "max_abs_D": numeric.fmt(self.max_abs),
            "argmax": None if self.argmax is None else {"k": self.argmax[0], "symbol": self.argmax[1]},
            "violations": [{"k": k, "symbol": s, "D": numeric.fmt(v)} for k, s, v in self.violations],
            "zero_sum_ok": self.zero_sum_ok,
            "trace_mismatches": self.mismatches,
            "ok": self.ok,
        }


def audit_bound(trace: Trace | None, sequence: Sequence[str], schedule: Schedule) -> BoundReport:
    """Check ``|D_k(s)| < 1`` for every k <= T and every symbol.

    ``|D| = 1`` exactly counts as a violation. When a trace is given, its
    per-row maxima must agree with the recomputation.
    """
    if trace is not None and trace.steps != len(sequence):
        raise AuditError(f"trace has {trace.steps} rows, sequence has {len(sequence)} terms")
    rc = recompute(sequence, schedule)
    D = rc.D
    A = np.abs(D)
    T = len(sequence)
    one = rc.scale if rc.exact else 1.0
    bad = np.argwhere(A >= one)
    violations = [(int(k), rc.symbols[int(s)], rc.value(D[k, s])) for k, s in bad]
    if D.size:
        flat = int(np.argmax(A))
        k, s = divmod(flat, D.shape[1])
        max_abs, argmax = rc.value(A[k, s]), (k, rc.symbols[s])
    else:
        max_abs, argmax = rc.value(0), None
    if rc.exact:
        zero_sum_ok = bool((D.sum(axis=1) == 0).all())
    else:
        zero_sum_ok = bool(np.allclose(D.sum(axis=1), 0.0, atol=1e-9 * max(T, 1)))
    mismatches = []
    if trace is not None:
        row_max = A.max(axis=1).tolist() if D.size else [0] * (T + 1)
        for r in trace.rows:
            got = r.max_abs_D
            if rc.exact:
                same = got.numerator * rc.scale == row_max[r.k] * got.denominator
            else:
                same = math.isclose(got, row_max[r.k], rel_tol=1e-9, abs_tol=1e-12)
            if not same:
                mismatches.append(r.k)
    return BoundReport(T, rc.exact, max_abs, argmax, violations, zero_sum_ok, mismatches)


def audit_zero_sum(trace: Trace) -> bool:
    """Rows carry a zero residual and every snapshot sums to zero."""
    if trace.mode is Mode.FLOAT:
        return all(abs(r.zero_sum_residual) < 1e-9 * max(r.k, 1) for r in trace.rows)
    if any(r.zero_sum_residual != 0 for r in trace.rows):
        return False
    return all(sum(d) == 0 for _, d in trace.snapshots.values())


# window ---------------------------------------------------------------------------


@dataclass
class WindowReport:
    value: Value
    symbol: str | None
    steps: tuple[int, int] | None
    sampled: bool


def audit_window(trace: Trace) -> WindowReport:
    """max over snapshot pairs j <= k and symbols of ``|D_k(s) - D_j(s)|``.

    The origin snapshot ``D_0 = 0`` takes part, so the value is never below
    the largest single ``|D_k(s)|``. With sampled snapshots the result is a
    lower bound.
    """
    ks, M, scale = trace.matrix()
    sampled = ks != list(range(trace.steps + 1))
    if M.shape[1] == 0:
        zero = Fraction(0) if trace.mode is Mode.EXACT else 0.0
        return WindowReport(zero, None, None, sampled)
    hi, lo = M.max(axis=0), M.min(axis=0)
    spread = hi - lo
    s = int(np.argmax(spread))
    j, k = sorted((ks[int(np.argmin(M[:, s]))], ks[int(np.argmax(M[:, s]))]))
    value = Fraction(int(spread[s]), scale) if trace.mode is Mode.EXACT else float(spread[s])
    return WindowReport(value, trace.symbols[s], (j, k), sampled)


# orbit ------------------------------------------------------------------------------


@dataclass
class OrbitReport:
    in_box: bool
    recurrence_ok: bool
    max_residual: Value
    checked: int
    _points: list = field(repr=False, default_factory=list)
    _scale: int = 1
    _exact: bool = True

    @property
    def points(self) -> list[tuple[Value, ...]]:
        if self._exact:
            return [tuple(Fraction(int(v), self._scale) for v in p) for p in self._points]
        return [tuple(float(v) for v in p) for p in self._points]

    @property
    def size(self) -> int:
        return len(self._points)


def audit_orbit(trace: Trace, schedule: Schedule) -> OrbitReport:
    """Check ``D_{k+1} = D_k - pi_{k+1} + e_chosen`` and ``D_k`` in [-1, 1]^n.

    The recurrence is checked on every pair of consecutive snapshots. The
    distinct snapshot vectors are returned as the orbit.
    """
    ks, M, tscale = trace.matrix()
    exact = trace.mode is Mode.EXACT
    T = trace.steps
    dists = _pull_all(schedule, T)
    index = {s: i for i, s in enumerate(trace.symbols)}
    for d in dists:
        for label in d.masses:
            if label not in index:
                raise AuditError(f"symbol {label!r} missing from trace")
    scale = 1
    if exact:
        scale = math.lcm(tscale, numeric.common_denominator(m for d in dists for m in d.masses.values()))
        if scale != tscale:
            M = M * (scale // tscale)
    one = scale if exact else 1.0
    in_box = bool((np.abs(M) <= one).all())

    pos = {k: r for r, k in enumerate(ks)}
    pairs = [(pos[k], pos[k + 1], k) for k in ks if k + 1 in pos]
    worst = 0
    if pairs:
        pi = step_matrix(dists, trace.symbols, index, exact, scale)
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        steps = np.array([p[2] for p in pairs])
        hits = np.zeros((len(pairs), M.shape[1]), dtype=M.dtype)
        hits[np.arange(len(pairs)), [index[trace.rows[k].chosen] for k in steps]] = one
        resid = M[b] - (M[a] - pi[steps] + hits)
        worst = np.abs(resid).max() if resid.size else 0
    ok = worst == 0 if exact else worst < 1e-9 * max(T, 1)
    if exact:
        pts = sorted({tuple(int(v) for v in row) for row in M.tolist()})
        max_residual = Fraction(int(worst), scale)
    else:
        pts = sorted({tuple(row) for row in M.tolist()})
        max_residual = float(worst)
    return OrbitReport(in_box, bool(ok), max_residual, len(pairs), pts, scale, exact)


# induction count -----------------------------------------------------------------------


def audit_induction(sequence: Sequence[str], schedule: Schedule, pairs: Iterable[tuple[int, int]]):
    """For each (k, k'), compare sum_s floor(P_{k'}(s) - N_k(s))^+ with k' - k.

    Returns ``(ok, rows)`` with rows ``(k, k', total, k' - k)``.
    """
    rc = recompute(sequence, schedule)
    if not rc.exact:
        raise AuditError("the induction check needs exact mode")
    rows = []
    for k, kp in pairs:
        if not 0 <= k < kp <= len(sequence):
            raise AuditError(f"bad pair ({k}, {kp})")
        need = (rc.P[kp] - rc.NQ[k]) // rc.scale
        total = int(np.clip(need, 0, None).sum())
        rows.append((k, kp, total, kp - k))
    return all(t <= b for _, _, t, b in rows), rows


# f-discrepancy -------------------------------------------------------------------------


@dataclass
class FWeight:
    f: Mapping[str, Value]
    pi: Mapping[str, Value] | None = None

    @property
    def residual(self) -> Value:
        if self.pi is None:
            return 0
        return sum(self.f.get(s, 0) * p for s, p in self.pi.items())

    def __post_init__(self):
        if self.residual != 0:
            raise AuditError(f"sum_s f(s) pi(s) = {numeric.fmt(self.residual)}, must be 0")


def f_discrepancy(sequence: Iterable[str], weights: FWeight) -> tuple[Value, Value]:
    """Max and min of the running sums ``sum_{i<k} f(s_i)``, empty sum included."""
    total = 0
    hi = lo = 0
    for s in sequence:
        total += weights.f.get(s, 0)
        hi = max(hi, total)
        lo = min(lo, total)
    return hi, lo


# gap statistics ---------------------------------------------------------------------------


@dataclass
class GapReport:
    symbol: str
    occurrences: int
    max_deviation: Value
    weak: bool
    strict: bool

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "occurrences": self.occurrences,
            "max_deviation": numeric.fmt(self.max_deviation),
            "weak_within_1": self.weak,
            "strict_within_1": self.strict,
        }


def gap_stats(sequence: Sequence[str], pi: Mapping[str, Value], symbol: str) -> GapReport:
    """Largest ``|(pos_n - pos_m) - (n - m)/pi(s)|`` over occurrence pairs.

    Writing ``g(j) = pos_j - j/pi(s)`` the pair term is ``|g(n) - g(m)|``, so
    the maximum over pairs is ``max g - min g``.
    """
    p = pi.get(symbol, 0)
    if not p:
        raise AuditError(f"symbol {symbol!r} has no mass")
    positions = [i for i, s in enumerate(sequence, 1) if s == symbol]
    if len(positions) < 2:
        raise AuditError(f"symbol {symbol!r} occurs {len(positions)} times; need at least 2")
    inv = 1 / p
    g = [pos - j * inv for j, pos in enumerate(positions, 1)]
    dev = max(g) - min(g)
    return GapReport(symbol, len(positions), dev, dev <= 1, dev < 1)


def gap_stats_all(sequence: Sequence[str], pi: Mapping[str, Value]) -> dict[str, GapReport]:
    return {s: gap_stats(sequence, pi, s) for s in pi if sequence.count(s) >= 2}


def report_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)
