"""Distribution schedules: the stream of per-step distributions pi_1, pi_2, ...

A :class:`Schedule` wraps one of three sources (stationary, table, or a
generator callback) and keeps the cumulative masses ``P_k(s)`` at its
committed frontier ``k``. Steps are pulled strictly in order and cached, so
repeated pulls are pure reads and the first-seen order of symbols is a
property of the schedule alone, not of how far anyone has peeked.

Internally masses are also kept as integers over a common denominator
(``Schedule.scale``) in exact mode; the stacker's inner loop runs on those.
In float mode the scale is 1 and the "scaled" values are the floats
themselves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping

from . import numeric
from .numeric import Mode, Value

FLOAT_SUM_TOLERANCE = 2.0 ** -40

TAIL_POLICIES = ("halt", "repeat-last")


class ScheduleError(ValueError):
    pass


class ScheduleExhausted(ScheduleError):
    """Raised when a step past the end of a halting table is requested."""


class LookaheadCapExceeded(ScheduleError):
    pass


@dataclass(frozen=True)
class StepDist:
    step: int
    masses: Mapping[str, Value]

    def __getitem__(self, label: str) -> Value:
        return self.masses[label]

    def get(self, label: str, default=0):
        return self.masses.get(label, default)


def normalize_masses(raw: Mapping[str, object], mode: Mode, where: str = "") -> dict[str, Value]:
    """Validate one distribution and return its positive masses in ``mode``.

    Zero masses are dropped: a symbol only exists once some step gives it
    positive mass.
    """
    out: dict[str, Value] = {}
    exact = mode is Mode.EXACT
    for label, v in raw.items():
        if not isinstance(label, str):
            raise ScheduleError(f"{where}symbol labels must be strings, got {label!r}")
        if exact and type(v) is Fraction:
            val = v
        else:
            try:
                val = numeric.coerce(v, mode)
            except numeric.NumericError as exc:
                raise ScheduleError(f"{where}symbol {label!r}: {exc}") from exc
            if val != val:
                raise ScheduleError(f"{where}symbol {label!r}: mass is NaN")
        if val < 0:
            raise ScheduleError(f"{where}symbol {label!r}: mass must be nonnegative, got {val}")
        if val:
            out[label] = val
    if not out:
        raise ScheduleError(f"{where}distribution has no positive mass")
    if exact:
        den = numeric.common_denominator(out.values())
        total = sum(f.numerator * (den // f.denominator) for f in out.values())
        if total != den:
            raise ScheduleError(f"{where}masses sum to {numeric.fmt(Fraction(total, den))}, not 1")
        return out
    total = math.fsum(out.values())
    if abs(total - 1.0) > FLOAT_SUM_TOLERANCE:
        raise ScheduleError(f"{where}masses sum to {total!r}, not within 2^-40 of 1")
    if total != 1.0:
        out = {label: v / total for label, v in out.items()}
    return out


class StationarySource:
    stationary_from = 1
    length = None

    def __init__(self, dist: Mapping[str, object]):
        self.dist = dict(dist)

    def __call__(self, i: int) -> Mapping[str, object]:
        return self.dist


class TableSource:
    def __init__(self, steps: list[Mapping[str, object]], tail: str = "halt"):
        if tail not in TAIL_POLICIES:
            raise ScheduleError(f"unknown tail policy {tail!r}")
        if not steps:
            raise ScheduleError("table source needs at least one step")
        self.steps = [dict(s) for s in steps]
        self.tail = tail
        n = len(self.steps)
        # steps n, n+1, ... are identical under repeat-last
        self.stationary_from = n if tail == "repeat-last" else None
        self.length = n if tail == "halt" else None

    def __call__(self, i: int) -> Mapping[str, object]:
        if i <= len(self.steps):
            return self.steps[i - 1]
        if self.tail == "halt":
            raise ScheduleExhausted(f"table has {len(self.steps)} steps; step {i} requested")
        return self.steps[-1]


class GeneratorSource:
    """Adapter for a deterministic callback ``i -> {label: mass}``."""

    stationary_from = None
    length = None

    def __init__(self, fn: Callable[[int], Mapping[str, object]]):
        self.fn = fn

    def __call__(self, i: int) -> Mapping[str, object]:
        return self.fn(i)


class Schedule:
    def __init__(self, source, mode: Mode | str = Mode.EXACT, lookahead_cap: int | None = None):
        if not hasattr(source, "stationary_from"):
            source = GeneratorSource(source)
        self.source = source
        self.mode = Mode(mode)
        self.lookahead_cap = lookahead_cap
        self.symbols: list[str] = []
        self.index: dict[str, int] = {}
        self.scale = 1
        self.k = 0
        self._dists: list[StepDist] = []
        self._scaled: list[dict[int, object]] = []
        self._prefix: list = []
        self._last_raw = None

    # constructors -------------------------------------------------------

    @classmethod
    def stationary(cls, dist: Mapping[str, object], mode=Mode.EXACT, **kw) -> "Schedule":
        normalize_masses(dist, Mode(mode))
        return cls(StationarySource(dist), mode, **kw)

    @classmethod
    def table(cls, steps, tail: str = "halt", mode=Mode.EXACT, **kw) -> "Schedule":
        for i, s in enumerate(steps, 1):
            normalize_masses(s, Mode(mode), f"step {i}: ")
        return cls(TableSource(steps, tail), mode, **kw)

    @classmethod
    def generator(cls, fn, mode=Mode.EXACT, **kw) -> "Schedule":
        return cls(GeneratorSource(fn), mode, **kw)

    def fresh(self) -> "Schedule":
        """A new schedule over the same source with nothing pulled."""
        return Schedule(self.source, self.mode, self.lookahead_cap)

    # properties of the source --------------------------------------------

    @property
    def stationary_from(self) -> int | None:
        return self.source.stationary_from

    @property
    def length(self) -> int | None:
        return self.source.length

    @property
    def pulled(self) -> int:
        return len(self._dists)

    def is_stationary(self) -> bool:
        return self.source.stationary_from == 1

    # pulling --------------------------------------------------------------

    def _register(self, label: str) -> int:
        idx = self.index.get(label)
        if idx is None:
            idx = len(self.symbols)
            self.index[label] = idx
            self.symbols.append(label)
            self._prefix.append(0 if self.mode is Mode.EXACT else 0.0)
        return idx

    def _rescale(self, factor: int) -> None:
        self.scale *= factor
        for d in self._scaled:
            for idx in d:
                d[idx] *= factor
        self._prefix[:] = [p * factor for p in self._prefix]

    def _fetch_next(self) -> None:
        i = len(self._dists) + 1
        if self.lookahead_cap is not None and i - self.k > self.lookahead_cap:
            raise LookaheadCapExceeded(
                f"lookahead cache cap {self.lookahead_cap} hit at step {i} (frontier {self.k})"
            )
        raw = self.source(i)
        if raw is self._last_raw:
            # stationary stretch: same mapping object as the previous step
            self._dists.append(StepDist(i, self._dists[-1].masses))
            self._scaled.append(dict(self._scaled[-1]))
            return
        masses = normalize_masses(raw, self.mode, f"step {i}: ")
        dist = StepDist(i, masses)
        scaled: dict[int, object] = {}
        if self.mode is Mode.EXACT:
            den = numeric.common_denominator(masses.values())
            if self.scale % den:
                self._rescale(math.lcm(self.scale, den) // self.scale)
            for label, f in masses.items():
                scaled[self._register(label)] = f.numerator * (self.scale // f.denominator)
        else:
            for label, f in masses.items():
                scaled[self._register(label)] = f
        self._dists.append(dist)
        self._scaled.append(scaled)
        self._last_raw = raw

    def pull(self, i: int) -> StepDist:
        if i < 1:
            raise ScheduleError(f"step index must be >= 1, got {i}")
        while len(self._dists) < i:
            self._fetch_next()
        return self._dists[i - 1]

    def scaled_step(self, i: int) -> dict[int, object]:
        """Step ``i`` as ``{symbol index: mass * scale}``. Internal fast view."""
        while len(self._scaled) < i:
            self._fetch_next()
        return self._scaled[i - 1]

    # prefix masses ----------------------------------------------------------

    def advance_prefix(self) -> int:
        step = self.scaled_step(self.k + 1)
        prefix = self._prefix
        for idx, m in step.items():
            prefix[idx] += m
        self.k += 1
        return self.k

    def _unscale(self, v) -> Value:
        if self.mode is Mode.EXACT:
            return Fraction(v, self.scale)
        return v

    def prefix(self, label: str) -> Value:
        idx = self.index.get(label)
        if idx is None:
            return self._unscale(0) if self.mode is Mode.EXACT else 0.0
        return self._unscale(self._prefix[idx])

    def prefix_vector(self) -> dict[str, Value]:
        return {label: self._unscale(self._prefix[i]) for i, label in enumerate(self.symbols)}

    def peek_prefix(self, label: str, kp: int) -> Value:
        """P_{kp}(label) for ``kp >= k`` without moving the frontier."""
        if kp < self.k:
            raise ScheduleError(f"peek at {kp} is behind the frontier {self.k}")
        if kp > self.k:
            self.pull(kp)
        total = Fraction(0) if self.mode is Mode.EXACT else 0.0
        idx = self.index.get(label)
        if idx is None:
            return total
        total = self._unscale(self._prefix[idx])
        for i in range(self.k + 1, kp + 1):
            total += self._dists[i - 1].get(label, 0)
        return total


# JSON-lines documents -------------------------------------------------------


def _no_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ScheduleError(f"duplicate key {key!r}")
        out[key] = value
    return out


def parse_schedule(text: str | Iterable[str], mode: Mode | str | None = None, **kw) -> Schedule:
    """Build a schedule from a JSON-lines document.

    The first line must be the mode header. ``mode`` overrides it (e.g.
    to run an exact document in float mode).
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    records = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            records.append((n, json.loads(line, object_pairs_hook=_no_duplicates)))
        except json.JSONDecodeError as exc:
            raise ScheduleError(f"line {n}: invalid JSON ({exc.msg})") from exc
    if not records or set(records[0][1]) != {"mode"}:
        raise ScheduleError('first line must be a {"mode": ...} header')
    try:
        doc_mode = Mode(records[0][1]["mode"])
    except ValueError as exc:
        raise ScheduleError(f"unknown mode {records[0][1]['mode']!r}") from exc
    run_mode = Mode(mode) if mode is not None else doc_mode

    stationary = None
    steps: dict[int, Mapping] = {}
    tail = None
    for n, rec in records[1:]:
        if "stationary" in rec and set(rec) == {"stationary"}:
            if stationary is not None:
                raise ScheduleError(f"line {n}: second stationary line")
            stationary = rec["stationary"]
        elif "step" in rec and set(rec) == {"step", "probs"}:
            i = rec["step"]
            if not isinstance(i, int) or isinstance(i, bool) or i < 1:
                raise ScheduleError(f"line {n}: step index must be a positive integer")
            if i in steps:
                raise ScheduleError(f"line {n}: duplicate step index {i}")
            steps[i] = rec["probs"]
        elif set(rec) == {"tail"}:
            if tail is not None:
                raise ScheduleError(f"line {n}: second tail line")
            if rec["tail"] not in TAIL_POLICIES:
                raise ScheduleError(f"line {n}: unknown tail policy {rec['tail']!r}")
            tail = rec["tail"]
        else:
            raise ScheduleError(f"line {n}: unrecognised line {sorted(rec)}")

    if stationary is not None:
        if steps or tail is not None:
            raise ScheduleError("stationary shorthand cannot be combined with step or tail lines")
        try:
            dist = _convert(stationary, doc_mode, run_mode)
        except ScheduleError as exc:
            raise ScheduleError(f"stationary: {exc}") from exc
        return Schedule.stationary(dist, run_mode, **kw)
    if not steps:
        raise ScheduleError("document has neither a stationary line nor step lines")
    if sorted(steps) != list(range(1, len(steps) + 1)):
        raise ScheduleError(f"step indices must be 1..{len(steps)} without gaps")
    table = [steps[i] for i in range(1, len(steps) + 1)]
    table = [_convert(p, doc_mode, run_mode, f"step {i}: ") for i, p in enumerate(table, 1)]
    return Schedule(TableSource(table, tail or "halt"), run_mode, **kw)


def _convert(probs: Mapping, from_mode: Mode, to_mode: Mode, where: str = "") -> dict:
    masses = normalize_masses(probs, from_mode, where)
    return {label: numeric.coerce(v, to_mode) for label, v in masses.items()}


def load_schedule(path: str | Path, mode: Mode | str | None = None, **kw) -> Schedule:
    return parse_schedule(Path(path).read_text(), mode, **kw)


def _probs_json(probs: Mapping[str, object], mode: Mode) -> dict:
    if mode is Mode.EXACT:
        return {label: numeric.fmt(numeric.coerce(v, mode)) for label, v in probs.items()}
    return {label: float(numeric.coerce(v, mode)) for label, v in probs.items()}


def stationary_document(dist: Mapping[str, object], mode: Mode | str = Mode.EXACT) -> str:
    mode = Mode(mode)
    lines = [{"mode": mode.value}, {"stationary": _probs_json(dist, mode)}]
    return "".join(json.dumps(r) + "\n" for r in lines)


def table_document(steps, tail: str = "halt", mode: Mode | str = Mode.EXACT) -> str:
    mode = Mode(mode)
    lines = [{"mode": mode.value}]
    lines += [{"step": i, "probs": _probs_json(p, mode)} for i, p in enumerate(steps, 1)]
    lines.append({"tail": tail})
    return "".join(json.dumps(r) + "\n" for r in lines)
