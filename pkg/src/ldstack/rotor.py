"""Periodic sequences ("rotors") for rational stationary distributions.

With a deterministic tiebreak the next choice is a function of the current
discrepancy vector alone. After m = lcm(denominators) steps every D_m(s) is
an integer strictly inside (-1, 1), hence zero, so the run is back at its
starting state and repeats with period m.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import numeric
from .numeric import Mode
from .schedule import Schedule
from .stacker import Tiebreak, generate


class RotorError(ValueError):
    pass


@dataclass
class Rotor:
    m: int
    pattern: list[str]
    pi: dict[str, Fraction]

    def to_json(self) -> str:
        return json.dumps(
            {"m": self.m, "pattern": self.pattern, "pi": {s: numeric.fmt(v) for s, v in self.pi.items()}}
        )

    @classmethod
    def from_json(cls, text: str) -> "Rotor":
        doc = json.loads(text)
        pi = {s: numeric.coerce(v, Mode.EXACT) for s, v in doc["pi"].items()}
        return cls(int(doc["m"]), list(doc["pattern"]), pi)


def _rational_support(pi: Mapping[str, object]) -> dict[str, Fraction]:
    out = {}
    for s, v in pi.items():
        if isinstance(v, float):
            raise RotorError(f"mass of {s!r} is a float; rotors need rational masses")
        v = numeric.coerce(v, Mode.EXACT)
        if v:
            out[s] = v
    if sum(out.values()) != 1:
        raise RotorError("masses must sum to 1")
    return out


def period(pi: Mapping[str, Fraction]) -> int:
    return math.lcm(*(Fraction(v).denominator for v in pi.values() if v))


def extract_rotor(pi: Mapping[str, object], tiebreak: Tiebreak | str = Tiebreak.FIRST_SEEN) -> Rotor:
    try:
        tiebreak = Tiebreak(tiebreak)
    except ValueError as exc:
        raise RotorError(f"no deterministic tiebreak policy named {tiebreak!r}") from exc
    support = _rational_support(pi)
    m = period(support)
    run = generate(Schedule.stationary(support), 2 * m, tiebreak, horizon_cap=None)
    seq = run.sequence
    d_m = run.trace.vector(m)
    if any(d_m.values()):
        raise RotorError(f"D_{m} is not zero: {d_m}")
    if seq[m:] != seq[:m]:
        raise RotorError(f"sequence does not repeat with period {m}")
    return Rotor(m, seq[:m], support)


@dataclass
class RotorReport:
    composition: bool
    returns_to_zero: bool
    max_abs_D: Fraction
    bounded: bool
    period_matches: bool
    minimal: bool
    problems: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.composition and self.returns_to_zero and self.bounded
                and self.period_matches and self.minimal)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "composition": self.composition,
            "returns_to_zero": self.returns_to_zero,
            "max_abs_D": numeric.fmt(self.max_abs_D),
            "bounded": self.bounded,
            "period_matches": self.period_matches,
            "minimal": self.minimal,
            "problems": self.problems,
        }


def _walk(pattern, pi, steps):
    """D after each of ``steps`` terms of the repeated pattern."""
    d = {s: Fraction(0) for s in pi}
    out = []
    for k in range(steps):
        for s, p in pi.items():
            d[s] -= p
        s = pattern[k % len(pattern)]
        d[s] = d.get(s, Fraction(0)) + 1
        out.append(dict(d))
    return out


def verify_rotor(rotor: Rotor) -> RotorReport:
    m, pattern, pi = rotor.m, rotor.pattern, rotor.pi
    problems = []
    if len(pattern) != m:
        problems.append(f"pattern has {len(pattern)} terms, m = {m}")
    composition = True
    for s in set(pi) | set(pattern):
        want = m * pi.get(s, 0)
        got = pattern.count(s)
        if got != want:
            composition = False
            problems.append(f"{s} occurs {got} times, expected {numeric.fmt(Fraction(want))}")
    walk = _walk(pattern, pi, m) if pattern else []
    returns = bool(walk) and not any(walk[-1].values())
    if not returns:
        problems.append(f"D_{m} is not zero")
    big = max((abs(v) for d in walk for v in d.values()), default=Fraction(0))
    bounded = big < 1
    if not bounded:
        problems.append(f"max |D_k| within the period is {numeric.fmt(big)}")
    lcm = period(pi)
    matches = lcm == m
    if not matches:
        problems.append(f"m = {m} but lcm of denominators is {lcm}")
    minimal = True
    for d in range(1, m):
        if m % d == 0 and all(pattern[i] == pattern[i % d] for i in range(len(pattern))):
            if walk and not any(walk[d - 1].values()):
                minimal = False
                problems.append(f"pattern already repeats with period {d}")
                break
    return RotorReport(composition, returns, big, bounded, matches, minimal, problems)
