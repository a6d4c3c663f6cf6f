"""Seeded random test instances. Nothing here is used by the generator itself."""

from __future__ import annotations

import random
from fractions import Fraction

from .numeric import Mode
from .schedule import Schedule, stationary_document, table_document

KINDS = ("stationary", "table", "generator")


def labels(n: int, prefix: str = "s") -> list[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def random_distribution(rng: random.Random, symbols: list[str], max_den: int = 30) -> dict[str, Fraction]:
    """Positive masses on ``symbols`` with a common denominator <= max_den."""
    n = len(symbols)
    if n > max_den:
        raise ValueError("support larger than the denominator bound")
    d = rng.randint(n, max_den)
    cuts = sorted(rng.sample(range(1, d), n - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [d])]
    return {s: Fraction(p, d) for s, p in zip(symbols, parts)}


class RandomSteps:
    """Deterministic generator source: step i is a random distribution on a
    random nonempty subset of ``universe``, seeded by (seed, i)."""

    def __init__(self, seed: int, universe: list[str], max_den: int = 30):
        self.seed = seed
        self.universe = list(universe)
        self.max_den = max_den
        self._cache: dict[int, dict[str, Fraction]] = {}

    def __call__(self, i: int) -> dict[str, Fraction]:
        # memoized so that audits replaying the schedule do not redraw
        out = self._cache.get(i)
        if out is None:
            rng = random.Random(self.seed * 1_000_003 + i)
            k = rng.randint(1, len(self.universe))
            out = self._cache[i] = random_distribution(rng, rng.sample(self.universe, k), self.max_den)
        return out


class FreshPairs:
    """Step i puts mass 1/2 on each of two symbols never used before."""

    def __call__(self, i: int) -> dict[str, Fraction]:
        return {f"a{i}": Fraction(1, 2), f"b{i}": Fraction(1, 2)}


def random_schedule(
    seed: int,
    kind: str | None = None,
    max_support: int = 8,
    max_den: int = 30,
    table_len: int = 50,
) -> Schedule:
    rng = random.Random(seed)
    kind = kind or rng.choice(KINDS)
    universe = labels(rng.randint(1, max_support))
    if kind == "stationary":
        return Schedule.stationary(random_distribution(rng, universe, max_den))
    if kind == "table":
        n = rng.randint(1, table_len)
        steps = []
        for _ in range(n):
            support = rng.sample(universe, rng.randint(1, len(universe)))
            steps.append(random_distribution(rng, support, max_den))
        return Schedule.table(steps, tail="repeat-last")
    if kind == "generator":
        return Schedule.generator(RandomSteps(rng.randrange(2 ** 32), universe, max_den))
    raise ValueError(f"unknown kind {kind!r}")


def random_document(seed: int, kind: str = "stationary", max_support: int = 8, max_den: int = 30) -> str:
    """JSON-lines text for a random stationary or repeat-last table schedule."""
    if kind not in ("stationary", "table"):
        raise ValueError("only stationary and table schedules have a file form")
    sched = random_schedule(seed, kind, max_support, max_den)
    if kind == "stationary":
        return stationary_document(sched.source.dist, Mode.EXACT)
    return table_document(sched.source.steps, sched.source.tail, Mode.EXACT)
