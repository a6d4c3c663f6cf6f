"""Arithmetic substrate shared by every other module.

Two numeric modes exist. In exact mode every mass and discrepancy is a
:class:`fractions.Fraction` (arbitrary-precision, always in lowest terms).
In float mode they are plain IEEE doubles, compared raw with no epsilon, so
the strict discrepancy bound only holds up to accumulated rounding
(roughly ``k`` ulps after ``k`` steps). Acceptance and audit verdicts are
only authoritative in exact mode.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

Value = Union[Fraction, float]


class Mode(str, enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


class NumericError(ValueError):
    pass


class ModeMismatch(NumericError, TypeError):
    pass


class Incomparable(NumericError):
    pass


def mode_of(value) -> Mode:
    if isinstance(value, float):
        return Mode.FLOAT
    if isinstance(value, Rational):
        return Mode.EXACT
    raise NumericError(f"not a numeric value: {value!r}")


def coerce(value, mode: Mode) -> Value:
    """Bring an int/Fraction/float/str into ``mode``.

    Strings accept ``"a/b"``, ``"a"`` and decimal or exponent literals.
    Floats given in exact mode are read through their shortest repr, so
    ``0.1`` becomes ``1/10`` rather than the binary expansion.
    """
    mode = Mode(mode)
    if isinstance(value, bool):
        raise NumericError(f"not a numeric value: {value!r}")
    if mode is Mode.EXACT:
        if isinstance(value, float):
            if not math.isfinite(value):
                raise NumericError(f"non-finite value in exact mode: {value!r}")
            return Fraction(repr(value))
        if isinstance(value, (int, Fraction)):
            return Fraction(value)
        if isinstance(value, str):
            try:
                return Fraction(value.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise NumericError(f"bad rational literal {value!r}") from exc
        raise NumericError(f"not a numeric value: {value!r}")
    if isinstance(value, (int, float, Fraction)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return float(Fraction(text)) if "/" in text else float(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise NumericError(f"bad float literal {value!r}") from exc
    raise NumericError(f"not a numeric value: {value!r}")


def _same_mode(a, b) -> Mode:
    ma, mb = mode_of(a), mode_of(b)
    if ma is not mb:
        raise ModeMismatch(f"cannot mix {ma.value} and {mb.value} values")
    return ma


def add(a: Value, b: Value) -> Value:
    if _same_mode(a, b) is Mode.EXACT:
        return Fraction(a) + Fraction(b)
    return a + b


def sub(a: Value, b: Value) -> Value:
    if _same_mode(a, b) is Mode.EXACT:
        return Fraction(a) - Fraction(b)
    return a - b


def cmp(a: Value, b: Value) -> Ordering:
    _same_mode(a, b)
    if isinstance(a, float) and (math.isnan(a) or math.isnan(b)):
        raise Incomparable(f"cannot order {a!r} and {b!r}")
    if a < b:
        return Ordering.LT
    if a > b:
        return Ordering.GT
    return Ordering.EQ


def check_prob(value: Value) -> Value:
    if isinstance(value, float) and not math.isfinite(value):
        raise NumericError(f"probability must be finite, got {value!r}")
    if value < 0:
        raise NumericError(f"probability must be nonnegative, got {value}")
    return value


def fmt(value: Value) -> str:
    """Text form used by every file format: ``a/b``, ``a``, or a float repr."""
    if isinstance(value, float):
        return repr(value)
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def common_denominator(values: Iterable[Value]) -> int:
    out = 1
    for v in values:
        d = v.denominator if type(v) is Fraction else Fraction(v).denominator
        if out % d:
            out = math.lcm(out, d)
    return out


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)
