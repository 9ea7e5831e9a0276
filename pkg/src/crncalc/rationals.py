"""Parsing and formatting of exact rationals."""

import math
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction

_RATIONAL_RE = re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(\s*/\s*\d+)?\s*$")


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, strings like ``"3/4"`` or ``"0.2"`` exactly.

    Floats are rejected because their binary expansion is rarely what
    the caller meant.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def parse_rational(text: str) -> Fraction:
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r}")
    if "/" in text:
        num, den = text.split("/")
        den_val = int(den)
        if den_val == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return _decimal_fraction(num) / den_val
    return _decimal_fraction(text)


def _decimal_fraction(text: str) -> Fraction:
    try:
        return Fraction(Decimal(text.strip()))
    except InvalidOperation as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def format_rational(value: Fraction) -> str:
    """Render as ``a/b``; integers keep a ``/1`` suffix only when asked."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def lcm_of_denominators(values) -> int:
    result = 1
    for v in values:
        result = math.lcm(result, Fraction(v).denominator)
    return result
