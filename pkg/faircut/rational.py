# Exact rational parsing and formatting used at every file/LP boundary
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Union

import regex

from faircut.errors import InputError

Rational = Union[int, str, Fraction]

RATIONAL_REGEX = regex.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


def as_fraction(value: Rational, field: str = "value") -> Fraction:
    if isinstance(value, bool):
        raise InputError(f"{field}: expected a rational, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Floats only arrive from numeric JSON; take their shortest decimal form
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        match = RATIONAL_REGEX.match(value)
        if match:
            if int(match.group(2)) == 0:
                raise InputError(f"{field}: zero denominator in {value!r}")
            return Fraction(int(match.group(1)), int(match.group(2)))
        try:
            return Fraction(Decimal(value.strip()))
        except (InvalidOperation, ValueError, OverflowError):
            pass
    raise InputError(f"{field}: cannot parse {value!r} as a rational")


def fmt(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def rationalize(value: float, max_denominator: int = 10**9) -> Fraction:
    return Fraction(value).limit_denominator(max_denominator)
