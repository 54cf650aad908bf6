"""Exact rationals with a distinguished prime.

Internally every scalar is a ``gmpy2.mpq``; the public helpers accept ints,
``Fraction``, ``mpq`` and strings of the form ``"a"`` or ``"a/b"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq, mpz

INF = math.inf  # valuation of zero

ZERO = mpq(0)
ONE = mpq(1)


def Q(x) -> mpq:
    """Coerce ``x`` to an exact rational."""
    if isinstance(x, mpq):
        return x
    if isinstance(x, PLocalScalar):
        return x.value
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, Fraction)) or type(x).__name__ == "mpz":
        return mpq(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def parse_rational(text: str) -> mpq:
    s = text.strip()
    if not s:
        raise ValueError("empty rational")
    num, sep, den = s.partition("/")
    try:
        a = int(num)
        b = int(den) if sep else 1
    except ValueError:
        raise ValueError(f"malformed rational {text!r}") from None
    if b == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return mpq(a, b)


def format_rational(x) -> str:
    x = Q(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def check_prime(p) -> int:
    if isinstance(p, bool) or not isinstance(p, int) or p < 2 or not gmpy2.is_prime(p):
        raise ValueError(f"{p!r} is not a prime")
    return p


def val_p(x, p: int | None = None):
    """p-adic valuation; ``INF`` for zero.

    ``p`` may be omitted when ``x`` is a :class:`PLocalScalar`.
    """
    if p is None:
        if not isinstance(x, PLocalScalar):
            raise TypeError("a prime is required for plain rationals")
        p = x.p
    x = Q(x)
    if x == 0:
        return INF
    _, vn = gmpy2.remove(x.numerator, p)
    _, vd = gmpy2.remove(x.denominator, p)
    return int(vn) - int(vd)


def unit_part(x, p: int) -> mpq:
    """``x / p**val_p(x)`` for nonzero ``x``."""
    x = Q(x)
    if x == 0:
        raise ZeroDivisionError("zero has no unit part")
    n, _ = gmpy2.remove(x.numerator, p)
    d, _ = gmpy2.remove(x.denominator, p)
    return mpq(n, d) if x > 0 else -mpq(abs(n), d)


def ppow(p: int, e: int) -> mpq:
    return mpq(mpz(p) ** e) if e >= 0 else mpq(1, mpz(p) ** (-e))


def reduce_mod_power(x, p: int, e: int) -> mpq:
    """Representative of ``x`` modulo ``p**e`` times p-local integers.

    The result lies in Z[1/p] and in the half-open interval [0, p**e).  Two
    rationals with difference of valuation >= e get the same representative.
    """
    x = Q(x)
    if x == 0:
        return ZERO
    v = val_p(x, p)
    if v >= e:
        return ZERO
    shift = max(0, -v)
    scaled = x * ppow(p, shift)  # p-integral
    modulus = mpz(p) ** (shift + e)
    c = (scaled.numerator * gmpy2.invert(scaled.denominator, modulus)) % modulus
    return mpq(c, mpz(p) ** shift)


@dataclass(frozen=True)
class PLocalScalar:
    """A rational number together with the prime used to measure it."""

    p: int
    value: mpq

    def __init__(self, p: int, value):
        object.__setattr__(self, "p", check_prime(p))
        object.__setattr__(self, "value", Q(value))

    @property
    def valuation(self):
        return val_p(self.value, self.p)

    def as_fraction(self) -> Fraction:
        return Fraction(int(self.value.numerator), int(self.value.denominator))

    def __str__(self) -> str:
        return format_rational(self.value)
