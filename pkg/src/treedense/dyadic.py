"""Exact nonnegative rationals with power-of-two denominators.

Every measure in this package is a Dyadic; floats never enter measure
arithmetic. Values are kept canonical: the numerator is odd unless the
exponent is already zero, and zero is stored as 0/2^0.
"""

from __future__ import annotations

import functools
from fractions import Fraction


@functools.total_ordering
class Dyadic:
    """Value num / 2**exp with num >= 0 and exp >= 0, in canonical form."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if not isinstance(num, int) or not isinstance(exp, int):
            raise TypeError("Dyadic components must be integers")
        if num < 0:
            raise ValueError("Dyadic is nonnegative")
        if exp < 0:
            num <<= -exp
            exp = 0
        if num == 0:
            exp = 0
        else:
            while exp > 0 and num % 2 == 0:
                num //= 2
                exp -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def zero(cls) -> "Dyadic":
        return cls(0)

    @classmethod
    def one(cls) -> "Dyadic":
        return cls(1)

    @classmethod
    def pow2(cls, e: int) -> "Dyadic":
        """2**e for any integer e (negative e gives a fraction)."""
        if e >= 0:
            return cls(1 << e)
        return cls(1, -e)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Inverse of str(): accepts 'p/2^e'."""
        mant, _, rest = text.partition("/")
        if not rest.startswith("2^"):
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(mant), int(rest[2:]))

    def _common(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, e = self._common(other)
        return Dyadic(a + b, e)

    def __sub__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, e = self._common(other)
        if a < b:
            raise ValueError("Dyadic subtraction went negative")
        return Dyadic(a - b, e)

    def __mul__(self, other):
        if isinstance(other, int):
            return Dyadic(self.num * other, self.exp)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        return Dyadic(self.num**k, self.exp * k)

    def scale2(self, e: int) -> "Dyadic":
        """Multiply by 2**e."""
        return Dyadic(self.num, self.exp - e)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.exp == 0 and self.num == other
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __lt__(self, other):
        if isinstance(other, int):
            other = Dyadic(other) if other >= 0 else None
            if other is None:
                return False
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b, _ = self._common(other)
        return a < b

    def __hash__(self):
        return hash((self.num, self.exp))

    def __bool__(self):
        return self.num != 0

    def is_zero(self) -> bool:
        return self.num == 0

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self):
        return self.num / (1 << self.exp)

    def __str__(self):
        return f"{self.num}/2^{self.exp}"

    def __repr__(self):
        return f"Dyadic({self.num}, {self.exp})"


ZERO = Dyadic.zero()
ONE = Dyadic.one()
