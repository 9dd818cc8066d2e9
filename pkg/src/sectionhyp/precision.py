"""Working precision and the tolerances derived from it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .errors import DomainError

DEFAULT_BITS = 256


def pow2(k):
    """Exact power of two as an mpf, independent of the working precision."""
    return mpmath.ldexp(mpmath.mpf(1), k)


@dataclass(frozen=True)
class PrecisionContext:
    """Mantissa precision plus the tolerances every numeric decision uses.

    Unset tolerances are derived from ``bits``:
    ``eps_root = eps_sign = 2**-(5*bits//8)`` and ``eps_residual = 2**-(bits//2)``.
    """

    bits: int = DEFAULT_BITS
    eps_root: mpmath.mpf = field(default=None)
    eps_residual: mpmath.mpf = field(default=None)
    eps_sign: mpmath.mpf = field(default=None)
    max_iter: int = 10_000

    def __post_init__(self):
        if not isinstance(self.bits, int) or self.bits < 64:
            raise DomainError(f"bits must be an integer >= 64, got {self.bits!r}")
        if self.max_iter < 1:
            raise DomainError("max_iter must be positive")
        defaults = {
            "eps_root": pow2(-(5 * self.bits // 8)),
            "eps_residual": pow2(-(self.bits // 2)),
            "eps_sign": pow2(-(5 * self.bits // 8)),
        }
        ceiling = pow2(-(self.bits // 4))
        for name, value in defaults.items():
            current = getattr(self, name)
            if current is None:
                current = value
            current = mpmath.mpf(current)
            if not (0 < current < ceiling):
                raise DomainError(f"{name} must lie in (0, 2^-(bits/4))")
            object.__setattr__(self, name, current)

    def workprec(self):
        return mpmath.workprec(self.bits)

    def doubled(self) -> "PrecisionContext":
        return PrecisionContext(bits=2 * self.bits, max_iter=self.max_iter)

    def with_bits(self, bits: int) -> "PrecisionContext":
        return PrecisionContext(bits=bits, max_iter=self.max_iter)

    @property
    def digits(self) -> int:
        """Decimal digits needed to round-trip a value at this precision."""
        return decimal_digits(self.bits)

    def describe(self) -> dict:
        return {
            "bits": self.bits,
            "eps_root": to_decimal(self.eps_root, 53),
            "eps_residual": to_decimal(self.eps_residual, 53),
            "eps_sign": to_decimal(self.eps_sign, 53),
            "max_iter": self.max_iter,
        }


def default_context(bits: int | None = None) -> PrecisionContext:
    return PrecisionContext(bits=bits or DEFAULT_BITS)


def decimal_digits(bits: int) -> int:
    return int(math.ceil(bits * math.log10(2))) + 1


def reported_digits(bits: int) -> int:
    """Significant digits worth printing at ``bits``: half the mantissa, less two guard digits."""
    return int((bits // 2) * math.log10(2)) - 2


def to_mpf(x, bits: int):
    """Convert ints, Fractions, decimal/rational strings and mpf to an mpf at ``bits``."""
    with mpmath.workprec(bits):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        if isinstance(x, str) and "/" in x:
            f = Fraction(x)
            return mpmath.mpf(f.numerator) / f.denominator
        return mpmath.mpf(x)


def to_decimal(x, bits: int) -> str:
    """Decimal string carrying enough digits to round-trip ``x`` at ``bits``."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    with mpmath.workprec(bits):
        return mpmath.nstr(mpmath.mpf(x), decimal_digits(bits), min_fixed=-4, max_fixed=20)
