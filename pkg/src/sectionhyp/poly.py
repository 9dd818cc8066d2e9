"""Dense univariate polynomials over exact rationals or mpmath reals."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .errors import DomainError
from .precision import to_decimal, to_mpf

EXACT = "exact"
FLOAT = "float"


def _exact_scalar(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise DomainError(f"cannot represent {x!r} exactly")


@dataclass(frozen=True)
class Poly:
    """Polynomial with ascending coefficients; ``coeffs[i]`` multiplies x**i.

    ``mode`` is ``"exact"`` (Fraction coefficients) or ``"float"`` (mpf
    coefficients rounded to ``bits``).  Trailing zero coefficients are
    dropped so the zero polynomial has an empty coefficient tuple.
    """

    coeffs: tuple
    mode: str = EXACT
    bits: int | None = None

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mode == FLOAT:
            if self.bits is None or self.bits < 2:
                raise DomainError("float mode needs a bit count")
            cs = [to_mpf(c, self.bits) for c in self.coeffs]
        else:
            if self.bits is not None:
                object.__setattr__(self, "bits", None)
            cs = [_exact_scalar(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    # construction -----------------------------------------------------
    @classmethod
    def exact(cls, coeffs: Iterable) -> "Poly":
        return cls(tuple(coeffs), EXACT)

    @classmethod
    def floating(cls, coeffs: Iterable, bits: int) -> "Poly":
        return cls(tuple(coeffs), FLOAT, bits)

    @classmethod
    def from_roots(cls, roots: Sequence, mode: str = EXACT, bits: int | None = None,
                   lead=1) -> "Poly":
        """Monic-times-``lead`` polynomial with the given real roots."""
        p = cls((lead,), mode, bits)
        for r in roots:
            p = p * cls((-_coerce(r, mode, bits), 1), mode, bits)
        return p

    def _like(self, coeffs) -> "Poly":
        return Poly(tuple(coeffs), self.mode, self.bits)

    # basic properties -------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self):
        return self.coeffs[-1] if self.coeffs else self._zero()

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT

    def _zero(self):
        return Fraction(0) if self.mode == EXACT else mpmath.mpf(0)

    def _prec(self):
        return mpmath.workprec(self.bits) if self.mode == FLOAT else _NullContext()

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    # evaluation -------------------------------------------------------
    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Horner value at ``x``; exact for exact polynomials at rational ``x``.

        An exact polynomial evaluated at an mpf is promoted to the
        ambient mpmath precision.
        """
        if self.mode == EXACT and isinstance(x, mpmath.mpf):
            return self.to_float(mpmath.mp.prec).evaluate(x)
        with self._prec():
            x = _coerce(x, self.mode, self.bits)
            acc = self._zero()
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc

    def evaluate_with_scale(self, x):
        """Value at ``x`` together with ``sum |a_i x^i|`` (the cancellation scale)."""
        if self.mode == EXACT and isinstance(x, mpmath.mpf):
            return self.to_float(mpmath.mp.prec).evaluate_with_scale(x)
        with self._prec():
            x = _coerce(x, self.mode, self.bits)
            ax = abs(x)
            acc = self._zero()
            scale = self._zero()
            for c in reversed(self.coeffs):
                acc = acc * x + c
                scale = scale * ax + abs(c)
            return acc, scale

    # transforms -------------------------------------------------------
    def derivative(self) -> "Poly":
        with self._prec():
            return self._like(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def reverse(self) -> "Poly":
        if self.is_zero:
            raise DomainError("cannot reverse the zero polynomial")
        return self._like(reversed(self.coeffs))

    def scale_var(self, c) -> "Poly":
        """Return p(c x)."""
        with self._prec():
            c = _coerce(c, self.mode, self.bits)
            if c == 0:
                raise DomainError("scale factor must be nonzero")
            out, power = [], c ** 0
            for a in self.coeffs:
                out.append(a * power)
                power *= c
            return self._like(out)

    def consecutive_ratios(self) -> list:
        """``a_i**2 / (a_{i-1} a_{i+1})`` for i = 1 .. degree-1."""
        if any(c <= 0 for c in self.coeffs):
            raise DomainError("consecutive ratios need strictly positive coefficients")
        with self._prec():
            a = self.coeffs
            return [a[i] * a[i] / (a[i - 1] * a[i + 1]) for i in range(1, len(a) - 1)]

    def section(self, degree: int) -> "Poly":
        """Truncation keeping the terms of degree at most ``degree``."""
        return self._like(self.coeffs[: degree + 1])

    def shift_up(self, k: int = 1) -> "Poly":
        """Multiply by x**k."""
        if self.is_zero:
            return self
        return self._like((self._zero(),) * k + self.coeffs)

    def monic(self) -> "Poly":
        with self._prec():
            lead = self.leading
            return self._like(c / lead for c in self.coeffs)

    def to_float(self, bits: int) -> "Poly":
        """Round every coefficient to ``bits`` (exact input is correctly rounded)."""
        return Poly(self.coeffs, FLOAT, bits)

    # arithmetic -------------------------------------------------------
    def _check(self, other: "Poly"):
        if not isinstance(other, Poly):
            other = self._like((other,))
        if other.mode != self.mode or other.bits != self.bits:
            raise DomainError("mixed-mode arithmetic needs explicit promotion")
        return other

    def __add__(self, other) -> "Poly":
        other = self._check(other)
        n = max(len(self), len(other))
        z = self._zero()
        with self._prec():
            return self._like(
                (self.coeffs[i] if i < len(self) else z) + (other.coeffs[i] if i < len(other) else z)
                for i in range(n))

    def __neg__(self) -> "Poly":
        with self._prec():
            return self._like(-c for c in self.coeffs)

    def __sub__(self, other) -> "Poly":
        return self + (-self._check(other))

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            with self._prec():
                k = _coerce(other, self.mode, self.bits)
                return self._like(c * k for c in self.coeffs)
        other = self._check(other)
        if self.is_zero or other.is_zero:
            return self._like(())
        out = [self._zero()] * (len(self) + len(other) - 1)
        with self._prec():
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return self._like(out)

    __rmul__ = __mul__

    # serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {"mode": self.mode, "coeffs": [to_decimal(c, self.bits or 0) for c in self.coeffs]}
        if self.mode == FLOAT:
            d = {"mode": self.mode, "bits": self.bits, "coeffs": d["coeffs"]}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Poly":
        mode = d.get("mode", EXACT)
        if mode == EXACT:
            return cls(tuple(Fraction(c) for c in d["coeffs"]), EXACT)
        if mode == FLOAT:
            bits = int(d["bits"])
            return cls(tuple(to_mpf(c, bits) for c in d["coeffs"]), FLOAT, bits)
        raise DomainError(f"unknown mode {mode!r}")

    @classmethod
    def from_json(cls, text: str) -> "Poly":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        body = ", ".join(str(c) if self.mode == EXACT else mpmath.nstr(c, 12) for c in self.coeffs)
        tag = "exact" if self.mode == EXACT else f"float{self.bits}"
        return f"Poly[{tag}]({body})"


class _NullContext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _coerce(x, mode: str, bits: int | None):
    if mode == EXACT:
        return _exact_scalar(x)
    return to_mpf(x, bits)
