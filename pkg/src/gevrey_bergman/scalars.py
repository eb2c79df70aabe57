"""Coefficient fields: exact rationals (gmpy2.mpq) or fixed-precision big floats (mpmath).

Complex values are carried as (re, im) pairs of the underlying real field, so
the exact field is the Gaussian rationals Q(i).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath

__all__ = ["ScalarMode", "RATIONAL", "bigfloat", "CScalar", "ModeMismatchError", "parse_mode"]


class ModeMismatchError(ValueError):
    """Operands live in different coefficient fields."""


@dataclass(frozen=True)
class ScalarMode:
    kind: str  # "rational" | "bigfloat"
    bits: int = 0

    def __post_init__(self):
        if self.kind not in ("rational", "bigfloat"):
            raise ValueError(f"unknown scalar kind {self.kind!r}")
        if self.kind == "bigfloat" and self.bits <= 0:
            raise ValueError("bigfloat mode needs a positive precision")

    @property
    def exact(self) -> bool:
        return self.kind == "rational"

    def __str__(self) -> str:
        return "rational" if self.exact else f"bigfloat:{self.bits}"

    def convert(self, x):
        """Coerce an int/Fraction/str/mpq/float/mpf into this field."""
        if self.exact:
            if isinstance(x, float):
                raise TypeError("refusing to convert a float into exact rational mode")
            if isinstance(x, mpmath.mpf):
                raise TypeError("refusing to convert an mpf into exact rational mode")
            if isinstance(x, Fraction):
                return gmpy2.mpq(x.numerator, x.denominator)
            return gmpy2.mpq(x)
        with mpmath.workprec(self.bits):
            if isinstance(x, (type(gmpy2.mpq()), Fraction)):
                return mpmath.mpf(int(x.numerator)) / int(x.denominator)
            if isinstance(x, str) and "/" in x:
                num, den = x.split("/")
                return mpmath.mpf(int(num)) / int(den)
            return mpmath.mpf(x)

    @property
    def zero(self):
        return self.convert(0)

    @property
    def one(self):
        return self.convert(1)

    def format(self, x) -> str:
        if self.exact:
            q = gmpy2.mpq(x)
            return f"{q.numerator}/{q.denominator}"
        with mpmath.workprec(self.bits):
            return mpmath.nstr(x, int(self.bits * 0.30103) + 2, strip_zeros=False)

    def parse(self, s: str):
        return self.convert(s)

    def context(self):
        """Context manager fixing mpmath precision for this mode (no-op when exact)."""
        return mpmath.workprec(self.bits if self.bits else mpmath.mp.prec)


RATIONAL = ScalarMode("rational")


def bigfloat(bits: int = 128) -> ScalarMode:
    return ScalarMode("bigfloat", bits)


def parse_mode(spec: str) -> ScalarMode:
    """Parse ``rational`` or ``bigfloat:BITS`` (CLI syntax)."""
    if spec == "rational":
        return RATIONAL
    if spec.startswith("bigfloat"):
        _, _, bits = spec.partition(":")
        return bigfloat(int(bits) if bits else 128)
    raise ValueError(f"bad scalar mode {spec!r}; expected 'rational' or 'bigfloat:BITS'")


@dataclass(frozen=True)
class CScalar:
    """A complex number with both parts in one field."""

    re: object
    im: object
    mode: ScalarMode = RATIONAL

    @classmethod
    def of(cls, value, mode: ScalarMode = RATIONAL) -> "CScalar":
        if isinstance(value, CScalar):
            if value.mode != mode:
                return cls(mode.convert(value.re), mode.convert(value.im), mode)
            return value
        if isinstance(value, complex):
            return cls(mode.convert(value.real), mode.convert(value.imag), mode)
        if isinstance(value, mpmath.mpc):
            return cls(mode.convert(value.real), mode.convert(value.imag), mode)
        if isinstance(value, tuple):
            return cls(mode.convert(value[0]), mode.convert(value[1]), mode)
        return cls(mode.convert(value), mode.zero, mode)

    def _check(self, other: "CScalar"):
        if other.mode != self.mode:
            raise ModeMismatchError(f"{self.mode} vs {other.mode}")

    def __add__(self, other):
        other = CScalar.of(other, self.mode) if not isinstance(other, CScalar) else other
        self._check(other)
        with self.mode.context():
            return CScalar(self.re + other.re, self.im + other.im, self.mode)

    def __sub__(self, other):
        other = CScalar.of(other, self.mode) if not isinstance(other, CScalar) else other
        self._check(other)
        with self.mode.context():
            return CScalar(self.re - other.re, self.im - other.im, self.mode)

    def __mul__(self, other):
        other = CScalar.of(other, self.mode) if not isinstance(other, CScalar) else other
        self._check(other)
        with self.mode.context():
            return CScalar(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
                self.mode,
            )

    def __neg__(self):
        return CScalar(-self.re, -self.im, self.mode)

    def conj(self) -> "CScalar":
        return CScalar(self.re, -self.im, self.mode)

    def inverse(self) -> "CScalar":
        with self.mode.context():
            n = self.re * self.re + self.im * self.im
            if not n:
                raise ZeroDivisionError("inverse of zero")
            return CScalar(self.re / n, -self.im / n, self.mode)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __eq__(self, other):
        if not isinstance(other, CScalar):
            try:
                other = CScalar.of(other, self.mode)
            except (TypeError, ValueError):
                return NotImplemented
        return self.mode == other.mode and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im, self.mode))

    def to_mpc(self, bits: int = 128) -> mpmath.mpc:
        with mpmath.workprec(bits):
            return mpmath.mpc(_to_mpf(self.re), _to_mpf(self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"CScalar({self.mode.format(self.re)}, {self.mode.format(self.im)})"


def _to_mpf(x):
    if isinstance(x, mpmath.mpf):
        return +x
    if isinstance(x, type(gmpy2.mpq())):
        return mpmath.mpf(int(x.numerator)) / int(x.denominator)
    return mpmath.mpf(x)


def to_mpf(x, bits: int = 128):
    with mpmath.workprec(bits):
        return _to_mpf(x)
