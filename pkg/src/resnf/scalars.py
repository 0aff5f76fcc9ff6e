"""Coefficient fields for formal series.

Two modes are supported and a computation never mixes them:

* ``exact`` -- Gaussian rationals ``p/q + i r/s`` backed by :class:`gmpy2.mpq`;
  no rounding ever happens.
* ``float`` -- complex big floats (:class:`gmpy2.mpc`) with a fixed binary
  precision.  Arithmetic on these values must run inside
  ``field.context()`` so that gmpy2 rounds to the recorded precision.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq, mpz

DEFAULT_PREC = 256


class InexactError(ArithmeticError):
    """An exact-mode operation would need an irrational number."""


class QQi:
    """Exact Gaussian rational ``re + i*im`` with :class:`gmpy2.mpq` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    @staticmethod
    def _raw(re, im):
        obj = object.__new__(QQi)
        obj.re = re
        obj.im = im
        return obj

    @staticmethod
    def coerce(x):
        if isinstance(x, QQi):
            return x
        if isinstance(x, complex):
            return QQi(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, float):
            return QQi(Fraction(x), 0)
        return QQi(x, 0)

    def __add__(self, other):
        if not isinstance(other, QQi):
            other = QQi.coerce(other)
        return QQi._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, QQi):
            other = QQi.coerce(other)
        return QQi._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return QQi.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, QQi):
            a, b, c, d = self.re, self.im, other.re, other.im
            return QQi._raw(a * c - b * d, a * d + b * c)
        if isinstance(other, (int, type(mpz(0)), type(mpq(0)), Fraction)):
            other = mpq(other)
            return QQi._raw(self.re * other, self.im * other)
        return self * QQi.coerce(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, QQi):
            other = QQi.coerce(other)
        c, d = other.re, other.im
        den = c * c + d * d
        if not den:
            raise ZeroDivisionError("division by zero Gaussian rational")
        a, b = self.re, self.im
        return QQi._raw((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return QQi.coerce(other) / self

    def __neg__(self):
        return QQi._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer powers of Gaussian rationals")
        if k < 0:
            return QQi(1) / (self ** (-k))
        result = QQi._raw(mpq(1), mpq(0))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def conjugate(self):
        return QQi._raw(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if type(other) is int and other == 0:
            return not (self.re or self.im)
        if isinstance(other, QQi):
            return self.re == other.re and self.im == other.im
        try:
            other = QQi.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return f"QQi({self.re})"
        return f"QQi({self.re}, {self.im})"


def _parse_rational(text) -> mpq:
    if isinstance(text, (int, Fraction)):
        return mpq(text)
    return mpq(Fraction(str(text).strip()))


def _format_rational(q) -> str:
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ExactField:
    """Gaussian rationals; the default mode for interpolation tests."""

    mode = "exact"
    prec = None

    def context(self):
        return contextlib.nullcontext()

    @property
    def tol(self):
        return mpq(0)

    def coerce(self, x):
        if isinstance(x, QQi):
            return x
        if isinstance(x, gmpy2.mpc) or type(x).__name__ == "mpfr":
            raise TypeError("cannot coerce a big float into exact mode")
        return QQi.coerce(x)

    def make(self, re, im=0):
        return QQi(re, im)

    def zero(self):
        return QQi._raw(mpq(0), mpq(0))

    def one(self):
        return QQi._raw(mpq(1), mpq(0))

    def imag_unit(self):
        return QQi._raw(mpq(0), mpq(1))

    def real(self, x):
        return x.re

    def imag(self, x):
        return x.im

    def real_scalar(self, r):
        """Coerce a real number into this field's real scalar type."""
        return mpq(r) if not isinstance(r, Fraction) else mpq(r.numerator, r.denominator)

    def conj(self, x):
        return x.conjugate()

    def abs(self, x):
        """Modulus of ``x``; raises :class:`InexactError` when irrational."""
        return self.sqrt_real(x.abs2())

    def sqrt_real(self, r):
        r = mpq(r)
        if r < 0:
            raise ValueError("square root of a negative rational")
        num, den = r.numerator, r.denominator
        if gmpy2.is_square(num) and gmpy2.is_square(den):
            return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
        raise InexactError(f"sqrt({r}) is irrational; use float mode")

    def magnitude(self, x):
        """A real bound used in tolerance comparisons (here: the modulus squared is exact)."""
        if isinstance(x, QQi):
            return gmpy2.sqrt(gmpy2.mpfr(x.abs2())) if x else mpq(0)
        return abs(mpq(x))

    def is_zero(self, x):
        return not x

    def close(self, x, y):
        return x == y

    def parse(self, re, im="0"):
        return QQi._raw(_parse_rational(re), _parse_rational(im))

    def format_real(self, r) -> str:
        return _format_rational(r)

    def format(self, x):
        x = self.coerce(x)
        return _format_rational(x.re), _format_rational(x.im)

    def exp_i(self, theta):
        raise InexactError("exp(i*theta) is not a Gaussian rational in general")

    def to_float(self, x, prec=DEFAULT_PREC):
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            return gmpy2.mpc(gmpy2.mpfr(x.re), gmpy2.mpfr(x.im))


@dataclass(frozen=True)
class FloatField:
    """Complex big floats with a fixed binary precision."""

    prec: int = DEFAULT_PREC
    mode = "float"

    def context(self):
        return gmpy2.context(gmpy2.get_context(), precision=self.prec)

    @property
    def tol(self):
        """Default comparison tolerance ``2**(-prec/2)``."""
        with self.context():
            return gmpy2.mpfr(2) ** (-(self.prec // 2))

    def coerce(self, x):
        with self.context():
            if isinstance(x, QQi):
                return gmpy2.mpc(gmpy2.mpfr(x.re), gmpy2.mpfr(x.im))
            if isinstance(x, gmpy2.mpc):
                if x.precision == (self.prec, self.prec):
                    return x
                return gmpy2.mpc(x)
            if isinstance(x, Fraction):
                return gmpy2.mpc(gmpy2.mpfr(mpq(x.numerator, x.denominator)), 0)
            if isinstance(x, type(mpq(0))):
                return gmpy2.mpc(gmpy2.mpfr(x), 0)
            return gmpy2.mpc(x)

    def make(self, re, im=0):
        with self.context():
            return gmpy2.mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))

    def zero(self):
        with self.context():
            return gmpy2.mpc(0)

    def one(self):
        with self.context():
            return gmpy2.mpc(1)

    def imag_unit(self):
        with self.context():
            return gmpy2.mpc(0, 1)

    def real(self, x):
        return x.real

    def imag(self, x):
        return x.imag

    def real_scalar(self, r):
        with self.context():
            if isinstance(r, Fraction):
                r = mpq(r.numerator, r.denominator)
            return gmpy2.mpfr(r)

    def conj(self, x):
        with self.context():
            return x.conjugate()

    def abs(self, x):
        with self.context():
            return abs(x)

    def sqrt_real(self, r):
        with self.context():
            return gmpy2.sqrt(gmpy2.mpfr(r))

    def magnitude(self, x):
        with self.context():
            return abs(x)

    def is_zero(self, x):
        return x == 0

    def close(self, x, y, tol=None):
        with self.context():
            return abs(x - y) <= (self.tol if tol is None else tol)

    def parse(self, re, im="0"):
        with self.context():
            return gmpy2.mpc(_parse_float(re), _parse_float(im))

    def format_real(self, r) -> str:
        with self.context():
            return str(gmpy2.mpfr(r))

    def format(self, x):
        return self.format_real(x.real), self.format_real(x.imag)

    def exp_i(self, theta):
        with self.context():
            theta = gmpy2.mpfr(theta)
            return gmpy2.mpc(gmpy2.cos(theta), gmpy2.sin(theta))

    def to_float(self, x, prec=None):
        return x


def _parse_float(text):
    text = str(text).strip()
    if "/" in text:
        return gmpy2.mpfr(_parse_rational(text))
    return gmpy2.mpfr(text)


EXACT = ExactField()


def field_for(mode: str = "exact", prec: int | None = None):
    """Return the coefficient field for a mode name."""
    if mode == "exact":
        return EXACT
    if mode == "float":
        return FloatField(prec or DEFAULT_PREC)
    raise ValueError(f"unknown scalar mode {mode!r}")
