"""Exact complex rationals for the symbolic layers.

Coefficients of polynomials and algebra elements are either exact
(:class:`CRational`) or inexact (Python ``complex``).  Mixing the two gives
``complex``; exact arithmetic never silently rounds.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Number, Rational


class CRational:
    """Complex number ``re + j*im`` with :class:`fractions.Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- conversions -------------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return CRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"CRational({self.re!s}, {self.im!s})"

    def __str__(self):
        return format_coeff(self)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, CRational):
            return other
        if isinstance(other, (int, Rational)):
            return CRational(other)
        return None

    def __eq__(self, other):
        o = self._coerce(other)
        if o is not None:
            return self.re == o.re and self.im == o.im
        if isinstance(other, Number):
            return complex(self) == other
        return NotImplemented

    def __neg__(self):
        return CRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return CRational(self.re + o.re, self.im + o.im)
        if isinstance(other, Number):
            return complex(self) + other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is not None:
            return CRational(self.re * o.re - self.im * o.im,
                             self.re * o.im + self.im * o.re)
        if isinstance(other, Number):
            return complex(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is not None:
            den = o.re * o.re + o.im * o.im
            if den == 0:
                raise ZeroDivisionError("division by exact zero")
            num = self * o.conjugate()
            return CRational(num.re / den, num.im / den)
        if isinstance(other, Number):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is not None:
            return o / self
        return other / complex(self)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return complex(self) ** k
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out


ONE = CRational(1)
ZERO = CRational(0)
J = CRational(0, 1)


def to_coeff(x):
    """Normalize a scalar: exact inputs become :class:`CRational`, the rest ``complex``."""
    if isinstance(x, CRational):
        return x
    if isinstance(x, bool):
        return CRational(int(x))
    if isinstance(x, (int, Rational)):
        return CRational(x)
    if isinstance(x, Number):
        return complex(x)
    raise TypeError(f"not a scalar: {x!r}")


def is_exact(x) -> bool:
    return isinstance(x, CRational)


def is_zero(x) -> bool:
    if isinstance(x, CRational):
        return not x
    return x == 0


def exact_sqrt(x):
    """Return an exact square root of a non-negative rational, or ``None``."""
    from math import isqrt

    try:
        f = Fraction(x)
    except (TypeError, ValueError):
        return None
    if isinstance(x, float) and Fraction(x) != f:
        return None
    if f < 0:
        return None
    n, d = f.numerator, f.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def format_coeff(c) -> str:
    """Print a coefficient in the plain-text syntax (``3/2``, ``-j``, ``1/2+3/4j``)."""
    if isinstance(c, CRational):
        re, im = c.re, c.im
        if im == 0:
            return str(re)
        if re == 0:
            if im == 1:
                return "j"
            if im == -1:
                return "-j"
            return f"{im}j"
        sign = "+" if im > 0 else "-"
        mag = abs(im)
        imtxt = "j" if mag == 1 else f"{mag}j"
        return f"({re}{sign}{imtxt})"
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}j"
    return f"({c.real!r}{c.imag:+}j)"
