"""Extended-precision arithmetic kernel: exact rationals and double-double reals.

Rationals are ``fractions.Fraction`` (re-exported as :data:`Rational`) with a
couple of parsing/formatting helpers.  Extended reals are double-double pairs
(hi, lo) built from error-free transformations (Dekker split, two_sum,
two_prod), giving ~31.9 significant decimal digits.  Complex values are pairs
of double-doubles.  Everything here is immutable value semantics.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction

Rational = Fraction

_SPLITTER = 134217729.0  # 2**27 + 1, exact in binary64


# ---------------------------------------------------------------------------
# error-free transformations
# ---------------------------------------------------------------------------

def two_sum(a: float, b: float):
    """Knuth two-sum: s + err == a + b exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a: float, b: float):
    """Fast two-sum, valid when |a| >= |b|."""
    s = a + b
    return s, b - (s - a)


def two_prod(a: float, b: float):
    """Dekker two-product: p + err == a * b exactly (no FMA on this platform)."""
    p = a * b
    c = _SPLITTER * a
    ahi = c - (c - a)
    alo = a - ahi
    d = _SPLITTER * b
    bhi = d - (d - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


# ---------------------------------------------------------------------------
# double-double real
# ---------------------------------------------------------------------------

class DD:
    """Double-double real: value = hi + lo with |lo| <= 0.5 ulp(hi).

    Relative error of each primitive operation is a few units of 2**-106,
    i.e. well below 1e-30.  Construction accepts float/int/str/Fraction/DD;
    strings and Fractions are rounded in two stages so the stored pair is the
    correctly-rounded double-double of the exact input.
    """

    __slots__ = ("hi", "lo")

    def __init__(self, value=0.0, lo=None):
        if lo is not None:
            hi, lo = two_sum(float(value), float(lo))
            self.hi = hi
            self.lo = lo
            return
        if isinstance(value, DD):
            self.hi = value.hi
            self.lo = value.lo
        elif isinstance(value, float):
            self.hi = value
            self.lo = 0.0
        elif isinstance(value, int):
            hi = float(value)
            self.hi = hi
            self.lo = float(value - int(hi))
        elif isinstance(value, (Fraction, str)):
            f = Fraction(value)
            hi = _fraction_to_float(f)
            lo = _fraction_to_float(f - Fraction(hi))
            self.hi, self.lo = quick_two_sum(hi, lo)
        else:
            raise TypeError(f"cannot build DD from {type(value).__name__}")

    # -- conversions --------------------------------------------------------

    def __float__(self) -> float:
        return self.hi + self.lo

    def to_fraction(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)

    def __repr__(self) -> str:
        return f"DD({self.hi!r}, {self.lo!r})"

    def __str__(self) -> str:
        return format_decimal(self, 32)

    # -- coercion helper ----------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, DD):
            return x
        if isinstance(x, (int, float, Fraction)):
            return DD(x)
        return None

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "DD":
        r = DD.__new__(DD)
        r.hi = -self.hi
        r.lo = -self.lo
        return r

    def __abs__(self) -> "DD":
        return -self if self.hi < 0.0 else self

    def __add__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        s, e = two_sum(self.hi, o.hi)
        t, f = two_sum(self.lo, o.lo)
        e += t
        s, e = quick_two_sum(s, e)
        e += f
        s, e = quick_two_sum(s, e)
        r = DD.__new__(DD)
        r.hi = s
        r.lo = e
        return r

    __radd__ = __add__

    def __sub__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        return self.__add__(-o)

    def __rsub__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        return o.__add__(-self)

    def __mul__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        p, e = two_prod(self.hi, o.hi)
        e += self.hi * o.lo + self.lo * o.hi
        s, e = quick_two_sum(p, e)
        r = DD.__new__(DD)
        r.hi = s
        r.lo = e
        return r

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        if o.hi == 0.0:
            raise ZeroDivisionError("double-double division by zero")
        q1 = self.hi / o.hi
        r = self - o * q1
        q2 = r.hi / o.hi
        r = r - o * q2
        q3 = r.hi / o.hi
        s, e = quick_two_sum(q1, q2)
        res = DD.__new__(DD)
        res.hi, res.lo = two_sum(s, q3 + e)
        return res

    def __rtruediv__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return DD(1.0)
        inv = n < 0
        n = abs(n)
        base = self
        acc = DD(1.0)
        while n:
            if n & 1:
                acc = acc * base
            base = base * base
            n >>= 1
        return DD(1.0) / acc if inv else acc

    # -- comparisons (total order matches exact value) -----------------------

    def _cmp(self, other) -> int:
        o = DD._coerce(other)
        if o is None:
            raise TypeError(f"cannot compare DD with {type(other).__name__}")
        d = self - o
        if d.hi > 0.0:
            return 1
        if d.hi < 0.0:
            return -1
        return 0

    def __eq__(self, other):
        o = DD._coerce(other)
        if o is None:
            return NotImplemented
        return self.hi == o.hi and self.lo == o.lo

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.hi, self.lo))


def _fraction_to_float(f: Fraction) -> float:
    # Fraction.__float__ is correctly rounded on CPython >= 3.2
    return float(f)


# ---------------------------------------------------------------------------
# constants (decimal literals rounded exactly into double-double)
# ---------------------------------------------------------------------------

PI = DD("3.14159265358979323846264338327950288419716939937510582097494459")
TWO_PI = DD("6.28318530717958647692528676655900576839433879875021164194988918")
HALF_PI = DD("1.57079632679489661923132169163975144209858469968755291048747230")
LN2 = DD("0.69314718055994530941723212145817656807550013436025525412068001")
E = DD("2.71828182845904523536028747135266249775724709369995957496696763")


# ---------------------------------------------------------------------------
# elementary functions
# ---------------------------------------------------------------------------

def dd_sqrt(a) -> DD:
    """Square root by one Newton refinement of the binary64 seed."""
    a = DD(a)
    if a.hi < 0.0:
        raise ValueError("sqrt of negative value")
    if a.hi == 0.0:
        return DD(0.0)
    y = math.sqrt(a.hi)
    # r = a - y*y carried exactly, then one correction r / (2y)
    p, e = two_prod(y, y)
    r = a - DD(p, e)
    return DD(y) + r / (2.0 * y)


def dd_exp(a) -> DD:
    """exp by scaling a = k ln2 + r, Taylor on r/512, nine doublings."""
    a = DD(a)
    if a.hi > 709.0:
        raise OverflowError("dd_exp overflow")
    if a.hi < -745.0:
        return DD(0.0)
    k = int(round(a.hi / LN2.hi))
    r = a - LN2 * k
    # |r| <= ln2/2; scale down by 2**9 so the Taylor tail drops below 2**-110
    s = DD(math.ldexp(r.hi, -9), math.ldexp(r.lo, -9))
    term = DD(s)
    total = DD(s)
    for i in range(2, 14):
        term = term * s / i
        total = total + term
        if abs(term.hi) < 1e-35:
            break
    # undo scaling on f = exp(s) - 1 via f <- 2f + f^2
    f = total
    for _ in range(9):
        f = f * 2.0 + f * f
    out = f + 1.0
    return DD(math.ldexp(out.hi, k), math.ldexp(out.lo, k))


def dd_ln(a) -> DD:
    """Natural log with full relative accuracy.

    Near 1 the Newton-on-exp route only bounds the absolute error, so the
    atanh series 2 sum u^{2k+1}/(2k+1), u = (a-1)/(a+1), takes over there
    (the leading subtraction is error-free); elsewhere two Newton steps
    y += a*exp(-y) - 1 refine the binary64 seed.
    """
    a = DD(a)
    if a.hi <= 0.0:
        raise ValueError("log of non-positive value")
    if 0.7 < a.hi < 1.45:
        u = (a - 1.0) / (a + 1.0)
        if u.hi == 0.0:
            return DD(0.0)
        u2 = u * u
        term = DD(u)
        total = DD(u)
        k = 1
        while abs(term.hi) > 1e-34 * abs(total.hi) and k < 60:
            term = term * u2
            total = total + term / float(2 * k + 1)
            k += 1
        return total * 2.0
    y = DD(math.log(a.hi))
    for _ in range(2):
        y = y + a * dd_exp(-y) - 1.0
    return y


def _sincos_taylor(x: DD):
    """sin and cos for |x| <= pi/4 by plain Taylor series."""
    x2 = x * x
    # sin
    term = DD(x)
    s = DD(x)
    k = 1
    while abs(term.hi) > 1e-35:
        term = term * x2 / float(-(2 * k) * (2 * k + 1))
        s = s + term
        k += 1
    # cos
    term = DD(1.0)
    c = DD(1.0)
    k = 1
    while abs(term.hi) > 1e-35:
        term = term * x2 / float(-(2 * k - 1) * (2 * k))
        c = c + term
        k += 1
    return s, c


def dd_sincos(a):
    """(sin a, cos a) with argument reduction mod 2*pi then mod pi/2."""
    a = DD(a)
    if abs(a.hi) > 1e12:
        raise ValueError("sin/cos argument too large for double-double reduction")
    n = round(a.hi / TWO_PI.hi)
    x = a - TWO_PI * n
    k = int(round(x.hi / HALF_PI.hi))
    x = x - HALF_PI * k
    s, c = _sincos_taylor(x)
    k &= 3
    if k == 0:
        return s, c
    if k == 1:
        return c, -s
    if k == 2:
        return -s, -c
    return -c, s


def dd_sin(a) -> DD:
    return dd_sincos(a)[0]


def dd_cos(a) -> DD:
    return dd_sincos(a)[1]


def dd_atan2(y, x) -> DD:
    """Angle of (x, y): binary64 seed refined by two Newton steps on
    y*cos(t) - x*sin(t) = 0 (derivative -r)."""
    y = DD(y)
    x = DD(x)
    if y.hi == 0.0 and y.lo == 0.0:
        if x.hi > 0.0:
            return DD(0.0)
        if x.hi < 0.0:
            return DD(PI)
        raise ValueError("atan2(0, 0) undefined")
    if x.hi == 0.0 and x.lo == 0.0:
        return DD(HALF_PI) if y.hi > 0.0 else -HALF_PI
    r = dd_sqrt(x * x + y * y)
    t = DD(math.atan2(float(y), float(x)))
    for _ in range(2):
        s, c = dd_sincos(t)
        t = t + (y * c - x * s) / r
    return t


def dd_pow(base, expo) -> DD:
    """base**expo for positive real base."""
    base = DD(base)
    if base.hi <= 0.0:
        raise ValueError("dd_pow needs positive base")
    return dd_exp(DD(expo) * dd_ln(base))


# ---------------------------------------------------------------------------
# double-double complex
# ---------------------------------------------------------------------------

class DDC:
    """Complex number with double-double components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0.0, im=0.0):
        self.re = DD(re)
        self.im = DD(im)

    @staticmethod
    def _coerce(x):
        if isinstance(x, DDC):
            return x
        if isinstance(x, complex):
            return DDC(x.real, x.imag)
        if isinstance(x, (int, float, Fraction, DD)):
            return DDC(x, 0.0)
        return None

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"DDC({self.re!r}, {self.im!r})"

    def __str__(self) -> str:
        sign = "+" if self.im.hi >= 0 else "-"
        return f"{self.re} {sign} {abs(self.im)}i"

    def conj(self) -> "DDC":
        r = DDC.__new__(DDC)
        r.re = self.re
        r.im = -self.im
        return r

    def __neg__(self) -> "DDC":
        r = DDC.__new__(DDC)
        r.re = -self.re
        r.im = -self.im
        return r

    def __add__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        r = DDC.__new__(DDC)
        r.re = self.re + o.re
        r.im = self.im + o.im
        return r

    __radd__ = __add__

    def __sub__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        return self.__add__(-o)

    def __rsub__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        return o.__add__(-self)

    def __mul__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        r = DDC.__new__(DDC)
        r.re = self.re * o.re - self.im * o.im
        r.im = self.re * o.im + self.im * o.re
        return r

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den.hi == 0.0:
            raise ZeroDivisionError("complex double-double division by zero")
        r = DDC.__new__(DDC)
        r.re = (self.re * o.re + self.im * o.im) / den
        r.im = (self.im * o.re - self.re * o.im) / den
        return r

    def __rtruediv__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __eq__(self, other):
        o = DDC._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def abs(self) -> DD:
        return dd_sqrt(self.re * self.re + self.im * self.im)

    def exp(self) -> "DDC":
        m = dd_exp(self.re)
        s, c = dd_sincos(self.im)
        r = DDC.__new__(DDC)
        r.re = m * c
        r.im = m * s
        return r

    def log(self) -> "DDC":
        r = DDC.__new__(DDC)
        r.re = dd_ln(self.abs())
        r.im = dd_atan2(self.im, self.re)
        return r


def cpow(base, exponent) -> DDC:
    """Principal-branch base**exponent for positive real base.

    Conjugate exponents give exactly conjugate results: the imaginary part
    enters only through sin/cos, which are computed sign-symmetrically.
    """
    base = DD(base)
    if base.hi <= 0.0:
        raise ValueError("cpow needs positive real base")
    expo = DDC._coerce(exponent)
    if expo is None:
        raise TypeError(f"cannot use {type(exponent).__name__} as exponent")
    ell = dd_ln(base)
    m = dd_exp(expo.re * ell)
    s, c = dd_sincos(expo.im * ell)
    out = DDC.__new__(DDC)
    out.re = m * c
    out.im = m * s
    return out


# ---------------------------------------------------------------------------
# spec-shaped dispatch surface
# ---------------------------------------------------------------------------

_ARITH = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}

_ELEM = {"ln": dd_ln, "exp": dd_exp, "sqrt": dd_sqrt}


def ext_arith(op: str, a, b) -> DD:
    """Extended-real arithmetic: op in {add, sub, mul, div}."""
    try:
        fn = _ARITH[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(DD(a), DD(b))


def ext_elem(fn: str, a) -> DD:
    """Extended-real elementary function: fn in {ln, exp, sqrt}."""
    try:
        f = _ELEM[fn]
    except KeyError:
        raise ValueError(f"unknown function {fn!r}") from None
    return f(DD(a))


def rat_arith(op: str, a: Fraction, b: Fraction) -> Fraction:
    """Exact rational arithmetic: op in {add, sub, mul, div}."""
    try:
        fn = _ARITH[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(Fraction(a), Fraction(b))


# ---------------------------------------------------------------------------
# parsing / formatting
# ---------------------------------------------------------------------------

def rational_from_decimal(s: str) -> Fraction:
    """Parse a decimal string exactly into a rational."""
    return Fraction(str(s))


def format_decimal(value, sig_digits: int = 36) -> str:
    """Deterministic decimal string with sig_digits significant digits.

    DD values go through their exact Fraction representation, so two equal
    values always print identically.
    """
    if isinstance(value, DD):
        value = value.to_fraction()
    elif isinstance(value, (int, float)):
        value = Fraction(value)
    if not isinstance(value, Fraction):
        raise TypeError(f"cannot format {type(value).__name__}")
    with localcontext() as ctx:
        ctx.prec = sig_digits
        d = Decimal(value.numerator) / Decimal(value.denominator)
    return str(d)
