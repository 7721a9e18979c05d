"""Directed-rounded interval arithmetic at configurable binary precision.

Endpoints are MPFR floats (via gmpy2).  Every operation rounds the lower
endpoint toward -inf and the upper endpoint toward +inf in the target
Precision, so the result is a representable superset of the exact image.
Values are immutable; the active Precision is carried by each interval and
mixing precisions in one expression raises PrecisionMismatch.
"""

from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import DivisionByZeroInterval, DomainViolation, PrecisionMismatch

__all__ = [
    "Precision",
    "Interval",
    "ComplexInterval",
    "serialize_interval",
    "parse_decimal",
]

_INF = gmpy2.inf(1)
_NINF = gmpy2.inf(-1)


class Precision:
    """A working mantissa width plus its two directed-rounding contexts."""

    __slots__ = ("bits", "down", "up", "near", "_consts")

    def __init__(self, bits):
        if bits < 24:
            raise ValueError("precision below 24 bits is not supported")
        self.bits = int(bits)
        self.down = gmpy2.context(precision=self.bits, round=gmpy2.RoundDown)
        self.up = gmpy2.context(precision=self.bits, round=gmpy2.RoundUp)
        self.near = gmpy2.context(precision=self.bits, round=gmpy2.RoundToNearest)
        self._consts = {}

    def __repr__(self):
        return f"Precision({self.bits})"

    def __eq__(self, other):
        return isinstance(other, Precision) and other.bits == self.bits

    def __hash__(self):
        return hash(("Precision", self.bits))

    @property
    def eps(self):
        """2^(1-bits), one unit of relative rounding slack."""
        return float(gmpy2.exp2(1 - self.bits))

    def pi(self):
        """Enclosure of pi at this precision."""
        c = self._consts.get("pi")
        if c is None:
            c = Interval(self.down.const_pi(), self.up.const_pi(), self)
            self._consts["pi"] = c
        return c


# default precision used by convenience constructors in tests/scripts
DOUBLE = Precision(53)


def _to_mpfr_pair(value, prec):
    """Exact value -> (lo, hi) mpfr pair, outward rounded."""
    if isinstance(value, Fraction):
        q = mpq(value.numerator, value.denominator)
        return prec.down.add(q, mpfr(0)), prec.up.add(q, mpfr(0))
    if isinstance(value, (int, mpz)):
        q = mpq(value)
        return prec.down.add(q, mpfr(0)), prec.up.add(q, mpfr(0))
    if isinstance(value, (float, mpfr)):
        # floats and mpfr are binary rationals, exact at source
        return prec.down.add(value, mpfr(0)), prec.up.add(value, mpfr(0))
    if isinstance(value, mpq):
        return prec.down.add(value, mpfr(0)), prec.up.add(value, mpfr(0))
    if isinstance(value, str):
        return _decimal_pair(value, prec)
    raise TypeError(f"cannot convert {type(value)} to interval endpoints")


def _decimal_pair(text, prec):
    q = Fraction(text)
    q = mpq(q.numerator, q.denominator)
    return prec.down.add(q, mpfr(0)), prec.up.add(q, mpfr(0))


class Interval:
    """Closed interval [lo, hi]; endpoints may be -inf / +inf."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo, hi, prec):
        # trusted constructor: endpoints must already be mpfr at prec
        self.lo = lo
        self.hi = hi
        self.prec = prec
        if gmpy2.is_nan(lo) or gmpy2.is_nan(hi) or not lo <= hi:
            raise ValueError(f"invalid interval endpoints [{lo}, {hi}]")

    # ---- constructors -------------------------------------------------

    @classmethod
    def make(cls, value, prec=DOUBLE):
        """Enclose a single exact value (int, Fraction, float, decimal str)."""
        lo, hi = _to_mpfr_pair(value, prec)
        return cls(lo, hi, prec)

    @classmethod
    def bounds(cls, lo, hi, prec=DOUBLE):
        """Enclose [lo, hi] given as exact values."""
        l, _ = _to_mpfr_pair(lo, prec)
        _, h = _to_mpfr_pair(hi, prec)
        return cls(l, h, prec)

    @classmethod
    def zero(cls, prec=DOUBLE):
        z = mpfr(0)
        return cls(z, z, prec)

    @classmethod
    def one(cls, prec=DOUBLE):
        o = mpfr(1)
        return cls(o, o, prec)

    @classmethod
    def entire(cls, prec=DOUBLE):
        return cls(_NINF, _INF, prec)

    # ---- inspection ----------------------------------------------------

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"

    @property
    def diam(self):
        return self.prec.up.sub(self.hi, self.lo)

    def mid(self):
        """A representable point inside the interval (not outward rounded)."""
        if gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi):
            m = self.prec.near.div(self.prec.near.add(self.lo, self.hi), mpfr(2))
            if m < self.lo:
                m = self.lo
            elif m > self.hi:
                m = self.hi
            return m
        if gmpy2.is_finite(self.lo):
            return self.lo
        if gmpy2.is_finite(self.hi):
            return self.hi
        return mpfr(0)

    def mig(self):
        """Mignitude: min |x| over the interval, as a float."""
        if self.lo > 0:
            return float(self.lo)
        if self.hi < 0:
            return float(-self.hi)
        return 0.0

    def mag(self):
        """Magnitude: max |x| over the interval, as a float."""
        return max(abs(float(self.lo)), abs(float(self.hi)))

    def contains(self, value):
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, Fraction):
            v = mpq(value.numerator, value.denominator)
            return self.lo <= v and v <= self.hi
        return self.lo <= value and value <= self.hi

    def contains_zero(self):
        return self.lo <= 0 and 0 <= self.hi

    def interior_contains(self, other):
        """Strict containment of `other` in the interior of self."""
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other):
        return self.lo <= other.hi and other.lo <= self.hi

    def is_thin(self):
        return self.lo == self.hi

    def __eq__(self, other):
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
            and self.prec == other.prec
        )

    def __hash__(self):
        return hash((str(self.lo), str(self.hi), self.prec.bits))

    # ---- set operations -------------------------------------------------

    def hull(self, other):
        p = self._join(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), p)

    def intersect(self, other):
        p = self._join(other)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise ValueError("empty intersection")
        return Interval(lo, hi, p)

    def widen(self, slack):
        """Pad both endpoints outward by an exact nonnegative value."""
        s_lo, s_hi = _to_mpfr_pair(slack, self.prec)
        if s_lo < 0:
            raise ValueError("widen needs a nonnegative slack")
        p = self.prec
        return Interval(p.down.sub(self.lo, s_hi), p.up.add(self.hi, s_hi), p)

    def to_precision(self, prec):
        """Outward conversion to another Precision."""
        if prec is self.prec:
            return self
        return Interval(
            prec.down.add(self.lo, mpfr(0)), prec.up.add(self.hi, mpfr(0)), prec
        )

    def _join(self, other):
        if self.prec is not other.prec and self.prec != other.prec:
            raise PrecisionMismatch(f"{self.prec} vs {other.prec}")
        return self.prec

    def _coerce(self, other):
        if isinstance(other, Interval):
            self._join(other)
            return other
        if isinstance(other, (int, float, Fraction, mpfr, mpz, mpq, str)):
            return Interval.make(other, self.prec)
        return None

    # ---- arithmetic ------------------------------------------------------

    def __neg__(self):
        return Interval(-self.hi, -self.lo, self.prec)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p = self.prec
        return Interval(p.down.add(self.lo, o.lo), p.up.add(self.hi, o.hi), p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p = self.prec
        return Interval(p.down.sub(self.lo, o.hi), p.up.sub(self.hi, o.lo), p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p = self.prec
        lo, hi = _mul_ends(p, self.lo, self.hi, o.lo, o.hi)
        return Interval(lo, hi, p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.lo <= 0 and 0 <= o.hi:
            raise DivisionByZeroInterval(f"division by {o}")
        p = self.prec
        lo, hi = _div_ends(p, self.lo, self.hi, o.lo, o.hi)
        return Interval(lo, hi, p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        return self.pow_int(n)

    def pow_int(self, n):
        p = self.prec
        if n == 0:
            return Interval.one(p)
        if n < 0:
            return Interval.one(p) / self.pow_int(-n)
        lo, hi = self.lo, self.hi
        plo = p.down.pow(lo, n)
        phi_ = p.up.pow(hi, n)
        if n % 2 == 1:
            return Interval(plo, phi_, p)
        # even powers fold at zero
        if lo >= 0:
            return Interval(plo, phi_, p)
        if hi <= 0:
            return Interval(p.down.pow(hi, n), p.up.pow(lo, n), p)
        m = max(p.up.pow(lo, n), phi_)
        return Interval(mpfr(0), m, p)

    def sq(self):
        return self.pow_int(2)

    # ---- elementary functions -------------------------------------------

    def sqrt(self):
        p = self.prec
        lo = self.lo
        if lo < 0:
            # tolerate only rounding slack below zero
            if self.hi < 0:
                raise DomainViolation(f"sqrt of {self}")
            raise DomainViolation(f"sqrt of sign-indefinite {self}")
        return Interval(p.down.sqrt(lo), p.up.sqrt(self.hi), p)

    def exp(self):
        p = self.prec
        return Interval(p.down.exp(self.lo), p.up.exp(self.hi), p)

    def log(self):
        if self.lo <= 0:
            raise DomainViolation(f"log of {self}")
        p = self.prec
        return Interval(p.down.log(self.lo), p.up.log(self.hi), p)

    def atan(self):
        p = self.prec
        return Interval(p.down.atan(self.lo), p.up.atan(self.hi), p)

    def asinh(self):
        p = self.prec
        return Interval(p.down.asinh(self.lo), p.up.asinh(self.hi), p)

    def sin(self):
        return _sin_enclosure(self)

    def cos(self):
        half = Interval.make(Fraction(1, 2), self.prec)
        return _sin_enclosure(self + self.prec.pi() * half)

    def elem(self, name):
        """Dispatch used by the jet/series layers."""
        return getattr(self, name)()


def _mul_ends(p, alo, ahi, blo, bhi):
    """Endpoint multiplication by sign cases; two rounded products usually."""
    dm = p.down.mul
    um = p.up.mul
    if alo >= 0:
        if blo >= 0:
            return dm(alo, blo), um(ahi, bhi)
        if bhi <= 0:
            return dm(ahi, blo), um(alo, bhi)
        return dm(ahi, blo), um(ahi, bhi)
    if ahi <= 0:
        if blo >= 0:
            return dm(alo, bhi), um(ahi, blo)
        if bhi <= 0:
            return dm(ahi, bhi), um(alo, blo)
        return dm(alo, bhi), um(alo, blo)
    if blo >= 0:
        return dm(alo, bhi), um(ahi, bhi)
    if bhi <= 0:
        return dm(ahi, blo), um(alo, blo)
    return min(dm(alo, bhi), dm(ahi, blo)), max(um(alo, blo), um(ahi, bhi))


def _div_ends(p, alo, ahi, blo, bhi):
    """Endpoint division; caller guarantees 0 not in [blo, bhi]."""
    dd = p.down.div
    ud = p.up.div
    if blo > 0:
        if alo >= 0:
            return dd(alo, bhi), ud(ahi, blo)
        if ahi <= 0:
            return dd(alo, blo), ud(ahi, bhi)
        return dd(alo, blo), ud(ahi, blo)
    # b strictly negative
    if alo >= 0:
        return dd(ahi, bhi), ud(alo, blo)
    if ahi <= 0:
        return dd(ahi, blo), ud(alo, bhi)
    return dd(ahi, bhi), ud(alo, bhi)


def _sin_enclosure(a):
    """Enclosure of sin over an interval, monotonicity cases via pi bounds."""
    p = a.prec
    if not (gmpy2.is_finite(a.lo) and gmpy2.is_finite(a.hi)):
        return Interval(mpfr(-1), mpfr(1), p)
    pi = p.pi()
    two_pi_lo = p.down.mul(pi.lo, mpfr(2))
    if p.up.sub(a.hi, a.lo) >= two_pi_lo:
        return Interval(mpfr(-1), mpfr(1), p)
    slo = min(p.down.sin(a.lo), p.down.sin(a.hi))
    shi = max(p.up.sin(a.lo), p.up.sin(a.hi))
    # a peak sits at pi/2 + 2k pi, a valley at -pi/2 + 2k pi; detect by
    # checking whether the interval scaled to periods covers such a point
    half_pi = pi * Interval.make(Fraction(1, 2), p)
    if _crosses(a, half_pi, pi, p):
        shi = mpfr(1)
    if _crosses(a, -half_pi, pi, p):
        slo = mpfr(-1)
    return Interval(max(slo, mpfr(-1)), min(shi, mpfr(1)), p)


def _crosses(a, phase, pi, p):
    """Does [a.lo, a.hi] contain phase + 2k*pi for some integer k?"""
    two_pi = pi + pi
    t = (a - phase) / two_pi
    k_min = gmpy2.ceil(t.lo)
    k_max = gmpy2.floor(t.hi)
    return k_min <= k_max


class ComplexInterval:
    """Rectangle complex interval: re + i*im with Interval components."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        if im is None:
            im = Interval.zero(re.prec)
        re._join(im)
        self.re = re
        self.im = im

    @classmethod
    def make(cls, re, im=0, prec=DOUBLE):
        return cls(Interval.make(re, prec), Interval.make(im, prec))

    @classmethod
    def from_complex(cls, z, prec=DOUBLE):
        return cls(Interval.make(z.real, prec), Interval.make(z.imag, prec))

    @property
    def prec(self):
        return self.re.prec

    def __repr__(self):
        return f"({self.re} + i{self.im})"

    @property
    def diam(self):
        return max(self.re.diam, self.im.diam)

    def mid(self):
        return complex(float(self.re.mid()), float(self.im.mid()))

    def mag(self):
        return max(self.re.mag(), self.im.mag())

    def conj(self):
        return ComplexInterval(self.re, -self.im)

    def contains(self, z):
        if isinstance(z, ComplexInterval):
            return self.re.contains(z.re) and self.im.contains(z.im)
        return self.re.contains(z.real) and self.im.contains(z.imag)

    def contains_zero(self):
        return self.re.contains_zero() and self.im.contains_zero()

    def interior_contains(self, other):
        return self.re.interior_contains(other.re) and self.im.interior_contains(
            other.im
        )

    def intersects(self, other):
        return self.re.intersects(other.re) and self.im.intersects(other.im)

    def intersect(self, other):
        return ComplexInterval(
            self.re.intersect(other.re), self.im.intersect(other.im)
        )

    def hull(self, other):
        return ComplexInterval(self.re.hull(other.re), self.im.hull(other.im))

    def _coerce(self, other):
        if isinstance(other, ComplexInterval):
            return other
        if isinstance(other, Interval):
            return ComplexInterval(other)
        if isinstance(other, complex):
            return ComplexInterval.from_complex(other, self.prec)
        if isinstance(other, (int, float, Fraction, mpfr, str)):
            return ComplexInterval(Interval.make(other, self.prec))
        return None

    def __neg__(self):
        return ComplexInterval(-self.re, -self.im)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ComplexInterval(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ComplexInterval(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ComplexInterval(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = o.re.sq() + o.im.sq()
        if d.contains_zero():
            raise DivisionByZeroInterval(f"division by {o}")
        num = self * o.conj()
        return ComplexInterval(num.re / d, num.im / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def abs_sq(self):
        return self.re.sq() + self.im.sq()

    def abs(self):
        return self.abs_sq().sqrt()

    def sqrt(self):
        """Principal square root; valid only off the branch cut."""
        # r = |z|, sqrt(z) = (sqrt((r+re)/2), sign(im) sqrt((r-re)/2))
        if self.re.lo <= 0 and self.im.contains_zero():
            raise DomainViolation("complex sqrt across branch cut")
        r = self.abs()
        half = Interval.make(Fraction(1, 2), self.prec)
        a = ((r + self.re) * half).sqrt()
        b2 = (r - self.re) * half
        b = b2.sqrt()
        if self.im.hi < 0:
            b = -b
        elif self.im.contains_zero():
            b = b.hull(-b)
        return ComplexInterval(a, b)


# ---------------------------------------------------------------------------
# decimal serialization
# ---------------------------------------------------------------------------


def _decimal_floor(value, digits):
    """Exact decimal string of value rounded toward -inf at `digits` places."""
    num, den = value.as_integer_ratio()
    num, den = int(num), int(den)
    scaled = Fraction(num, den) * 10**digits
    n = scaled.numerator // scaled.denominator  # floor
    return _place(n, digits)


def _decimal_ceil(value, digits):
    num, den = value.as_integer_ratio()
    num, den = int(num), int(den)
    scaled = Fraction(num, den) * 10**digits
    n = -((-scaled.numerator) // scaled.denominator)  # ceil
    return _place(n, digits)


def _place(n, digits):
    sign = "-" if n < 0 else ""
    n = abs(n)
    s = str(n).rjust(digits + 1, "0")
    if digits == 0:
        return sign + s
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def interval_to_decimal_pair(a, digits):
    """Outward decimal endpoint strings (lo toward -inf, hi toward +inf)."""
    if not (gmpy2.is_finite(a.lo) and gmpy2.is_finite(a.hi)):
        return str(a.lo), str(a.hi)
    return _decimal_floor(a.lo, digits), _decimal_ceil(a.hi, digits)


def serialize_interval(a, digits):
    """Shared-prefix decimal rendering of an interval.

    Follows the reporting convention where common leading digits are printed
    once and the differing tails become sub/superscript, the subscript holding
    the endpoint of smaller absolute value:

        [123.4567891234, 123.4567895678]  ->  123.456789_{1234}^{5678}
        [-1e-10, 1e-10]                   ->  _{-0.0000000001}^{+0.0000000001}
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    lo_s, hi_s = interval_to_decimal_pair(a, digits)
    if a.lo >= 0 and a.hi >= 0:
        sign, near, far = "", lo_s, hi_s
    elif a.lo < 0 and a.hi <= 0:
        sign, near, far = "-", hi_s.lstrip("-"), lo_s.lstrip("-")
        if a.hi == 0:
            near = near  # "-0.00" style tail is fine
    else:
        # sign-indefinite: no shared prefix form
        hs = hi_s if hi_s.startswith("-") else "+" + hi_s
        return "_{" + lo_s + "}^{" + hs + "}"
    prefix = ""
    for c1, c2 in zip(near, far):
        if c1 == c2:
            prefix += c1
        else:
            break
    if "." not in prefix:
        # avoid splitting the integer part mid-digit; fall back to full form
        hs = hi_s if hi_s.startswith("-") else "+" + hi_s
        ls = lo_s
        return "_{" + ls + "}^{" + hs + "}"
    sub = near[len(prefix):]
    sup = far[len(prefix):]
    if not sub and not sup:
        # thin value: keep one digit in the scripts
        sub = sup = prefix[-1]
        prefix = prefix[:-1]
    return f"{sign}{prefix}_{{{sub}}}^{{{sup}}}"


def parse_decimal(text, prec):
    """Decimal string -> outward-rounded interval at prec."""
    return Interval.make(text.strip(), prec)
