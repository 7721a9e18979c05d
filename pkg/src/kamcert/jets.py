"""Truncated multivariate Taylor (jet) arithmetic.

A Jet stores the coefficients of a polynomial sum c_k x^k over all
multiindices |k| <= degree, in a fixed graded-lexicographic order.  The
coefficient ring is duck-typed: plain floats and complex for non-rigorous
work, Fraction for exact oracles, Interval / ComplexInterval for enclosures.
Arithmetic truncates beyond the degree and, with interval coefficients, every
retained coefficient encloses the exact one.
"""

import math
from fractions import Fraction
from itertools import product as _iproduct

from gmpy2 import mpfr

from .errors import DivisionByZeroInterval, DomainViolation
from .intervals import ComplexInterval, Interval

__all__ = ["IndexTable", "Jet", "conv_jets"]

_TABLES = {}


class IndexTable:
    """Monomial bookkeeping for jets in n_vars variables up to `degree`.

    Monomials are ordered by total degree, then lexicographically.  The
    multiplication table lists, for every output monomial, the coefficient
    index pairs whose monomials sum to it.
    """

    def __init__(self, n_vars, degree):
        self.n_vars = n_vars
        self.degree = degree
        monos = [
            k
            for k in _iproduct(range(degree + 1), repeat=n_vars)
            if sum(k) <= degree
        ]
        monos.sort(key=lambda k: (sum(k), k))
        self.monomials = monos
        self.index = {k: i for i, k in enumerate(monos)}
        self.size = len(monos)
        self.degrees = [sum(k) for k in monos]
        self.factorials = [
            math.prod(math.factorial(e) for e in k) for k in monos
        ]
        pairs = [[] for _ in monos]
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if sum(a) + sum(b) <= degree:
                    m = self.index[tuple(x + y for x, y in zip(a, b))]
                    pairs[m].append((i, j))
        self.pairs = pairs
        self.flat_pairs = [
            (m, i, j) for m, lst in enumerate(pairs) for (i, j) in lst
        ]
        # partial derivative maps: diff_maps[v] = [(src, dst, exponent), ...]
        self.diff_maps = []
        for v in range(n_vars):
            dm = []
            for i, k in enumerate(monos):
                if k[v] > 0:
                    kk = list(k)
                    kk[v] -= 1
                    dm.append((i, self.index[tuple(kk)], k[v]))
            self.diff_maps.append(dm)

    @staticmethod
    def get(n_vars, degree):
        key = (n_vars, degree)
        t = _TABLES.get(key)
        if t is None:
            t = IndexTable(n_vars, degree)
            _TABLES[key] = t
        return t


def _zero_like(x):
    if isinstance(x, Interval):
        return Interval.zero(x.prec)
    if isinstance(x, ComplexInterval):
        p = x.prec
        return ComplexInterval(Interval.zero(p), Interval.zero(p))
    if isinstance(x, Fraction):
        return Fraction(0)
    if isinstance(x, complex):
        return 0j
    if isinstance(x, mpfr):
        return mpfr(0)
    return 0.0


def _one_like(x):
    if isinstance(x, Interval):
        return Interval.one(x.prec)
    if isinstance(x, ComplexInterval):
        p = x.prec
        return ComplexInterval(Interval.one(p), Interval.zero(p))
    if isinstance(x, Fraction):
        return Fraction(1)
    if isinstance(x, complex):
        return 1 + 0j
    if isinstance(x, mpfr):
        return mpfr(1)
    return 1.0


def _is_exact_zero(x):
    if isinstance(x, Interval):
        return x.lo == 0 and x.hi == 0
    if isinstance(x, ComplexInterval):
        return _is_exact_zero(x.re) and _is_exact_zero(x.im)
    return x == 0


class Jet:
    """Polynomial jet with coefficients in a duck-typed ring."""

    __slots__ = ("table", "coeffs", "_ends")

    def __init__(self, table, coeffs):
        self.table = table
        self.coeffs = coeffs
        self._ends = None

    # ---- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, value, n_vars, degree):
        t = IndexTable.get(n_vars, degree)
        z = _zero_like(value)
        c = [z] * t.size
        c[0] = value
        return cls(t, c)

    @classmethod
    def variable(cls, i, value, n_vars, degree, unit=None):
        """Jet of (value + x_i): constant term plus unit linear term."""
        t = IndexTable.get(n_vars, degree)
        z = _zero_like(value)
        c = [z] * t.size
        c[0] = value
        e = tuple(1 if j == i else 0 for j in range(n_vars))
        c[t.index[e]] = _one_like(value) if unit is None else unit
        return cls(t, c)

    @classmethod
    def from_coeffs(cls, coeff_map, n_vars, degree, zero):
        t = IndexTable.get(n_vars, degree)
        c = [zero] * t.size
        for k, v in coeff_map.items():
            c[t.index[tuple(k)]] = v
        return cls(t, c)

    def copy(self):
        return Jet(self.table, list(self.coeffs))

    @property
    def n_vars(self):
        return self.table.n_vars

    @property
    def degree(self):
        return self.table.degree

    def __repr__(self):
        parts = [
            f"{k}:{c}"
            for k, c in zip(self.table.monomials, self.coeffs)
            if not _is_exact_zero(c)
        ]
        return "Jet(" + ", ".join(parts) + ")"

    def coeff(self, k):
        return self.coeffs[self.table.index[tuple(k)]]

    def constant_term(self):
        return self.coeffs[0]

    def zero_coeff(self):
        return _zero_like(self.coeffs[0])

    # ---- ring operations ---------------------------------------------------

    def _check(self, other):
        if self.table is not other.table:
            raise ValueError("jet shape mismatch")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(
                self.table, [a + b for a, b in zip(self.coeffs, other.coeffs)]
            )
        c = list(self.coeffs)
        c[0] = c[0] + other
        return Jet(self.table, c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(
                self.table, [a - b for a, b in zip(self.coeffs, other.coeffs)]
            )
        c = list(self.coeffs)
        c[0] = c[0] - other
        return Jet(self.table, c)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return Jet(self.table, [-a for a in self.coeffs])

    def scale(self, s):
        return Jet(self.table, [a * s for a in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        if isinstance(self.coeffs[0], Interval):
            return _conv_interval(
                self.table, [self], [other], 0, None, self.coeffs[0].prec
            )
        return _mul_generic(self.table, self, other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.elem("inv")
        return self.scale(_invert_scalar(other))

    # ---- calculus ---------------------------------------------------------

    def diff(self, v):
        """Partial derivative jet (degree drops by one, same table)."""
        z = self.zero_coeff()
        out = [z] * self.table.size
        for src, dst, e in self.table.diff_maps[v]:
            out[dst] = out[dst] + self.coeffs[src] * e
        return Jet(self.table, out)

    def derivative(self, alpha):
        """alpha! times the coefficient of alpha: the partial derivative."""
        i = self.table.index[tuple(alpha)]
        return self.coeffs[i] * self.table.factorials[i]

    def truncate_degree(self, d):
        z = self.zero_coeff()
        out = [
            c if deg <= d else z
            for c, deg in zip(self.coeffs, self.table.degrees)
        ]
        return Jet(self.table, out)

    def graded_part(self, d):
        z = self.zero_coeff()
        out = [
            c if deg == d else z
            for c, deg in zip(self.coeffs, self.table.degrees)
        ]
        return Jet(self.table, out)

    def evaluate(self, xs):
        """Substitute ring values for the variables (no truncation issues)."""
        total = None
        for k, c in zip(self.table.monomials, self.coeffs):
            if _is_exact_zero(c):
                continue
            term = c
            for v, e in enumerate(k):
                for _ in range(e):
                    term = term * xs[v]
            total = term if total is None else total + term
        return self.zero_coeff() if total is None else total

    def compose(self, args):
        """Substitute jets for the variables, truncating at the degree.

        The substituted jets may live over a different variable set; the
        result is expressed in their variables.
        """
        t = self.table
        at = args[0].table
        one = Jet.constant(_one_like(args[0].coeffs[0]), at.n_vars, at.degree)
        pow_cache = {(0,) * t.n_vars: one}

        def mono_jet(k):
            k = tuple(k)
            if k in pow_cache:
                return pow_cache[k]
            for v in range(len(k) - 1, -1, -1):
                if k[v] > 0:
                    kk = list(k)
                    kk[v] -= 1
                    prev = mono_jet(tuple(kk))
                    res = prev * args[v]
                    pow_cache[k] = res
                    return res
            raise AssertionError

        out = None
        for k, c in zip(t.monomials, self.coeffs):
            if _is_exact_zero(c):
                continue
            term = mono_jet(k).scale(c)
            out = term if out is None else out + term
        if out is None:
            z = args[0].zero_coeff()
            return Jet(at, [z] * at.size)
        return out

    # ---- elementary functions ----------------------------------------------

    def elem(self, name, extra=None):
        """f(self) for univariate f, via scalar derivatives at the constant
        term composed with the nilpotent part; exact through the degree."""
        a0 = self.coeffs[0]
        derivs = _scalar_derivs(a0, name, self.degree, extra)
        # result = sum derivs[m] * (self - a0)^m
        t = self.table
        z = _zero_like(a0)
        nil = list(self.coeffs)
        nil[0] = z
        nil = Jet(t, nil)
        out = Jet.constant(derivs[0], t.n_vars, t.degree)
        pw = None
        for m in range(1, len(derivs)):
            pw = nil if pw is None else pw * nil
            if _is_exact_zero(derivs[m]):
                continue
            out = out + pw.scale(derivs[m])
        return out

    def sqrt(self):
        return self.elem("sqrt")

    def inv(self):
        return self.elem("inv")

    def inv_sqrt(self):
        return self.elem("inv_sqrt")

    def exp(self):
        return self.elem("exp")

    def sin(self):
        return self.elem("sin")

    def cos(self):
        return self.elem("cos")

    def pow_rational(self, num, den):
        return self.elem("pow", Fraction(num, den))

    def pow_int(self, n):
        if n < 0:
            return self.inv().pow_int(-n)
        t = self.table
        out = Jet.constant(_one_like(self.coeffs[0]), t.n_vars, t.degree)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out


def _invert_scalar(x):
    if isinstance(x, Interval):
        return Interval.one(x.prec) / x
    if isinstance(x, ComplexInterval):
        one = ComplexInterval(Interval.one(x.prec))
        return one / x
    if isinstance(x, Fraction):
        return Fraction(1) / x
    return 1.0 / x


def _scalar_derivs(a0, name, degree, extra=None):
    """[f(a0), f'(a0), f''(a0)/2!, ...] up to `degree` in the ring of a0."""
    if name == "inv":
        name, extra = "pow", Fraction(-1)
    if name == "inv_sqrt":
        name, extra = "pow", Fraction(-1, 2)
    if name == "sqrt":
        name, extra = "pow", Fraction(1, 2)
    if name == "pow":
        alpha = Fraction(extra)
        base = _ring_pow(a0, alpha)
        out = [base]
        binom = Fraction(1)
        inv_a0 = _invert_scalar(a0)
        acc = base
        for m in range(1, degree + 1):
            binom = binom * (alpha - (m - 1)) / m
            acc = acc * inv_a0
            out.append(_ring_scale(acc, binom))
        return out
    if name == "exp":
        e = _ring_elem(a0, "exp")
        out = [e]
        f = 1
        for m in range(1, degree + 1):
            f *= m
            out.append(_ring_scale(e, Fraction(1, f)))
        return out
    if name == "sin" or name == "cos":
        s = _ring_elem(a0, "sin")
        c = _ring_elem(a0, "cos")
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        out = []
        f = 1
        for m in range(degree + 1):
            if m > 0:
                f *= m
            out.append(_ring_scale(cycle[m % 4], Fraction(1, f)))
        return out
    if name == "log":
        out = [_ring_elem(a0, "log")]
        inv_a0 = _invert_scalar(a0)
        acc = _one_like(a0)
        for m in range(1, degree + 1):
            acc = acc * inv_a0
            out.append(_ring_scale(acc, Fraction((-1) ** (m - 1), m)))
        return out
    raise ValueError(f"unknown elementary function {name}")


def _ring_scale(x, q):
    if isinstance(q, Fraction) and q.denominator == 1:
        q = q.numerator
    return x * q


def _ring_pow(a0, alpha):
    """a0^alpha in the coefficient ring, with domain checks."""
    if alpha.denominator == 1:
        n = alpha.numerator
        if isinstance(a0, Interval):
            if n < 0 and a0.contains_zero():
                raise DivisionByZeroInterval(f"jet inverse of {a0}")
            return a0.pow_int(n)
        if n >= 0:
            return a0**n
        if a0 == 0:
            raise DivisionByZeroInterval("jet inverse of exact zero")
        return _invert_scalar(a0) ** (-n)
    if alpha == Fraction(1, 2):
        return _ring_elem(a0, "sqrt")
    if alpha == Fraction(-1, 2):
        return _invert_scalar(_ring_elem(a0, "sqrt"))
    if alpha == Fraction(-3, 2):
        s = _ring_elem(a0, "sqrt")
        return _invert_scalar(s * a0)
    # general rational power via exp/log, positive base required
    if isinstance(a0, Interval):
        return (a0.log() * Interval.make(alpha, a0.prec)).exp()
    return math.exp(float(alpha) * math.log(a0))


def _ring_elem(x, name):
    if isinstance(x, (Interval, ComplexInterval)):
        if isinstance(x, Interval) and name == "sqrt" and x.lo <= 0:
            raise DomainViolation(f"sqrt of {x}")
        return getattr(x, name)()
    if isinstance(x, Fraction):
        if name == "sqrt":
            from fractions import Fraction as F

            rn = math.isqrt(x.numerator)
            rd = math.isqrt(x.denominator)
            if rn * rn == x.numerator and rd * rd == x.denominator:
                return F(rn, rd)
            raise DomainViolation("non-square Fraction under sqrt")
        raise DomainViolation(f"{name} unsupported for Fraction")
    if isinstance(x, complex):
        import cmath

        return getattr(cmath, name)(x)
    if isinstance(x, mpfr):
        import gmpy2

        return getattr(gmpy2, name)(x)
    return getattr(math, name)(x)


# ---------------------------------------------------------------------------
# fused convolution
# ---------------------------------------------------------------------------


def conv_jets(a_list, b_list, k, weights=None):
    """Coefficient k of the series product: sum_j a[j] * b[k-j].

    a_list and b_list are sequences of Jets sharing one table; the result is
    one Jet.  With `weights` (a sequence of exact rationals indexed by j) each
    term is scaled before accumulation.  Interval coefficients take a fused
    endpoint path to avoid intermediate allocations.
    """
    table = a_list[0].table
    sample = a_list[0].coeffs[0]
    if isinstance(sample, Interval):
        return _conv_interval(table, a_list, b_list, k, weights, sample.prec)
    out = None
    for j in range(k + 1):
        if weights is not None and weights[j] == 0:
            continue
        term = _mul_generic(table, a_list[j], b_list[k - j])
        if weights is not None:
            term = term.scale(weights[j])
        out = term if out is None else out + term
    if out is None:
        z = a_list[0].zero_coeff()
        return Jet(table, [z] * table.size)
    return out


def _mul_generic(table, a, b):
    ac = a.coeffs
    bc = b.coeffs
    z = _zero_like(ac[0])
    out = [z] * table.size
    for m, i, j in table.flat_pairs:
        x = ac[i]
        y = bc[j]
        if _is_exact_zero(x) or _is_exact_zero(y):
            continue
        out[m] = out[m] + x * y
    return Jet(table, out)


def _jet_ends(jet):
    e = jet._ends
    if e is None:
        lo = [c.lo for c in jet.coeffs]
        hi = [c.hi for c in jet.coeffs]
        e = (lo, hi)
        jet._ends = e
    return e


def _conv_interval(table, a_list, b_list, k, weights, prec):
    size = table.size
    flat = table.flat_pairs
    zero = mpfr(0)
    acc_lo = [zero] * size
    acc_hi = [zero] * size
    dfma = prec.down.fma
    ufma = prec.up.fma
    dmul = prec.down.mul
    umul = prec.up.mul
    for j in range(k + 1):
        if weights is not None and weights[j] == 0:
            continue
        alo, ahi = _jet_ends(a_list[j])
        blo, bhi = _jet_ends(b_list[k - j])
        if weights is not None:
            # fold the exact rational weight into the a-side once
            wi = Interval.make(weights[j], prec)
            alo, ahi = _scale_ends(alo, ahi, wi.lo, wi.hi, prec)
        # sign-case products fused into the accumulators (one rounding)
        for m, i, jj in flat:
            x0 = alo[i]
            x1 = ahi[i]
            y0 = blo[jj]
            y1 = bhi[jj]
            if x0 >= 0:
                if y0 >= 0:
                    acc_lo[m] = dfma(x0, y0, acc_lo[m])
                    acc_hi[m] = ufma(x1, y1, acc_hi[m])
                elif y1 <= 0:
                    acc_lo[m] = dfma(x1, y0, acc_lo[m])
                    acc_hi[m] = ufma(x0, y1, acc_hi[m])
                else:
                    acc_lo[m] = dfma(x1, y0, acc_lo[m])
                    acc_hi[m] = ufma(x1, y1, acc_hi[m])
            elif x1 <= 0:
                if y0 >= 0:
                    acc_lo[m] = dfma(x0, y1, acc_lo[m])
                    acc_hi[m] = ufma(x1, y0, acc_hi[m])
                elif y1 <= 0:
                    acc_lo[m] = dfma(x1, y1, acc_lo[m])
                    acc_hi[m] = ufma(x0, y0, acc_hi[m])
                else:
                    acc_lo[m] = dfma(x0, y1, acc_lo[m])
                    acc_hi[m] = ufma(x0, y0, acc_hi[m])
            else:
                if y0 >= 0:
                    acc_lo[m] = dfma(x0, y1, acc_lo[m])
                    acc_hi[m] = ufma(x1, y1, acc_hi[m])
                elif y1 <= 0:
                    acc_lo[m] = dfma(x1, y0, acc_lo[m])
                    acc_hi[m] = ufma(x0, y0, acc_hi[m])
                else:
                    acc_lo[m] = min(dfma(x0, y1, acc_lo[m]),
                                    dfma(x1, y0, acc_lo[m]))
                    acc_hi[m] = max(ufma(x0, y0, acc_hi[m]),
                                    ufma(x1, y1, acc_hi[m]))
    coeffs = [Interval(l, h, prec) for l, h in zip(acc_lo, acc_hi)]
    return Jet(table, coeffs)


def _scale_ends(lo_list, hi_list, wlo, whi, prec):
    from .intervals import _mul_ends

    out_lo = []
    out_hi = []
    for a, b in zip(lo_list, hi_list):
        l, h = _mul_ends(prec, a, b, wlo, whi)
        out_lo.append(l)
        out_hi.append(h)
    return out_lo, out_hi
