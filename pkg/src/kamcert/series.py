"""Expression DAGs for vector fields and their power-series evaluation.

A field is described once as a small DAG over the state variables with exact
rational constants; the same description is then evaluated as

* plain ring values (floats, Intervals, Jets) for right-hand sides,
  Hamiltonians and rough-enclosure checks, and
* autoregressive time-Taylor series whose coefficients live in any of those
  rings, which is what the rigorous integrator and the explorer both consume.

Supported node kinds are variables, exact-rational affine combinations,
products, and rational powers; that covers polynomial Hamiltonians and the
1/r, 1/r^3 terms of the reduced three-body field.
"""

from fractions import Fraction

from .errors import DomainViolation
from .intervals import Interval
from .jets import Jet, conv_jets

__all__ = [
    "var",
    "const",
    "affine",
    "mul",
    "pow_rat",
    "eval_exprs",
    "SeriesEvaluator",
]

_VAR, _CONST, _AFFINE, _MUL, _POW = range(5)


class Expr:
    __slots__ = ("kind", "a", "b", "terms", "q", "num", "den")

    def __init__(self, kind):
        self.kind = kind
        self.a = self.b = self.terms = self.q = None
        self.num = self.den = 0


def var(i):
    e = Expr(_VAR)
    e.q = i
    return e


def const(q):
    e = Expr(_CONST)
    e.q = Fraction(q)
    return e


def affine(terms, constant=0):
    """sum of (rational, expr) pairs plus a rational constant."""
    e = Expr(_AFFINE)
    e.terms = [(Fraction(c), x) for c, x in terms]
    e.q = Fraction(constant)
    return e


def mul(a, b):
    e = Expr(_MUL)
    e.a = a
    e.b = b
    return e


def pow_rat(a, num, den=1):
    e = Expr(_POW)
    e.a = a
    e.num = int(num)
    e.den = int(den)
    return e


def _ipow_rational(x, num, den):
    """Interval x^(num/den) for den in {1, 2}."""
    if den == 1:
        return x.pow_int(num)
    if den == 2:
        s = x.sqrt()
        return s.pow_int(num)
    raise DomainViolation(f"unsupported rational power {num}/{den}")


def _value_pow(x, num, den):
    if isinstance(x, Jet):
        if den == 1:
            return x.pow_int(num)
        return x.pow_rational(num, den)
    if isinstance(x, Interval):
        return _ipow_rational(x, num, den)
    return x ** (num / den) if den != 1 else x ** num


def _value_scalar(q, sample):
    if isinstance(sample, Jet):
        inner = sample.coeffs[0]
        if isinstance(inner, Interval):
            return Interval.make(q, inner.prec)
        if isinstance(inner, Fraction):
            return q
        return float(q)
    if isinstance(sample, Interval):
        return Interval.make(q, sample.prec)
    if isinstance(sample, Fraction):
        return q
    return float(q)


def eval_exprs(exprs, xs):
    """Evaluate expression DAGs on ring values xs (one per variable)."""
    memo = {}
    sample = xs[0]

    def ev(e):
        r = memo.get(id(e))
        if r is not None:
            return r
        k = e.kind
        if k == _VAR:
            r = xs[e.q]
        elif k == _CONST:
            r = _value_scalar(e.q, sample) * _one(sample)
        elif k == _AFFINE:
            r = None
            for c, child in e.terms:
                t = ev(child) * _value_scalar(c, sample)
                r = t if r is None else r + t
            if e.q != 0 or r is None:
                cst = _value_scalar(e.q, sample) * _one(sample)
                r = cst if r is None else r + cst
        elif k == _MUL:
            r = ev(e.a) * ev(e.b)
        else:
            r = _value_pow(ev(e.a), e.num, e.den)
        memo[id(e)] = r
        return r

    return [ev(e) for e in exprs]


def _one(sample):
    if isinstance(sample, Jet):
        return Jet.constant(
            _value_scalar(Fraction(1), sample), sample.n_vars, sample.degree
        )
    return _value_scalar(Fraction(1), sample)


class SeriesEvaluator:
    """Autoregressive time-Taylor coefficients of expressions along a series.

    The state series (one coefficient list per variable) is owned by the
    caller and extended between calls; `coeff(expr, k)` then produces the
    k-th Taylor coefficient of any registered expression, caching every
    intermediate node so the total work for orders 0..p is O(p^2) per node.
    Coefficients are Jets (possibly degree 0) over a shared ring.
    """

    def __init__(self, state_series, zero_jet):
        self.state = state_series
        self.zero = zero_jet
        self.cache = {}

    def _scalar(self, q):
        return _value_scalar(q, self.zero)

    def coeff(self, e, k):
        key = (id(e), k)
        c = self.cache.get(key)
        if c is not None:
            return c
        kind = e.kind
        if kind == _VAR:
            c = self.state[e.q][k]
        elif kind == _CONST:
            if k == 0:
                c = self.zero + self._scalar(e.q)
            else:
                c = self.zero
        elif kind == _AFFINE:
            c = None
            for q, child in e.terms:
                t = self.coeff(child, k).scale(self._scalar(q))
                c = t if c is None else c + t
            if k == 0 and e.q != 0:
                c = (c if c is not None else self.zero) + self._scalar(e.q)
            if c is None:
                c = self.zero
        elif kind == _MUL:
            a_list = [self.coeff(e.a, j) for j in range(k + 1)]
            b_list = [self.coeff(e.b, j) for j in range(k + 1)]
            c = conv_jets(a_list, b_list, k)
        else:
            c = self._pow_coeff(e, k)
        self.cache[key] = c
        return c

    def _pow_coeff(self, e, k):
        # w = u^alpha satisfies u w' = alpha u' w, giving
        #   k u_0 w_k = sum_{m=1..k} ((alpha+1) m - k) u_m w_{k-m}
        alpha = Fraction(e.num, e.den)
        if k == 0:
            return _value_pow(self.coeff(e.a, 0), e.num, e.den)
        inv0 = self.cache.get(("inv0", id(e)))
        if inv0 is None:
            inv0 = self.coeff(e.a, 0).inv()
            self.cache[("inv0", id(e))] = inv0
        u_list = [self.coeff(e.a, j) for j in range(k + 1)]
        w_list = [self.coeff(e, j) for j in range(k)] + [self.zero]
        weights = [
            Fraction(0) if m == 0 else (alpha + 1) * m - k
            for m in range(k + 1)
        ]
        s = conv_jets(u_list, w_list, k, weights=weights)
        return (s * inv0).scale(self._scalar(Fraction(1, k)))

    def series(self, exprs, p):
        """Coefficient lists (orders 0..p) for each expression."""
        return [[self.coeff(e, k) for k in range(p + 1)] for e in exprs]
