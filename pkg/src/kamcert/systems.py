"""Concrete Hamiltonian systems: the quartic potential family and the
reduced planar three-body problem, plus the coordinate changes between full
and reduced three-body variables and small analytic utilities.

Field right-hand sides are hand-differentiated from the Hamiltonians and
expressed as expression DAGs (see :mod:`kamcert.series`), so the same
formulas serve point evaluation, interval enclosures and jet-valued Taylor
series.  Parameters enter as exact rationals.
"""

import math
from fractions import Fraction

from .errors import DegenerateConfiguration, DomainViolation, PoleAtMinusTwo
from .intervals import Interval
from .sections import AffineSection, EnergyChart
from .series import affine, const, eval_exprs, mul, pow_rat, var

__all__ = [
    "VectorField",
    "QuarticSystem",
    "ReducedThreeBody",
    "chat_involution",
    "integrable_values",
    "full_to_reduced",
    "reduced_to_full",
    "EIGHT_INITIAL",
    "EIGHT_ENERGY",
]


class VectorField:
    """A smooth field given by expression DAGs, with domain guards.

    guards are expressions that must remain strictly positive on any box the
    integrator touches (collision distances for the three-body field).
    """

    def __init__(self, dim, rhs, hamiltonian=None, guards=(), name=""):
        self.dim = dim
        self.rhs = rhs
        self.hamiltonian = hamiltonian
        self.guards = tuple(guards)
        self.name = name

    def eval(self, xs):
        """Right-hand side on ring values (floats, Intervals or Jets)."""
        self.check_domain(xs)
        return eval_exprs(self.rhs, xs)

    def energy(self, xs):
        if self.hamiltonian is None:
            raise ValueError(f"{self.name}: no Hamiltonian attached")
        return eval_exprs([self.hamiltonian], xs)[0]

    def check_domain(self, xs):
        if not self.guards:
            return
        probe = xs
        if hasattr(xs[0], "constant_term"):
            probe = [j.constant_term() for j in xs]
        if isinstance(probe[0], Interval):
            vals = eval_exprs(list(self.guards), probe)
            for g in vals:
                if not g.lo > 0:
                    raise DomainViolation(
                        f"{self.name}: domain guard not positive: {g}"
                    )
        else:
            vals = eval_exprs(list(self.guards), list(probe))
            for g in vals:
                if not g > 0:
                    raise DomainViolation(
                        f"{self.name}: domain guard not positive: {g}"
                    )


class QuarticSystem:
    """H = (p_x^2 + p_y^2 + x^4 + c x^2 y^2 + y^4) / 2 on the level H = h.

    State order (x, y, p_x, p_y).  The planes (x, p_x) and (y, p_y) are
    invariant; the standard section is y = 0 with p_y > 0.
    """

    def __init__(self, c, h=Fraction(1, 2)):
        self.c = Fraction(c)
        if self.c <= -2:
            raise DomainViolation("quartic parameter must exceed -2")
        self.h = Fraction(h)
        x, y, px, py = (var(i) for i in range(4))
        x2 = mul(x, x)
        y2 = mul(y, y)
        x3 = mul(x2, x)
        y3 = mul(y2, y)
        xy2 = mul(x, y2)
        x2y = mul(x2, y)
        c_ = self.c
        rhs = [
            affine([(1, px)]),
            affine([(1, py)]),
            affine([(-2, x3), (-c_, xy2)]),
            affine([(-2, y3), (-c_, x2y)]),
        ]
        ham = affine(
            [
                (Fraction(1, 2), mul(px, px)),
                (Fraction(1, 2), mul(py, py)),
                (Fraction(1, 2), mul(x2, x2)),
                (c_ / 2, mul(x2, y2)),
                (Fraction(1, 2), mul(y2, y2)),
            ]
        )
        self.field = VectorField(4, rhs, ham, name=f"quartic(c={c_})")
        # chart on y = 0, p_y > 0: H is (1/2) p_y^2 + C(x, y, p_x)
        quad_a = const(Fraction(1, 2))
        quad_b = const(0)
        quad_c = affine(
            [
                (Fraction(1, 2), mul(px, px)),
                (Fraction(1, 2), mul(x2, x2)),
                (c_ / 2, mul(x2, y2)),
                (Fraction(1, 2), mul(y2, y2)),
            ],
            -self.h,
        )
        self._quad = (quad_a, quad_b, quad_c)

    def section(self, crossing_sign=1):
        return AffineSection(coord=1, offset=0, crossing_sign=crossing_sign)

    def chart(self, crossing_sign=1, solved_sign=None):
        # on y = 0 the section derivative is p_y itself, so the accepted
        # crossing direction fixes the solved momentum branch
        if solved_sign is None:
            solved_sign = crossing_sign
        return EnergyChart(
            section=self.section(crossing_sign),
            energy=self.h,
            free_coords=(0, 2),
            solved_coord=3,
            solved_sign=solved_sign,
            quad_exprs=self._quad,
            dim=4,
        )


# figure-eight initial data on the q3 = 0 section, energy fixed below
EIGHT_INITIAL = (
    "1.9909837697297968",
    "0.9954918848648984",
    "-0.34790196497952825",
    "0.69580392995905650",
)
EIGHT_ENERGY = "-1.2929708570"


class ReducedThreeBody:
    """Equal-mass planar three-body problem reduced to three degrees of
    freedom; the angular momentum M = p_4 enters as a parameter.

    State order (q1, q2, q3, p1, p2, p3).  The domain excludes the
    collisions q1 = 0, q2^2 + q3^2 = 0 and (q1 - q2)^2 + q3^2 = 0.
    """

    def __init__(self, M, h):
        self.M = Fraction(M)
        self.h = Fraction(h)
        q1, q2, q3, p1, p2, p3 = (var(i) for i in range(6))
        M_ = self.M
        G = affine([(1, mul(q2, p3)), (-1, mul(q3, p2))], -M_)
        iq = pow_rat(q1, -1)
        Giq = mul(G, iq)
        piq = mul(p3, iq)
        Giq2 = mul(Giq, iq)
        A2 = affine([(1, piq), (-2, Giq2)])
        d = affine([(1, q1), (-1, q2)])
        w2 = affine([(1, mul(q2, q2)), (1, mul(q3, q3))])
        w3 = affine([(1, mul(d, d)), (1, mul(q3, q3))])
        s2 = pow_rat(w2, -3, 2)
        s3 = pow_rat(w3, -3, 2)
        rhs = [
            affine([(2, p1), (1, p2)]),
            affine([(2, p2), (1, p1), (1, mul(q3, A2))]),
            affine([(2, p3), (-1, Giq), (-1, mul(q2, A2))]),
            affine(
                [(-1, mul(Giq, A2)), (-1, mul(iq, iq)), (-1, mul(d, s3))]
            ),
            affine([(1, mul(p3, A2)), (-1, mul(q2, s2)), (1, mul(d, s3))]),
            affine([(-1, mul(p2, A2)), (-1, mul(q3, s2)), (-1, mul(q3, s3))]),
        ]
        ham = affine(
            [
                (1, mul(p1, p1)),
                (1, mul(p2, p2)),
                (1, mul(p3, p3)),
                (1, mul(p1, p2)),
                (-1, mul(piq, G)),
                (1, mul(Giq, Giq)),
                (-1, iq),
                (-1, pow_rat(w2, -1, 2)),
                (-1, pow_rat(w3, -1, 2)),
            ]
        )
        self.field = VectorField(
            6, rhs, ham, guards=(q1, w2, w3), name=f"threebody(M={M_})"
        )
        # chart on q3 = 0: H = A p3^2 + B p3 + C with g0 = -q3 p2 - M
        g0 = affine([(-1, mul(q3, p2))], -M_)
        quad_a = affine(
            [(1, const(1)), (-1, mul(q2, iq)), (1, mul(mul(q2, q2), mul(iq, iq)))]
        )
        quad_b = affine(
            [(-1, mul(g0, iq)), (2, mul(mul(q2, g0), mul(iq, iq)))]
        )
        quad_c = affine(
            [
                (1, mul(p1, p1)),
                (1, mul(p2, p2)),
                (1, mul(p1, p2)),
                (1, mul(mul(g0, g0), mul(iq, iq))),
                (-1, iq),
                (-1, pow_rat(w2, -1, 2)),
                (-1, pow_rat(w3, -1, 2)),
            ],
            -self.h,
        )
        self._quad = (quad_a, quad_b, quad_c)

    def section(self, crossing_sign=1):
        return AffineSection(coord=2, offset=0, crossing_sign=crossing_sign)

    def chart(self, crossing_sign=1, solved_sign=None):
        # along the collinear passages of the eight family the sign of the
        # section derivative agrees with the sign of p3; charts for the
        # opposite-direction crossings therefore solve the negative branch
        if solved_sign is None:
            solved_sign = crossing_sign
        return EnergyChart(
            section=self.section(crossing_sign),
            energy=self.h,
            free_coords=(0, 1, 3, 4),
            solved_coord=5,
            solved_sign=solved_sign,
            quad_exprs=self._quad,
            dim=6,
        )


def chat_involution(c):
    """The parameter involution c -> (12 - 2c) / (2 + c); exact on rationals."""
    if isinstance(c, Interval):
        denom = c + 2
        if denom.contains_zero():
            raise PoleAtMinusTwo(str(c))
        return (Interval.make(12, c.prec) - c * 2) / denom
    c = Fraction(c)
    if c == -2:
        raise PoleAtMinusTwo("c = -2")
    return (12 - 2 * c) / (2 + c)


def integrable_values():
    """Parameter values with meromorphically integrable dynamics."""
    return frozenset((Fraction(0), Fraction(2), Fraction(6)))


# ---------------------------------------------------------------------------
# full <-> reduced three-body coordinates (double precision utilities)
# ---------------------------------------------------------------------------


def full_to_reduced(positions, momenta):
    """Full planar states -> reduced variables plus the cyclic pair.

    positions/momenta are sequences of three (x, y) pairs with the centre of
    mass at the origin and total momentum zero.  Returns
    ((q1, q2, q3, p1, p2, p3), q4, M).
    """
    (x1, y1), (x2, y2), (x3, y3) = positions
    (u1, v1), (u2, v2), (u3, v3) = momenta
    if abs(x1 + x2 + x3) > 1e-9 or abs(y1 + y2 + y3) > 1e-9:
        raise ValueError("centre of mass must sit at the origin")
    if abs(u1 + u2 + u3) > 1e-9 or abs(v1 + v2 + v3) > 1e-9:
        raise ValueError("total momentum must vanish")
    # stage 1: relative positions with respect to body 3
    ax, ay = x1 - x3, y1 - y3  # m3 -> m1
    bx, by = x2 - x3, y2 - y3  # m3 -> m2
    r = math.hypot(ax, ay)
    if r == 0:
        raise DegenerateConfiguration("bodies 1 and 3 coincide")
    q4 = math.atan2(ay, ax)
    cq, sq = math.cos(q4), math.sin(q4)
    q1 = r
    q2 = bx * cq + by * sq
    q3 = -bx * sq + by * cq
    p1 = u1 * cq + v1 * sq
    p2 = u2 * cq + v2 * sq
    p3 = -u2 * sq + v2 * cq
    M = (
        x1 * v1
        - y1 * u1
        + x2 * v2
        - y2 * u2
        + x3 * v3
        - y3 * u3
    )
    return (q1, q2, q3, p1, p2, p3), q4, M


def reduced_to_full(state, q4, M):
    """Reduced variables plus the rotation angle -> full planar state."""
    q1, q2, q3, p1, p2, p3 = state
    if q1 <= 0:
        raise DomainViolation("q1 must be positive")
    cq, sq = math.cos(q4), math.sin(q4)
    # stage 2 inverse: relative vectors in the fixed frame
    ax, ay = q1 * cq, q1 * sq
    bx = q2 * cq - q3 * sq
    by = q2 * sq + q3 * cq
    ptang = (M - q2 * p3 + q3 * p2) / q1
    u1 = p1 * cq - ptang * sq
    v1 = p1 * sq + ptang * cq
    u2 = p3 * -sq + p2 * cq
    v2 = p2 * sq + p3 * cq
    # stage 1 inverse with centre-of-mass conditions
    x3, y3 = -(ax + bx) / 3.0, -(ay + by) / 3.0
    x1, y1 = ax + x3, ay + y3
    x2, y2 = bx + x3, by + y3
    u3, v3 = -u1 - u2, -v1 - v2
    return ((x1, y1), (x2, y2), (x3, y3)), ((u1, v1), (u2, v2), (u3, v3))
