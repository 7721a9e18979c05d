"""Affine sections and energy charts for Poincaré maps.

An AffineSection selects transversal crossings of a hyperplane; an
EnergyChart parameterizes the section inside a fixed energy level by 2n
canonically conjugate local coordinates, recovering the solved momentum as
the sign-selected root of a quadratic (both systems here have Hamiltonians
quadratic in the solved momentum).
"""

from fractions import Fraction

from .errors import BranchAmbiguous
from .intervals import Interval
from .jets import Jet
from .series import eval_exprs

__all__ = ["AffineSection", "EnergyChart", "solve_crossing_jet"]


class AffineSection:
    """Hyperplane x[coord] = offset with a required crossing direction.

    `coord` indexes the state variable whose level set defines the section
    (the general normal-vector case is not needed by the shipped systems).
    crossing_sign +1 accepts crossings where d/dt x[coord] > 0.
    """

    def __init__(self, coord, offset, crossing_sign):
        self.coord = coord
        self.offset = Fraction(offset)
        self.crossing_sign = int(crossing_sign)

    def __repr__(self):
        return (
            f"AffineSection(x[{self.coord}]={self.offset}, "
            f"sign={self.crossing_sign:+d})"
        )


class EnergyChart:
    """Canonical coordinates on a section inside an energy level.

    free_coords lists the 2n state indices kept as local variables;
    solved_coord is recovered from H = h as the root with solved_sign of
    A s^2 + B s + C = 0, where A, B, C are expressions in the remaining
    state variables supplied by the system.
    """

    def __init__(
        self,
        section,
        energy,
        free_coords,
        solved_coord,
        solved_sign,
        quad_exprs,
        dim,
    ):
        self.section = section
        self.energy = Fraction(energy)
        self.free_coords = tuple(free_coords)
        self.solved_coord = solved_coord
        self.solved_sign = int(solved_sign)
        self.quad_exprs = quad_exprs  # (A, B, C) expression DAGs
        self.dim = dim

    @property
    def n_free(self):
        return len(self.free_coords)

    def lift(self, u):
        """Free-coordinate values -> full state, solving H = h.

        Works for Interval, Jet or float values; raises BranchAmbiguous when
        the solved root cannot be sign-separated.
        """
        xs = self._embed(u)
        a, b, c = eval_exprs(self.quad_exprs, xs)
        disc = b * b - a * c * 4
        root = _sqrt_value(disc)
        if self.solved_sign > 0:
            s = (root - b) / (a * 2)
        else:
            s = (-root - b) / (a * 2)
        if not _sign_definite(s, self.solved_sign):
            raise BranchAmbiguous(
                f"solved coordinate not sign-definite: {s}"
            )
        xs[self.solved_coord] = s
        return xs

    def project(self, xs):
        """Full state -> free coordinates."""
        return [xs[i] for i in self.free_coords]

    def _embed(self, u):
        sample = u[0]
        xs = [None] * self.dim
        for i, idx in enumerate(self.free_coords):
            xs[idx] = u[i]
        off = self.section.offset
        if isinstance(sample, Jet):
            xs[self.section.coord] = Jet.constant(
                _scalar_like(off, sample.coeffs[0]),
                sample.n_vars,
                sample.degree,
            )
        else:
            xs[self.section.coord] = _scalar_like(off, sample)
        xs[self.solved_coord] = xs[self.section.coord]  # placeholder
        return xs


def _scalar_like(q, sample):
    if isinstance(sample, Interval):
        return Interval.make(q, sample.prec)
    if isinstance(sample, Fraction):
        return q
    return float(q)


def _sqrt_value(x):
    if isinstance(x, (Interval, Jet)):
        return x.sqrt()
    import math

    return math.sqrt(x)


def _sign_definite(s, sign):
    v = s.coeffs[0] if isinstance(s, Jet) else s
    if isinstance(v, Interval):
        return v.lo > 0 if sign > 0 else v.hi < 0
    return v > 0 if sign > 0 else v < 0


def solve_crossing_jet(psi, coord, offset=None):
    """Eliminate the crossing time from a time-expanded flow jet.

    psi[i][m] is the jet (in the chart variables) of the m-th time-Taylor
    coefficient of flow component i at an approximate crossing.  The
    crossing time offset s(u) solving

        sigma(s, u) := sum_m psi[coord][m](u) s^m - offset = 0

    is found as a jet by Newton iteration on truncated power series (exact at
    the jet degree in finitely many steps), and the composed map
    u -> phi(t* + s(u), x(u)) is returned as one jet per component.

    With interval coefficients the inputs must already be enclosure-valid
    polynomial models (the last time order carrying the Lagrange remainder),
    in which case the outputs enclose the true composed-map coefficients.
    """
    sigma = list(psi[coord])
    if offset is not None:
        sigma[0] = sigma[0] - offset
    dsigma = [c.scale(m) for m, c in enumerate(sigma) if m >= 1]
    s = sigma[0].zero_coeff()
    s = Jet(sigma[0].table, [s] * sigma[0].table.size)
    for _ in range(max(2, sigma[0].degree) + 1):
        num = _poly_eval_jet(sigma, s)
        den = _poly_eval_jet(dsigma, s)
        s = s - num / den
    out = [_poly_eval_jet(list(comp), s) for comp in psi]
    return out, s


def _poly_eval_jet(coeff_jets, s):
    acc = coeff_jets[-1]
    for c in reversed(coeff_jets[:-1]):
        acc = acc * s + c
    return acc
