"""Rigorous Taylor-method ODE integration with Lohner doubleton sets.

Each accepted step produces interval Taylor series of the local flow map
(values and, in C^r mode, derivative jets with respect to the initial
conditions), a validated rough enclosure covering the whole step, and
Lagrange remainder coefficients evaluated on it.  Doubleton set
representations x0 + C r0 + B r propagate the current set and each
derivative block, suppressing the wrapping effect; B is re-orthogonalized
every step and all computational errors are absorbed into r.
"""

import math

import numpy as np

from .errors import NoEnclosure, PrecisionExhausted
from .intervals import Interval
from .ivlinalg import inverse_enclosure, mat_mat, mat_vec
from .jets import IndexTable, Jet
from .series import SeriesEvaluator, eval_exprs

__all__ = ["Doubleton", "FlowState", "RigorousFlow", "StepRecord"]


class Doubleton:
    """Set {x0 + C u + B v : u in r0, v in r} with point x0, C, B."""

    __slots__ = ("x0", "C", "r0", "B", "r", "Binv", "prec")

    def __init__(self, x0, C, r0, B, r, Binv, prec):
        self.x0 = x0
        self.C = C
        self.r0 = r0
        self.B = B
        self.r = r
        self.Binv = Binv
        self.prec = prec

    @classmethod
    def from_box(cls, box):
        prec = box[0].prec
        n = len(box)
        x0 = [Interval(b.mid(), b.mid(), prec) for b in box]
        r0 = [b - m for b, m in zip(box, x0)]
        eye = _eye(n, prec)
        zero = [Interval.zero(prec) for _ in range(n)]
        return cls(x0, eye, r0, eye, list(zero), _eye(n, prec), prec)

    @property
    def dim(self):
        return len(self.x0)

    def hull(self):
        out = mat_vec(self.C, self.r0)
        out = [a + b for a, b in zip(out, mat_vec(self.B, self.r))]
        return [a + b for a, b in zip(out, self.x0)]

    def deviation(self):
        """Set minus its centre x0, as an interval vector."""
        out = mat_vec(self.C, self.r0)
        return [a + b for a, b in zip(out, mat_vec(self.B, self.r))]

    def diam(self):
        return max(float(x.diam) for x in self.hull())

    def propagate(self, A, y):
        """New set enclosing {y0 + A (x - x0)} for x in self, y0 in y.

        y must enclose the image of the centre x0; A the derivative over the
        hull.  Errors go to r through the orthogonalized frame.
        """
        prec = self.prec
        n = self.dim
        y0 = [Interval(v.mid(), v.mid(), prec) for v in y]
        delta = [a - b for a, b in zip(y, y0)]
        AC = mat_mat(A, self.C)
        Cn = _mid_matrix(AC, prec)
        EC = [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(AC, Cn)]
        M = mat_mat(A, self.B)
        Q = _orthogonalize(M, prec)
        Qi = inverse_enclosure(Q)
        # rotate the frame before touching r: mat_vec(M, r) first would wrap
        T = mat_mat(Qi, M)
        junk = [a + b for a, b in zip(delta, mat_vec(EC, self.r0))]
        rn = [a + b for a, b in zip(mat_vec(T, self.r), mat_vec(Qi, junk))]
        return Doubleton(y0, Cn, list(self.r0), Q, rn, Qi, prec)


def _eye(n, prec):
    one = Interval.one(prec)
    zero = Interval.zero(prec)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _mid_matrix(A, prec):
    return [
        [Interval(x.mid(), x.mid(), prec) for x in row] for row in A
    ]


def _orthogonalize(M, prec):
    mid = np.array([[float(x.mid()) for x in row] for row in M])
    try:
        q, _ = np.linalg.qr(mid)
        if abs(np.linalg.det(q)) < 0.5:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        q = np.eye(len(M))
    return [
        [Interval.make(float(v), prec) for v in row] for row in q
    ]


class FlowState:
    """Current set and accumulated derivative jet of a rigorous run.

    blocks maps each multiindex (1 <= |alpha| <= degree, over the seed
    variables) to a Doubleton holding the vector of jet coefficients
    D^alpha phi / alpha!.
    """

    def __init__(self, x_dbl, n_seed, degree, blocks, prec):
        self.x = x_dbl
        self.n_seed = n_seed
        self.degree = degree
        self.blocks = blocks
        self.prec = prec

    @classmethod
    def from_seed_jets(cls, jets):
        """Seed from jets (e.g. an energy-chart lift over a box)."""
        sample = jets[0]
        prec = sample.coeffs[0].prec
        table = sample.table
        box = [j.coeffs[0] for j in jets]
        blocks = {}
        for idx, mono in enumerate(table.monomials):
            if table.degrees[idx] == 0:
                continue
            vec = [j.coeffs[idx] for j in jets]
            blocks[mono] = Doubleton.from_box(vec)
        return cls(
            Doubleton.from_box(box), table.n_vars, table.degree, blocks, prec
        )

    @classmethod
    def from_box(cls, box, degree=0, n_seed=None):
        prec = box[0].prec
        n = n_seed if n_seed is not None else len(box)
        blocks = {}
        if degree >= 1:
            table = IndexTable.get(n, degree)
            zero = Interval.zero(prec)
            one = Interval.one(prec)
            for idx, mono in enumerate(table.monomials):
                d = table.degrees[idx]
                if d == 0:
                    continue
                if d == 1:
                    j = mono.index(1)
                    vec = [
                        one if i == j and len(box) == n else zero
                        for i in range(len(box))
                    ]
                    if len(box) != n:
                        raise ValueError(
                            "identity seed needs n_seed == dim"
                        )
                else:
                    vec = [zero] * len(box)
                blocks[mono] = Doubleton.from_box(vec)
        return cls(Doubleton.from_box(box), n, degree, blocks, prec)

    def jet_hull(self):
        """Accumulated jet as interval-coefficient Jets (one per component),
        with zero constant term (pure deviation jet)."""
        table = IndexTable.get(self.n_seed, max(self.degree, 1))
        zero = Interval.zero(self.prec)
        n = self.x.dim
        coeffs = [[zero] * table.size for _ in range(n)]
        for mono, dbl in self.blocks.items():
            idx = table.index[mono]
            h = dbl.hull()
            for i in range(n):
                coeffs[i][idx] = h[i]
        return [Jet(table, c) for c in coeffs]

    def jets_with_values(self):
        """Accumulated jet including the current set as constant term."""
        jets = self.jet_hull()
        hull = self.x.hull()
        for i, j in enumerate(jets):
            j.coeffs[0] = hull[i]
            j._ends = None
        return jets


class StepRecord:
    """Everything the section machinery needs about one accepted step."""

    __slots__ = (
        "h",
        "enclosure",
        "hull_series",
        "centre_series",
        "remainder",
        "A",
        "y_centre",
        "higher",
    )

    def __init__(self, h, enclosure, hull_series, centre_series, remainder):
        self.h = h
        self.enclosure = enclosure
        self.hull_series = hull_series
        self.centre_series = centre_series
        self.remainder = remainder
        self.A = None
        self.y_centre = None
        self.higher = None

    def eval_hull_poly(self, coord, t):
        """Interval value of the hull solution series for one component at
        t in [0, h] (remainder included)."""
        p = len(self.hull_series[coord]) - 1
        acc = self.hull_series[coord][p].coeffs[0]
        for k in range(p - 1, -1, -1):
            acc = acc * t + self.hull_series[coord][k].coeffs[0]
        rem = self.remainder[coord].coeffs[0]
        return acc + rem * t.pow_int(p + 1)


class RigorousFlow:
    """Validated Taylor integrator for one VectorField at one Precision."""

    def __init__(
        self,
        field,
        prec,
        order=30,
        tol=1e-21,
        max_step=0.5,
        min_step=1e-8,
        blowup=1e3,
    ):
        self.field = field
        self.prec = prec
        self.order = int(order)
        self.tol = float(tol)
        self.max_step = float(max_step)
        self.min_step = float(min_step)
        self.blowup = float(blowup)

    # ---- series helpers ----------------------------------------------------

    def _solution_series(self, seed_jets, p):
        """Taylor coefficients (lists of jets) of the solution seeded at the
        given jets, orders 0..p; also returns the evaluator."""
        state = [[j] for j in seed_jets]
        zero_jet = seed_jets[0] * 0
        ev = SeriesEvaluator(state, zero_jet)
        rhs = self.field.rhs
        recip = [
            Interval.make(1, self.prec) / Interval.make(k + 1, self.prec)
            for k in range(p)
        ]
        for k in range(p):
            for i in range(self.field.dim):
                fk = ev.coeff(rhs[i], k)
                state[i].append(fk.scale(recip[k]))
        return state

    def _identity_seed(self, hull, degree):
        n = len(hull)
        table = IndexTable.get(n, degree)
        zero = Interval.zero(self.prec)
        one = Interval.one(self.prec)
        jets = []
        for i in range(n):
            coeffs = [zero] * table.size
            coeffs[0] = hull[i]
            if degree >= 1:
                mono = tuple(1 if m == i else 0 for m in range(n))
                coeffs[table.index[mono]] = one
            jets.append(Jet(table, coeffs))
        return jets

    # ---- rough enclosures ----------------------------------------------------

    def _rough_enclosure(self, hull, series, h):
        """Validated a-priori enclosure of the flow of `hull` over [0, h]."""
        prec = self.prec
        ih = Interval.bounds(0, h, prec)
        cand = []
        p = len(series[0]) - 1
        for i, comp in enumerate(series):
            acc = comp[p].coeffs[0]
            for k in range(p - 1, 0, -1):
                acc = acc * ih + comp[k].coeffs[0]
            acc = acc * ih
            pad = float(acc.diam) * 0.5 + abs(float(acc.mid())) * 0.1
            pad = pad + 1e-3 * self.tol + 1e-30
            cand.append(hull[i] + acc.widen(pad))
        for _ in range(6):
            try:
                self.field.check_domain(cand)
                f = eval_exprs(self.field.rhs, cand)
            except Exception:
                raise NoEnclosure("rough enclosure left the field domain")
            nxt = [x + ih * fi for x, fi in zip(hull, f)]
            # non-strict inclusion suffices for the Schauder-type argument
            if all(c.contains(nx) for c, nx in zip(cand, nxt)):
                return [c.intersect(nx) for c, nx in zip(cand, nxt)]
            cand = [
                c.hull(nx.widen(0.3 * float(nx.diam) + 1e-30))
                for c, nx in zip(cand, nxt)
            ]
        raise NoEnclosure("rough enclosure failed to validate")

    def _rough_jet(self, z_box, degree, h, hull_series):
        """Validated enclosure of the one-step jet coefficients over [0, h].

        The jet blocks satisfy linear differential equations driven by the
        field's derivatives on the rough enclosure; candidates come from the
        partial sums of the already-computed step series (near the exact
        range) and are checked with the integral form.
        """
        prec = self.prec
        ih = Interval.bounds(0, h, prec)
        n = len(z_box)
        table = IndexTable.get(n, degree)
        seed = self._identity_seed(z_box, degree)
        p = len(hull_series[0]) - 1
        cand = []
        for i in range(n):
            comps = [z_box[i]]
            for idx in range(1, table.size):
                acc = hull_series[i][p].coeffs[idx]
                for k in range(p - 1, 0, -1):
                    acc = acc * ih + hull_series[i][k].coeffs[idx]
                acc = acc * ih + hull_series[i][0].coeffs[idx]
                pad = 0.6 * float(acc.diam) + 0.15 * (1.0 + acc.mag()) * h
                comps.append(acc.widen(pad + 1e-30))
            cand.append(Jet(table, comps))
        # validate level by level: the degree-d coefficients of the jet flow
        # satisfy linear equations driven by already-validated lower levels,
        # so each level contracts at rate h * ||Df(Z)|| instead of jointly
        for d in range(1, degree + 1):
            level = [
                idx for idx in range(table.size) if table.degrees[idx] == d
            ]
            done = False
            for _ in range(10):
                f = eval_exprs(self.field.rhs, cand)
                ok = True
                fresh = {}
                for i in range(n):
                    for idx in level:
                        v = seed[i].coeffs[idx] + ih * f[i].coeffs[idx]
                        fresh[(i, idx)] = v
                        if not cand[i].coeffs[idx].contains(v):
                            ok = False
                if ok:
                    # tighten to the proven image only once everything fits
                    for (i, idx), v in fresh.items():
                        cand[i].coeffs[idx] = v
                        cand[i]._ends = None
                    done = True
                    break
                for (i, idx), v in fresh.items():
                    if not cand[i].coeffs[idx].contains(v):
                        c = cand[i].coeffs[idx].hull(v)
                        cand[i].coeffs[idx] = c.widen(
                            0.5 * float(c.diam) + 0.1 * (1.0 + c.mag()) * h
                        )
                        cand[i]._ends = None
            if not done:
                raise NoEnclosure("jet rough enclosure failed to validate")
        return cand

    # ---- stepping ---------------------------------------------------------

    def _pick_h(self, series, limit):
        p = len(series[0]) - 1
        h = min(self.max_step, limit) if limit else self.max_step
        for k in (p - 1, p):
            nrm = max(comp[k].coeffs[0].mag() for comp in series)
            if nrm > 0:
                h = min(h, (self.tol / nrm) ** (1.0 / k))
        if not math.isfinite(h) or h <= 0:
            raise PrecisionExhausted("step size collapsed")
        return 0.9 * h

    def prepare_step(self, state, limit=None):
        """One validated step from `state`; does not advance it.

        Returns a StepRecord with: hull-series (identity-seeded jets over the
        current hull), centre series (degree-0 at the doubleton centre),
        Lagrange remainder jets on the rough enclosure, the step h, and the
        assembled one-step data A (derivative over hull) and y (centre
        image).
        """
        degree = state.degree
        if degree < 1:
            raise ValueError(
                "rigorous runs carry at least first-order jets"
            )
        hull = state.x.hull()
        self.field.check_domain(hull)
        seed = self._identity_seed(hull, degree)
        hull_series = self._solution_series(seed, self.order)
        h = self._pick_h(hull_series, limit)
        remainder = None
        for _ in range(12):
            while True:
                try:
                    z = self._rough_enclosure(hull, hull_series, h)
                    wjet = self._rough_jet(z, degree, h, hull_series)
                    break
                except NoEnclosure:
                    h *= 0.5
                    if h < self.min_step:
                        raise NoEnclosure(
                            "no rough enclosure above the minimum step"
                        )
            rem_series = self._solution_series(wjet, self.order + 1)
            remainder = [comp[self.order + 1] for comp in rem_series]
            # enforce the tolerance on the actual Lagrange term, which is
            # evaluated on the step-wide enclosure and thus exceeds the
            # controller's estimate from the orbit coefficients
            worst = max(r.coeffs[0].mag() for r in remainder)
            err = worst * h ** (self.order + 1)
            if err <= self.tol or h <= self.min_step:
                break
            shrink = (self.tol / err) ** (1.0 / (self.order + 1))
            h *= min(0.9, max(shrink, 0.3))
        if all(c.is_thin() for c in state.x.deviation()):
            centre_series = [
                [c.coeffs[0] for c in comp] for comp in hull_series
            ]
        else:
            cseed = [Jet.constant(c, 1, 0) for c in state.x.x0]
            cs = self._solution_series(cseed, self.order)
            centre_series = [[cc.coeffs[0] for cc in comp] for comp in cs]
        rec = StepRecord(h, z, hull_series, centre_series, remainder)
        rec.A, rec.y_centre, rec.higher = self._assemble(rec, state)
        return rec

    def _assemble(self, rec, state):
        prec = self.prec
        h = rec.h if isinstance(rec.h, Interval) else Interval.make(rec.h, prec)
        p = self.order
        n = state.x.dim
        # centre image with remainder
        y = []
        for i in range(n):
            acc = Interval.zero(prec)
            for k in range(p, -1, -1):
                acc = acc * h + rec.centre_series[i][k]
            rem = rec.remainder[i].coeffs[0]
            y.append(acc + rem * h.pow_int(p + 1))
        table = rec.hull_series[0][0].table
        # full one-step jet coefficients at time h
        K = []
        for i in range(n):
            acc = rec.hull_series[i][p]
            for k in range(p - 1, -1, -1):
                acc = acc.scale(h) + rec.hull_series[i][k]
            K.append(acc + rec.remainder[i].scale(h.pow_int(p + 1)))
        A = [
            [
                K[i].coeffs[
                    table.index[tuple(1 if m == j else 0 for m in range(n))]
                ]
                for j in range(n)
            ]
            for i in range(n)
        ]
        return A, y, K

    def advance(self, state, rec):
        """Apply an accepted step to the state (returns a new FlowState)."""
        x_new = state.x.propagate(rec.A, rec.y_centre)
        new_blocks = _compose_blocks(
            rec.higher, rec.A, state, self.prec
        )
        new = FlowState(
            x_new, state.n_seed, state.degree, new_blocks, state.prec
        )
        if new.x.diam() > self.blowup:
            raise PrecisionExhausted("set diameter blew up")
        return new

    # ---- plain time integration ---------------------------------------------

    def integrate_to(self, state, t_end):
        """Flow the state for model time t_end (> 0); returns final state.

        The last partial step is realized by evaluating the step series at
        the leftover time, so t_end is hit exactly (as an interval point).
        """
        remaining = float(t_end)
        while remaining > 0:
            rec = self.prepare_step(state, limit=remaining)
            if rec.h >= remaining * (1 - 1e-14):
                rec2 = self._re_evaluate(rec, state, remaining)
                return self.advance(state, rec2)
            state = self.advance(state, rec)
            remaining -= rec.h
        return state

    def _re_evaluate(self, rec, state, t):
        """Rebuild the step record's assembled data at a shorter time t."""
        short = StepRecord(
            t, rec.enclosure, rec.hull_series, rec.centre_series,
            rec.remainder,
        )
        short.A, short.y_centre, short.higher = self._assemble(short, state)
        return short


def _compose_blocks(K, A, state, prec):
    """New derivative blocks of (one-step K) composed with the accumulated
    jet: linear part propagates each block doubleton; the higher one-step
    coefficients composed with the old jet feed in as inhomogeneous terms."""
    n = state.x.dim
    degree = state.degree
    table = IndexTable.get(state.n_seed, degree)
    zero = Interval.zero(prec)
    # K with constant and linear parts removed, as jets over state vars
    K_high = []
    ktable = K[0].table
    for i in range(n):
        coeffs = list(K[i].coeffs)
        for idx, d in enumerate(ktable.degrees):
            if d <= 1:
                coeffs[idx] = zero
        K_high.append(Jet(ktable, coeffs))
    J_dev = state.jet_hull()
    g = [kh.compose(J_dev) for kh in K_high]
    new_blocks = {}
    for mono, dbl in state.blocks.items():
        idx = table.index[mono]
        g_vec = [g[i].coeffs[idx] for i in range(n)]
        y = [a + b for a, b in zip(mat_vec(A, dbl.x0), g_vec)]
        new_blocks[mono] = dbl.propagate(A, y)
    return new_blocks
