"""Rigorous Poincaré maps on energy charts.

A SectionedMap drives the validated integrator across the configured number
of transversal crossings, counts crossings soundly (a crossing is only
accepted after the section function has been verified strictly on the
departure side, and each candidate step must have a sign-definite time
derivative over its rough enclosure), localizes the final crossing time by
interval Newton, and composes the crossing-time elimination into the
transported jets so the returned Taylor coefficients are those of the
genuine return map in chart coordinates.
"""

from .errors import LostTransversality, NoEnclosure
from .integrator import FlowState, RigorousFlow, StepRecord
from .intervals import Interval
from .ivlinalg import mat_vec
from .jets import Jet
from .sections import solve_crossing_jet
from .series import eval_exprs

__all__ = ["SectionedMap", "PoincareResult"]


class PoincareResult:
    """Image of one rigorous return-map evaluation."""

    __slots__ = ("image", "jets", "t_cross", "state_box", "steps")

    def __init__(self, image, jets, t_cross, state_box, steps):
        self.image = image
        self.jets = jets
        self.t_cross = t_cross
        self.state_box = state_box
        self.steps = steps

    def linear_matrix(self):
        n = len(self.jets)
        table = self.jets[0].table
        return [
            [
                j.coeffs[
                    table.index[
                        tuple(1 if m == i else 0 for m in range(table.n_vars))
                    ]
                ]
                for i in range(table.n_vars)
            ]
            for j in self.jets
        ]


class SectionedMap:
    """k-fold rigorous return map of a field to an energy chart's section."""

    def __init__(
        self,
        field,
        chart,
        iterates,
        prec,
        order=30,
        tol=1e-21,
        max_step=0.5,
        max_steps=100000,
        target_chart=None,
    ):
        self.field = field
        self.chart = chart
        self.target = chart if target_chart is None else target_chart
        self.iterates = int(iterates)
        self.prec = prec
        self.flow = RigorousFlow(field, prec, order=order, tol=tol,
                                 max_step=max_step)
        self.max_steps = int(max_steps)

    # ---- public operations --------------------------------------------------

    def point(self, u_box):
        """Enclosure of the k-fold return image of the chart box."""
        res = self._run(u_box, degree=1)
        return res.image

    def jet(self, u_box, degree):
        """Return-map Taylor jets (orders 0..degree) valid over the box."""
        if degree < 1 or degree > 3:
            raise ValueError("jet degree must be 1..3")
        return self._run(u_box, degree=degree)

    def trace(self, u_box):
        """Interval trace of the return-map derivative (2-dof systems)."""
        res = self._run(u_box, degree=1)
        lin = res.linear_matrix()
        if len(lin) != 2:
            raise ValueError("trace is defined for one-parameter sections")
        return lin[0][0] + lin[1][1]

    # ---- the march -----------------------------------------------------------

    def _lift_jets(self, u_box, degree):
        ujets = [
            Jet.variable(i, u, len(u_box), degree)
            for i, u in enumerate(u_box)
        ]
        return self.chart.lift(ujets)

    def _run(self, u_box, degree):
        target = self.target
        coord = target.section.coord
        sign = target.section.crossing_sign
        offset = Interval.make(target.section.offset, self.prec)
        seeds = self._lift_jets(u_box, degree)
        state = FlowState.from_seed_jets(seeds)
        flow = self.flow
        armed = False
        found = 0
        steps = 0
        while steps < self.max_steps:
            steps += 1
            rec = flow.prepare_step(state)
            sigma_z = rec.enclosure[coord] - offset
            if sigma_z.contains_zero():
                f_z = eval_exprs(self.field.rhs, rec.enclosure)
                gdot = f_z[coord]
                if gdot.contains_zero():
                    raise LostTransversality(
                        f"section derivative not sign-definite over step "
                        f"{steps}: {gdot}"
                    )
                matches = (gdot.lo > 0) == (sign > 0)
                if armed and matches:
                    t_star = self._localize(rec, coord, offset)
                    if t_star is not None:
                        found += 1
                        armed = False
                        if found == self.iterates:
                            return self._readout(
                                flow, state, rec, t_star, degree, steps
                            )
            nxt = flow.advance(state, rec)
            sigma_end = nxt.x.hull()[coord] - offset
            wrong_side = (
                sigma_end.hi < 0 if sign > 0 else sigma_end.lo > 0
            )
            if wrong_side:
                armed = True
            state = nxt
        raise NoEnclosure("crossing count not reached within step budget")

    def _sigma_polys(self, rec, coord, offset):
        p = len(rec.hull_series[coord]) - 1
        poly = [c.coeffs[0] for c in rec.hull_series[coord]]
        poly[0] = poly[0] - offset
        rem = rec.remainder[coord].coeffs[0]
        # the derivative series is the field series, whose own Lagrange
        # coefficient at order p equals (p+1) times the solution's at p+1
        dpoly = [poly[k] * k for k in range(1, p + 1)]
        drem = rem * (p + 1)
        return poly, rem, dpoly, drem

    def _localize(self, rec, coord, offset):
        """Interval Newton in time on the section function over one step.

        Returns the crossing-time enclosure once existence and uniqueness in
        the step are certified (N(T) strictly inside T), or None when the
        root cannot be certified inside [0, h] (the crossing then belongs to
        a later step).
        """
        prec = self.prec
        poly, rem, dpoly, drem = self._sigma_polys(rec, coord, offset)
        p = len(poly) - 1

        def sigma(t):
            acc = poly[p]
            for k in range(p - 1, -1, -1):
                acc = acc * t + poly[k]
            return acc + rem * t.pow_int(p + 1)

        def dsigma(t):
            acc = dpoly[-1]
            for c in reversed(dpoly[:-1]):
                acc = acc * t + c
            return acc + drem * t.pow_int(p)

        T = Interval.bounds(0, rec.h, prec)
        eps_t = 10.0 * (2.0 ** (1 - prec.bits))
        proven = False
        for _ in range(prec.bits + 80):
            der = dsigma(T)
            if der.contains_zero():
                return None
            mid = Interval(T.mid(), T.mid(), prec)
            N = mid - sigma(mid) / der
            if not N.intersects(T):
                return None
            if T.interior_contains(N):
                proven = True
            T_new = N.intersect(T)
            done = float(T_new.diam) <= eps_t * max(1.0, T_new.mag())
            stalled = float(T_new.diam) > 0.9 * float(T.diam)
            T = T_new
            if proven and (done or stalled):
                return T
            if not proven and stalled:
                return None
        return T if proven else None

    # ---- final readout ---------------------------------------------------------

    def _readout(self, flow, state, rec, t_star, degree, steps):
        chart = self.target
        coord = chart.section.coord
        prec = self.prec
        n = state.x.dim
        A, y, K = flow._assemble(
            StepRecord(t_star, rec.enclosure, rec.hull_series,
                       rec.centre_series, rec.remainder),
            state,
        )
        dev = state.x.deviation()
        x_star = [a + b for a, b in zip(y, mat_vec(A, dev))]
        if degree == 0:
            return PoincareResult(
                chart.project(x_star), None, t_star, x_star, steps
            )
        # full jet at the crossing time: one-step K composed with the
        # accumulated deviation jet, the image box as constant term
        zero = Interval.zero(prec)
        ktable = K[0].table
        K_dev = []
        for i in range(n):
            coeffs = list(K[i].coeffs)
            coeffs[0] = zero
            K_dev.append(Jet(ktable, coeffs))
        J_dev = state.jet_hull()
        G = [kd.compose(J_dev) for kd in K_dev]
        for i in range(n):
            G[i].coeffs[0] = x_star[i]
            G[i]._ends = None
        # time expansion at the crossing, Lagrange term on a validated
        # neighbourhood covering every crossing time in the box
        psi = flow._solution_series(G, degree + 1)
        delta = float(t_star.diam) * 0.55 + 10.0 * (2.0 ** (1 - prec.bits))
        G_ext = self._extend_in_time(G, delta)
        psi_ext = flow._solution_series(G_ext, degree + 1)
        psi_lists = []
        for i in range(n):
            lst = [psi[i][m] for m in range(degree + 1)]
            lst.append(psi_ext[i][degree + 1])
            psi_lists.append(lst)
        offset_iv = Interval.make(chart.section.offset, prec)
        corrected, s_jet = solve_crossing_jet(psi_lists, coord, offset_iv)
        img_jets = [corrected[i] for i in chart.free_coords]
        image = [j.coeffs[0] for j in img_jets]
        resid = corrected[coord] - offset_iv
        for idx, c in enumerate(resid.coeffs):
            if not c.contains_zero():
                raise LostTransversality(
                    "crossing elimination residual misses zero"
                )
        return PoincareResult(image, img_jets, t_star, x_star, steps)

    def _extend_in_time(self, G, delta):
        """Validated enclosure of the jet flow of G over [-delta, delta]."""
        prec = self.prec
        ih = Interval.bounds(-delta, delta, prec)
        cand = [
            Jet(g.table, [c.widen(delta * (1.0 + c.mag()))
                          for c in g.coeffs])
            for g in G
        ]
        for _ in range(8):
            self.field.check_domain(cand)
            f = eval_exprs(self.field.rhs, cand)
            ok = True
            nxt = []
            for g, fi in zip(G, f):
                v = Jet(
                    g.table,
                    [c + ih * fc for c, fc in zip(g.coeffs, fi.coeffs)],
                )
                nxt.append(v)
            for c, v in zip(cand, nxt):
                for a, b in zip(c.coeffs, v.coeffs):
                    if not a.contains(b):
                        ok = False
                        break
            if ok:
                return nxt
            cand = [
                Jet(
                    c.table,
                    [
                        a.hull(b.widen(0.5 * float(b.diam) + 1e-30))
                        for a, b in zip(c.coeffs, v.coeffs)
                    ],
                )
                for c, v in zip(cand, nxt)
            ]
        raise NoEnclosure("crossing-time neighbourhood failed to validate")
