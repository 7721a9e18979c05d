"""Non-rigorous double-precision Taylor flow with jet transport.

Everything in this module is explicitly NOT verified: plain float
coefficients, heuristic step control, no enclosures.  It serves as the seed
polisher for the rigorous pipeline, as the engine behind the exploration
toolkit, and as an independent trajectory reference in tests.
"""

import math

from .errors import EscapeDetected
from .jets import Jet
from .sections import solve_crossing_jet
from .series import SeriesEvaluator, eval_exprs

__all__ = ["ApproxFlow", "newton_polish", "numerical_jacobian"]


class ApproxFlow:
    """Float Taylor integrator for a VectorField, with section maps."""

    def __init__(self, field, order=20, tol=1e-13, max_step=0.5):
        self.field = field
        self.order = int(order)
        self.tol = float(tol)
        self.max_step = float(max_step)

    # ---- raw stepping ----------------------------------------------------

    def series_at(self, jets, order=None):
        """Solution Taylor coefficients (lists of jets per component)."""
        p = self.order if order is None else order
        state = [[j] for j in jets]
        zero = jets[0] * 0.0
        ev = SeriesEvaluator(state, zero)
        rhs = self.field.rhs
        for k in range(p):
            for i in range(self.field.dim):
                fk = ev.coeff(rhs[i], k)
                state[i].append(fk.scale(1.0 / (k + 1)))
        return state

    def pick_step(self, series):
        """Heuristic step from the two highest coefficient norms."""
        p = len(series[0]) - 1
        n_hi = max(_jet_norm(series[i][p]) for i in range(len(series)))
        n_lo = max(_jet_norm(series[i][p - 1]) for i in range(len(series)))
        h = self.max_step
        if n_hi > 0:
            h = min(h, (self.tol / n_hi) ** (1.0 / p))
        if n_lo > 0:
            h = min(h, (self.tol / n_lo) ** (1.0 / (p - 1)))
        if not math.isfinite(h) or h <= 0:
            raise EscapeDetected("step size collapsed")
        return 0.9 * h

    @staticmethod
    def eval_series(series, t):
        """Horner evaluation of the solution series at time t."""
        out = []
        for comp in series:
            acc = comp[-1]
            for c in reversed(comp[:-1]):
                acc = acc.scale(t) + c
            out.append(acc)
        return out

    def step(self, jets):
        series = self.series_at(jets)
        h = self.pick_step(series)
        return h, self.eval_series(series, h), series

    def flow(self, jets, t_end):
        """Flow the jet state for a fixed model time."""
        t = 0.0
        while t < t_end:
            series = self.series_at(jets)
            h = min(self.pick_step(series), t_end - t)
            jets = self.eval_series(series, h)
            t += h
        return jets

    # ---- section maps ------------------------------------------------------

    def to_section(self, jets, section, crossings=1, t0=0.0, max_time=1e4,
                   arm_eps=1e-9):
        """Flow until the k-th accepted crossing; returns (t*, jets at t*).

        Crossings are accepted when the section coordinate passes the offset
        with the configured sign of its time derivative.  Detection arms only
        once |g| exceeds arm_eps, so a state starting on (or landing within
        roundoff of) the section does not retrigger immediately.
        """
        coord = section.coord
        offset = float(section.offset)
        sign = section.crossing_sign
        t = t0
        remaining = crossings
        armed = abs(jets[coord].coeffs[0] - offset) > arm_eps
        while t - t0 < max_time:
            series = self.series_at(jets)
            h = self.pick_step(series)
            poly = [series[coord][k].coeffs[0] for k in range(len(series[0]))]
            poly[0] -= offset
            hits, armed = _crossings_in_step(poly, h, sign, armed, arm_eps)
            for t_cross in hits:
                remaining -= 1
                if remaining == 0:
                    out = self.eval_series(series, t_cross)
                    return t + t_cross, out
            jets = self.eval_series(series, h)
            t += h
        raise EscapeDetected("no section crossing found")

    def poincare(self, chart, u, iterates=1, degree=0):
        """Approximate Poincaré map in chart coordinates.

        u: float free coordinates.  With degree > 0, returns jets carrying
        derivatives with respect to the chart variables; the section-time
        correction is applied so the jets are those of the genuine return
        map.  Returns (image floats, image jets, return time).
        """
        n = len(u)
        if degree == 0:
            jets = [Jet.constant(v, 0, 0) for v in chart.lift(list(u))]
        else:
            uj = [
                Jet.variable(i, float(v), n, degree) for i, v in enumerate(u)
            ]
            jets = chart.lift(uj)
        t_total = 0.0
        sec = chart.section
        for _ in range(iterates):
            t_total, jets = self.to_section(
                jets, sec, crossings=1, t0=t_total
            )
        # expand in time at the crossing and eliminate the crossing time
        psi = self.series_at(jets, order=max(degree, 1))
        if degree > 0:
            jets, _ = solve_crossing_jet(psi, sec.coord, float(sec.offset))
        img_jets = [jets[i] for i in chart.free_coords]
        img = [j.coeffs[0] for j in img_jets]
        return img, img_jets, t_total

    def poincare_point(self, chart, u, iterates=1):
        img, _, _ = self.poincare(chart, u, iterates, degree=0)
        return img

    def poincare_matrix(self, chart, u, iterates=1):
        """Return-map Jacobian via degree-1 jet transport (row-major lists)."""
        img, jets, _ = self.poincare(chart, u, iterates, degree=1)
        n = len(u)
        table = jets[0].table
        rows = []
        for j in jets:
            rows.append(
                [
                    j.coeffs[
                        table.index[
                            tuple(1 if m == i else 0 for m in range(n))
                        ]
                    ]
                    for i in range(n)
                ]
            )
        return img, rows


def _jet_norm(jet):
    return max(abs(c) for c in jet.coeffs)


def _horner(poly, t):
    acc = poly[-1]
    for c in reversed(poly[:-1]):
        acc = acc * t + c
    return acc


def _crossings_in_step(poly, h, sign, armed, arm_eps, samples=64):
    """Sign-matching roots of the scalar polynomial in (0, h].

    Sampling plus safeguarded Newton; fine for the non-rigorous explorer
    (rigorous crossing localization lives in the integrator module).
    Returns (crossing times, armed state at the end of the step).
    """
    dpoly = [k * poly[k] for k in range(1, len(poly))]
    hits = []
    prev_t, prev_g = 0.0, poly[0]
    for i in range(1, samples + 1):
        t = h * i / samples
        g = _horner(poly, t)
        wrong_side = prev_g < 0.0 if sign > 0 else prev_g > 0.0
        crossed = (prev_g < 0.0 <= g) if sign > 0 else (prev_g > 0.0 >= g)
        if armed and wrong_side and crossed:
            hits.append(_refine_root(poly, dpoly, prev_t, t, sign))
            armed = False
        if abs(g) > arm_eps:
            armed = True
        prev_t, prev_g = t, g
    return hits, armed


def _refine_root(poly, dpoly, lo, hi, sign):
    tt = 0.5 * (lo + hi)
    for _ in range(60):
        d = _horner(dpoly, tt)
        if d == 0.0:
            break
        nt = tt - _horner(poly, tt) / d
        if nt < lo or nt > hi:
            g_mid = _horner(poly, tt)
            same = (g_mid < 0) if sign > 0 else (g_mid > 0)
            if same:
                lo = tt
            else:
                hi = tt
            nt = 0.5 * (lo + hi)
        if abs(nt - tt) < 1e-15 * max(1.0, abs(tt)):
            return nt
        tt = nt
    return tt


# ---------------------------------------------------------------------------
# generic float Newton on section maps
# ---------------------------------------------------------------------------


def numerical_jacobian(fun, u, delta=1e-7):
    """Central-difference Jacobian of fun: R^n -> R^n (row-major lists)."""
    n = len(u)
    cols = []
    for i in range(n):
        up = list(u)
        dn = list(u)
        up[i] += delta
        dn[i] -= delta
        fp = fun(up)
        fm = fun(dn)
        cols.append([(a - b) / (2 * delta) for a, b in zip(fp, fm)])
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def newton_polish(flow, chart, u0, iterates, steps=12, tol=1e-13):
    """Float Newton for a fixed point of the k-fold return map.

    Uses jet-transport Jacobians; returns (u, residual_norm).
    """
    import numpy as np

    u = list(map(float, u0))
    res = float("inf")
    for _ in range(steps):
        img, rows = flow.poincare_matrix(chart, u, iterates)
        F = np.array(img) - np.array(u)
        res = float(np.max(np.abs(F)))
        if res < tol:
            break
        J = np.array(rows) - np.eye(len(u))
        try:
            du = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        norm = float(np.max(np.abs(du)))
        if norm > 1e-2:
            du *= 1e-2 / norm
        trial = [a + b for a, b in zip(u, du)]
        # back off if the step leaves the chart domain
        for _ in range(40):
            try:
                flow.poincare_point(chart, trial, iterates=1)
                break
            except Exception:
                du *= 0.5
                trial = [a + b for a, b in zip(u, du)]
        u = trial
    return u, res
