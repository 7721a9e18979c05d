"""Birkhoff normal form to order 3 of a symplectic Taylor map, and the
KAM twist (torsion) data extracted from it.

All routines are generic over the complex coefficient ring: python complex
for non-rigorous exploration, ComplexInterval for the certified pipeline.
With intervals, every output coefficient encloses the exact one for the true
map, and the structural zeroing steps are justified by verified
non-resonance conditions; inconsistencies raise instead of degrading.
"""

import math
from fractions import Fraction

from .errors import ResonantDenominator, UnresolvedResonance
from .intervals import ComplexInterval, Interval
from .jets import IndexTable, Jet

__all__ = [
    "PolyMap",
    "ResonanceReport",
    "NormalForm",
    "TorsionResult",
    "diagonalize",
    "kill_quadratic",
    "kill_cubic",
    "torsion",
    "compose_polymaps",
    "invert_polymap",
]


class PolyMap:
    """Degree-3 polynomial map of C^{2n} with no constant term."""

    def __init__(self, components):
        self.components = list(components)
        self.n_vars = components[0].n_vars
        self.degree = components[0].degree

    @classmethod
    def identity(cls, n_vars, degree, one):
        comps = [
            Jet.variable(i, _zero_of(one), n_vars, degree, unit=one)
            for i in range(n_vars)
        ]
        return cls(comps)

    def linear_matrix(self):
        t = self.components[0].table
        n = self.n_vars
        unit = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
        return [
            [c.coeffs[t.index[u]] for u in unit] for c in self.components
        ]

    def coefficient(self, comp, mono):
        return self.components[comp].coeff(mono)

    def graded(self, d):
        return PolyMap([c.graded_part(d) for c in self.components])

    def __add__(self, other):
        return PolyMap(
            [a + b for a, b in zip(self.components, other.components)]
        )

    def __sub__(self, other):
        return PolyMap(
            [a - b for a, b in zip(self.components, other.components)]
        )


def _zero_of(one):
    return one - one


def compose_polymaps(outer, inner):
    """outer(inner(u)), truncated at the shared degree."""
    args = inner.components
    return PolyMap([c.compose(args) for c in outer.components])


def invert_polymap(nmap):
    """Inverse of a near-identity polynomial map, exact through the degree.

    nmap must be id + (higher order); the graded Newton iteration
    M <- id - (N - id) o M terminates after `degree` rounds.
    """
    n = nmap.n_vars
    one = _one_coeff(nmap)
    ident = PolyMap.identity(n, nmap.degree, one)
    tail = nmap - ident
    inv = ident
    for _ in range(nmap.degree):
        inv = ident - compose_polymaps(tail, inv)
    return inv


def _one_coeff(pm):
    c0 = pm.components[0].coeffs[0]
    if isinstance(c0, ComplexInterval):
        p = c0.prec
        return ComplexInterval(Interval.one(p), Interval.zero(p))
    return 1.0 + 0.0j


def _scalar_pi2(sample):
    """2*pi in the ring of `sample`."""
    if isinstance(sample, ComplexInterval):
        p = sample.prec
        return ComplexInterval(p.pi() * 2, Interval.zero(p))
    return complex(2 * math.pi)


def _contains_zero(z):
    if isinstance(z, ComplexInterval):
        return z.contains_zero()
    return z == 0


def _is_away_from(z, w):
    """Verified z != w (disjoint enclosures, or plain inequality)."""
    if isinstance(z, ComplexInterval):
        return not z.intersects(w if isinstance(w, ComplexInterval) else
                                ComplexInterval.make(w.real, w.imag, z.prec))
    return z != w


def _zero_like_coeff(c):
    if isinstance(c, ComplexInterval):
        p = c.prec
        return ComplexInterval(Interval.zero(p), Interval.zero(p))
    return 0.0j


def diagonalize(tmap, basis, basis_inv, lambdas):
    """Conjugate by the eigenbasis: S = B^{-1} o T o B.

    tmap has real coefficients (floats or Intervals); basis and basis_inv are
    2n x 2n complex matrices (rows x cols).  The linear part of the result is
    replaced by the certified diag(lambdas) after checking the computed
    off-diagonal entries contain zero.
    """
    n = tmap.n_vars
    degree = tmap.degree
    one = lambdas[0] / lambdas[0]
    zero = _zero_like_coeff(one)
    # complexified components of T
    t_comps = [_complexify_jet(c, one) for c in tmap.components]
    # B as a linear polymap
    b_args = []
    for j in range(n):
        coeffs = {(tuple(1 if m == i else 0 for m in range(n))): basis[j][i]
                  for i in range(n)}
        b_args.append(Jet.from_coeffs(coeffs, n, degree, zero))
    tb = [c.compose(b_args) for c in t_comps]
    s_comps = []
    for i in range(n):
        acc = None
        for j in range(n):
            term = tb[j].scale(basis_inv[i][j])
            acc = term if acc is None else acc + term
        s_comps.append(acc)
    smap = PolyMap(s_comps)
    # verify the linear part is the certified diagonal, then pin it
    lin = smap.linear_matrix()
    table = smap.components[0].table
    for i in range(n):
        for j in range(n):
            expected = lambdas[i] if i == j else zero
            resid = lin[i][j] - expected
            if not _contains_zero(_widen_float(resid)):
                raise UnresolvedResonance(
                    f"diagonalization residual off zero at ({i},{j}): {resid}"
                )
            idx = table.index[tuple(1 if m == j else 0 for m in range(n))]
            smap.components[i].coeffs[idx] = expected
    return smap


def _widen_float(z):
    if isinstance(z, ComplexInterval):
        return z
    # float path: accept small conjugation residuals
    return ComplexInterval.make(0, 0) if abs(z) < 1e-6 else \
        ComplexInterval.make(1, 0)


def _complexify_jet(jet, one):
    zero = _zero_like_coeff(one)
    out = []
    for c in jet.coeffs:
        if isinstance(one, ComplexInterval):
            out.append(ComplexInterval(c, Interval.zero(c.prec)))
        else:
            out.append(complex(c))
    return Jet(jet.table, out)


def _lambda_power(lambdas, mono):
    out = None
    for lam, e in zip(lambdas, mono):
        for _ in range(e):
            out = lam if out is None else out * lam
    return out


def _combine_determinations(values):
    """Merge independent enclosures of one quantity."""
    first = values[0]
    if isinstance(first, ComplexInterval):
        out = first
        for v in values[1:]:
            out = out.intersect(v)
        return out
    avg = sum(values) / len(values)
    spread = max(abs(v - avg) for v in values)
    if spread > 1e-5 * max(1.0, abs(avg)):
        raise UnresolvedResonance(
            f"inconsistent generating-function determinations: {values}"
        )
    return avg


def kill_quadratic(smap, lambdas):
    """Remove the quadratic terms by a symplectic near-identity change.

    Returns (new_map, transform N) where N = id + Q + (1/2){Q, W} is the
    time-1 map of the cubic generating Hamiltonian W and the new map is
    N^{-1} o S o N with its quadratic part verified to contain zero and then
    pinned to zero.
    """
    n = smap.n_vars
    half = n // 2
    table = smap.components[0].table
    one = lambdas[0] / lambdas[0]
    zero = _zero_like_coeff(one)

    # homological solution: expanding S o N1 = N1 o Lambda at degree two
    # gives Q_{i,k} (lambda^k - lambda_i) = c_{i,k}
    q_comps = []
    for i in range(n):
        coeffs = [zero] * table.size
        for idx, mono in enumerate(table.monomials):
            if table.degrees[idx] != 2:
                continue
            c = smap.components[i].coeffs[idx]
            denom = _lambda_power(lambdas, mono) - lambdas[i]
            if _contains_zero(denom):
                raise ResonantDenominator(
                    f"order-2 resonance not excluded at comp {i}, {mono}"
                )
            coeffs[idx] = c / denom
        q_comps.append(Jet(table, coeffs))

    # cubic generating Hamiltonian W: dW/dU_{i+half} = Q_i,
    # dW/dU_i = -Q_{i+half}
    w_coeffs = {}
    for idx, mono in enumerate(table.monomials):
        if table.degrees[idx] != 3:
            continue
        dets = []
        for v in range(n):
            if mono[v] == 0:
                continue
            src = list(mono)
            src[v] -= 1
            src = tuple(src)
            if v >= half:
                rhs = q_comps[v - half].coeff(src)
            else:
                rhs = -q_comps[v + half].coeff(src)
            dets.append(rhs / mono[v])
        w_coeffs[idx] = _combine_determinations(dets)
    w = Jet(table, [w_coeffs.get(i, zero) for i in range(table.size)])

    # N = id + Q + (1/2) {Q_j, W}
    n_comps = []
    for i in range(n):
        bracket = _poisson(q_comps[i], w, half)
        comp = Jet.variable(i, zero, n, smap.degree, unit=one)
        comp = comp + q_comps[i] + bracket.scale(Fraction(1, 2))
        n_comps.append(comp.truncate_degree(smap.degree))
    nmap = PolyMap(n_comps)

    new_map = compose_polymaps(
        invert_polymap(nmap), compose_polymaps(smap, nmap)
    )
    # quadratic part must vanish for the true map; verify and pin
    for i in range(n):
        for idx, d in enumerate(table.degrees):
            if d == 2:
                c = new_map.components[i].coeffs[idx]
                if not _contains_zero(_widen_float(c)):
                    raise UnresolvedResonance(
                        f"quadratic term failed to cancel: comp {i}, "
                        f"{table.monomials[idx]}: {c}"
                    )
                new_map.components[i].coeffs[idx] = zero
        new_map.components[i].coeffs[0] = zero
    return new_map, nmap, w, q_comps


def _poisson(f, g, half):
    """{f, g} with the standard pairing of variables (i, i+half)."""
    out = None
    for l in range(half):
        t1 = f.diff(l) * g.diff(l + half)
        t2 = f.diff(l + half) * g.diff(l)
        term = t1 - t2
        out = term if out is None else out + term
    return out


class ResonanceReport:
    """Classification of cubic slots: unavoidable / verified_nonresonant /
    unresolved."""

    def __init__(self, order):
        self.order = order
        self.unavoidable = []
        self.verified_nonresonant = []
        self.unresolved = []

    def as_dict(self):
        return {
            "order": self.order,
            "unavoidable": [list(map(int, k)) + [int(j)] for j, k in
                            self.unavoidable],
            "verified_nonresonant": len(self.verified_nonresonant),
            "unresolved": [list(map(int, k)) + [int(j)] for j, k in
                           self.unresolved],
        }


def is_unavoidable(j, mono, half):
    """Combinatorial pattern k_j = k_{j +- half} + 1, k_m = k_{m +- half}."""
    partner = j + half if j < half else j - half
    for m in range(half):
        lhs, rhs = mono[m], mono[m + half]
        if m == (j % half):
            if j < half:
                if lhs != rhs + 1:
                    return False
            else:
                if rhs != lhs + 1:
                    return False
        else:
            if lhs != rhs:
                return False
    return True


class NormalForm:
    """z -> Lambda z + resonant cubic terms."""

    def __init__(self, lambdas, resonant, table):
        self.lambdas = lambdas
        self.resonant = resonant  # dict (comp, mono) -> coefficient
        self.table = table

    @property
    def dof(self):
        return len(self.lambdas) // 2

    def coefficient(self, comp, mono):
        return self.resonant[(comp, tuple(mono))]


def kill_cubic(smap, lambdas):
    """Zero the verifiably non-resonant cubic terms; keep unavoidable ones.

    Returns (NormalForm, ResonanceReport).  Any slot that is neither
    unavoidable nor verifiably non-resonant fails the non-resonance verdict.
    """
    n = smap.n_vars
    half = n // 2
    table = smap.components[0].table
    report = ResonanceReport(order=3)
    resonant = {}
    for i in range(n):
        for idx, mono in enumerate(table.monomials):
            if table.degrees[idx] != 3:
                continue
            c = smap.components[i].coeffs[idx]
            if is_unavoidable(i, mono, half):
                report.unavoidable.append((i, mono))
                resonant[(i, mono)] = c
                continue
            lam_k = _lambda_power(lambdas, mono)
            if _is_away_from(lambdas[i], lam_k):
                report.verified_nonresonant.append((i, mono))
                continue
            report.unresolved.append((i, mono))
    if report.unresolved:
        raise UnresolvedResonance(
            f"cubic slots neither unavoidable nor verified non-resonant: "
            f"{report.unresolved}"
        )
    return NormalForm(lambdas, resonant, table), report


class TorsionResult:
    """Twist data: the coefficient d (1 dof) or matrix D and det (2 dof)."""

    def __init__(self, entries, det, realness_ok, nonzero_ok, symmetry_ok):
        self.entries = entries  # dict (j, k) -> coefficient, 1-based
        self.det = det
        self.realness_ok = realness_ok
        self.nonzero_ok = nonzero_ok
        self.symmetry_ok = symmetry_ok


def torsion(nf):
    """Twist coefficients d_jk = c_jk / (2 pi lambda_j) and their verdicts.

    For one degree of freedom the single d doubles as the determinant; for
    two the KAM condition is det(D) != 0.  Realness asks the imaginary
    enclosure to contain zero; nonzero asks the real part (of d or det) to
    exclude it.
    """
    half = nf.dof
    lam = nf.lambdas
    two_pi = _scalar_pi2(lam[0])
    if half == 1:
        c1 = nf.coefficient(0, (2, 1))
        d = c1 / (two_pi * lam[0])
        realness = _im_contains_zero(d)
        nonzero = _re_excludes_zero(d)
        return TorsionResult({(1, 1): d}, d, realness, nonzero, True)
    mono = {
        (1, 1): (0, (2, 0, 1, 0)),
        (1, 2): (0, (1, 1, 0, 1)),
        (2, 1): (1, (1, 1, 1, 0)),
        (2, 2): (1, (0, 2, 0, 1)),
    }
    entries = {}
    for (j, k), (comp, m) in mono.items():
        c = nf.coefficient(comp, m)
        entries[(j, k)] = c / (two_pi * lam[comp])
    det = entries[(1, 1)] * entries[(2, 2)] - entries[(1, 2)] * entries[(2, 1)]
    realness = all(_im_contains_zero(v) for v in entries.values()) and \
        _im_contains_zero(det)
    nonzero = _re_excludes_zero(det)
    symmetry = _entries_compatible(entries[(1, 2)], entries[(2, 1)])
    return TorsionResult(entries, det, realness, nonzero, symmetry)


def _im_contains_zero(z):
    if isinstance(z, ComplexInterval):
        return z.im.contains_zero()
    return abs(z.imag) < 1e-4 * max(1.0, abs(z.real))


def _re_excludes_zero(z):
    if isinstance(z, ComplexInterval):
        return not z.re.contains_zero()
    return z.real != 0


def _entries_compatible(a, b):
    if isinstance(a, ComplexInterval):
        return a.intersects(b)
    return abs(a - b) < 1e-4 * max(1.0, abs(a))
