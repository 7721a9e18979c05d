"""Verified spectra of return-map derivatives and symplectic eigenbases.

Eigenvalues are certified by the complex Krawczyk operator on the interval
characteristic polynomial; for a symplectic matrix whose eigenvalue boxes
avoid the real axis and are mutually non-inverse-conjugate, all eigenvalues
are distinct and lie on the unit circle.  Eigenvectors are enclosed through
bordered linear systems valid over the whole eigenvalue box and scaled into
a symplectic basis via the pairing constants.
"""

import numpy as np

from .errors import (
    NewtonDiverged,
    PairingDegenerate,
    RootNotSeparated,
)
from .intervals import ComplexInterval, Interval
from .ivlinalg import mat_mat, verified_solve

__all__ = [
    "SpectrumCertificate",
    "SymplecticBasis",
    "char_poly",
    "verified_eigs",
    "symplectic_basis",
]


class SpectrumCertificate:
    """Eigenvalue enclosures ordered so indices j and j+n hold a conjugate
    pair (pairs sorted by decreasing real part)."""

    def __init__(self, eigenvalues, unit_circle, distinct, moduli):
        self.eigenvalues = eigenvalues
        self.unit_circle = unit_circle
        self.distinct = distinct
        self.moduli = moduli

    @property
    def dof(self):
        return len(self.eigenvalues) // 2


class SymplecticBasis:
    """Columns e_1..e_2n with e_i^T J e_{i+n} containing 1."""

    def __init__(self, columns, pairing_constants, swapped):
        self.columns = columns  # list of 2n interval-complex vectors
        self.pairing_constants = pairing_constants
        self.swapped = swapped

    def matrix(self):
        n = len(self.columns)
        return [
            [self.columns[j][i] for j in range(n)] for i in range(len(self.columns[0]))
        ]


def char_poly(A):
    """Interval coefficients of det(lambda I - A) via Faddeev-LeVerrier.

    Returns [c_0, ..., c_n] with p(lambda) = sum c_k lambda^k, c_n = 1.
    """
    n = len(A)
    prec = A[0][0].prec
    one = Interval.one(prec)
    zero = Interval.zero(prec)
    coeffs = [zero] * (n + 1)
    coeffs[n] = one
    M = [[A[i][j] for j in range(n)] for i in range(n)]
    c = -_trace(M, prec)
    coeffs[n - 1] = c
    for k in range(2, n + 1):
        for i in range(n):
            M[i][i] = M[i][i] + c
        M = mat_mat(A, M)
        c = -_trace(M, prec) / k
        coeffs[n - k] = c
    return coeffs


def _trace(M, prec):
    t = Interval.zero(prec)
    for i in range(len(M)):
        t = t + M[i][i]
    return t


def _poly_eval(coeffs, z):
    acc = None
    for c in reversed(coeffs):
        if acc is None:
            acc = ComplexInterval(c) if isinstance(c, Interval) else c
        else:
            acc = acc * z + c
    return acc


def _poly_derivative(coeffs):
    return [c * k for k, c in enumerate(coeffs)][1:]


def certify_polynomial_root(coeffs, guess, prec, max_grow=8):
    """Complex Krawczyk enclosure of the simple root near `guess`.

    coeffs are Interval coefficients (ascending); returns a ComplexInterval
    proved to contain exactly one root.
    """
    dcoeffs = _poly_derivative(coeffs)
    z = complex(guess)
    # non-rigorous polish
    for _ in range(60):
        p = _poly_eval([complex(float(c.mid()), 0) for c in coeffs], z)
        dp = _poly_eval([complex(float(c.mid()), 0) for c in dcoeffs], z)
        if dp == 0:
            break
        step = p / dp
        z -= step
        if abs(step) < 1e-17 * max(1.0, abs(z)):
            break
    zi = ComplexInterval.make(z.real, z.imag, prec)
    dp0 = _poly_eval(dcoeffs, zi)
    if dp0.contains_zero():
        raise NewtonDiverged("derivative vanishes at the polished root")
    c_pre = 1.0 / complex(dp0.mid())
    c_iv = ComplexInterval.make(c_pre.real, c_pre.imag, prec)
    p_mid = _poly_eval(coeffs, zi)
    # radius must cover the coefficient widths, not just the residual mid
    radius = 4.0 * (c_iv * p_mid).mag() + 10.0 * (
        2.0 ** (1 - prec.bits)
    ) * max(1.0, abs(z))
    for _ in range(max_grow):
        box = ComplexInterval(
            zi.re.widen(radius), zi.im.widen(radius)
        )
        dpz = _poly_eval(dcoeffs, box)
        one = ComplexInterval(Interval.one(prec), Interval.zero(prec))
        K = zi - c_iv * p_mid + (one - c_iv * dpz) * (box - zi)
        if box.interior_contains(K):
            out = K
            for _ in range(3):
                dpz = _poly_eval(dcoeffs, out)
                K2 = zi - c_iv * p_mid + (one - c_iv * dpz) * (out - zi)
                try:
                    out = out.intersect(K2)
                except ValueError:
                    break
            return out
        radius *= 8.0
    raise NewtonDiverged(f"Krawczyk inclusion failed near {z}")


def verified_eigs(A):
    """Certify the spectrum of an interval matrix from a symplectic map.

    Eigenvalue enclosures come from the characteristic polynomial; the
    unit-circle verdict holds when no box meets the real axis (A1) and
    inverse boxes meet only their own conjugates (A2).  Boxes are ordered in
    conjugate pairs (positive-imaginary representative chosen per pair
    before any later symplectic-pairing swap).
    """
    n = len(A)
    prec = A[0][0].prec
    coeffs = char_poly(A)
    mid = np.array([[float(x.mid()) for x in row] for row in A])
    guesses = np.linalg.eigvals(mid)
    boxes = []
    for g in guesses:
        boxes.append(certify_polynomial_root(coeffs, complex(g), prec))
    # group into conjugate pairs, positive imaginary part first
    used = [False] * n
    pairs = []
    for i in range(n):
        if used[i]:
            continue
        best = None
        for j in range(n):
            if j == i or used[j]:
                continue
            d = abs(boxes[i].conj().mid() - boxes[j].mid())
            if best is None or d < best[1]:
                best = (j, d)
        if best is None:
            raise RootNotSeparated("odd conjugate pairing")
        j = best[0]
        used[i] = used[j] = True
        if float(boxes[i].im.mid()) >= 0:
            pairs.append((boxes[i], boxes[j]))
        else:
            pairs.append((boxes[j], boxes[i]))
    pairs.sort(key=lambda pq: -float(pq[0].re.mid()))
    ordered = [p for p, _ in pairs] + [q for _, q in pairs]
    # distinctness
    distinct = True
    for i in range(n):
        for j in range(i + 1, n):
            if ordered[i].intersects(ordered[j]):
                distinct = False
    # (A1) boxes avoid the real axis
    a1 = all(not lam.im.contains_zero() for lam in ordered)
    # (A2) inverse meets conjugate only for the same index
    a2 = True
    one = ComplexInterval(Interval.one(prec), Interval.zero(prec))
    for i in range(n):
        inv = one / ordered[i]
        for j in range(n):
            if i != j and inv.intersects(ordered[j].conj()):
                a2 = False
    unit_circle = a1 and a2 and distinct
    moduli = []
    one_iv = Interval.one(prec)
    for lam in ordered:
        m = lam.abs()
        if unit_circle:
            try:
                m = m.intersect(one_iv)
            except ValueError:
                unit_circle = False
        moduli.append(m)
    return SpectrumCertificate(ordered, unit_circle, distinct, moduli)


def _bordered_eigenvector(A, lam, prec):
    """Enclosure of the eigenvector of every point pair in (A, lam).

    Solves the bordered system [[A - lam I, w], [w^T, 0]] (e, mu) = (0, 1)
    with w the conjugate of a non-rigorous eigenvector, which is regular at
    a simple eigenvalue; mu must contain zero.
    """
    n = len(A)
    zero = Interval.zero(prec)
    mid = np.array([[float(x.mid()) for x in row] for row in A])
    lam_mid = complex(lam.mid())
    vals, vecs = np.linalg.eig(mid)
    idx = int(np.argmin(np.abs(vals - lam_mid)))
    v = vecs[:, idx]
    v = v / np.linalg.norm(v)
    big = [[None] * (n + 1) for _ in range(n + 1)]
    for i in range(n):
        for j in range(n):
            entry = ComplexInterval(A[i][j], zero)
            if i == j:
                entry = entry - lam
            big[i][j] = entry
        big[i][n] = ComplexInterval.make(
            complex(v[i]).real, complex(v[i]).imag, prec
        )
    for j in range(n):
        big[n][j] = ComplexInterval.make(
            complex(np.conj(v[j])).real, complex(np.conj(v[j])).imag, prec
        )
    czero = ComplexInterval(zero, zero)
    big[n][n] = czero
    cone = ComplexInterval(Interval.one(prec), zero)
    rhs = [czero] * n + [cone]
    sol = verified_solve(big, rhs)
    return sol[:n], sol[n]


def symplectic_basis(A, cert):
    """Scaled eigenvector basis with e_i^T J e_{i+n} containing 1.

    The pairing constant c from e_i^T J conj(e_i) = i c must be
    sign-definite; a positive c swaps the pair's indices (conjugating the
    eigenvalue) before scaling by 1/sqrt(-c).  Returns the basis together
    with the possibly reordered eigenvalue list.
    """
    if not (cert.unit_circle and cert.distinct):
        raise PairingDegenerate(
            "symplectic basis needs a verified elliptic spectrum"
        )
    n2 = len(A)
    half = n2 // 2
    prec = A[0][0].prec
    zero = Interval.zero(prec)
    lambdas = list(cert.eigenvalues)
    cols = [None] * n2
    consts = []
    swapped = []
    for i in range(half):
        lam = lambdas[i]
        e, mu = _bordered_eigenvector(A, lam, prec)
        if not mu.contains_zero():
            raise PairingDegenerate(
                f"bordered eigenvector residual misses zero: {mu}"
            )
        s = _j_form(e, [x.conj() for x in e], prec)
        if not s.re.contains_zero():
            raise PairingDegenerate(
                f"pairing form has nonzero real part: {s}"
            )
        c = s.im
        if c.contains_zero():
            raise PairingDegenerate(f"pairing constant contains zero: {c}")
        swap = c.lo > 0
        if swap:
            lam = lam.conj()
            e = [x.conj() for x in e]
            c = -c
            lambdas[i], lambdas[i + half] = (
                lambdas[i].conj(),
                lambdas[i + half].conj(),
            )
        scale = Interval.one(prec) / (-c).sqrt()
        e_i = [x * ComplexInterval(scale, zero) for x in e]
        i_unit = ComplexInterval(zero, Interval.one(prec))
        e_pair = [i_unit * x.conj() for x in e_i]
        cols[i] = e_i
        cols[i + half] = e_pair
        consts.append(c)
        swapped.append(swap)
    return SymplecticBasis(cols, consts, swapped), lambdas


def _j_form(u, v, prec):
    """u^T J v for the standard 2n x 2n symplectic form."""
    n2 = len(u)
    half = n2 // 2
    acc = None
    for i in range(half):
        term = u[i] * v[i + half] - u[i + half] * v[i]
        acc = term if acc is None else acc + term
    return acc


def check_basis_symplectic(basis, prec):
    """B^T J B must contain J entrywise."""
    cols = basis.columns
    n2 = len(cols)
    half = n2 // 2
    ok = True
    for i in range(n2):
        for j in range(n2):
            form = _j_form(cols[i], cols[j], prec)
            expected = 0
            if j == i + half:
                expected = 1
            elif i == j + half:
                expected = -1
            if not (form - expected).contains_zero():
                ok = False
    return ok
