"""Verified linear algebra on interval vectors and matrices.

Boxes are plain lists of Interval; matrices are lists of rows.  The solver
uses midpoint-inverse preconditioning followed by interval Gaussian
elimination with mignitude pivoting, and works unchanged for ComplexInterval
entries (the generic scalar operations of the element types carry it).
"""

from .errors import SingularEnclosure
from .intervals import ComplexInterval, Interval

__all__ = [
    "box_hull",
    "box_intersect",
    "box_diam",
    "box_contains",
    "box_interior_contains",
    "mat_vec",
    "mat_mat",
    "verified_solve",
    "inverse_enclosure",
    "poisson_matrix",
]


def box_hull(a, b):
    return [x.hull(y) for x, y in zip(a, b)]


def box_intersect(a, b):
    return [x.intersect(y) for x, y in zip(a, b)]


def box_diam(a):
    return max(float(x.diam) for x in a)


def box_contains(a, b):
    """Componentwise: every b_i inside a_i."""
    return all(x.contains(y) for x, y in zip(a, b))


def box_interior_contains(a, b):
    return all(x.interior_contains(y) for x, y in zip(a, b))


def box_mid(a):
    return [x.mid() for x in a]


def mat_vec(A, v):
    out = []
    for row in A:
        acc = row[0] * v[0]
        for x, y in zip(row[1:], v[1:]):
            acc = acc + x * y
        out.append(acc)
    return out


def mat_mat(A, B):
    m = len(A)
    inner = len(B)
    p = len(B[0])
    return [
        [
            _dot([A[i][k] for k in range(inner)], [B[k][j] for k in range(inner)])
            for j in range(p)
        ]
        for i in range(m)
    ]


def _dot(xs, ys):
    acc = xs[0] * ys[0]
    for x, y in zip(xs[1:], ys[1:]):
        acc = acc + x * y
    return acc


def _mignitude(x):
    if isinstance(x, ComplexInterval):
        return max(x.re.mig(), x.im.mig())
    return x.mig()


def _contains_zero(x):
    return x.contains_zero()


def gauss_solve(A, bs):
    """Interval Gaussian elimination; bs is a list of right-hand sides.

    No preconditioning here: meant for already well-conditioned systems.
    Raises SingularEnclosure when every pivot candidate contains zero.
    """
    n = len(A)
    M = [list(row) for row in A]
    B = [list(b) for b in bs]
    perm = list(range(n))
    for col in range(n):
        piv = max(range(col, n), key=lambda r: _mignitude(M[r][col]))
        if _contains_zero(M[piv][col]):
            raise SingularEnclosure(
                f"pivot contains zero in column {col}"
            )
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            for b in B:
                b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col + 1, n):
                M[r][c] = M[r][c] - f * M[col][c]
            for b in B:
                b[r] = b[r] - f * b[col]
    outs = []
    for b in B:
        x = [None] * n
        for r in range(n - 1, -1, -1):
            acc = b[r]
            for c in range(r + 1, n):
                acc = acc - M[r][c] * x[c]
            x[r] = acc / M[r][r]
        outs.append(x)
    return outs


def _float_inverse(A):
    import numpy as np

    if isinstance(A[0][0], ComplexInterval):
        mid = np.array(
            [[complex(x.mid()) for x in row] for row in A], dtype=complex
        )
    else:
        mid = np.array([[float(x.mid()) for x in row] for row in A])
    return np.linalg.inv(mid)


def _lift_point_matrix(C, sample):
    """Float/complex matrix -> thin interval matrix at the sample's prec."""
    prec = sample.prec
    if isinstance(sample, ComplexInterval):
        return [
            [
                ComplexInterval(
                    Interval.make(float(z.real), prec),
                    Interval.make(float(z.imag), prec),
                )
                for z in row
            ]
            for row in C
        ]
    return [[Interval.make(float(z), prec) for z in row] for row in C]


def verified_solve(A, b):
    """Enclosure of {x : A0 x = b0, A0 in A, b0 in b}.

    Midpoint-inverse preconditioning, then interval elimination.  Raises
    SingularEnclosure when a pivot of the preconditioned system still
    contains zero (a hint to fall back to the Krawczyk operator).
    """
    try:
        C = _float_inverse(A)
    except Exception as exc:  # singular midpoint: no useful preconditioner
        raise SingularEnclosure(f"midpoint inversion failed: {exc}")
    Ci = _lift_point_matrix(C, A[0][0])
    CA = mat_mat(Ci, A)
    Cb = mat_vec(Ci, b)
    return gauss_solve(CA, [Cb])[0]


def inverse_enclosure(A):
    """Columnwise enclosure of A^{-1} for an interval (or point) matrix."""
    n = len(A)
    sample = A[0][0]
    cols = []
    if isinstance(sample, ComplexInterval):
        prec = sample.prec
        zero = ComplexInterval(Interval.zero(prec), Interval.zero(prec))
        one = ComplexInterval(Interval.one(prec), Interval.zero(prec))
    else:
        prec = sample.prec
        zero = Interval.zero(prec)
        one = Interval.one(prec)
    for j in range(n):
        e = [one if i == j else zero for i in range(n)]
        cols.append(verified_solve(A, e))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def poisson_matrix(n, prec):
    """The 2n x 2n symplectic form J as a thin interval matrix."""
    zero = Interval.zero(prec)
    one = Interval.one(prec)
    J = [[zero for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        J[i][i + n] = one
        J[i + n][i] = -one
    return J
