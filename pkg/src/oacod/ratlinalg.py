"""Exact linear algebra over the rationals.

Optimality certificates ("efficiency equals 1") must not hinge on floating
point, so determinants, inverses, and quadratic forms of moment matrices are
computed with ``fractions.Fraction``. Matrices here are small (p <= ~50), so
plain dense elimination is plenty.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


class SingularMatrixError(ArithmeticError):
    """Matrix is singular; carries a rational null-space direction."""

    def __init__(self, null_vector: tuple[Fraction, ...], labels: Sequence[str] | None = None):
        self.null_vector = null_vector
        if labels:
            parts = [f"{c}*{n}" for c, n in zip(null_vector, labels) if c]
            desc = " + ".join(parts)
        else:
            desc = str(null_vector)
        super().__init__(f"singular matrix; null direction: {desc}")


def as_fractions(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def det(rows: Sequence[Sequence]) -> Fraction:
    """Determinant via fraction-free (Bareiss) elimination.

    Denominators are cleared row by row first so the core runs on Python
    integers, which keeps intermediate entries small.
    """
    a = as_fractions(rows)
    n = len(a)
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    m: list[list[int]] = []
    for row in a:
        den = 1
        for x in row:
            den = den * x.denominator // _gcd(den, x.denominator)
        scale /= den
        m.append([int(x * den) for x in row])
    prev = 1
    sign = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return Fraction(0)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * scale * m[n - 1][n - 1]


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def inverse(rows: Sequence[Sequence], labels: Sequence[str] | None = None) -> Matrix:
    """Exact inverse by Gauss-Jordan elimination.

    Raises :class:`SingularMatrixError` (with a null vector) if the matrix
    is rank deficient.
    """
    a = as_fractions(rows)
    n = len(a)
    aug = [a[i] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError(null_vector(rows), labels)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def null_vector(rows: Sequence[Sequence]) -> tuple[Fraction, ...]:
    """A nonzero rational vector v with M v = 0, for singular M."""
    a = as_fractions(rows)
    n = len(a)
    # reduce to RREF, tracking pivot columns
    pivots: list[int] = []
    r = 0
    for col in range(n):
        piv = next((k for k in range(r, n) if a[k][col] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv_p = 1 / a[r][col]
        a[r] = [x * inv_p for x in a[r]]
        for k in range(n):
            if k != r and a[k][col]:
                f = a[k][col]
                a[k] = [x - f * y for x, y in zip(a[k], a[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if not free:
        raise ValueError("matrix is nonsingular")
    c0 = free[0]
    v = [Fraction(0)] * n
    v[c0] = Fraction(1)
    for row_idx, col in enumerate(pivots):
        v[col] = -a[row_idx][c0]
    return tuple(v)


def trace_of_inverse(rows: Sequence[Sequence], labels: Sequence[str] | None = None) -> Fraction:
    inv = inverse(rows, labels)
    return sum((inv[i][i] for i in range(len(inv))), Fraction(0))


def quadratic_form(vec: Sequence, rows: Matrix) -> Fraction:
    """v^T M v with exact arithmetic."""
    n = len(vec)
    acc = Fraction(0)
    for i in range(n):
        vi = vec[i]
        if vi:
            acc += vi * sum(rows[i][j] * vec[j] for j in range(n))
    return acc


def charpoly(rows: Sequence[Sequence]) -> list[Fraction]:
    """Coefficients of det(xI - M), highest power first (Faddeev-LeVerrier)."""
    a = as_fractions(rows)
    n = len(a)
    coeffs = [Fraction(1)]
    mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        for i in range(n):
            mk[i][i] += coeffs[-1]
        mk = _matmul(a, mk)
        tr = sum((mk[i][i] for i in range(n)), Fraction(0))
        coeffs.append(-tr / k)
    return coeffs


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]
