"""Exact rational linear algebra helpers.

Everything here operates on Python Fractions or arbitrary-precision ints;
no floating point.  Matrices are lists of row tuples.  Sizes in this
package are small (tens of rows/columns), so plain Gaussian elimination
is the right tool.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def scale_to_int(row) -> tuple[int, ...]:
    """Clear denominators and divide by the gcd.  Preserves sign/direction."""
    fracs = [Fraction(x) for x in row]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // gcd(denom, f.denominator)
    ints = [int(f * denom) for f in fracs]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    return tuple(ints)


def rref(rows):
    """Reduced row echelon form.

    Returns (reduced rows, pivot column indices).  Input rows are any
    rational sequences; output rows are Fraction tuples.
    """
    mat = [list(map(Fraction, r)) for r in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if mat[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(nrows):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return [tuple(row) for row in mat[:r]], pivots


def rank(rows) -> int:
    if not rows:
        return 0
    _, pivots = rref(rows)
    return len(pivots)


def kernel_basis(rows, ncols=None):
    """Basis of {x : Ax = 0} as integer tuples (one per free column)."""
    if not rows:
        if ncols is None:
            raise ValueError("ncols required for an empty matrix")
        return [tuple(1 if j == i else 0 for j in range(ncols)) for i in range(ncols)]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -red[i][fc]
        basis.append(scale_to_int(vec))
    return basis


def independent_rows(rows):
    """Indices of a lexicographically-first maximal independent row subset."""
    kept = []
    kept_rows = []
    current_rank = 0
    for i, row in enumerate(rows):
        cand = kept_rows + [row]
        r = rank(cand)
        if r > current_rank:
            kept.append(i)
            kept_rows.append(row)
            current_rank = r
    return kept


def solve(rows, rhs):
    """One exact solution of Ax = b, or None if inconsistent."""
    if not rows:
        return None
    ncols = len(rows[0])
    aug = [tuple(list(map(Fraction, r)) + [Fraction(b)]) for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    x = [Fraction(0)] * ncols
    for i, pc in enumerate(pivots):
        if pc == ncols:
            return None  # pivot in the rhs column: inconsistent
        x[pc] = red[i][ncols]
    return tuple(x)
