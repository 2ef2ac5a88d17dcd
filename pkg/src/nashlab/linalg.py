"""Small exact linear algebra over the rationals (Gauss-Jordan on Fractions)."""

from __future__ import annotations

from fractions import Fraction


def rref(rows):
    """Reduced row echelon form.  Returns ``(matrix, pivot_columns)``."""
    m = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def solve(M, b):
    """Solve ``M u = b`` exactly.

    Returns ``(particular, nullspace_basis)`` or ``None`` when inconsistent.
    The particular solution sets free variables to zero.
    """
    ncols = len(M[0])
    aug = [list(row) + [rhs] for row, rhs in zip(M, b)]
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        sol[c] = red[i][ncols]
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -red[i][f]
        basis.append(v)
    return sol, basis


def solve_unique(M, b):
    """Unique exact solution of ``M u = b`` or ``None`` (inconsistent or underdetermined)."""
    out = solve(M, b)
    if out is None or out[1]:
        return None
    return out[0]
