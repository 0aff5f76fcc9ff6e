"""Dense Gaussian elimination over the real scalars of a coefficient field.

The systems here are at most a few dozen unknowns, so a plain elimination
over ``mpq`` (exact) or ``mpfr`` (float) is enough and keeps exact mode
free of rounding.
"""
from __future__ import annotations

from .errors import CertificationError


def solve(A, b, field):
    """Solve the square system ``A x = b``.

    Parameters
    ----------
    A : list of list
        Real matrix entries (``mpq`` or ``mpfr``).
    b : list
        Right-hand side.
    field : ExactField or FloatField
        Decides exact pivoting (first nonzero) or partial pivoting.

    Raises
    ------
    CertificationError
        If the matrix is singular (exactly, or below the field tolerance).
    """
    n = len(A)
    if any(len(row) != n for row in A) or len(b) != n:
        raise ValueError("solve expects a square system")
    exact = field.mode == "exact"
    with field.context():
        M = [list(row) + [rhs] for row, rhs in zip(A, b)]
        scale = max((abs(v) for row in A for v in row), default=0)
        tiny = 0 if exact else field.tol * (scale if scale else 1) * n
        for col in range(n):
            if exact:
                piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            else:
                piv = max(range(col, n), key=lambda r: abs(M[r][col]))
                if abs(M[piv][col]) <= tiny:
                    piv = None
            if piv is None:
                raise CertificationError(f"singular homological system (column {col})")
            if piv != col:
                M[col], M[piv] = M[piv], M[col]
            pv = M[col][col]
            rowc = M[col]
            for r in range(n):
                if r == col:
                    continue
                fac = M[r][col]
                if fac == 0:
                    continue
                fac = fac / pv
                row = M[r]
                for c in range(col, n + 1):
                    if rowc[c] != 0:
                        row[c] = row[c] - fac * rowc[c]
        return [M[i][n] / M[i][i] for i in range(n)]


def rank(A, field):
    """Rank of a complex matrix (list of rows) by elimination.

    In float mode entries below ``tol * max|A|`` count as zero; exact mode
    has no threshold.
    """
    rows = [list(r) for r in A]
    if not rows:
        return 0
    ncol = len(rows[0])
    exact = field.mode == "exact"
    with field.context():
        scale = max((field.magnitude(v) for r in rows for v in r), default=0)
        tiny = 0 if exact else field.tol * (scale if scale else 1)
        rk = 0
        for col in range(ncol):
            if exact:
                piv = next((r for r in range(rk, len(rows)) if rows[r][col] != 0), None)
            else:
                cand = max(range(rk, len(rows)), key=lambda r: field.magnitude(rows[r][col]), default=None)
                piv = cand if cand is not None and field.magnitude(rows[cand][col]) > tiny else None
            if piv is None:
                continue
            rows[rk], rows[piv] = rows[piv], rows[rk]
            pv = rows[rk][col]
            for r in range(len(rows)):
                if r != rk and rows[r][col] != 0:
                    fac = rows[r][col] / pv
                    rows[r] = [x - fac * y for x, y in zip(rows[r], rows[rk])]
            rk += 1
            if rk == len(rows):
                break
        return rk
