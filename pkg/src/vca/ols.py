"""Ordinary least squares via normal equations.

Deliberately dependency-free: the matrices here are (k+1) x (k+1) for k
features, so a small Gaussian elimination with partial pivoting is plenty
and keeps the engine importable without a numerics stack.
"""

from __future__ import annotations

import math

PIVOT_EPS = 1e-12


class SingularSystem(ValueError):
    pass


def solve_linear(a: list[list[float]], b: list[float]) -> list[float]:
    """Solve a x = b in place; raises SingularSystem when a pivot collapses."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot_row][col]) < PIVOT_EPS:
            raise SingularSystem(f"pivot {m[pivot_row][col]!r} below {PIVOT_EPS}")
        m[col], m[pivot_row] = m[pivot_row], m[col]
        inv = 1.0 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor == 0.0:
                continue
            for c in range(col, n + 1):
                m[r][c] -= factor * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = m[r][n] - math.fsum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = acc / m[r][r]
    return x


def fit_ols(xs: list[list[float]], ys: list[float]) -> list[float]:
    """Fit y ~ b0 + b1*x1 + ... ; returns [b0, b1, ...].

    xs holds one row of feature values per observation (no intercept
    column; it is added here). Features are centered before solving so the
    normal equations stay well conditioned for shifted domains like epoch
    days, then the intercept is translated back.
    """
    if not xs:
        raise SingularSystem("no observations")
    n_feat = len(xs[0])
    means = [math.fsum(row[i] for row in xs) / len(xs) for i in range(n_feat)]
    k = n_feat + 1
    rows = [[1.0] + [float(v) - m for v, m in zip(row, means)] for row in xs]
    ata = [[math.fsum(r[i] * r[j] for r in rows) for j in range(k)] for i in range(k)]
    aty = [math.fsum(r[i] * y for r, y in zip(rows, ys)) for i in range(k)]
    coeffs = solve_linear(ata, aty)
    coeffs[0] -= math.fsum(b * m for b, m in zip(coeffs[1:], means))
    return coeffs


def predict(coefficients: list[float], features: list[float]) -> float:
    return coefficients[0] + math.fsum(c * f for c, f in zip(coefficients[1:], features))
