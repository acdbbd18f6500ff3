from fractions import Fraction
from typing import List
from typing import Optional
from typing import Sequence

import sympy


def to_fraction(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def to_matrix(rows: Sequence[Sequence]) -> sympy.Matrix:
    return sympy.Matrix(
        [[sympy.Rational(v.numerator, v.denominator) for v in row] for row in rows],
    )


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows or not rows[0]:
        return 0
    return to_matrix(rows).rank()


def inverse(rows: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    inv = to_matrix(rows).inv()
    return [[to_fraction(inv[i, j]) for j in range(inv.cols)] for i in range(inv.rows)]


def solve(
    columns: Sequence[Sequence[Fraction]],
    target: Sequence[Fraction],
) -> Optional[List[Fraction]]:
    """
    Coefficients c with Σ c_k columns[k] = target, or None when target is not
    in the span. Columns are assumed independent.
    """
    if not columns:
        return [] if not any(target) else None
    matrix = to_matrix(columns).T
    rhs = to_matrix([target]).T
    try:
        solution, params = matrix.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    if params.shape[0]:
        solution = solution.subs({p: 0 for p in params})
    return [to_fraction(solution[k, 0]) for k in range(solution.rows)]
