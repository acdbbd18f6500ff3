"""
Closed-form kernels of the shape Σ_k Q_k · P^{β_k} with polynomial Q_k, one
polynomial radicand P and rational exponents β_k. Vector fields act on them
by the chain rule on the radicand, so derivatives of such kernels stay exact.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict
from typing import Sequence
from typing import Tuple

import numpy as np
from symbolic.dsl import VectorField
from symbolic.poly import CompiledPolynomial
from symbolic.poly import Context
from symbolic.poly import Polynomial


@dataclass(frozen=True)
class RadicalExpression:
    base: Polynomial
    terms: Tuple[Tuple[Polynomial, Fraction], ...]

    @classmethod
    def power(cls, base: Polynomial, exponent) -> "RadicalExpression":
        one = Polynomial.constant(base.context, 1)
        return cls(base, ((one, Fraction(exponent)),))

    @property
    def context(self) -> Context:
        return self.base.context

    def simplify(self) -> "RadicalExpression":
        grouped: Dict[Fraction, Polynomial] = {}
        for q, beta in self.terms:
            grouped[beta] = grouped.get(beta, Polynomial.zero(self.context)) + q
        return RadicalExpression(
            self.base,
            tuple((q, beta) for beta, q in sorted(grouped.items()) if not q.is_zero()),
        )

    def apply(self, field: VectorField) -> "RadicalExpression":
        """V(Q P^β) = V(Q) P^β + β Q V(P) P^(β−1)."""
        dp = field.apply(self.base)
        terms = []
        for q, beta in self.terms:
            terms.append((field.apply(q), beta))
            if not dp.is_zero():
                terms.append((q * dp * beta, beta - 1))
        return RadicalExpression(self.base, tuple(terms)).simplify()

    def __add__(self, other: "RadicalExpression") -> "RadicalExpression":
        if other.base != self.base:
            raise ValueError("Cannot add kernels with different radicands")
        return RadicalExpression(self.base, self.terms + other.terms).simplify()

    def substitute(self, images: Sequence[Polynomial]) -> "RadicalExpression":
        return RadicalExpression(
            self.base.substitute(images),
            tuple((q.substitute(images), beta) for q, beta in self.terms),
        )

    def numerator(self) -> Tuple[Polynomial, Fraction]:
        """
        (R, β₀) with the expression equal to R·P^β₀, when all exponents
        differ by integers.
        """
        if not self.terms:
            return Polynomial.zero(self.context), Fraction(0)
        lowest = min(beta for _, beta in self.terms)
        total = Polynomial.zero(self.context)
        for q, beta in self.terms:
            shift = beta - lowest
            if shift.denominator != 1:
                raise ValueError("Exponents do not differ by integers")
            total = total + q * self.base ** int(shift)
        return total, lowest

    def is_zero(self) -> bool:
        return self.numerator()[0].is_zero()

    def compile(self) -> "CompiledRadical":
        return CompiledRadical(self)

    def __str__(self):
        return " + ".join(f"({q})*P^({beta})" for q, beta in self.terms) or "0"


class CompiledRadical:
    def __init__(self, expression: RadicalExpression):
        self.expression = expression
        self.base = expression.base.compile()
        self.exponents = np.array([float(beta) for _, beta in expression.terms])
        if expression.terms:
            self.factors = CompiledPolynomial.from_polynomials(
                [q for q, _ in expression.terms],
            )
        else:
            self.factors = None

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.factors is None:
            return np.zeros(points.shape[:-1])
        p = self.base(points)
        q = self.factors(points)
        if self.factors.single:
            q = q[..., None]
        return np.sum(q * p[..., None] ** self.exponents, axis=-1)
