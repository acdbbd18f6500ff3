import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np


class PolynomialContextError(Exception):
    pass


Exponents = Tuple[int, ...]
Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class Context:
    """
    Ordered variable names with their positive integer δ-weights.
    """

    names: Tuple[str, ...]
    weights: Tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.weights):
            raise PolynomialContextError(
                f"{len(self.names)} variable names but {len(self.weights)} weights",
            )
        if len(set(self.names)) != len(self.names):
            raise PolynomialContextError(f"Duplicate variable names in {self.names}")
        if any(w < 1 for w in self.weights):
            raise PolynomialContextError(f"Weights must be positive: {self.weights}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, int]]) -> "Context":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(int(p[1]) for p in pairs))

    @classmethod
    def base(cls, weights: Sequence[int], prefix: str = "x") -> "Context":
        return cls(
            tuple(f"{prefix}{i + 1}" for i in range(len(weights))),
            tuple(int(w) for w in weights),
        )

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise PolynomialContextError(f"Unknown variable {name!r} in {self.names}")

    def extend(self, other: "Context") -> "Context":
        return Context(self.names + other.names, self.weights + other.weights)

    def variables(self) -> List["Polynomial"]:
        return [Polynomial.variable(self, name) for name in self.names]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"Exact coefficient expected, got {type(value).__name__}")


def _grlex_key(exponents: Exponents):
    return (-sum(exponents), tuple(-e for e in exponents))


class Polynomial:
    """
    Multivariate polynomial with exact rational coefficients.

    Terms map dense exponent vectors to nonzero Fractions. Instances are
    immutable; every operation returns a new polynomial.
    """

    __slots__ = ("context", "_terms", "_hash")

    def __init__(self, context: Context, terms: Mapping[Exponents, Scalar] = None):
        self.context = context
        arity = len(context)
        clean: Dict[Exponents, Fraction] = {}
        for exponents, coeff in (terms or {}).items():
            exponents = tuple(int(e) for e in exponents)
            if len(exponents) != arity:
                raise PolynomialContextError(
                    f"Exponent vector {exponents} does not match {arity} variables",
                )
            if any(e < 0 for e in exponents):
                raise PolynomialContextError(f"Negative exponent in {exponents}")
            coeff = _as_fraction(coeff)
            if coeff:
                clean[exponents] = clean.get(exponents, Fraction(0)) + coeff
                if not clean[exponents]:
                    del clean[exponents]
        self._terms = clean
        self._hash = None

    # construction

    @classmethod
    def zero(cls, context: Context) -> "Polynomial":
        return cls(context)

    @classmethod
    def constant(cls, context: Context, value: Scalar) -> "Polynomial":
        return cls(context, {(0,) * len(context): value})

    @classmethod
    def variable(cls, context: Context, name: str) -> "Polynomial":
        exponents = [0] * len(context)
        exponents[context.index(name)] = 1
        return cls(context, {tuple(exponents): 1})

    @classmethod
    def _raw(cls, context: Context, terms: Dict[Exponents, Fraction]):
        # terms must already be pruned and well formed
        poly = cls.__new__(cls)
        poly.context = context
        poly._terms = terms
        poly._hash = None
        return poly

    # inspection

    @property
    def terms(self) -> Dict[Exponents, Fraction]:
        return dict(self._terms)

    def items(self) -> List[Tuple[Exponents, Fraction]]:
        """Terms in canonical graded-lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * len(self.context), Fraction(0))

    def coefficient(self, exponents: Exponents) -> Fraction:
        return self._terms.get(tuple(exponents), Fraction(0))

    def monomial_degree(self, exponents: Exponents) -> int:
        return sum(e * w for e, w in zip(exponents, self.context.weights))

    def degree(self) -> int:
        """Highest δ-degree among the terms; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(self.monomial_degree(e) for e in self._terms)

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def delta_decompose(self) -> List[Tuple[int, "Polynomial"]]:
        components: Dict[int, Dict[Exponents, Fraction]] = {}
        for exponents, coeff in self._terms.items():
            components.setdefault(self.monomial_degree(exponents), {})[
                exponents
            ] = coeff
        return [
            (degree, Polynomial._raw(self.context, components[degree]))
            for degree in sorted(components)
        ]

    def is_homogeneous(self, degree: int = None) -> bool:
        degrees = {self.monomial_degree(e) for e in self._terms}
        if not degrees:
            return True
        if len(degrees) > 1:
            return False
        return degree is None or degrees == {degree}

    def depends_on(self, name: str) -> bool:
        k = self.context.index(name)
        return any(e[k] for e in self._terms)

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.context != self.context:
                raise PolynomialContextError(
                    f"Mismatched contexts {self.context.names} and "
                    f"{other.context.names}",
                )
            return other
        return Polynomial.constant(self.context, _as_fraction(other))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self._terms)
        for exponents, coeff in other._terms.items():
            value = terms.get(exponents, 0) + coeff
            if value:
                terms[exponents] = value
            else:
                terms.pop(exponents, None)
        return Polynomial._raw(self.context, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.context, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def scale(self, factor: Scalar) -> "Polynomial":
        factor = _as_fraction(factor)
        if not factor:
            return Polynomial.zero(self.context)
        return Polynomial._raw(
            self.context,
            {e: c * factor for e, c in self._terms.items()},
        )

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        terms: Dict[Exponents, Fraction] = {}
        for (e1, c1), (e2, c2) in itertools.product(
            self._terms.items(),
            other._terms.items(),
        ):
            exponents = tuple(a + b for a, b in zip(e1, e2))
            terms[exponents] = terms.get(exponents, 0) + c1 * c2
        return Polynomial._raw(self.context, {e: c for e, c in terms.items() if c})

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Polynomial":
        if not isinstance(power, int) or power < 0:
            raise ValueError("Only nonnegative integer powers are supported")
        result = Polynomial.constant(self.context, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    # calculus and evaluation

    def derivative(self, var: Union[str, int]) -> "Polynomial":
        k = var if isinstance(var, int) else self.context.index(var)
        if not 0 <= k < len(self.context):
            raise PolynomialContextError(f"Variable index {k} out of range")
        terms = {}
        for exponents, coeff in self._terms.items():
            if exponents[k]:
                lowered = list(exponents)
                lowered[k] -= 1
                terms[tuple(lowered)] = coeff * exponents[k]
        return Polynomial._raw(self.context, terms)

    def evaluate(self, point: Sequence):
        if len(point) != len(self.context):
            raise PolynomialContextError(
                f"Point of arity {len(point)} for {len(self.context)} variables",
            )
        exact = all(isinstance(v, (int, Fraction)) for v in point)
        if not self._terms:
            return Fraction(0) if exact else 0.0
        value = _horner(self._terms, list(point), 0)
        return value if exact else float(value)

    def substitute(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """
        Compose with a polynomial map: variable i is replaced by images[i].
        """
        if len(images) != len(self.context):
            raise PolynomialContextError(
                f"{len(images)} images for {len(self.context)} variables",
            )
        target = images[0].context if images else self.context
        for image in images:
            if image.context != target:
                raise PolynomialContextError("Substitution images disagree on context")
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power(i, e):
            if (i, e) not in powers:
                powers[(i, e)] = images[i] ** e
            return powers[(i, e)]

        result = Polynomial.zero(target)
        for exponents, coeff in self._terms.items():
            term = Polynomial.constant(target, coeff)
            for i, e in enumerate(exponents):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def embed(self, target: Context) -> "Polynomial":
        """Re-express in a context that contains every variable by name."""
        positions = [target.index(name) for name in self.context.names]
        terms = {}
        for exponents, coeff in self._terms.items():
            lifted = [0] * len(target)
            for k, e in zip(positions, exponents):
                lifted[k] = e
            terms[tuple(lifted)] = coeff
        return Polynomial._raw(target, terms)

    def dilate(self, lam: Scalar) -> "Polynomial":
        """p∘δ_λ for rational λ, i.e. each x_i replaced by λ^{σ_i}·x_i."""
        lam = _as_fraction(lam)
        return Polynomial._raw(
            self.context,
            {e: c * lam ** self.monomial_degree(e) for e, c in self._terms.items()},
        )

    def compile(self) -> "CompiledPolynomial":
        return CompiledPolynomial.from_polynomials([self])

    # rendering and identity

    def render(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for exponents, coeff in self.items():
            monomial = "*".join(
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self.context.names, exponents)
                if e
            )
            magnitude = abs(coeff)
            if not monomial:
                body = str(magnitude)
            elif magnitude == 1:
                body = monomial
            else:
                body = f"{magnitude}*{monomial}"
            if not pieces:
                pieces.append(body if coeff > 0 else f"-{body}")
            else:
                pieces.append(f" + {body}" if coeff > 0 else f" - {body}")
        return "".join(pieces)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Polynomial({self.render()!r}, {self.context.names})"

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.context == other.context and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_term() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.context, frozenset(self._terms.items())))
        return self._hash


def _horner(terms: Mapping[Exponents, Fraction], point, k: int):
    if k == len(point):
        return sum(terms.values())
    by_power: Dict[int, Dict[Exponents, Fraction]] = {}
    for exponents, coeff in terms.items():
        by_power.setdefault(exponents[k], {})[exponents] = coeff
    acc = 0
    for e in range(max(by_power), -1, -1):
        acc = acc * point[k]
        if e in by_power:
            acc = acc + _horner(by_power[e], point, k + 1)
    return acc


class CompiledPolynomial:
    """
    Vectorized float evaluator for one or several polynomials sharing a context.

    Evaluating on an array of shape (..., n) returns shape (..., k) for k
    polynomials, or (...,) when compiled from a single polynomial.
    """

    def __init__(self, exponents: np.ndarray, coefficients: np.ndarray, single: bool):
        self.exponents = exponents
        self.coefficients = coefficients
        self.single = single

    @classmethod
    def from_polynomials(cls, polys: Sequence[Polynomial]) -> "CompiledPolynomial":
        if not polys:
            raise ValueError("Nothing to compile")
        context = polys[0].context
        monomials = sorted(
            {e for p in polys for e in p.terms},
            key=_grlex_key,
        ) or [(0,) * len(context)]
        index = {e: i for i, e in enumerate(monomials)}
        coefficients = np.zeros((len(polys), len(monomials)))
        for row, poly in enumerate(polys):
            if poly.context != context:
                raise PolynomialContextError(
                    "Cannot compile polynomials of mixed contexts",
                )
            for exponents, coeff in poly.terms.items():
                coefficients[row, index[exponents]] = float(coeff)
        exponents = np.array(monomials, dtype=int).reshape(len(monomials), len(context))
        return cls(exponents, coefficients, single=len(polys) == 1)

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        monomials = np.prod(points[..., None, :] ** self.exponents, axis=-1)
        values = monomials @ self.coefficients.T
        return values[..., 0] if self.single else values


def jacobian(
    polys: Sequence[Polynomial],
    names: Sequence[str],
) -> List[List[Polynomial]]:
    return [[p.derivative(name) for name in names] for p in polys]


def determinant(matrix: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Laplace expansion; matrices here are at most a handful of rows."""
    size = len(matrix)
    if size == 1:
        return matrix[0][0]
    result = None
    for col in range(size):
        entry = matrix[0][col]
        if entry.is_zero():
            continue
        minor = [row[:col] + row[col + 1 :] for row in matrix[1:]]
        term = entry * determinant(minor)
        term = term if col % 2 == 0 else -term
        result = term if result is None else result + term
    return result if result is not None else Polynomial.zero(matrix[0][0].context)
