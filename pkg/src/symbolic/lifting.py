"""
Lifting of a homogeneous system to a Carnot group on ℝ^N.

The group is built from the Lie algebra of the system: the BCH product on
exponential coordinates a ∈ ℝ^N, the projection Π(a) = Φ_1^{a·E}(0), and
the diffeomorphism T(a) = (Π(a), a_{j1}, ..., a_{jp}) for a greedy choice of
indices. The group law is z ∗ w = T(T⁻¹(z) ∙ T⁻¹(w)).
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

from . import linalg
from .bch import MAX_STEP
from .bch import UnsupportedStepError
from .bch import bch_series
from .dsl import SystemSpec
from .dsl import VectorField
from .dsl import coefficient_vectors
from .dsl import field_degree
from .lie import HomogeneityViolationError
from .lie import LieBasis
from .lie import MultiIndex
from .lie import lie_basis
from .lie import lie_bracket
from .poly import CompiledPolynomial
from .poly import Context
from .poly import Polynomial
from .poly import determinant
from .poly import jacobian

logger = logging.getLogger("hormander.lifting")


class NonClosedBasisError(Exception):
    pass


class LiftInconsistencyError(Exception):
    pass


def _vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _vscale(c, a):
    return tuple(x * c for x in a)


def lifted_context(
    sigma: Sequence[int],
    tau: Sequence[int],
    x: str = "x",
    xi: str = "xi",
) -> Context:
    return Context.base(sigma, prefix=x).extend(Context.base(tau, prefix=xi))


@dataclass(frozen=True)
class NilpotentAlgebra:
    basis: LieBasis
    constants: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def step(self) -> int:
        return self.basis.step

    @property
    def weights(self) -> List[int]:
        return self.basis.weights

    @cached_property
    def _nonzero(self):
        return [
            (i, j, k, c)
            for i, row in enumerate(self.constants)
            for j, column in enumerate(row)
            for k, c in enumerate(column)
            if c
        ]

    def bracket(self, a, b) -> tuple:
        """Bracket in E-coordinates; entries may be Fractions or Polynomials."""
        zero = a[0] * 0
        out = [zero] * self.N
        for i, j, k, c in self._nonzero:
            out[k] = out[k] + a[i] * b[j] * c
        return tuple(out)

    def unit(self, i: int) -> tuple:
        return tuple(Fraction(int(k == i)) for k in range(self.N))

    def is_antisymmetric(self) -> bool:
        return all(
            self.constants[i][j][k] == -self.constants[j][i][k]
            for i, j, k in itertools.product(range(self.N), repeat=3)
        )

    def satisfies_jacobi(self) -> bool:
        for i, j, k in itertools.combinations_with_replacement(range(self.N), 3):
            a, b, c = self.unit(i), self.unit(j), self.unit(k)
            total = _vadd(
                _vadd(
                    self.bracket(self.bracket(a, b), c),
                    self.bracket(self.bracket(b, c), a),
                ),
                self.bracket(self.bracket(c, a), b),
            )
            if any(total):
                return False
        return True

    @cached_property
    def parameter_context(self) -> Context:
        return Context(
            tuple(f"a{j + 1}" for j in range(self.N)),
            tuple(self.weights),
        )

    @cached_property
    def projection(self) -> List[Polynomial]:
        """Π as n polynomials in a1..aN."""
        sigma = self.basis.sigma
        params = self.parameter_context
        context = Context.base(sigma).extend(params)
        field = combination(
            self.basis.fields,
            [Polynomial.variable(context, name) for name in params.names],
            context,
        )
        images = flow_map(field, sigma[-1] + 1)
        at_origin = [Polynomial.zero(params)] * len(sigma) + params.variables()
        return [image.substitute(at_origin) for image in images]


def structure_constants(basis: LieBasis) -> NilpotentAlgebra:
    fields = basis.fields
    N = len(fields)
    constants = [[[Fraction(0)] * N for _ in range(N)] for _ in range(N)]
    for i, j in itertools.combinations(range(N), 2):
        product = lie_bracket(fields[i], fields[j])
        if product.is_zero():
            continue
        vectors = coefficient_vectors(fields + [product])
        solution = linalg.solve(vectors[:-1], vectors[-1])
        if solution is None:
            raise NonClosedBasisError(
                f"[{basis.indices[i]}, {basis.indices[j]}] is not in the span "
                "of the basis",
            )
        for k, c in enumerate(solution):
            constants[i][j][k] = c
            constants[j][i][k] = -c
    return NilpotentAlgebra(
        basis=basis,
        constants=tuple(tuple(tuple(column) for column in row) for row in constants),
    )


def bch_product(algebra: NilpotentAlgebra, a: Sequence, b: Sequence) -> tuple:
    if algebra.step > MAX_STEP:
        raise UnsupportedStepError(
            f"Nilpotency step {algebra.step} exceeds {MAX_STEP}",
        )
    return bch_series(
        tuple(a),
        tuple(b),
        algebra.bracket,
        max(algebra.step, 1),
        add=_vadd,
        scale=_vscale,
    )


def combination(
    fields: Sequence[VectorField],
    coefficients: Sequence[Polynomial],
    context: Context,
) -> VectorField:
    """Σ c_j E_j with the fields embedded into a larger context."""
    total = VectorField.zero(context, fields[0].n)
    for f, c in zip(fields, coefficients):
        total = total + f.embed(context).scale(c)
    return total


def flow_map(field: VectorField, limit: int) -> List[Polynomial]:
    """
    Φ_1 of a graded-nilpotent field as the terminating series
    Σ_k Y^k(x_i)/k!, one polynomial per coordinate.
    """
    context = field.context
    images = []
    for i in range(field.n):
        term = Polynomial.variable(context, context.names[i])
        total = term
        for k in itertools.count(1):
            term = field.apply(term).scale(Fraction(1, k))
            if term.is_zero():
                break
            if k > limit:
                raise HomogeneityViolationError(
                    f"Flow series for {context.names[i]} does not terminate "
                    f"by order {limit}",
                )
            total = total + term
        images.append(total)
    return images


def flow_polynomial(spec: SystemSpec, field: VectorField, start: Sequence, t=None):
    """
    Φ_t^Y(start) as polynomials in t, or its value when t is given.
    """
    time = Context(("t",), (1,))
    context = spec.context.extend(time)
    scaled = field.embed(context).scale(Polynomial.variable(context, "t"))
    images = flow_map(scaled, spec.sigma[-1] + 1)
    subs = [Polynomial.constant(time, Fraction(v)) for v in start]
    subs.append(Polynomial.variable(time, "t"))
    curve = [image.substitute(subs) for image in images]
    if t is None:
        return curve
    return tuple(c.evaluate([t]) for c in curve)


def folland_projection(algebra: NilpotentAlgebra, a: Sequence) -> tuple:
    return tuple(p.evaluate(list(a)) for p in algebra.projection)


def _linear_part(poly: Polynomial, k: int) -> Fraction:
    exponents = tuple(int(i == k) for i in range(len(poly.context)))
    return poly.coefficient(exponents)


@dataclass(frozen=True)
class LiftedSystem:
    spec: SystemSpec
    algebra: NilpotentAlgebra
    chosen: Tuple[int, ...]
    context: Context
    pair_context: Context
    T: Tuple[Polynomial, ...]
    T_inv: Tuple[Polynomial, ...]
    law: Tuple[Polynomial, ...]
    inverse: Tuple[Polynomial, ...]
    fields: Tuple[VectorField, ...]
    drift: Optional[VectorField] = None

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def N(self) -> int:
        return self.algebra.N

    @property
    def p(self) -> int:
        return self.N - self.n

    @property
    def tau(self) -> Tuple[int, ...]:
        return self.context.weights[self.n :]

    @property
    def weights(self) -> Tuple[int, ...]:
        return self.context.weights

    @property
    def Q(self) -> int:
        return sum(self.weights)

    def multiply(self, z: Sequence, w: Sequence) -> tuple:
        point = list(z) + list(w)
        return tuple(p.evaluate(point) for p in self.law)

    def invert(self, z: Sequence) -> tuple:
        return tuple(p.evaluate(list(z)) for p in self.inverse)

    def dilate(self, z: Sequence, lam) -> tuple:
        return tuple(v * lam**w for v, w in zip(z, self.weights))

    @cached_property
    def compiled_law(self) -> CompiledPolynomial:
        return CompiledPolynomial.from_polynomials(list(self.law))

    @cached_property
    def compiled_inverse(self) -> CompiledPolynomial:
        return CompiledPolynomial.from_polynomials(list(self.inverse))

    def compose(self, left: Sequence[Polynomial], right: Sequence[Polynomial]) -> list:
        """The group law applied to two polynomial points of a common context."""
        images = list(left) + list(right)
        return [p.substitute(images) for p in self.law]

    def renamed(self, x: str, xi: str) -> Context:
        return lifted_context(self.spec.sigma, self.tau, x=x, xi=xi)

    def verify(self) -> Dict[str, bool]:
        """Exact polynomial checks of the group structure and lifted fields."""
        L = self.context
        checks = {}

        params = self.algebra.parameter_context
        checks["t_inverse"] = all(
            t.substitute(list(self.T_inv)) == v for t, v in zip(self.T, L.variables())
        ) and all(
            t.substitute(list(self.T)) == v
            for t, v in zip(self.T_inv, params.variables())
        )

        triple = L.extend(self.renamed("y", "eta")).extend(self.renamed("u", "zeta"))
        variables = triple.variables()
        z1, z2, z3 = (variables[k * self.N : (k + 1) * self.N] for k in range(3))
        checks["associative"] = self.compose(self.compose(z1, z2), z3) == self.compose(
            z1,
            self.compose(z2, z3),
        )

        checks["inverse"] = all(
            p.is_zero() for p in self.compose(L.variables(), list(self.inverse))
        )

        checks["dilation"] = all(
            p.is_homogeneous(w) for p, w in zip(self.law, self.weights * 2)
        )

        lifted = [(f, 1) for f in self.fields]
        if self.drift is not None:
            lifted.append((self.drift, 2))
        checks["fields_homogeneous"] = all(
            field_degree(f, self.weights)[0] == d for f, d in lifted
        )
        checks["lifting_coefficients"] = all(
            f.coeffs[self.n + j].is_homogeneous(self.tau[j] - d)
            and not f.coeffs[self.n + j].depends_on(L.names[self.n + j])
            for f, d in lifted
            for j in range(self.p)
            if not f.coeffs[self.n + j].is_zero()
        )

        right = self.pair_context.names[self.N :]
        checks["unimodular"] = determinant(jacobian(list(self.law), right)) == 1

        for name, ok in checks.items():
            if not ok:
                logger.warning(f"Lift check {name} failed")
        return checks

    def to_dict(self) -> dict:
        def render_field(f):
            return {
                name: c.render()
                for name, c in zip(self.context.names, f.coeffs)
                if not c.is_zero()
            }

        basis = self.algebra.basis
        result = {
            "N": self.N,
            "n": self.n,
            "p": self.p,
            "Q": self.Q,
            "coordinates": list(self.context.names),
            "weights": list(self.weights),
            "tau": list(self.tau),
            "chosen": [basis.indices[j].to_list() for j in self.chosen],
            "group_law": {
                name: p.render() for name, p in zip(self.context.names, self.law)
            },
            "right_coordinates": list(self.pair_context.names[self.N :]),
            "inverse": {
                name: p.render() for name, p in zip(self.context.names, self.inverse)
            },
            "dilations": {
                name: f"lambda^{w}*{name}"
                for name, w in zip(self.context.names, self.weights)
            },
            "lifted_fields": {
                name: render_field(f) for name, f in zip(self.spec.names, self.fields)
            },
        }
        if self.drift is not None:
            result["lifted_fields"]["X0"] = render_field(self.drift)
        return result


def _invert_T(
    projection: List[Polynomial],
    linear: List[List[Fraction]],
    chosen: List[int],
    weights: List[int],
    sigma: Sequence[int],
    L: Context,
    params: Context,
) -> List[Polynomial]:
    """
    Solve T(a) = (x, ξ) for a, one δ-degree at a time. The degree-d part of
    Π is linear in the weight-d unknowns plus a remainder in lower ones.
    """
    N, n = len(weights), len(sigma)
    solved: Dict[int, Polynomial] = {}
    for position, j in enumerate(chosen):
        solved[j] = Polynomial.variable(L, L.names[n + position])

    for d in sorted(set(weights) | set(sigma)):
        free = [j for j in range(N) if weights[j] == d and j not in chosen]
        equations = [i for i in range(n) if sigma[i] == d]
        if len(free) != len(equations):
            raise LiftInconsistencyError(
                f"Degree {d}: {len(equations)} equations for {len(free)} unknowns",
            )
        if not free:
            continue
        images = [solved.get(j, Polynomial.zero(L)) for j in range(N)]
        rhs = []
        for i in equations:
            linear_part = Polynomial.zero(params)
            for j in range(N):
                if linear[i][j]:
                    linear_part = linear_part + Polynomial.variable(
                        params,
                        params.names[j],
                    ).scale(linear[i][j])
            remainder = (projection[i] - linear_part).substitute(images)
            value = Polynomial.variable(L, L.names[i]) - remainder
            for j in chosen:
                if weights[j] == d and linear[i][j]:
                    value = value - solved[j].scale(linear[i][j])
            rhs.append(value)
        block = [[linear[i][j] for j in free] for i in equations]
        if linalg.rank(block) != len(free):
            raise LiftInconsistencyError(f"Degree {d} block of dT(0) is singular")
        inverse = linalg.inverse(block)
        for r, j in enumerate(free):
            total = Polynomial.zero(L)
            for c, value in enumerate(rhs):
                if inverse[r][c]:
                    total = total + value.scale(inverse[r][c])
            solved[j] = total
    return [solved[j] for j in range(N)]


def _lift_field(
    law: List[Polynomial],
    L: Context,
    pair: Context,
    direction: List[Fraction],
) -> VectorField:
    """Left-invariant field whose value at 0 is ``direction``."""
    N = len(L)
    at_zero = L.variables() + [Polynomial.zero(L)] * N
    right = pair.names[N:]
    coeffs = []
    for p in law:
        total = Polynomial.zero(L)
        for name, v in zip(right, direction):
            if v:
                total = total + p.derivative(name).substitute(at_zero).scale(v)
        coeffs.append(total)
    return VectorField(tuple(coeffs))


def build_lift(spec: SystemSpec, basis: LieBasis = None) -> LiftedSystem:
    basis = basis or lie_basis(spec)
    if basis.step > MAX_STEP:
        raise UnsupportedStepError(
            f"Nilpotency step {basis.step} exceeds {MAX_STEP}",
        )
    algebra = structure_constants(basis)
    params = algebra.parameter_context
    projection = algebra.projection
    n, N = spec.n, algebra.N
    weights = algebra.weights

    linear = [[_linear_part(p, j) for j in range(N)] for p in projection]
    if linalg.rank(linear) != n:
        raise LiftInconsistencyError("The projection is not submersive at 0")

    rows = [list(r) for r in linear]
    chosen: List[int] = []
    for j in range(N):
        if len(rows) == N:
            break
        unit = [Fraction(int(k == j)) for k in range(N)]
        if linalg.rank(rows + [unit]) > len(rows):
            rows.append(unit)
            chosen.append(j)
    if linalg.rank(rows) != N:
        raise LiftInconsistencyError("No choice of indices makes dT(0) invertible")

    tau = [weights[j] for j in chosen]
    L = lifted_context(spec.sigma, tau)
    pair = L.extend(lifted_context(spec.sigma, tau, x="y", xi="eta"))

    T = list(projection)
    T += [Polynomial.variable(params, params.names[j]) for j in chosen]
    T_inv = _invert_T(projection, linear, chosen, weights, spec.sigma, L, params)

    left = pair.variables()[:N]
    right = pair.variables()[N:]
    a = [p.substitute(left) for p in T_inv]
    b = [p.substitute(right) for p in T_inv]
    c = bch_product(algebra, a, b)
    law = [p.substitute(list(c)) for p in T]
    inverse = [p.substitute([-v for v in T_inv]) for p in T]

    def direction(index: MultiIndex):
        if index not in basis.indices:
            raise LiftInconsistencyError(f"X_{index} is not a basis element")
        k = basis.indices.index(index)
        head = [linear[i][k] for i in range(n)]
        tail = [Fraction(int(j == k)) for j in chosen]
        return head + tail

    fields = []
    for g, X in zip(range(1, spec.m + 1), spec.fields):
        lifted = _lift_field(law, L, pair, direction(MultiIndex((g,))))
        if any(lifted.coeffs[i] != X.coeffs[i].embed(L) for i in range(n)):
            raise LiftInconsistencyError(
                f"Lift of {spec.names[g - 1]} does not project onto it",
            )
        fields.append(lifted)

    drift = None
    if spec.drift is not None:
        drift = _lift_field(law, L, pair, direction(MultiIndex((0,))))
        if any(drift.coeffs[i] != spec.drift.coeffs[i].embed(L) for i in range(n)):
            raise LiftInconsistencyError("Lift of the drift does not project onto it")

    lift = LiftedSystem(
        spec=spec,
        algebra=algebra,
        chosen=tuple(chosen),
        context=L,
        pair_context=pair,
        T=tuple(T),
        T_inv=tuple(T_inv),
        law=tuple(law),
        inverse=tuple(inverse),
        fields=tuple(fields),
        drift=drift,
    )
    logger.info(
        f"Lifted system to N={lift.N} with tau={list(lift.tau)}, Q={lift.Q}",
    )
    return lift
