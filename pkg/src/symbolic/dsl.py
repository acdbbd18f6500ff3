"""
The ``.hvf`` format for homogeneous vector-field systems.

A system file looks like::

    # Grushin plane, k = 1
    dim = 2
    weights = [1, 2]
    field X1 = (1, 0)
    field X2 = (0, x1)

Statements may also be separated by ``;``, the ``field`` keyword is optional
and an optional ``drift = (...)`` line (or a field named ``X0``) declares the
degree-2 drift.
"""
import logging
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from fractions import Fraction
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import pyparsing as pp

from . import linalg
from .poly import Context
from .poly import Polynomial

logger = logging.getLogger("hormander.dsl")


class SystemSyntaxError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class SystemSpecError(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    """
    Σ coeffs[i]·∂/∂x_i. Coefficients may live in a context larger than the
    coordinates (extra parameters), the differentiated coordinates being the
    first ``len(coeffs)`` variables.
    """

    coeffs: Tuple[Polynomial, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise SystemSpecError("A vector field needs at least one coefficient")
        context = self.coeffs[0].context
        if any(c.context != context for c in self.coeffs):
            raise SystemSpecError("Vector field coefficients disagree on context")
        if len(context) < len(self.coeffs):
            raise SystemSpecError("Context too small for the field's coordinates")

    @classmethod
    def zero(cls, context: Context, n: int) -> "VectorField":
        return cls(tuple(Polynomial.zero(context) for _ in range(n)))

    @property
    def context(self) -> Context:
        return self.coeffs[0].context

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def apply(self, f: Polynomial) -> Polynomial:
        """The derivative of f along the field."""
        result = Polynomial.zero(self.context)
        for i, coeff in enumerate(self.coeffs):
            if not coeff.is_zero():
                result = result + coeff * f.derivative(i)
        return result

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "VectorField":
        return VectorField(tuple(-c for c in self.coeffs))

    def scale(self, factor) -> "VectorField":
        if isinstance(factor, Polynomial):
            return VectorField(tuple(factor * c for c in self.coeffs))
        return VectorField(tuple(c.scale(factor) for c in self.coeffs))

    def embed(self, target: Context) -> "VectorField":
        return VectorField(tuple(c.embed(target) for c in self.coeffs))

    def evaluate(self, point: Sequence) -> tuple:
        return tuple(c.evaluate(point) for c in self.coeffs)

    def render(self) -> str:
        return "(" + ", ".join(c.render() for c in self.coeffs) + ")"

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class SystemSpec:
    sigma: Tuple[int, ...]
    fields: Tuple[VectorField, ...]
    drift: Optional[VectorField] = None
    names: Tuple[str, ...] = dataclass_field(default=())

    def __post_init__(self):
        if not self.sigma or self.sigma[0] != 1:
            raise SystemSpecError("weights must start with σ₁ = 1")
        if any(b < a for a, b in zip(self.sigma, self.sigma[1:])):
            raise SystemSpecError("weights must be nondecreasing")
        if not self.fields:
            raise SystemSpecError("at least one field is required")
        context = Context.base(self.sigma)
        for f in self.fields + ((self.drift,) if self.drift else ()):
            if f.n != len(self.sigma) or f.context != context:
                raise SystemSpecError(
                    f"field {f} does not have {len(self.sigma)} coefficients in x1..xn",
                )
        if not self.names:
            object.__setattr__(
                self,
                "names",
                tuple(f"X{i + 1}" for i in range(len(self.fields))),
            )
        if len(self.names) != len(self.fields):
            raise SystemSpecError("one name per field is required")

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def m(self) -> int:
        return len(self.fields)

    @property
    def q(self) -> int:
        return sum(self.sigma)

    @property
    def context(self) -> Context:
        return Context.base(self.sigma)

    def generator(self, index: int) -> VectorField:
        """Index 0 is the drift, 1..m the fields."""
        if index == 0:
            if self.drift is None:
                raise SystemSpecError("system has no drift")
            return self.drift
        if not 1 <= index <= self.m:
            raise SystemSpecError(f"no field with index {index}")
        return self.fields[index - 1]

    def generator_indices(self) -> List[int]:
        return list(range(1, self.m + 1)) + ([0] if self.drift is not None else [])


# Grammar


class _Number:
    def __init__(self, value: Fraction):
        self.value = value


class _Symbol:
    def __init__(self, name: str, loc: int):
        self.name = name
        self.loc = loc


class _Power:
    def __init__(self, base, exponent: int):
        self.base = base
        self.exponent = exponent


class _Negate:
    def __init__(self, operand):
        self.operand = operand


class _Product:
    def __init__(self, factors):
        self.factors = factors


class _Sum:
    def __init__(self, first, rest):
        self.first = first
        self.rest = rest


class _Token:
    def __init__(self, text: str, loc: int):
        self.text = text
        self.loc = loc


class _Statement:
    def __init__(self, kind: str, loc: int, name=None, payload=None):
        self.kind = kind
        self.loc = loc
        self.name = name
        self.payload = payload


def _number_action(toks):
    num, _, den = toks[0].partition("/")
    return _Number(Fraction(int(num), int(den) if den else 1))


def _power_action(toks):
    return _Power(toks[0], int(toks[1])) if len(toks) == 2 else toks[0]


def _signed_action(toks):
    *signs, operand = toks
    return _Negate(operand) if signs.count("-") % 2 else operand


def _product_action(toks):
    return _Product(list(toks)) if len(toks) > 1 else toks[0]


def _sum_action(toks):
    rest = [(toks[i], toks[i + 1]) for i in range(1, len(toks), 2)]
    return _Sum(toks[0], rest) if rest else toks[0]


def _build_grammar() -> pp.ParserElement:
    identifier = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    number = pp.Regex(r"\d+(?:/\d+)?").set_parse_action(_number_action)
    symbol = identifier.copy().set_parse_action(
        lambda s, loc, toks: _Symbol(toks[0], loc),
    )
    expr = pp.Forward()
    atom = number | symbol | (pp.Suppress("(") + expr + pp.Suppress(")"))
    power = (atom + pp.Optional(pp.Suppress("^") + pp.Regex(r"\d+"))).set_parse_action(
        _power_action,
    )
    signed = (pp.ZeroOrMore(pp.one_of("+ -")) + power).set_parse_action(_signed_action)
    product = (signed + pp.ZeroOrMore(pp.Suppress("*") + signed)).set_parse_action(
        _product_action,
    )
    expr <<= (product + pp.ZeroOrMore(pp.one_of("+ -") + product)).set_parse_action(
        _sum_action,
    )

    coefficients = pp.Group(
        pp.Suppress("(")
        + expr
        + pp.ZeroOrMore(pp.Suppress(",") + expr)
        + pp.Suppress(")"),
    )
    scalar = pp.Regex(r"[+-]?\d+(?:\.\d*)?").set_parse_action(
        lambda s, loc, toks: _Token(toks[0], loc),
    )

    reserved = pp.Keyword("dim") | pp.Keyword("weights") | pp.Keyword("drift")
    reserved = reserved | pp.Keyword("field")

    dim_stmt = (pp.Keyword("dim") + pp.Suppress("=") + scalar).set_parse_action(
        lambda s, loc, toks: _Statement("dim", loc, payload=toks[1]),
    )
    weights_stmt = (
        pp.Keyword("weights")
        + pp.Suppress("=")
        + pp.Suppress("[")
        + pp.Group(pp.Optional(scalar + pp.ZeroOrMore(pp.Suppress(",") + scalar)))
        + pp.Suppress("]")
    ).set_parse_action(
        lambda s, loc, toks: _Statement("weights", loc, payload=list(toks[1])),
    )
    drift_stmt = (
        pp.Keyword("drift") + pp.Suppress("=") + coefficients
    ).set_parse_action(
        lambda s, loc, toks: _Statement("drift", loc, payload=list(toks[1])),
    )
    field_stmt = (
        pp.Optional(pp.Suppress(pp.Keyword("field")))
        + ~reserved
        + identifier
        + pp.Suppress("=")
        + coefficients
    ).set_parse_action(
        lambda s, loc, toks: _Statement(
            "field",
            loc,
            name=toks[0],
            payload=list(toks[1]),
        ),
    )
    statement = dim_stmt | weights_stmt | drift_stmt | field_stmt
    program = pp.ZeroOrMore(statement + pp.Optional(pp.Suppress(";"))) + pp.StringEnd()
    program.ignore(pp.python_style_comment)
    return program


_GRAMMAR = _build_grammar()


def _located(text: str, loc: int, message: str) -> SystemSyntaxError:
    return SystemSyntaxError(
        message,
        line=pp.lineno(loc, text),
        column=pp.col(loc, text),
    )


def _evaluate(node, context: Context, text: str) -> Polynomial:
    if isinstance(node, _Number):
        return Polynomial.constant(context, node.value)
    if isinstance(node, _Symbol):
        if node.name not in context.names:
            raise _located(text, node.loc, f"unknown variable {node.name!r}")
        return Polynomial.variable(context, node.name)
    if isinstance(node, _Power):
        return _evaluate(node.base, context, text) ** node.exponent
    if isinstance(node, _Negate):
        return -_evaluate(node.operand, context, text)
    if isinstance(node, _Product):
        result = Polynomial.constant(context, 1)
        for factor in node.factors:
            result = result * _evaluate(factor, context, text)
        return result
    if isinstance(node, _Sum):
        result = _evaluate(node.first, context, text)
        for sign, term in node.rest:
            value = _evaluate(term, context, text)
            result = result + value if sign == "+" else result - value
        return result
    raise TypeError(f"Unexpected node {node!r}")


def _integer(text: str, token: _Token, what: str) -> int:
    if "." in token.text:
        raise _located(text, token.loc, f"non-integer {what} {token.text}")
    return int(token.text)


def parse_system(text: str) -> SystemSpec:
    try:
        statements = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseException as e:
        raise SystemSyntaxError(f"syntax error: {e.msg}", line=e.lineno, column=e.col)

    by_kind: Dict[str, List[_Statement]] = {}
    for statement in statements:
        by_kind.setdefault(statement.kind, []).append(statement)

    end = len(text)
    for kind in ("dim", "weights"):
        if kind not in by_kind:
            raise _located(text, end, f"missing `{kind}` section")
        if len(by_kind[kind]) > 1:
            raise _located(text, by_kind[kind][1].loc, f"duplicate `{kind}` section")

    dim_stmt = by_kind["dim"][0]
    n = _integer(text, dim_stmt.payload, "dimension")
    if n < 1:
        raise _located(text, dim_stmt.loc, "dimension must be positive")

    weights_stmt = by_kind["weights"][0]
    sigma = tuple(_integer(text, w, "weight") for w in weights_stmt.payload)
    if len(sigma) != n:
        raise _located(
            text,
            weights_stmt.loc,
            f"{len(sigma)} weights given for dimension {n}",
        )
    if sigma[0] != 1 or any(b < a for a, b in zip(sigma, sigma[1:])):
        raise _located(
            text,
            weights_stmt.loc,
            "weights must be nondecreasing with σ₁=1",
        )

    context = Context.base(sigma)
    fields: List[VectorField] = []
    names: List[str] = []
    drift = None
    drift_statements = list(by_kind.get("drift", []))

    for statement in by_kind.get("field", []):
        if statement.name == "X0":
            drift_statements.append(statement)
            continue
        if statement.name in names:
            raise _located(text, statement.loc, f"duplicate field {statement.name}")
        fields.append(_coefficients(statement, context, text))
        names.append(statement.name)

    if not fields:
        raise _located(text, end, "missing `field` section")
    if len(drift_statements) > 1:
        raise _located(text, drift_statements[1].loc, "more than one drift")
    if drift_statements:
        drift = _coefficients(drift_statements[0], context, text)

    spec = SystemSpec(
        sigma=sigma,
        fields=tuple(fields),
        drift=drift,
        names=tuple(names),
    )
    logger.debug(f"Parsed system with n={spec.n}, m={spec.m}, weights {spec.sigma}")
    return spec


def _coefficients(statement: _Statement, context: Context, text: str) -> VectorField:
    if len(statement.payload) != len(context):
        raise _located(
            text,
            statement.loc,
            f"{len(statement.payload)} coefficients given for dimension {len(context)}",
        )
    coeffs = (_evaluate(node, context, text) for node in statement.payload)
    return VectorField(tuple(coeffs))


def load_system(path) -> SystemSpec:
    with open(path, encoding="utf-8") as f:
        return parse_system(f.read())


def render_system(spec: SystemSpec) -> str:
    lines = [
        f"dim = {spec.n}",
        "weights = [" + ", ".join(str(s) for s in spec.sigma) + "]",
    ]
    for name, f in zip(spec.names, spec.fields):
        lines.append(f"field {name} = {f.render()}")
    if spec.drift is not None:
        lines.append(f"drift = {spec.drift.render()}")
    return "\n".join(lines) + "\n"


@dataclass
class HomogeneityReport:
    ok: bool
    per_field_degrees: Dict[str, Optional[int]]
    violations: List[str]

    def to_dict(self):
        return {
            "ok": self.ok,
            "per_field_degrees": self.per_field_degrees,
            "violations": self.violations,
        }


def field_degree(
    f: VectorField,
    sigma: Sequence[int],
) -> Tuple[Optional[int], List[str]]:
    """
    The δ-degree d of f, i.e. the d for which the coefficient of ∂/∂x_i has
    pure δ-degree σ_i − d, together with the offending coefficients if any.
    """
    degrees = {}
    for i, coeff in enumerate(f.coeffs):
        for exponents, _ in coeff.items():
            degree = sigma[i] - coeff.monomial_degree(exponents)
            degrees.setdefault(degree, []).append(i)
    if len(degrees) == 1:
        return next(iter(degrees)), []
    problems = [
        f"coefficient of ∂/∂x{i + 1} has δ-degree {sigma[i] - d}"
        for d, rows in sorted(degrees.items())
        for i in sorted(set(rows))
    ]
    return None, problems


def validate_homogeneity(spec: SystemSpec) -> HomogeneityReport:
    degrees: Dict[str, Optional[int]] = {}
    violations: List[str] = []
    expected = [(name, f, 1) for name, f in zip(spec.names, spec.fields)]
    if spec.drift is not None:
        expected.append(("X0", spec.drift, 2))

    for name, f, wanted in expected:
        if f.is_zero():
            degrees[name] = None
            violations.append(f"{name} is identically zero")
            continue
        degree, problems = field_degree(f, spec.sigma)
        degrees[name] = degree
        if degree is None:
            violations.append(
                f"{name} is not δ-homogeneous: " + "; ".join(problems),
            )
        elif degree != wanted:
            for i, coeff in enumerate(f.coeffs):
                if not coeff.is_zero():
                    violations.append(
                        f"{name}: coefficient of ∂/∂x{i + 1} has δ-degree "
                        f"{coeff.degree()} ≠ σ{i + 1}−{wanted}="
                        f"{spec.sigma[i] - wanted}",
                    )
                    break

    return HomogeneityReport(
        ok=not violations,
        per_field_degrees=degrees,
        violations=violations,
    )


def coefficient_vectors(fields: Sequence[VectorField]) -> List[List[Fraction]]:
    """Fields as rows over the monomials appearing in any coefficient."""
    keys = sorted(
        {(i, e) for f in fields for i, c in enumerate(f.coeffs) for e in c.terms},
    )
    return [[f.coeffs[i].coefficient(e) for i, e in keys] for f in fields]


def fields_independent(fields: Sequence[VectorField]) -> bool:
    if not fields:
        return True
    rows = coefficient_vectors(fields)
    if not rows[0]:
        return False
    return linalg.rank(rows) == len(fields)
